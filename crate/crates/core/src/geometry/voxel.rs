use crate::model::{CADModel, Vec3};

use super::membership::{default_chord_tol, model_bounds, CompiledModel};
use super::GeometryError;

/// Padding added on each side of the auto bounds, as a fraction of the largest extent.
pub const AUTO_PADDING: f64 = 0.05;

/// Occupancy over a regular grid of cubic cells.
///
/// Cell `(i, j, k)` is centered at `center + (2i + 1 - nx) * cell / 2` (and
/// likewise on y, z), so a grid centered on the origin maps onto itself
/// exactly under axis permutations and reflections.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub center: Vec3,
    pub cell: f64,
    pub dims: [usize; 3],
    bits: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bounds {
    /// Model bounding box padded by [`AUTO_PADDING`] per side, cubified.
    Auto,
    /// Exactly this box; the longest side gets `resolution` cells.
    Box { min: Vec3, max: Vec3 },
    /// Cube of `resolution`^3 cells with the given center and half side.
    Cube { center: Vec3, half: f64 },
}

impl VoxelGrid {
    pub fn empty(center: Vec3, cell: f64, dims: [usize; 3]) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        VoxelGrid { center, cell, dims, bits: vec![0; n.div_ceil(64)] }
    }

    /// Fills cells whose center satisfies `f`, visiting cells in index order.
    pub fn from_fn(center: Vec3, cell: f64, dims: [usize; 3], mut f: impl FnMut(Vec3) -> bool) -> Self {
        let mut g = VoxelGrid::empty(center, cell, dims);
        let h = cell * 0.5;
        let coord = |c: f64, i: usize, n: usize| c + (2 * i as i64 + 1 - n as i64) as f64 * h;
        let xs: Vec<f64> = (0..dims[0]).map(|i| coord(center.x, i, dims[0])).collect();
        let ys: Vec<f64> = (0..dims[1]).map(|j| coord(center.y, j, dims[1])).collect();
        let zs: Vec<f64> = (0..dims[2]).map(|k| coord(center.z, k, dims[2])).collect();
        let mut idx = 0usize;
        for &z in &zs {
            for &y in &ys {
                for &x in &xs {
                    if f(Vec3::new(x, y, z)) {
                        g.bits[idx >> 6] |= 1 << (idx & 63);
                    }
                    idx += 1;
                }
            }
        }
        g
    }

    /// Cubic grid of `n`^3 cells covering `[center - half, center + half]` on every axis.
    pub fn cube(center: Vec3, half: f64, n: usize, f: impl FnMut(Vec3) -> bool) -> Self {
        VoxelGrid::from_fn(center, 2.0 * half / n as f64, [n; 3], f)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Minimum corner.
    pub fn origin(&self) -> Vec3 {
        let h = self.cell * 0.5;
        Vec3::new(
            self.center.x - self.dims[0] as f64 * h,
            self.center.y - self.dims[1] as f64 * h,
            self.center.z - self.dims[2] as f64 * h,
        )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.cell * 0.5;
        let c = |c: f64, i: usize, n: usize| c + (2 * i as i64 + 1 - n as i64) as f64 * h;
        Vec3::new(c(self.center.x, i, self.dims[0]), c(self.center.y, j, self.dims[1]), c(self.center.z, k, self.dims[2]))
    }

    #[inline]
    pub fn get_index(&self, idx: usize) -> bool {
        self.bits[idx >> 6] >> (idx & 63) & 1 == 1
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.get_index(self.index(i, j, k))
    }

    #[inline]
    pub fn set_index(&mut self, idx: usize, v: bool) {
        if v {
            self.bits[idx >> 6] |= 1 << (idx & 63);
        } else {
            self.bits[idx >> 6] &= !(1 << (idx & 63));
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Packed occupancy, little-endian bit order within each word.
    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// Indices of occupied cells in ascending order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let b = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    pub fn same_frame(&self, other: &VoxelGrid) -> bool {
        self.dims == other.dims && self.cell == other.cell && self.center == other.center
    }

    pub fn and_count(&self, other: &VoxelGrid) -> usize {
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Occupancy as 0/1 reals in index order.
    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| if self.get_index(i) { 1.0 } else { 0.0 }).collect()
    }
}

/// Samples model membership at every cell center.
pub fn voxelize(model: &CADModel, resolution: usize, bounds: Bounds) -> Result<VoxelGrid, GeometryError> {
    if resolution < 8 {
        return Err(GeometryError::Invalid(format!("resolution {resolution} below 8")));
    }
    let tol = default_chord_tol(model)?;
    let compiled = CompiledModel::new(model, tol)?;
    let (center, cell, dims) = match bounds {
        Bounds::Auto => {
            let (lo, hi) = model_bounds(model, tol)?;
            let ext = hi - lo;
            let size = ext.x.max(ext.y).max(ext.z);
            if !(size > 0.0) {
                return Err(GeometryError::EmptySolid("zero-extent bounds".into()));
            }
            let center = (lo + hi) * 0.5;
            (center, size * (1.0 + 2.0 * AUTO_PADDING) / resolution as f64, [resolution; 3])
        }
        Bounds::Box { min, max } => {
            let ext = max - min;
            let size = ext.x.max(ext.y).max(ext.z);
            if !(size > 0.0) {
                return Err(GeometryError::Invalid("zero-extent box".into()));
            }
            let cell = size / resolution as f64;
            let n = |e: f64| ((e / cell).round() as usize).max(1);
            ((min + max) * 0.5, cell, [n(ext.x), n(ext.y), n(ext.z)])
        }
        Bounds::Cube { center, half } => {
            if !(half > 0.0) {
                return Err(GeometryError::Invalid(format!("cube half side {half}")));
            }
            (center, 2.0 * half / resolution as f64, [resolution; 3])
        }
    };
    Ok(VoxelGrid::from_fn(center, cell, dims, |p| compiled.contains(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BooleanOp, Extrude, Face, Loop, Point2, Sketch};

    #[test]
    fn exact_fit_cube_is_full() {
        let g = voxelize(&CADModel::unit_cube(), 64, Bounds::Box { min: Vec3::ZERO, max: Vec3::new(1.0, 1.0, 1.0) }).unwrap();
        assert_eq!(g.count(), g.len());
        assert_eq!(g.origin(), Vec3::ZERO);
    }

    #[test]
    fn auto_bounds_volume() {
        let g = voxelize(&CADModel::unit_cube(), 64, Bounds::Auto).unwrap();
        let vol = g.count() as f64 * g.cell.powi(3);
        assert!((vol - 1.0).abs() < 0.05, "{vol}");
        // padding leaves the outer shell empty
        assert!(!g.get(0, 0, 0));
        assert!(g.get(32, 32, 32));
    }

    #[test]
    fn fully_cut_model_is_empty() {
        let m = CADModel::unit_cube().with(
            Sketch::xy(vec![Face::new(Loop::rect(Point2::new(-1.0, -1.0), Point2::new(2.0, 2.0)))]),
            Extrude::new(2.0, 1.0),
            BooleanOp::Cut,
        );
        let g = voxelize(&m, 16, Bounds::Auto).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn occupied_iterates_set_bits() {
        let mut g = VoxelGrid::empty(Vec3::ZERO, 1.0, [10, 10, 10]);
        for idx in [0, 63, 64, 500, 999] {
            g.set_index(idx, true);
        }
        assert_eq!(g.occupied().collect::<Vec<_>>(), vec![0, 63, 64, 500, 999]);
        assert_eq!(g.count(), 5);
        assert_eq!(g.unindex(g.index(3, 7, 9)), [3, 7, 9]);
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(voxelize(&CADModel::unit_cube(), 4, Bounds::Auto).is_err());
    }
}
