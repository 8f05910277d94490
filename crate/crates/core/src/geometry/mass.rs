use serde::Serialize;

use crate::model::Vec3;

use super::voxel::VoxelGrid;
use super::GeometryError;

/// Unit-density mass properties of a voxelized solid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassProperties {
    pub volume: f64,
    pub centroid: Vec3,
    /// Trace of the inertia tensor about the centroid.
    pub inertia_trace: f64,
}

impl MassProperties {
    /// `tr(I) / (2 Vol)`, the squared radius of gyration.
    pub fn gyration_sq(&self) -> f64 {
        self.inertia_trace / (2.0 * self.volume)
    }
}

/// Riemann sums over occupied cell centers.
///
/// Sums run over integer half-cell offsets from the grid center, so they are
/// exact and independent of traversal order; a grid rotated by a signed axis
/// permutation produces exactly the rotated centroid and the same trace.
pub fn mass_properties(grid: &VoxelGrid) -> Result<MassProperties, GeometryError> {
    let count = grid.count();
    if count == 0 {
        return Err(GeometryError::EmptySolid("no occupied cells".into()));
    }
    let dims = grid.dims.map(|d| d as i64);
    let mut first = [0i128; 3];
    let mut second = 0i128;
    for idx in grid.occupied() {
        let ijk = grid.unindex(idx);
        for a in 0..3 {
            let k = 2 * ijk[a] as i64 + 1 - dims[a];
            first[a] += k as i128;
            second += (k * k) as i128;
        }
    }
    let n = count as i128;
    let h = grid.cell * 0.5;
    let c = grid.center.to_array();
    let centroid: Vec<f64> = (0..3).map(|a| c[a] + (first[a] as f64 / count as f64) * h).collect();
    // n * sum |k|^2 - |sum k|^2, exact in integers
    let spread = n * second - first.iter().map(|s| s * s).sum::<i128>();
    let sum_r2 = spread as f64 / count as f64 * h * h;
    let cell3 = grid.cell.powi(3);
    Ok(MassProperties {
        volume: count as f64 * cell3,
        centroid: Vec3::new(centroid[0], centroid[1], centroid[2]),
        inertia_trace: 2.0 * sum_r2 * cell3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_exact_fit() {
        let g = VoxelGrid::cube(Vec3::new(0.5, 0.5, 0.5), 0.5, 40, |_| true);
        let m = mass_properties(&g).unwrap();
        assert!((m.volume - 1.0).abs() < 1e-12);
        assert!((m.centroid.x - 0.5).abs() < 1e-12);
        // midpoint rule underestimates by 1/(12 n^2) per axis
        assert!((m.gyration_sq() - 0.25).abs() < 1e-3);
    }

    #[test]
    fn translation_invariance() {
        let f = |p: Vec3| p.norm() < 0.8;
        let a = VoxelGrid::cube(Vec3::ZERO, 1.0, 32, f);
        let shift = Vec3::new(3.0, -2.0, 0.5);
        let b = VoxelGrid::cube(shift, 1.0, 32, |p| f(p - shift));
        let (ma, mb) = (mass_properties(&a).unwrap(), mass_properties(&b).unwrap());
        assert!((mb.centroid - ma.centroid - shift).norm() < 1e-12);
        assert!((ma.inertia_trace - mb.inertia_trace).abs() < 1e-12);
    }

    #[test]
    fn empty_grid_errors() {
        let g = VoxelGrid::empty(Vec3::ZERO, 1.0, [4, 4, 4]);
        assert!(matches!(mass_properties(&g), Err(GeometryError::EmptySolid(_))));
    }
}
