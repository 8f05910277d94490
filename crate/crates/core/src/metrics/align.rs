use serde::Serialize;

use crate::geometry::{
    default_chord_tol, mass_properties, model_bounds, normalize_transform, voxelize, AxisRotation, Bounds,
    GeometryError, VoxelGrid,
};
use crate::model::{CADModel, Vec3};

use super::MetricsError;

/// Margin of the common grid beyond the largest absolute coordinate.
pub const GRID_MARGIN: f64 = 1.05;

/// Moves the centroid to the origin and scales the radius of gyration to one.
pub fn normalize_model(model: &CADModel, resolution: usize) -> Result<CADModel, GeometryError> {
    let grid = voxelize(model, resolution, Bounds::Auto)?;
    let t = normalize_transform(&mass_properties(&grid)?)?;
    Ok(t.apply_model(model))
}

/// Largest absolute world coordinate reached by the model's material.
pub fn max_abs_coord(model: &CADModel) -> Result<f64, GeometryError> {
    let (lo, hi) = model_bounds(model, default_chord_tol(model)?)?;
    Ok([lo.x, lo.y, lo.z, hi.x, hi.y, hi.z].iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Cube grid `[-half, half]^3` centered on the origin; the 24 axis rotations
/// map its cells onto each other exactly.
pub fn origin_cube(model: &CADModel, resolution: usize, half: f64) -> Result<VoxelGrid, GeometryError> {
    voxelize(model, resolution, Bounds::Cube { center: Vec3::ZERO, half })
}

/// The grid's occupancy after rotating about the grid center.
pub fn rotate_grid(grid: &VoxelGrid, r: &AxisRotation) -> VoxelGrid {
    let n = grid.dims[0];
    debug_assert!(grid.dims == [n; 3]);
    let mut out = VoxelGrid::empty(grid.center, grid.cell, grid.dims);
    for idx in grid.occupied() {
        let [i, j, k] = r.map_index(grid.unindex(idx), n);
        out.set_index(out.index(i, j, k), true);
    }
    out
}

/// Occupied cells shared by `rotate(a, r)` and `b`.
pub fn rotated_and_count(a: &VoxelGrid, b: &VoxelGrid, r: &AxisRotation) -> usize {
    let n = a.dims[0];
    a.occupied()
        .filter(|&idx| {
            let [i, j, k] = r.map_index(a.unindex(idx), n);
            b.get(i, j, k)
        })
        .count()
}

/// Two solids voxelized on one origin-centered cube grid, with the rotation
/// of the first that overlaps the second most.
#[derive(Clone, Debug)]
pub struct AlignedPair {
    pub a: VoxelGrid,
    pub b: VoxelGrid,
    pub rotation: AxisRotation,
    /// `|rotate(a) ∧ b|` at `rotation`.
    pub intersection: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IouBest {
    pub score: f64,
    pub alignment: AxisRotation,
}

impl AlignedPair {
    pub fn iou(&self) -> f64 {
        let union = self.a.count() + self.b.count() - self.intersection;
        if union == 0 {
            0.0
        } else {
            self.intersection as f64 / union as f64
        }
    }

    pub fn rotated_a(&self) -> VoxelGrid {
        rotate_grid(&self.a, &self.rotation)
    }
}

/// Voxelizes both models on a shared grid and searches the 24 rotations.
/// Ties keep the earliest rotation in [`AxisRotation::all`] order.
pub fn align_pair(a: &CADModel, b: &CADModel, resolution: usize, normalize: bool) -> Result<AlignedPair, MetricsError> {
    let (a, b) = if normalize {
        (normalize_model(a, resolution)?, normalize_model(b, resolution)?)
    } else {
        (a.clone(), b.clone())
    };
    let half = GRID_MARGIN * max_abs_coord(&a)?.max(max_abs_coord(&b)?);
    if !(half > 0.0) || !half.is_finite() {
        return Err(GeometryError::Degenerate(format!("common grid half side {half}")).into());
    }
    let ga = origin_cube(&a, resolution, half)?;
    let gb = origin_cube(&b, resolution, half)?;
    if ga.is_empty() || gb.is_empty() {
        return Err(GeometryError::EmptySolid("solid occupies no grid cells".into()).into());
    }
    let (rotation, intersection) = best_rotation(&ga, &gb);
    Ok(AlignedPair { a: ga, b: gb, rotation, intersection })
}

pub fn best_rotation(a: &VoxelGrid, b: &VoxelGrid) -> (AxisRotation, usize) {
    let mut best = (AxisRotation::IDENTITY, 0usize);
    for (i, r) in AxisRotation::all().into_iter().enumerate() {
        let k = rotated_and_count(a, b, &r);
        if i == 0 || k > best.1 {
            best = (r, k);
        }
    }
    best
}

/// IoU maximized over the 24 proper axis-aligned rotations of `a`.
pub fn iou_best(a: &CADModel, b: &CADModel, resolution: usize, normalize: bool) -> Result<IouBest, MetricsError> {
    let p = align_pair(a, b, resolution, normalize)?;
    Ok(IouBest { score: p.iou(), alignment: p.rotation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::iou;
    use crate::model::{Extrude, Face, Loop, Point2, Sketch};

    fn slab() -> CADModel {
        CADModel::single(
            Sketch::xy(vec![Face::new(Loop::rect(Point2::new(-0.2, -0.5), Point2::new(0.6, 0.1)))]),
            Extrude::new(0.3, 0.05),
        )
    }

    #[test]
    fn rotated_grid_matches_rotated_model() {
        let m = slab();
        for r in AxisRotation::all() {
            let g = origin_cube(&m, 24, 1.0).unwrap();
            let gr = origin_cube(&m.rotated(&r), 24, 1.0).unwrap();
            assert_eq!(rotate_grid(&g, &r), gr, "{r:?}");
        }
    }

    #[test]
    fn self_alignment_is_identity_with_full_score() {
        let p = align_pair(&slab(), &slab(), 32, false).unwrap();
        assert_eq!(p.rotation, AxisRotation::IDENTITY);
        assert_eq!(p.iou(), 1.0);
        assert_eq!(iou(&p.rotated_a(), &p.b).unwrap(), 1.0);
    }

    #[test]
    fn search_recovers_rotation() {
        let m = slab();
        let r = AxisRotation::all()[7];
        let s = iou_best(&m.rotated(&r), &m, 32, false).unwrap();
        assert_eq!(s.score, 1.0);
        assert_eq!(s.alignment, r.inverse());
    }
}
