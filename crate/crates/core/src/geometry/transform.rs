use serde::Serialize;

use crate::model::{CADModel, Vec3};

use super::mass::MassProperties;
use super::GeometryError;

/// `x -> (x + translation) * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimilarityTransform {
    pub translation: Vec3,
    pub scale: f64,
}

impl SimilarityTransform {
    pub const IDENTITY: SimilarityTransform = SimilarityTransform { translation: Vec3::ZERO, scale: 1.0 };

    pub fn apply(&self, p: Vec3) -> Vec3 {
        (p + self.translation) * self.scale
    }

    /// Moves every sketch plane and scales sketch coordinates and extrusion
    /// distances; the result is the exact image of the solid.
    pub fn apply_model(&self, model: &CADModel) -> CADModel {
        let s = self.scale;
        let mut out = model.clone();
        for pair in &mut out.pairs {
            pair.sketch.origin = self.apply(pair.sketch.origin);
            for face in &mut pair.sketch.faces {
                face.outer = face.outer.scaled(s);
                for h in &mut face.holes {
                    *h = h.scaled(s);
                }
            }
            pair.extrude.dist_pos *= s;
            pair.extrude.dist_neg *= s;
        }
        out
    }
}

/// Moves the centroid to the origin and scales the radius of gyration
/// `sqrt(tr(I) / (2 Vol))` to one.
pub fn normalize_transform(props: &MassProperties) -> Result<SimilarityTransform, GeometryError> {
    if !(props.volume > 0.0) {
        return Err(GeometryError::EmptySolid("zero volume".into()));
    }
    let g2 = props.gyration_sq();
    if !(g2 > 0.0) || !g2.is_finite() {
        return Err(GeometryError::Degenerate(format!("radius of gyration squared {g2}")));
    }
    Ok(SimilarityTransform { translation: -props.centroid, scale: 1.0 / g2.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_scale_is_two() {
        let props = MassProperties { volume: 1.0, centroid: Vec3::new(0.5, 0.5, 0.5), inertia_trace: 0.5 };
        let t = normalize_transform(&props).unwrap();
        assert_eq!(t.scale, 2.0);
        assert_eq!(t.apply(Vec3::new(0.5, 0.5, 0.5)), Vec3::ZERO);
    }

    #[test]
    fn normalized_solid_is_fixed_point() {
        let props = MassProperties { volume: 3.0, centroid: Vec3::ZERO, inertia_trace: 6.0 };
        let t = normalize_transform(&props).unwrap();
        assert!((t.scale - 1.0).abs() < 1e-12);
        assert_eq!(t.translation, -Vec3::ZERO);
    }

    #[test]
    fn zero_volume_errors() {
        let props = MassProperties { volume: 0.0, centroid: Vec3::ZERO, inertia_trace: 0.0 };
        assert!(matches!(normalize_transform(&props), Err(GeometryError::EmptySolid(_))));
    }

    #[test]
    fn model_image_matches_point_image() {
        let m = CADModel::unit_cube();
        let t = SimilarityTransform { translation: Vec3::new(-0.5, -0.5, -0.5), scale: 2.0 };
        let out = t.apply_model(&m);
        let tol = 1e-3;
        for p in [Vec3::new(0.2, 0.9, 0.4), Vec3::new(1.1, 0.5, 0.5), Vec3::new(0.99, 0.01, 0.5)] {
            let a = crate::geometry::membership(&m, p, tol).unwrap();
            let b = crate::geometry::membership(&out, t.apply(p), tol).unwrap();
            assert_eq!(a, b);
        }
    }
}
