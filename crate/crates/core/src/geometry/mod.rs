//! Turning sketch-extrude models into solids: tessellation, triangulation,
//! prism meshes, analytic CSG membership, voxel grids, surface samples and
//! mass properties.

pub mod arc;
pub mod export;
pub mod mass;
pub mod membership;
pub mod mesh;
pub mod polygon;
pub mod rotation;
pub mod sample;
pub mod tessellate;
pub mod transform;
pub mod triangulate;
pub mod voxel;

use thiserror::Error;

use crate::error::{Categorized, FailureCategory};

pub use arc::{solve_arc, ArcGeom};
pub use mass::{mass_properties, MassProperties};
pub use membership::{
    default_chord_tol, membership, model_bounds, point_in_face, point_in_se, CompiledModel,
};
pub use mesh::{extrude_mesh, model_mesh, MeshPart, TriMesh, TriTag};
pub use rotation::AxisRotation;
pub use sample::sample_surface;
pub use tessellate::{tessellate_loop, Polyline2};
pub use transform::{normalize_transform, SimilarityTransform};
pub use triangulate::{triangulate_face, FaceTriangulation};
pub use voxel::{voxelize, Bounds, VoxelGrid};
pub use export::{decode_voxels, encode_voxels, model_to_obj};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate arc: {0}")]
    DegenerateArc(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("self-intersecting geometry: {0}")]
    SelfIntersecting(String),
    #[error("empty solid: {0}")]
    EmptySolid(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Categorized for GeometryError {
    fn category(&self) -> FailureCategory {
        match self {
            GeometryError::EmptySolid(_) => FailureCategory::EmptySolid,
            _ => FailureCategory::Geometry,
        }
    }
}
