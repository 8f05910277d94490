use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CADModel, Vec3};

use super::membership::{default_chord_tol, model_bounds, norm_sym, CompiledModel};
use super::mesh::model_mesh;
use super::GeometryError;

/// Offset along the triangle normal for the boundary test, as a fraction of
/// the model diagonal.
pub const FLIP_EPS_FRACTION: f64 = 1e-4;

const MAX_DRAWS_PER_POINT: usize = 2000;

/// Area-weighted points on the boundary of the boolean result.
///
/// Points are drawn from the per-pair prism meshes and kept only where the
/// model membership differs on the two sides of the triangle, which discards
/// interior walls of joins and the unused parts of cut tools.
pub fn sample_surface(model: &CADModel, n: usize, seed: u64, chord_tol: f64) -> Result<Vec<Vec3>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::Invalid("sample count must be at least 1".into()));
    }
    let mesh = model_mesh(model, chord_tol)?;
    let compiled = CompiledModel::new(model, chord_tol)?;
    let (lo, hi) = model_bounds(model, default_chord_tol(model)?)?;
    let eps = FLIP_EPS_FRACTION * norm_sym(hi - lo);

    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.area_normal(t).norm() * 0.5;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(GeometryError::EmptySolid("mesh has no area".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let max_draws = n.saturating_mul(MAX_DRAWS_PER_POINT).max(100_000);
    let mut draws = 0;
    while out.len() < n {
        if draws >= max_draws {
            return Err(GeometryError::EmptySolid(format!(
                "kept {} of {n} boundary samples after {draws} draws",
                out.len()
            )));
        }
        draws += 1;
        let target = rng.random::<f64>() * total;
        let t = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(t);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let p = a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2);
        let normal = mesh.area_normal(t);
        let len = normal.norm();
        if !(len > 0.0) {
            continue;
        }
        let d = normal * (eps / len);
        if compiled.contains(p + d) != compiled.contains(p - d) {
            out.push(p);
        }
    }
    Ok(out)
}
