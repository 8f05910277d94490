use crate::geometry::VoxelGrid;
use crate::model::CADModel;

use super::align::{align_pair, AlignedPair};
use super::MetricsError;

/// Maps an occupancy grid to a feature vector; similarity is the cosine of
/// two embeddings, clamped to `[0, 1]`.
pub trait Encoder {
    fn name(&self) -> &str;

    fn embed(&self, grid: &VoxelGrid) -> Vec<f64>;

    fn similarity(&self, a: &VoxelGrid, b: &VoxelGrid) -> f64 {
        cosine(&self.embed(a), &self.embed(b))
    }

    /// Similarity of an aligned pair; encoders that can work from overlap
    /// counts override this to skip materializing the rotated grid.
    fn similarity_aligned(&self, pair: &AlignedPair) -> f64 {
        self.similarity(&pair.rotated_a(), &pair.b)
    }

    /// Upper bound on the similarity of two grids with `na` and `nb` cells
    /// out of `m` that share at most `k_max` cells under any alignment.
    /// The default of 1 disables pruning.
    fn similarity_bound(&self, _k_max: usize, _na: usize, _nb: usize, _m: usize) -> f64 {
        1.0
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// The flattened occupancy grid with its mean subtracted.
#[derive(Clone, Copy, Debug, Default)]
pub struct OccupancyEncoder;

impl OccupancyEncoder {
    /// Cosine of mean-centered occupancies from `k = |a ∧ b|`, the two cell
    /// counts and the grid size `m`.
    pub fn similarity_from_counts(k: usize, na: usize, nb: usize, m: usize) -> f64 {
        if na == nb && k == na {
            return 1.0;
        }
        let m = m as f64;
        let (k, na, nb) = (k as f64, na as f64, nb as f64);
        let va = na - na * na / m;
        let vb = nb - nb * nb / m;
        if va <= 0.0 || vb <= 0.0 {
            // an empty or full grid has no variance
            return 0.0;
        }
        ((k - na * nb / m) / (va * vb).sqrt()).clamp(0.0, 1.0)
    }
}

impl Encoder for OccupancyEncoder {
    fn name(&self) -> &str {
        "occupancy"
    }

    fn embed(&self, grid: &VoxelGrid) -> Vec<f64> {
        let mean = grid.count() as f64 / grid.len() as f64;
        (0..grid.len()).map(|i| if grid.get_index(i) { 1.0 - mean } else { -mean }).collect()
    }

    fn similarity(&self, a: &VoxelGrid, b: &VoxelGrid) -> f64 {
        assert!(a.same_frame(b), "similarity needs grids on one frame");
        Self::similarity_from_counts(a.and_count(b), a.count(), b.count(), a.len())
    }

    fn similarity_aligned(&self, pair: &AlignedPair) -> f64 {
        Self::similarity_from_counts(pair.intersection, pair.a.count(), pair.b.count(), pair.a.len())
    }

    fn similarity_bound(&self, k_max: usize, na: usize, nb: usize, m: usize) -> f64 {
        // increasing in k
        Self::similarity_from_counts(k_max, na, nb, m)
    }
}

/// Encoder similarity of the normalized, best-rotation-aligned solids.
pub fn geometric_similarity(
    a: &CADModel,
    b: &CADModel,
    encoder: &dyn Encoder,
    resolution: usize,
) -> Result<f64, MetricsError> {
    let pair = align_pair(a, b, resolution, true)?;
    Ok(encoder.similarity_aligned(&pair))
}
