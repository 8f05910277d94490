use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Categorized, FailureCategory};
use crate::geometry::{AxisRotation, VoxelGrid};
use crate::metrics::align::{align_pair, max_abs_coord, normalize_model, origin_cube, rotated_and_count, GRID_MARGIN};
use crate::metrics::Encoder;
use crate::model::{extract_primitives, CADModel, Primitive, PrimitiveLevel, PrimitiveSource};
use crate::script::{emit_hardcoded, execute_script, ExecLimits};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    /// Similarity above which a primitive duplicates one already kept.
    pub threshold: f64,
    pub resolution: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig { threshold: 0.95, resolution: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub level: PrimitiveLevel,
    pub curve_count: usize,
    pub source_model: String,
    pub source: PrimitiveSource,
    pub primitive: Primitive,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurriculumManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CurriculumManifest {
    /// Number of entries per level, in level order.
    pub fn level_counts(&self) -> Vec<(PrimitiveLevel, usize)> {
        PrimitiveLevel::ALL.iter().map(|&l| (l, self.entries.iter().filter(|e| e.level == l).count())).collect()
    }

    /// Level order and, within a level, non-decreasing curve counts.
    pub fn is_ordered(&self) -> bool {
        self.entries.windows(2).all(|w| (w[0].level, w[0].curve_count) <= (w[1].level, w[1].curve_count))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedModel {
    pub id: String,
    pub category: FailureCategory,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumOutput {
    pub manifest: CurriculumManifest,
    pub skipped: Vec<SkippedModel>,
}

/// Extracts every primitive, sorts by level, curve count, source model id and
/// extraction order, then drops duplicates within each level.
pub fn build_curriculum(models: &[(String, CADModel)], cfg: &CurriculumConfig, encoder: &dyn Encoder) -> CurriculumOutput {
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (id, model) in models {
        match extract_primitives(model) {
            Ok(prims) => {
                for (k, p) in prims.into_iter().enumerate() {
                    entries.push((
                        k,
                        ManifestEntry {
                            id: format!("{id}/{}/{k}", p.level),
                            level: p.level,
                            curve_count: p.curve_count,
                            source_model: id.clone(),
                            source: p.source,
                            primitive: p.primitive,
                        },
                    ));
                }
            }
            Err(e) => {
                log::warn!("curriculum: skipping model {id}: {e}");
                skipped.push(SkippedModel { id: id.clone(), category: e.category(), message: e.to_string() });
            }
        }
    }
    entries.sort_by(|(ka, a), (kb, b)| {
        (a.level, a.curve_count, &a.source_model, *ka).cmp(&(b.level, b.curve_count, &b.source_model, *kb))
    });
    let entries: Vec<ManifestEntry> = entries.into_iter().map(|(_, e)| e).collect();

    let mut kept = Vec::with_capacity(entries.len());
    let mut start = 0;
    while start < entries.len() {
        let level = entries[start].level;
        let end = start + entries[start..].iter().take_while(|e| e.level == level).count();
        let prims: Vec<Primitive> = entries[start..end].iter().map(|e| e.primitive.clone()).collect();
        for i in dedup_primitives(&prims, encoder, cfg.threshold, cfg.resolution) {
            kept.push(entries[start + i].clone());
        }
        start = end;
    }
    CurriculumOutput { manifest: CurriculumManifest { entries: kept }, skipped }
}

/// Normalized occupancy of one primitive on the shared grid, with a
/// rotation-invariant histogram used to bound overlaps.
struct Shape {
    grid: VoxelGrid,
    count: usize,
    /// Cell counts keyed by the sorted absolute axis offsets from the grid
    /// center; axis rotations permute and flip offsets, so keys are invariant.
    hist: Vec<(u64, usize)>,
}

fn offset_key(idx: [usize; 3], n: usize) -> u64 {
    let mut o = idx.map(|i| (2 * i as i64 - (n as i64 - 1)).unsigned_abs());
    o.sort_unstable();
    (o[0] << 42) | (o[1] << 21) | o[2]
}

fn shape(grid: VoxelGrid) -> Shape {
    let n = grid.dims[0];
    let mut h: HashMap<u64, usize> = HashMap::new();
    for idx in grid.occupied() {
        *h.entry(offset_key(grid.unindex(idx), n)).or_default() += 1;
    }
    let mut hist: Vec<(u64, usize)> = h.into_iter().collect();
    hist.sort_unstable();
    Shape { count: grid.count(), grid, hist }
}

/// `Σ_key min(ha, hb)`, an upper bound on the overlap under any rotation.
fn hist_overlap(a: &[(u64, usize)], b: &[(u64, usize)]) -> usize {
    let (mut i, mut j, mut s) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1.min(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Greedy scan in input order: a primitive is dropped when its encoder
/// similarity to some kept primitive exceeds `threshold`. Comparison is on
/// normalized solids over the 24 axis rotations, so translated, scaled and
/// quarter-turned copies count as duplicates. Returns the kept indices.
///
/// Primitives that cannot be voxelized are compared by value only.
pub fn dedup_primitives(prims: &[Primitive], encoder: &dyn Encoder, threshold: f64, resolution: usize) -> Vec<usize> {
    let keys: Vec<String> = prims.iter().map(|p| serde_json::to_string(p).expect("primitive serializes")).collect();
    let normalized: Vec<Option<CADModel>> = prims
        .iter()
        .map(|p| normalize_model(&p.to_model(), resolution).map_err(|e| log::debug!("dedup: {e}")).ok())
        .collect();
    let half = GRID_MARGIN
        * normalized.iter().flatten().filter_map(|m| max_abs_coord(m).ok()).fold(0.0f64, f64::max);
    let shapes: Vec<Option<Shape>> = normalized
        .iter()
        .map(|m| {
            let m = m.as_ref()?;
            if !(half > 0.0) {
                return None;
            }
            let g = origin_cube(m, resolution, half).ok()?;
            (!g.is_empty()).then(|| shape(g))
        })
        .collect();
    let rotations = AxisRotation::all();

    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..prims.len() {
        if seen.contains_key(keys[i].as_str()) {
            continue;
        }
        let dup = shapes[i].as_ref().is_some_and(|a| {
            kept.iter().filter_map(|&j| shapes[j].as_ref()).any(|b| {
                let m = a.grid.len();
                let k_max = a.count.min(b.count).min(hist_overlap(&a.hist, &b.hist));
                if encoder.similarity_bound(k_max, a.count, b.count, m) <= threshold {
                    return false;
                }
                rotations.iter().any(|r| {
                    let k = rotated_and_count(&a.grid, &b.grid, r);
                    encoder.similarity_bound(k, a.count, b.count, m) > threshold
                        && encoder.similarity(&crate::metrics::rotate_grid(&a.grid, r), &b.grid) > threshold
                })
            })
        });
        if !dup {
            seen.insert(&keys[i], ());
            kept.push(i);
        }
    }
    kept
}

/// Keeps the candidate scripts whose solids match the reference with
/// similarity above `tau_s`, compared in place over the axis rotations. When
/// none survive, the reference's own hard-coded script is returned.
pub fn rewrite_filter(
    reference: &Primitive,
    candidates: &[String],
    encoder: &dyn Encoder,
    tau_s: f64,
    resolution: usize,
    limits: &ExecLimits,
) -> Vec<String> {
    let target = reference.to_model();
    let kept: Vec<String> = candidates
        .iter()
        .filter(|c| match execute_script(c, limits) {
            Ok(m) => match align_pair(&m, &target, resolution, false) {
                Ok(pair) => encoder.similarity_aligned(&pair) > tau_s,
                Err(e) => {
                    log::debug!("rewrite: candidate not comparable: {e}");
                    false
                }
            },
            Err(e) => {
                log::debug!("rewrite: candidate failed: {e}");
                false
            }
        })
        .cloned()
        .collect();
    if kept.is_empty() {
        vec![emit_hardcoded(reference)]
    } else {
        kept
    }
}
