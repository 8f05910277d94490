//! Chamfer distance, IoU under the best axis alignment, primitive F1,
//! invalidity ratio and encoder-based geometric similarity.

pub mod align;
pub mod encoder;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Categorized, FailureCategory};
use crate::geometry::{default_chord_tol, sample_surface, AxisRotation, GeometryError, VoxelGrid};
use crate::model::{CADModel, CurveKind, Vec3};

pub use align::{align_pair, iou_best, normalize_model, rotate_grid, AlignedPair, IouBest};
pub use encoder::{cosine, geometric_similarity, Encoder, OccupancyEncoder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl Categorized for MetricsError {
    fn category(&self) -> FailureCategory {
        match self {
            MetricsError::Precondition(_) => FailureCategory::Evaluation,
            MetricsError::Geometry(e) => e.category(),
        }
    }
}

#[inline]
fn dist2(a: Vec3, b: Vec3) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    dx * dx + dy * dy + dz * dz
}

/// For each point of `from`, the squared distance to its nearest neighbor in `to`.
///
/// `to` is sorted by x and scanned outward from the query's x position until
/// the x gap alone exceeds the best distance, so the result is the exact
/// minimum a full scan would find.
fn nearest_sq(from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    let mut sorted = to.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    from.iter()
        .map(|&p| {
            let start = sorted.partition_point(|q| q.x < p.x);
            let mut best = f64::INFINITY;
            for q in &sorted[start..] {
                let dx = q.x - p.x;
                if dx * dx > best {
                    break;
                }
                best = best.min(dist2(p, *q));
            }
            for q in sorted[..start].iter().rev() {
                let dx = p.x - q.x;
                if dx * dx > best {
                    break;
                }
                best = best.min(dist2(p, *q));
            }
            best
        })
        .collect()
}

/// `½ (mean_a d²(·, b) + mean_b d²(·, a))`.
pub fn chamfer(a: &[Vec3], b: &[Vec3]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Precondition("chamfer needs two non-empty point sets".into()));
    }
    let ab: f64 = nearest_sq(a, b).iter().sum();
    let ba: f64 = nearest_sq(b, a).iter().sum();
    Ok(0.5 * (ab / a.len() as f64 + ba / b.len() as f64))
}

/// `|a ∧ b| / |a ∨ b|` on grids sharing a frame; 0 when both are empty.
pub fn iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64, MetricsError> {
    if !a.same_frame(b) {
        return Err(MetricsError::Precondition("grids have different frames".into()));
    }
    let k = a.and_count(b);
    let union = a.count() + b.count() - k;
    Ok(if union == 0 { 0.0 } else { k as f64 / union as f64 })
}

/// Line, arc and circle counts over every drawn segment, including the
/// closing line a loop gets from `close()`.
pub fn curve_type_counts(model: &CADModel) -> [usize; 3] {
    let mut c = [0; 3];
    for lp in model.loops() {
        for s in lp.segments() {
            c[match s.kind() {
                CurveKind::Line => 0,
                CurveKind::Arc => 1,
                CurveKind::Circle => 2,
            }] += 1;
        }
    }
    c
}

/// Macro-averaged F1 over curve types, matching by per-type counts.
pub fn primitive_f1(pred: &CADModel, gt: &CADModel) -> f64 {
    f1_from_counts(curve_type_counts(pred), curve_type_counts(gt))
}

/// Per-type F1 is `2 min(p, g) / (p + g)`; the macro average is summed as an
/// exact fraction and divided once, so rational results are correctly rounded.
pub fn f1_from_counts(p: [usize; 3], g: [usize; 3]) -> f64 {
    let (mut num, mut den) = (0u128, 1u128);
    let mut types = 0u128;
    for t in 0..3 {
        if p[t] == 0 && g[t] == 0 {
            continue;
        }
        types += 1;
        let (n, d) = (2 * p[t].min(g[t]) as u128, (p[t] + g[t]) as u128);
        num = num * d + n * den;
        den *= d;
    }
    if types == 0 {
        return 1.0;
    }
    num as f64 / (den * types) as f64
}

/// Share of outcomes that failed.
pub fn invalidity_ratio<T, E>(outcomes: &[Result<T, E>]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Precondition("no outcomes".into()));
    }
    Ok(outcomes.iter().filter(|o| o.is_err()).count() as f64 / outcomes.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub resolution: usize,
    pub samples: usize,
    pub seed: u64,
    pub normalize: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { resolution: 64, samples: 2000, seed: 0, normalize: false }
    }
}

/// Per-pair evaluation. Geometric fields are present only for valid predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub valid: bool,
    pub failure_category: Option<FailureCategory>,
    pub chamfer_x1e3: Option<f64>,
    pub iou_best: Option<f64>,
    pub p_f1: Option<f64>,
    pub alignment: Option<AxisRotation>,
}

impl MetricReport {
    pub fn invalid(category: FailureCategory) -> Self {
        MetricReport {
            valid: false,
            failure_category: Some(category),
            chamfer_x1e3: None,
            iou_best: None,
            p_f1: None,
            alignment: None,
        }
    }
}

/// Chamfer (on surface samples), aligned IoU and primitive F1 of a prediction.
/// With `normalize`, both solids are normalized before sampling and voxelizing.
pub fn eval_pair(pred: &CADModel, gt: &CADModel, opts: &EvalOptions) -> Result<MetricReport, MetricsError> {
    let (p, g) = if opts.normalize {
        (normalize_model(pred, opts.resolution)?, normalize_model(gt, opts.resolution)?)
    } else {
        (pred.clone(), gt.clone())
    };
    let sp = sample_surface(&p, opts.samples, opts.seed, default_chord_tol(&p)?)?;
    let sg = sample_surface(&g, opts.samples, opts.seed, default_chord_tol(&g)?)?;
    let cd = chamfer(&sp, &sg)?;
    let best = iou_best(&p, &g, opts.resolution, false)?;
    Ok(MetricReport {
        valid: true,
        failure_category: None,
        chamfer_x1e3: Some(cd * 1e3),
        iou_best: Some(best.score),
        p_f1: Some(primitive_f1(pred, gt)),
        alignment: Some(best.alignment),
    })
}

/// Like [`eval_pair`] for a prediction that may have failed upstream; a
/// prediction that cannot be measured counts as invalid.
pub fn eval_outcome(pred: Result<&CADModel, FailureCategory>, gt: &CADModel, opts: &EvalOptions) -> MetricReport {
    match pred {
        Err(c) => MetricReport::invalid(c),
        Ok(m) => eval_pair(m, gt, opts).unwrap_or_else(|e| MetricReport::invalid(e.category())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
}

pub fn mean_median(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    Some(Stat { mean: values.iter().sum::<f64>() / n as f64, median })
}

/// Batch summary; invalid predictions count toward IR only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub pairs: usize,
    pub valid: usize,
    pub chamfer_x1e3: Option<Stat>,
    pub iou_best: Option<Stat>,
    pub p_f1: Option<Stat>,
    pub invalidity_ratio: f64,
}

pub fn summarize(reports: &[MetricReport]) -> MetricSummary {
    let col = |f: fn(&MetricReport) -> Option<f64>| reports.iter().filter_map(f).collect::<Vec<_>>();
    let valid = reports.iter().filter(|r| r.valid).count();
    MetricSummary {
        pairs: reports.len(),
        valid,
        chamfer_x1e3: mean_median(&col(|r| r.chamfer_x1e3)),
        iou_best: mean_median(&col(|r| r.iou_best)),
        p_f1: mean_median(&col(|r| r.p_f1)),
        invalidity_ratio: if reports.is_empty() { 0.0 } else { (reports.len() - valid) as f64 / reports.len() as f64 },
    }
}
