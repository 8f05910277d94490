//! The training reward: a similarity-gated aligned IoU plus a format bonus
//! for answers that open with a think block.

use serde::{Deserialize, Serialize};

use crate::error::{Categorized, FailureCategory};
use crate::metrics::{align_pair, Encoder};
use crate::model::CADModel;
use crate::script::{execute_script, ExecLimits};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    /// Normalize both solids before comparing (image-conditioned tasks).
    pub normalize_before: bool,
    pub resolution: usize,
    /// Pay nothing at all, format included, when the script fails.
    pub strict_zero_on_failure: bool,
    pub limits: ExecLimits,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            lambda1: 0.1,
            lambda2: 0.9,
            tau: 0.55,
            normalize_before: false,
            resolution: 64,
            strict_zero_on_failure: false,
            limits: ExecLimits::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) || !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return Err(format!("lambda1 and lambda2 must be finite and >= 0, got {} and {}", self.lambda1, self.lambda2));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(format!("tau must lie in [0, 1), got {}", self.tau));
        }
        if self.resolution < 8 {
            return Err(format!("resolution must be at least 8, got {}", self.resolution));
        }
        if !self.limits.is_valid() {
            return Err("execution limits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub total: f64,
    pub geometric: f64,
    pub format: f64,
    pub failure_category: Option<FailureCategory>,
    pub iou_best: Option<f64>,
    pub similarity: Option<f64>,
}

/// `max(0, (s - tau) / (1 - tau))`, capped at one.
pub fn phi(s: f64, tau: f64) -> f64 {
    ((s - tau) / (1.0 - tau)).clamp(0.0, 1.0)
}

/// Span of the leading think block, if the text opens with one that closes.
fn think_block(text: &str) -> Option<(usize, usize)> {
    let start = text.len() - text.trim_start().len();
    if !text[start..].starts_with("<think>") {
        return None;
    }
    let body = start + "<think>".len();
    text[body..].find("</think>").map(|i| (start, body + i + "</think>".len()))
}

/// 1 when the text begins, after whitespace, with a closed `<think>` block.
pub fn format_reward(text: &str) -> f64 {
    if think_block(text).is_some() {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("no script found in the answer")]
pub struct ExtractionError;

impl Categorized for ExtractionError {
    fn category(&self) -> FailureCategory {
        FailureCategory::Extraction
    }
}

/// Contents of the last fenced code block; without fences, whatever follows
/// the think block.
pub fn extract_script(text: &str) -> Result<String, ExtractionError> {
    let fences: Vec<usize> = text.match_indices("```").map(|(i, _)| i).collect();
    let payload = if fences.len() >= 2 {
        let k = fences.len() / 2 * 2;
        let (open, close) = (fences[k - 2], fences[k - 1]);
        let after = open + 3;
        // the rest of the opening line is a language tag
        let body = text[after..close].find('\n').map_or(close, |n| after + n + 1);
        &text[body.min(close)..close]
    } else if let Some((_, end)) = think_block(text) {
        &text[end..]
    } else {
        text
    };
    if payload.trim().is_empty() {
        return Err(ExtractionError);
    }
    Ok(payload.to_string())
}

/// Reward of one answer against the ground-truth model. Never fails: every
/// problem ends up as a zero geometric term and a recorded category.
pub fn compute_reward(text: &str, gt: &CADModel, cfg: &RewardConfig, encoder: &dyn Encoder) -> RewardBreakdown {
    let format = format_reward(text);
    let outcome = extract_script(text)
        .map_err(|e| e.category())
        .and_then(|s| execute_script(&s, &cfg.limits).map_err(|e| e.category))
        .and_then(|m| align_pair(&m, gt, cfg.resolution, cfg.normalize_before).map_err(|e| e.category()));
    match outcome {
        Ok(pair) => {
            let iou = pair.iou();
            let sim = encoder.similarity_aligned(&pair);
            let geometric = iou.min(phi(sim, cfg.tau));
            RewardBreakdown {
                total: cfg.lambda1 * geometric + cfg.lambda2 * format,
                geometric,
                format,
                failure_category: None,
                iou_best: Some(iou),
                similarity: Some(sim),
            }
        }
        Err(category) => {
            log::debug!("reward: answer failed with {category}");
            let total = if cfg.strict_zero_on_failure { 0.0 } else { cfg.lambda2 * format };
            RewardBreakdown { total, geometric: 0.0, format, failure_category: Some(category), iou_best: None, similarity: None }
        }
    }
}
