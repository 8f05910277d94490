//! Entry points that take and return plain JSON values, for embedding in
//! other runtimes. Models travel as JSON text in either supported format.

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::error::{Categorized, FailureCategory};
use crate::harness::{build_curriculum as build, CurriculumConfig};
use crate::metrics::{eval_pair as eval, EvalOptions, OccupancyEncoder};
use crate::model::{from_any_json, to_native_json, CADModel};
use crate::reward::{compute_reward as reward, RewardConfig};
use crate::script::{execute_script as execute, ExecLimits};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{category}: {message}")]
pub struct ApiError {
    pub category: FailureCategory,
    pub message: String,
}

impl Categorized for ApiError {
    fn category(&self) -> FailureCategory {
        self.category
    }
}

fn err(e: &(impl Categorized + std::fmt::Display)) -> ApiError {
    ApiError { category: e.category(), message: e.to_string() }
}

fn parse_err(message: impl Into<String>) -> ApiError {
    ApiError { category: FailureCategory::Parse, message: message.into() }
}

/// Reads an options map; `null` means defaults and unknown keys are ignored.
fn options<T: DeserializeOwned + Default>(v: &Value) -> Result<T, ApiError> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| parse_err(format!("options: {e}")))
}

fn model(text: &str) -> Result<CADModel, ApiError> {
    from_any_json(text).map_err(|e| err(&e))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Reward breakdown of one answer against a ground-truth model.
pub fn compute_reward(solution_text: &str, gt_json: &str, config: &Value) -> Result<Value, ApiError> {
    let cfg: RewardConfig = options(config)?;
    cfg.validate().map_err(parse_err)?;
    let gt = model(gt_json)?;
    Ok(to_value(&reward(solution_text, &gt, &cfg, &OccupancyEncoder)))
}

/// Metric report of a predicted model against the ground truth.
pub fn eval_pair(pred_json: &str, gt_json: &str, opts: &Value) -> Result<Value, ApiError> {
    let opts: EvalOptions = options(opts)?;
    let (pred, gt) = (model(pred_json)?, model(gt_json)?);
    eval(&pred, &gt, &opts).map(|r| to_value(&r)).map_err(|e| err(&e))
}

/// Runs a script and returns the model as a native JSON value.
pub fn execute_script(source: &str, limits: &Value) -> Result<Value, ApiError> {
    let limits: ExecLimits = options(limits)?;
    let m = execute(source, &limits).map_err(|e| err(&e))?;
    Ok(serde_json::from_str(&to_native_json(&m)).expect("native json parses"))
}

/// Curriculum of a `{model id: model JSON text}` map. The result holds the
/// ordered `entries` and the `skipped` models.
pub fn build_curriculum(models: &Value, config: &Value) -> Result<Value, ApiError> {
    let cfg: CurriculumConfig = options(config)?;
    let map = models.as_object().ok_or_else(|| parse_err("models must be a map of id to model JSON"))?;
    let mut parsed = Vec::with_capacity(map.len());
    let mut skipped = Vec::new();
    for (id, v) in map {
        let text = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match model(&text) {
            Ok(m) => parsed.push((id.clone(), m)),
            Err(e) => skipped.push(json!({"id": id, "category": e.category, "message": e.message})),
        }
    }
    parsed.sort_by(|a, b| a.0.cmp(&b.0));
    let out = build(&parsed, &cfg, &OccupancyEncoder);
    for s in &out.skipped {
        skipped.push(to_value(s));
    }
    Ok(json!({"entries": to_value(&out.manifest.entries), "skipped": skipped}))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Primitive;
    use crate::script::emit_hardcoded;

    fn cube_json() -> String {
        to_native_json(&CADModel::unit_cube())
    }

    #[test]
    fn reward_map_matches_core() {
        let code = emit_hardcoded(&Primitive::MSE(CADModel::unit_cube()));
        let cfg = json!({"resolution": 32});
        let r = compute_reward(&format!("<think>a</think>\n```python\n{code}```"), &cube_json(), &cfg).unwrap();
        assert_eq!(r["total"], json!(1.0));
        let r = compute_reward("<think>a</think>\n```\n(\n```", &cube_json(), &cfg).unwrap();
        assert_eq!((r["total"].as_f64(), r["failure_category"].as_str()), (Some(0.9), Some("parse")));
        let e = compute_reward("x", "{not json", &cfg).unwrap_err();
        assert_eq!(e.category, FailureCategory::Parse);
        assert!(compute_reward("x", &cube_json(), &json!({"tau": 2.0})).is_err());
    }

    #[test]
    fn eval_and_execute_maps() {
        let r = eval_pair(&cube_json(), &cube_json(), &json!({"resolution": 32, "samples": 300})).unwrap();
        assert_eq!(r["valid"], json!(true));
        assert_eq!(r["iou_best"], json!(1.0));
        assert_eq!(r["p_f1"], json!(1.0));
        let code = emit_hardcoded(&Primitive::MSE(CADModel::unit_cube()));
        let v = execute_script(&code, &Value::Null).unwrap();
        assert_eq!(model(&v.to_string()).unwrap(), CADModel::unit_cube());
        let e = execute_script("while x: pass", &Value::Null).unwrap_err();
        assert_eq!(e.category, FailureCategory::RejectedConstruct);
    }

    #[test]
    fn curriculum_map() {
        let models = json!({"cube": cube_json(), "bad": "{"});
        let v = build_curriculum(&models, &Value::Null).unwrap();
        assert_eq!(v["entries"].as_array().unwrap().len(), 4);
        assert_eq!(v["skipped"][0]["id"], json!("bad"));
        assert_eq!(v["entries"][0]["level"], json!("L"));
    }
}
