use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use recad_core::geometry::{default_chord_tol, encode_voxels, model_to_obj, voxelize, Bounds};
use recad_core::harness::{
    build_curriculum, classify_hardness, mixed_loss, CurriculumConfig, HarnessConfig, ManifestEntry, MockConfig,
    MockPolicy, Modality, Question,
};
use recad_core::metrics::{eval_outcome, summarize, EvalOptions, MetricReport, OccupancyEncoder};
use recad_core::model::{to_native_json, CADModel};
use recad_core::reward::{compute_reward, RewardConfig};
use recad_core::script::{emit_hardcoded, emit_model, ExecLimits};
use recad_core::{Categorized, FailureCategory};

use crate::input::{files_by_stem, load_model, parse_limits, read_text, require_exists, write_out};
use crate::{Cli, Command, Common, ConvertTarget, ExportFormat, Failure};

fn line<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("serializable") + "\n"
}

fn geometry_failure(e: impl Categorized + std::fmt::Display) -> Failure {
    Failure::data(e.category(), e.to_string())
}

fn reward_config(c: &Common, resolution: usize, limits: ExecLimits) -> Result<RewardConfig, Failure> {
    let cfg = RewardConfig {
        lambda1: c.lambda1,
        lambda2: c.lambda2,
        tau: c.tau,
        normalize_before: c.normalize,
        resolution,
        limits,
        ..RewardConfig::default()
    };
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

fn check_unit(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{name} must lie in (0, 1], got {v}")))
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let limits = parse_limits(c.limits.as_deref())?;
    if let Some(r) = c.resolution {
        if r < 8 {
            return Err(Failure::Usage(format!("--resolution must be at least 8, got {r}")));
        }
    }
    check_unit("--tau-s", c.tau_s)?;
    check_unit("--tau-h", c.tau_h)?;
    match &cli.command {
        Command::Convert { input, to, output } => convert(input, *to, output.as_deref(), &limits),
        Command::Eval { pred, gt, samples } => eval(c, pred, gt, *samples, &limits),
        Command::Reward { solution, gt, strict } => reward(c, solution, gt, *strict, limits),
        Command::Curriculum { models, output, dedup_threshold } => {
            curriculum(c, models, output.as_deref(), *dedup_threshold, &limits)
        }
        Command::HarnessSim { manifest, beta, steps, n, eps, batch_size, mock, no_guidance } => {
            let hc = HarnessConfig { n: *n, eps: *eps, beta: *beta, tau_h: c.tau_h };
            hc.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let sim = Sim { steps: *steps, batch_size: *batch_size, mock: mock.as_deref(), guidance: !no_guidance };
            harness_sim(c, manifest, &hc, &sim, limits)
        }
        Command::Export { model, format, output } => export(c, model, *format, output.as_deref(), &limits),
    }
}

fn convert(input: &Path, to: ConvertTarget, output: Option<&Path>, limits: &ExecLimits) -> Result<(), Failure> {
    require_exists(input)?;
    let model = load_model(input, limits)?;
    let text = match to {
        ConvertTarget::Native => to_native_json(&model) + "\n",
        ConvertTarget::Script => emit_model(&model),
    };
    write_out(output, text.as_bytes())
}

#[derive(Serialize)]
struct PairLine<'a> {
    id: &'a str,
    #[serde(flatten)]
    report: &'a MetricReport,
}

fn eval(c: &Common, pred: &Path, gt: &Path, samples: usize, limits: &ExecLimits) -> Result<(), Failure> {
    require_exists(pred)?;
    require_exists(gt)?;
    if samples == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    let opts = EvalOptions { resolution: c.resolution.unwrap_or(64), samples, seed: c.seed, normalize: c.normalize };
    let (preds, gts) = if pred.is_dir() && gt.is_dir() {
        (files_by_stem(pred)?, files_by_stem(gt)?)
    } else if pred.is_file() && gt.is_file() {
        let stem = gt.file_stem().and_then(|s| s.to_str()).unwrap_or("pair").to_string();
        (BTreeMap::from([(stem.clone(), pred.to_path_buf())]), BTreeMap::from([(stem, gt.to_path_buf())]))
    } else {
        return Err(Failure::Usage("pred and gt must both be files or both be directories".into()));
    };
    let mut stems: Vec<&String> = preds.keys().chain(gts.keys()).collect();
    stems.sort();
    stems.dedup();

    let mut out = String::new();
    let mut reports = Vec::with_capacity(stems.len());
    for stem in stems {
        let report = match (preds.get(stem), gts.get(stem)) {
            (Some(p), Some(g)) => match load_model(g, limits) {
                Err(Failure::Data { category, message }) => {
                    log::warn!("ground truth unusable: {message}");
                    MetricReport::invalid(category)
                }
                Err(usage) => return Err(usage),
                Ok(gt_model) => {
                    let pm = load_model(p, limits);
                    if let Err(Failure::Data { message, .. }) = &pm {
                        log::info!("{message}");
                    }
                    let cat = |f: Failure| match f {
                        Failure::Data { category, .. } => category,
                        Failure::Usage(_) => FailureCategory::Io,
                    };
                    let pm = pm.map_err(cat);
                    eval_outcome(pm.as_ref().map_err(|c| *c), &gt_model, &opts)
                }
            },
            (p, _) => {
                let which = if p.is_some() { "prediction" } else { "ground truth" };
                log::warn!("{stem}: {which} has no partner");
                MetricReport::invalid(FailureCategory::Unpaired)
            }
        };
        out += &line(&PairLine { id: stem, report: &report });
        reports.push(report);
    }
    out += &line(&json!({ "summary": summarize(&reports) }));
    write_out(None, out.as_bytes())
}

fn reward(c: &Common, solution: &Path, gt: &Path, strict: bool, limits: ExecLimits) -> Result<(), Failure> {
    require_exists(solution)?;
    require_exists(gt)?;
    let cfg = RewardConfig { strict_zero_on_failure: strict, ..reward_config(c, c.resolution.unwrap_or(64), limits)? };
    let text = read_text(solution)?;
    let gt_model = load_model(gt, &limits)?;
    let r = compute_reward(&text, &gt_model, &cfg, &OccupancyEncoder);
    write_out(None, line(&r).as_bytes())
}

fn curriculum(
    c: &Common,
    dir: &Path,
    output: Option<&Path>,
    threshold: f64,
    limits: &ExecLimits,
) -> Result<(), Failure> {
    require_exists(dir)?;
    if !dir.is_dir() {
        return Err(Failure::Usage(format!("{} is not a directory", dir.display())));
    }
    check_unit("--dedup-threshold", threshold)?;
    let cfg = CurriculumConfig { threshold, resolution: c.resolution.unwrap_or(32) };
    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for (stem, path) in files_by_stem(dir)? {
        match load_model(&path, limits) {
            Ok(m) => models.push((stem, m)),
            Err(Failure::Data { category, message }) => {
                log::warn!("skipping {message}");
                skipped.push(json!({ "id": stem, "category": category, "message": message }));
            }
            Err(usage) => return Err(usage),
        }
    }
    let built = build_curriculum(&models, &cfg, &OccupancyEncoder);
    for s in &built.skipped {
        skipped.push(serde_json::to_value(s).expect("serializable"));
    }
    let manifest: String = built.manifest.entries.iter().map(line).collect();
    let levels: BTreeMap<String, usize> =
        built.manifest.level_counts().into_iter().map(|(l, n)| (l.to_string(), n)).collect();
    let summary = line(&json!({ "summary": { "models": models.len(), "entries": built.manifest.entries.len(), "levels": levels, "skipped": skipped } }));
    match output {
        Some(p) => {
            write_out(Some(p), manifest.as_bytes())?;
            write_out(None, summary.as_bytes())
        }
        None => write_out(None, (manifest + &summary).as_bytes()),
    }
}

struct Sim<'a> {
    steps: usize,
    batch_size: Option<usize>,
    mock: Option<&'a Path>,
    guidance: bool,
}

/// Questions from manifest lines; each entry's hard-coded script is its guidance.
fn load_questions(path: &Path) -> Result<Vec<Question>, Failure> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let e: ManifestEntry = serde_json::from_str(l).map_err(|err| {
            Failure::data(FailureCategory::Parse, format!("{}:{}: {err}", path.display(), i + 1))
        })?;
        out.push(Question {
            id: e.id.clone(),
            modality: Modality::Text,
            payload: format!("Write a script for this {} primitive with {} curves.", e.level, e.curve_count),
            gt: e.primitive.to_model(),
            guidance_codes: vec![emit_hardcoded(&e.primitive)],
        });
    }
    if out.is_empty() {
        return Err(Failure::data(FailureCategory::Parse, format!("{}: manifest has no entries", path.display())));
    }
    Ok(out)
}

fn harness_sim(c: &Common, manifest: &Path, hc: &HarnessConfig, sim: &Sim, limits: ExecLimits) -> Result<(), Failure> {
    require_exists(manifest)?;
    if sim.steps == 0 || sim.batch_size == Some(0) {
        return Err(Failure::Usage("--steps and --batch-size must be positive".into()));
    }
    let rcfg = reward_config(c, c.resolution.unwrap_or(32), limits)?;
    let mock_cfg = match sim.mock {
        Some(p) => serde_json::from_str::<MockConfig>(&read_text(p)?)
            .map_err(|e| Failure::Usage(format!("--mock {}: {e}", p.display())))?,
        None => MockConfig { seed: c.seed, ..MockConfig::default() },
    };
    let questions = load_questions(manifest)?;
    let policy = MockPolicy::new(mock_cfg);

    let cache: RefCell<HashMap<(String, String), f64>> = RefCell::new(HashMap::new());
    let reward_fn = |q: &Question, text: &str| -> f64 {
        let key = (q.id.clone(), text.to_string());
        if let Some(&r) = cache.borrow().get(&key) {
            return r;
        }
        let r = compute_reward(text, &q.gt, &rcfg, &OccupancyEncoder).total;
        cache.borrow_mut().insert(key, r);
        r
    };

    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut out = String::new();
    let mut hard = Vec::with_capacity(questions.len());
    for q in &questions {
        let h = classify_hardness(q, &policy, &reward_fn, hc.n, hc.tau_h, &mut rng).map_err(geometry_failure)?;
        out += &line(&json!({ "hardness": { "question_id": q.id, "hard": h.hard, "max_reward": h.max_reward, "rewards": h.rewards } }));
        hard.push(h.hard && sim.guidance);
    }
    let b = sim.batch_size.unwrap_or(questions.len()).min(questions.len());
    for step in 0..sim.steps {
        let idx: Vec<usize> = (0..b).map(|i| (step * b + i) % questions.len()).collect();
        let batch: Vec<Question> = idx.iter().map(|&i| questions[i].clone()).collect();
        let flags: Vec<bool> = idx.iter().map(|&i| hard[i]).collect();
        let report = mixed_loss(&batch, &flags, &policy, &reward_fn, hc, step, &mut rng).map_err(geometry_failure)?;
        out += &line(&json!({ "step": report }));
    }
    write_out(None, out.as_bytes())
}

fn export(c: &Common, path: &Path, format: ExportFormat, output: Option<&Path>, limits: &ExecLimits) -> Result<(), Failure> {
    require_exists(path)?;
    let model: CADModel = load_model(path, limits)?;
    let bytes = match format {
        ExportFormat::Obj => {
            let tol = default_chord_tol(&model).map_err(geometry_failure)?;
            model_to_obj(&model, tol).map_err(geometry_failure)?.into_bytes()
        }
        ExportFormat::Voxel => {
            let grid = voxelize(&model, c.resolution.unwrap_or(64), Bounds::Auto).map_err(geometry_failure)?;
            if grid.is_empty() {
                return Err(Failure::data(FailureCategory::EmptySolid, format!("{}: solid occupies no cells", path.display())));
            }
            encode_voxels(&grid)
        }
    };
    write_out(output, &bytes)
}
