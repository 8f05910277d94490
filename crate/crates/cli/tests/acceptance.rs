//! Acceptance suite. Runs every primary criterion at its stated tolerance,
//! prints one PASS/FAIL line per criterion and exits non-zero if any failed.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recad_core::geometry::{mass_properties, voxelize, AxisRotation, Bounds, SimilarityTransform, VoxelGrid};
use recad_core::harness::{
    build_curriculum, classify_hardness, clip_term, dedup_primitives, expected_objective, group_advantages,
    CurriculumConfig, MockConfig, MockPolicy, MockQuestion, Modality, Question,
};
use recad_core::metrics::{chamfer, f1_from_counts, iou, iou_best, primitive_f1, OccupancyEncoder};
use recad_core::model::synth::{random_model, random_primitive};
use recad_core::model::{
    dequantize, extract_primitives, quantize, to_native_json, BooleanOp, CADModel, CurveCmd, Extrude, Face, Loop,
    Point2, Primitive, PrimitiveLevel, SEPair, Sketch, Vec3,
};
use recad_core::reward::{compute_reward, phi, RewardConfig};
use recad_core::script::{emit_hardcoded, execute_script, ExecLimits};

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        self.total += 1;
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    ((got - want) / want).abs() <= rel
}

fn cube(s: f64) -> CADModel {
    CADModel::single(
        Sketch::xy(vec![Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(s, s)))]),
        Extrude::new(s, 0.0),
    )
}

// ---------------------------------------------------------------- geometry

fn geometry(r: &mut Report) {
    let t0 = Instant::now();

    let g = voxelize(&CADModel::unit_cube(), 128, Bounds::Auto).unwrap();
    let v = mass_properties(&g).unwrap().volume;
    r.check("geometry: unit cube volume at 128^3 within 2%", within(v, 1.0, 0.02), format!("{v:.5}"));

    let (s, rad, h) = (1.0, 0.3, 1.0);
    let m = cube(s).with(
        Sketch::xy(vec![Face::new(Loop::circle(Point2::new(0.5, 0.5), rad))]),
        Extrude::new(h, 0.0),
        BooleanOp::Cut,
    );
    let want = s * s * s - PI * rad * rad * h;
    let v = mass_properties(&voxelize(&m, 128, Bounds::Auto).unwrap()).unwrap().volume;
    r.check(
        "geometry: cube minus cylinder volume within 2% of s^3 - pi r^2 h",
        within(v, want, 0.02),
        format!("{v:.5} vs {want:.5}"),
    );

    let mp = mass_properties(&g).unwrap();
    let ratio = mp.inertia_trace / (2.0 * mp.volume);
    r.check("geometry: cube tr(I)/(2 Vol) = 0.25 within 2%", within(ratio, 0.25, 0.02), format!("{ratio:.5}"));

    let big_r = 0.7;
    let sphere = VoxelGrid::cube(Vec3::new(0.1, -0.2, 0.3), 0.8, 128, |p| {
        (p - Vec3::new(0.1, -0.2, 0.3)).norm() < big_r
    });
    let rg = mass_properties(&sphere).unwrap().gyration_sq().sqrt();
    let want = big_r * (3.0f64 / 5.0).sqrt();
    r.check(
        "geometry: sphere gyration radius = R sqrt(3/5) within 2%",
        within(rg, want, 0.02),
        format!("{rg:.5} vs {want:.5}"),
    );

    let secs = t0.elapsed().as_secs_f64();
    r.check("geometry: oracle runtime under 30 s", secs < 30.0, format!("{secs:.2} s"));
}

// --------------------------------------------------------------- round trip

fn coords(m: &CADModel) -> Vec<f64> {
    let mut v = Vec::new();
    for p in &m.pairs {
        let o = p.sketch.origin;
        v.extend([o.x, o.y, o.z, p.extrude.dist_pos, p.extrude.dist_neg]);
        for l in p.sketch.faces.iter().flat_map(|f| f.loops()) {
            let l = l.to_absolute();
            v.extend([l.start.x, l.start.y]);
            for c in &l.curves {
                match *c {
                    CurveCmd::Line { end, .. } | CurveCmd::Arc { end, .. } => v.extend([end.x, end.y]),
                    CurveCmd::Circle { radius } => v.push(radius),
                }
            }
        }
    }
    v
}

fn round_trip(r: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 200;
    let (mut worst_iou, mut worst_q) = (1.0f64, 0.0f64);
    let mut failures = Vec::new();
    for i in 0..n {
        let p = random_primitive(&mut rng);
        let want = p.to_model();
        match execute_script(&emit_hardcoded(&p), &ExecLimits::default()) {
            Ok(got) => {
                let a = voxelize(&want, 64, Bounds::Auto).unwrap();
                let b = voxelize(&got, 64, Bounds::Auto).unwrap();
                let s = iou(&a, &b).unwrap_or(0.0);
                worst_iou = worst_iou.min(s);
            }
            Err(e) => {
                worst_iou = 0.0;
                failures.push(format!("#{i}: {e}"));
            }
        }
        let back = dequantize(&quantize(&want).unwrap());
        for (x, y) in coords(&want).iter().zip(coords(&back)) {
            worst_q = worst_q.max((x - y).abs());
        }
    }
    r.check(
        "round trip: execute(emit_hardcoded(p)) IoU >= 0.98 at 64^3 for 200 primitives",
        worst_iou >= 0.98,
        format!("worst IoU {worst_iou:.4}{}", if failures.is_empty() { String::new() } else { format!(", {failures:?}") }),
    );
    r.check(
        "round trip: quantization error <= 1/255",
        worst_q <= 1.0 / 255.0 * (1.0 + 1e-12),
        format!("worst {worst_q:.3e} (bound {:.3e})", 1.0 / 255.0),
    );
    let secs = t0.elapsed().as_secs_f64();
    r.check("round trip: runtime under 2 min", secs < 120.0, format!("{secs:.2} s"));
}

// ------------------------------------------------------------------ metrics

fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let one_side = |x: &[Vec3], y: &[Vec3]| {
        let mut sum = 0.0;
        for p in x {
            let mut best = f64::INFINITY;
            for q in y {
                let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
                best = best.min(dx * dx + dy * dy + dz * dz);
            }
            sum += best;
        }
        sum / x.len() as f64
    };
    0.5 * (one_side(a, b) + one_side(b, a))
}

fn metrics(r: &mut Report) {
    use rand::RngExt;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut exact = true;
    for n in [1usize, 2, 17, 100, 250, 500] {
        let mut cloud = |k: usize| -> Vec<Vec3> {
            (0..k).map(|_| Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>())).collect()
        };
        let (a, b) = (cloud(n), cloud(n.max(2) - 1));
        exact &= chamfer(&a, &b).unwrap() == brute_chamfer(&a, &b);
    }
    r.check("metrics: chamfer equals the O(n^2) brute force exactly for n <= 500", exact, "6 sizes up to 500");

    let mut models = vec![
        cube(1.0).with(
            Sketch::xy(vec![Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(0.4, 0.7)))]),
            Extrude::new(1.6, 0.0),
            BooleanOp::Join,
        ),
    ];
    let mut mrng = ChaCha8Rng::seed_from_u64(9);
    models.extend((0..3).map(|_| random_model(&mut mrng, 3)));
    let mut ok = true;
    let mut checked = 0;
    for a in &models {
        let Ok(base) = iou_best(a, a, 32, false) else { continue };
        for rot in AxisRotation::all() {
            let got = iou_best(a, &a.rotated(&rot), 32, false).unwrap();
            ok &= got.score == base.score;
            checked += 1;
        }
    }
    r.check(
        "metrics: iou_best(a, R a) = iou_best(a, a) for all 24 rotations",
        ok && checked >= 24,
        format!("{checked} rotated pairs"),
    );

    let m = random_model(&mut mrng, 3);
    let four_l_one_c = f1_from_counts([4, 0, 1], [4, 0, 2]);
    r.check(
        "metrics: P-F1 identical = 1 and {4L,1C} vs {4L,2C} = 5/6",
        primitive_f1(&m, &m) == 1.0 && four_l_one_c == 5.0 / 6.0,
        format!("{four_l_one_c}"),
    );
}

// ------------------------------------------------------------------- reward

fn fenced(think: bool, code: &str) -> String {
    format!("{}```python\n{code}```\n", if think { "<think>\nplan the solid\n</think>\n" } else { "" })
}

fn reward(r: &mut Report) {
    let cfg = RewardConfig::default();
    let enc = OccupancyEncoder;
    let gt = CADModel::unit_cube();
    let code = emit_hardcoded(&Primitive::MSE(gt.clone()));
    let totals = [
        compute_reward(&fenced(true, &code), &gt, &cfg, &enc).total,
        compute_reward(&fenced(true, "cad_model = CADModel(\n"), &gt, &cfg, &enc).total,
        compute_reward(&fenced(false, &code), &gt, &cfg, &enc).total,
    ];
    r.check(
        "reward: the three examples give 1.0, 0.9, 0.1 exactly",
        totals == [1.0, 0.9, 0.1],
        format!("{totals:?}"),
    );

    let p = [phi(0.55, 0.55), phi(1.0, 0.55), phi(0.775, 0.55)];
    r.check("reward: phi(0.55) = 0, phi(1) = 1, phi(0.775) = 0.5", p == [0.0, 1.0, 0.5], format!("{p:?}"));

    let ncfg = RewardConfig { normalize_before: true, ..RewardConfig::default() };
    let mut mrng = ChaCha8Rng::seed_from_u64(31);
    let mut gts = vec![gt.clone()];
    gts.extend((0..4).map(|_| random_model(&mut mrng, 2)));
    let mut worst = 0.0f64;
    for g in &gts {
        let base = compute_reward(&fenced(true, &emit_hardcoded(&Primitive::MSE(g.clone()))), g, &ncfg, &enc);
        for s in [0.25, 0.5, 2.0, 3.7] {
            let scaled = SimilarityTransform { translation: Vec3::ZERO, scale: s }.apply_model(g);
            let text = fenced(true, &emit_hardcoded(&Primitive::MSE(scaled)));
            let other = compute_reward(&text, g, &ncfg, &enc);
            let d = if other.failure_category.is_some() { 1.0 } else { (other.geometric - base.geometric).abs() };
            worst = worst.max(d);
        }
    }
    r.check(
        "reward: normalized geometric term is scale invariant within 0.02",
        worst <= 0.02,
        format!("largest change {worst:.4} over {} models x 4 scales", gts.len()),
    );
}

// --------------------------------------------------------------------- GRPO

/// Hand-written expectation of the group objective over every joint outcome
/// of a softmax policy over whole answers. Token probabilities come from
/// answer masses sharing a word prefix.
struct Oracle {
    words: Vec<Vec<String>>,
    theta: Vec<f64>,
    old: Vec<f64>,
    reference: Vec<f64>,
    targets: Vec<usize>,
    bonus: f64,
    rewards: Vec<f64>,
}

impl Oracle {
    fn dist(&self, logits: &[f64], guide: Option<usize>) -> Vec<f64> {
        let mut l = logits.to_vec();
        if let Some(j) = guide {
            l[self.targets[j]] += self.bonus;
        }
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = l.iter().map(|x| (x - m).exp()).sum();
        l.iter().map(|x| (x - m).exp() / z).collect()
    }

    fn token_logprobs(&self, k: usize, p: &[f64]) -> Vec<f64> {
        let seq = &self.words[k];
        (0..seq.len())
            .map(|t| {
                let mass = |len: usize| -> f64 {
                    (0..p.len()).filter(|&j| self.words[j].len() >= len && self.words[j][..len] == seq[..len]).map(|j| p[j]).sum()
                };
                (mass(t + 1) / mass(t)).ln()
            })
            .collect()
    }

    fn expected(&self, n: usize, guided: usize, eps: f64, beta: f64) -> f64 {
        let cur = self.dist(&self.theta, None);
        let rf = self.dist(&self.reference, None);
        let kl: f64 = cur.iter().zip(&rf).map(|(a, b)| a * (a / b).ln()).sum();
        let k = self.words.len();
        let mut total = 0.0;
        for code in 0..k.pow(n as u32) {
            let picks: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
            let mut prob = 1.0;
            for (i, &a) in picks.iter().enumerate() {
                prob *= self.dist(&self.old, (i < guided).then_some(i))[a];
            }
            let rw: Vec<f64> = picks.iter().map(|&a| self.rewards[a]).collect();
            let mean = rw.iter().sum::<f64>() / n as f64;
            let sd = (rw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            let (mut on, mut on_n, mut off, mut off_n) = (0.0, 0, 0.0, 0);
            for (i, &a) in picks.iter().enumerate() {
                let adv = (rw[i] - mean) / sd.max(1e-8);
                let num = self.token_logprobs(a, &cur);
                let den = self.token_logprobs(a, &self.dist(&self.old, (i < guided).then_some(i)));
                let s: f64 = num
                    .iter()
                    .zip(&den)
                    .map(|(x, y)| {
                        let ratio = (x - y).exp();
                        (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
                    })
                    .sum::<f64>()
                    / num.len() as f64;
                if i < guided {
                    off += s;
                    off_n += 1;
                } else {
                    on += s;
                    on_n += 1;
                }
            }
            let j = if guided == 0 {
                on / n as f64
            } else {
                (if on_n == 0 { 0.0 } else { on / on_n as f64 }) + off / off_n as f64
            };
            total += prob * (j - beta * kl);
        }
        total
    }
}

fn question(id: &str, codes: usize) -> Question {
    Question {
        id: id.into(),
        modality: Modality::Text,
        payload: String::new(),
        gt: CADModel::unit_cube(),
        guidance_codes: (0..codes).map(|i| format!("guide {i}")).collect(),
    }
}

fn grpo(r: &mut Report) {
    let a = group_advantages(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let s3 = 3f64.sqrt();
    let want = [s3, -1.0 / s3, -1.0 / s3, -1.0 / s3];
    let err = a.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    r.check("grpo: group_advantages([1,0,0,0]) = [sqrt3, -1/sqrt3 x3] to 1e-9", err <= 1e-9, format!("max error {err:.2e}"));

    let cases = [
        (clip_term(1.5, 1.0, 0.2), 1.2),
        (clip_term(1.5, -1.0, 0.2), -1.5),
        (clip_term(0.5, 1.0, 0.2), 0.5),
        (clip_term(0.5, -1.0, 0.2), -0.8),
        (clip_term(1.1, 2.0, 0.2), 2.2),
        (clip_term(1.0, 0.0, 0.2), 0.0),
    ];
    r.check(
        "grpo: clip_term analytic cases exact",
        cases.iter().all(|(g, w)| g == w),
        format!("{:?}", cases.map(|c| c.0)),
    );

    let texts: Vec<String> = ["draw a box", "draw a ring", "stop", "draw"].iter().map(|s| s.to_string()).collect();
    let oracle = Oracle {
        words: texts
            .iter()
            .map(|t| t.split_whitespace().map(String::from).chain(["<eos>".to_string()]).collect())
            .collect(),
        theta: vec![0.3, -0.2, 0.5, 0.1],
        old: vec![0.1, 0.0, 0.6, -0.4],
        reference: vec![0.0, 0.2, 0.0, 0.0],
        targets: vec![0, 1],
        bonus: 1.7,
        rewards: vec![1.0, 0.6, 0.0, 0.2],
    };
    let state = MockQuestion::new(
        texts.clone(),
        oracle.theta.clone(),
        oracle.old.clone(),
        oracle.reference.clone(),
        oracle.targets.clone(),
        oracle.bonus,
    );
    let policy = MockPolicy::new(MockConfig::default()).with_question("g", state);
    let rewards = oracle.rewards.clone();
    let texts_c = texts.clone();
    let reward_fn = move |_: &Question, t: &str| rewards[texts_c.iter().position(|x| x == t).unwrap()];
    let q = question("g", 2);
    let (n, eps, beta) = (4, 0.2, 0.04);
    let plain = expected_objective(&policy, &q, &reward_fn, n, 0, eps, beta).unwrap();
    let plain_want = oracle.expected(n, 0, eps, beta);
    let guided_n = q.guidance_codes.len().min(n - 1);
    let guided = expected_objective(&policy, &q, &reward_fn, n, guided_n, eps, beta).unwrap();
    let guided_want = oracle.expected(n, guided_n, eps, beta);
    r.check(
        "grpo: grpo_objective expectation matches brute force to 1e-9",
        (plain - plain_want).abs() <= 1e-9,
        format!("{plain:.12} vs {plain_want:.12}"),
    );
    r.check(
        "grpo: guided_objective expectation matches brute force to 1e-9",
        (guided - guided_want).abs() <= 1e-9,
        format!("{guided:.12} vs {guided_want:.12}"),
    );

    // hardness fixture: each question's answers and the label a person would give
    let gt = CADModel::unit_cube();
    let exact = emit_hardcoded(&Primitive::MSE(gt.clone()));
    let half = emit_hardcoded(&Primitive::MSE(cube(0.5)));
    let fixture: Vec<(&str, Vec<String>, Vec<f64>, bool)> = vec![
        ("exact-with-think", vec![fenced(true, &exact)], vec![0.0], false),
        ("broken-with-think", vec![fenced(true, "cad_model = (\n")], vec![0.0], false),
        ("exact-no-think", vec![fenced(false, &exact)], vec![0.0], true),
        ("broken-no-think", vec![fenced(false, "cad_model = (\n")], vec![0.0], true),
        ("half-cube-with-think", vec![fenced(true, &half)], vec![0.0], false),
        ("prose", vec!["the answer is a cube".into()], vec![0.0], true),
        ("good-answer-never-drawn", vec![fenced(false, &exact), fenced(true, &exact)], vec![0.0, -800.0], true),
    ];
    let mut policy = MockPolicy::new(MockConfig::default());
    for (id, texts, logits, _) in &fixture {
        let k = texts.len();
        policy = policy.with_question(
            *id,
            MockQuestion::new(texts.clone(), logits.clone(), logits.clone(), vec![0.0; k], vec![], 0.0),
        );
    }
    let cfg = RewardConfig { resolution: 32, ..RewardConfig::default() };
    let reward_fn = |q: &Question, t: &str| compute_reward(t, &q.gt, &cfg, &OccupancyEncoder).total;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut mismatches = Vec::new();
    for (id, _, _, hard) in &fixture {
        let h = classify_hardness(&question(id, 0), &policy, &reward_fn, 8, 0.8, &mut rng).unwrap();
        if h.hard != *hard {
            mismatches.push(format!("{id}: max reward {}", h.max_reward));
        }
    }
    r.check(
        "grpo: hardness gating with tau_h = 0.8, N = 8 reproduces the labeled fixture",
        mismatches.is_empty(),
        if mismatches.is_empty() { format!("{} questions", fixture.len()) } else { mismatches.join("; ") },
    );
}

// --------------------------------------------------------------- curriculum

const LEVELS: [PrimitiveLevel; 5] =
    [PrimitiveLevel::L, PrimitiveLevel::F, PrimitiveLevel::S, PrimitiveLevel::SE, PrimitiveLevel::MSE];

fn rank(l: PrimitiveLevel) -> usize {
    LEVELS.iter().position(|&x| x == l).unwrap()
}

fn poly(pts: &[(f64, f64)]) -> Loop {
    Loop::polygon(&pts.iter().map(|&(x, y)| Point2::new(x, y)).collect::<Vec<_>>())
}

fn se(l: Loop, depth: f64) -> Primitive {
    Primitive::SE(SEPair { sketch: Sketch::xy(vec![Face::new(l)]), extrude: Extrude::new(depth, 0.0), op: BooleanOp::NewBody })
}

fn curriculum(r: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut models = Vec::new();
    let mut total = 0;
    while total < 1000 {
        let m = random_model(&mut rng, 3);
        total += extract_primitives(&m).unwrap().len();
        models.push((format!("m{:03}", models.len()), m));
    }
    let out = build_curriculum(&models, &CurriculumConfig::default(), &OccupancyEncoder);
    let e = &out.manifest.entries;
    let ordered = e.windows(2).all(|w| {
        let (a, b) = (rank(w[0].level), rank(w[1].level));
        a < b || (a == b && w[0].curve_count <= w[1].curve_count)
    });
    r.check(
        "curriculum: level order L<F<S<SE<MSE and within-level curve counts on a 1000-primitive fixture",
        ordered && out.skipped.is_empty(),
        format!("{total} extracted, {} kept, {:.1} s", e.len(), t0.elapsed().as_secs_f64()),
    );

    // clearly distinct solids, each listed twice
    let distinct = vec![
        se(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)), 1.0),
        se(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 0.1)), 0.1),
        se(Loop::circle(Point2::new(0.0, 0.0), 0.5), 0.05),
        se(poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]), 0.05),
        se(poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.2), (0.2, 0.2), (0.2, 1.0), (0.0, 1.0)]), 0.2),
        Primitive::SE(SEPair {
            sketch: Sketch::xy(vec![Face::new(Loop::rect(Point2::new(-0.5, -0.5), Point2::new(0.5, 0.5)))
                .with_hole(Loop::rect(Point2::new(-0.35, -0.35), Point2::new(0.35, 0.35)))]),
            extrude: Extrude::new(0.3, 0.0),
            op: BooleanOp::NewBody,
        }),
    ];
    let mut prims = distinct.clone();
    prims.extend(distinct.iter().rev().cloned());
    let kept = dedup_primitives(&prims, &OccupancyEncoder, 0.95, 32);
    r.check(
        "curriculum: dedup at 0.95 removes every exact duplicate and no distinct pair",
        kept == (0..distinct.len()).collect::<Vec<_>>(),
        format!("kept {kept:?} of {}", prims.len()),
    );
}

// -------------------------------------------------------------- determinism

fn recad(args: &[&str], dir: &Path) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_recad")).args(args).current_dir(dir).output().unwrap();
    (out.status.success(), out.stdout)
}

fn determinism(r: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let gt = CADModel::unit_cube();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sub in ["pred", "gt", "models"] {
        std::fs::create_dir(d.join(sub)).unwrap();
    }
    for i in 0..3 {
        let m = random_model(&mut rng, 2);
        std::fs::write(d.join(format!("models/m{i}.json")), to_native_json(&m)).unwrap();
        std::fs::write(d.join(format!("gt/s{i}.json")), to_native_json(&m)).unwrap();
        let p = random_model(&mut rng, 2);
        std::fs::write(d.join(format!("pred/s{i}.py")), emit_hardcoded(&Primitive::MSE(p))).unwrap();
    }
    std::fs::write(d.join("cube.json"), to_native_json(&gt)).unwrap();
    std::fs::write(d.join("answer.txt"), fenced(true, &emit_hardcoded(&Primitive::MSE(cube(0.8))))).unwrap();
    assert!(recad(&["curriculum", "models", "-o", "manifest.jsonl", "--seed", "1"], d).0);

    let runs: Vec<(&str, Vec<&str>, Option<&str>)> = vec![
        ("convert", vec!["convert", "cube.json", "--to", "script"], None),
        ("eval", vec!["eval", "pred", "gt", "--samples", "500"], None),
        ("reward", vec!["reward", "answer.txt", "cube.json"], None),
        ("curriculum", vec!["curriculum", "models", "-o", "out.jsonl"], Some("out.jsonl")),
        ("harness-sim", vec!["harness-sim", "manifest.jsonl", "--beta", "0.04", "--steps", "2", "--batch-size", "3"], None),
        ("export obj", vec!["export", "cube.json", "--format", "obj"], None),
        ("export voxel", vec!["export", "cube.json", "--format", "voxel", "-o", "cube.vox"], Some("cube.vox")),
    ];
    for (name, mut args, file) in runs {
        args.extend(["--seed", "42"]);
        let read = |f: Option<&str>| f.map(|f| std::fs::read(d.join(f)).unwrap()).unwrap_or_default();
        let (ok1, out1) = recad(&args, d);
        let f1 = read(file);
        let (ok2, out2) = recad(&args, d);
        let f2 = read(file);
        r.check(
            &format!("determinism: `recad {name}` byte-identical across two runs"),
            ok1 && ok2 && out1 == out2 && f1 == f2 && !(out1.is_empty() && f1.is_empty()),
            format!("{} bytes", out1.len() + f1.len()),
        );
    }
}

fn main() {
    let mut r = Report { failed: 0, total: 0 };
    geometry(&mut r);
    round_trip(&mut r);
    metrics(&mut r);
    reward(&mut r);
    grpo(&mut r);
    curriculum(&mut r);
    determinism(&mut r);
    println!("acceptance: {} of {} criteria passed", r.total - r.failed, r.total);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
