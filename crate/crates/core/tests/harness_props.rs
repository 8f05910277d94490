use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recad_core::harness::{
    build_curriculum, classify_hardness, clip_term, expected_objective, grpo_objective, group_advantages,
    guided_objective, sample_group, CurriculumConfig, Group, MockConfig, MockPolicy, MockQuestion, Modality, Question,
    Rollout,
};
use recad_core::metrics::OccupancyEncoder;
use recad_core::model::synth::random_model;
use recad_core::model::{extract_primitives, CADModel};

fn rollout(num: f64, den: f64, reward: f64, guide: Option<usize>) -> Rollout {
    Rollout {
        tokens: vec![0, 1],
        ratio_num: vec![num, 0.5 * num],
        ratio_den: vec![den, 0.5 * den],
        guided: guide.is_some(),
        guidance_index: guide,
        solution_text: String::new(),
        reward,
    }
}

fn question(id: &str, codes: usize) -> Question {
    Question {
        id: id.into(),
        modality: Modality::Text,
        payload: String::new(),
        gt: CADModel::unit_cube(),
        guidance_codes: (0..codes).map(|i| format!("code {i}")).collect(),
    }
}

/// Three-answer policy whose rewards are read off the answer text.
fn tiny_policy(theta: [f64; 3], old: [f64; 3]) -> MockPolicy {
    let texts = vec!["a x".to_string(), "b".to_string(), "a y".to_string()];
    let state = MockQuestion::new(texts, theta.to_vec(), old.to_vec(), vec![0.0; 3], vec![1], 2.0);
    MockPolicy::new(MockConfig::default()).with_question("q", state)
}

fn text_reward(_: &Question, t: &str) -> f64 {
    match t {
        "a x" => 1.0,
        "b" => 0.3,
        _ => 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn advantages_are_standardized(rewards in prop::collection::vec(0.0f64..1.0, 2..16)) {
        let a = group_advantages(&rewards).unwrap();
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        let spread = rewards.iter().fold(0.0f64, |m, r| m.max((r - rewards[0]).abs()));
        if spread > 1e-3 {
            let var = a.iter().map(|x| x * x).sum::<f64>() / n;
            prop_assert!((var - 1.0).abs() < 1e-4, "variance {}", var);
        }
    }

    #[test]
    fn clip_never_exceeds_the_raw_term(r in 0.0f64..3.0, a in -3.0f64..3.0, eps in 0.01f64..0.5) {
        let c = clip_term(r, a, eps);
        prop_assert!(c <= r * a);
        if (1.0 - eps..=1.0 + eps).contains(&r) {
            prop_assert_eq!(c, r * a);
        }
    }

    #[test]
    fn reward_shift_leaves_objectives_unchanged(
        rs in prop::collection::vec((0.0f64..1.0, -0.3f64..0.3, -0.3f64..0.3), 3..9),
        shift in -5.0f64..5.0,
        beta in 0.0f64..0.5,
    ) {
        let build = |c: f64, guided: bool| {
            let rollouts = rs
                .iter()
                .enumerate()
                .map(|(i, &(r, num, den))| rollout(num, den, r + c, (guided && i == 0).then_some(0)))
                .collect();
            Group::new("q", rollouts).unwrap()
        };
        let (a, b) = (build(0.0, false), build(shift, false));
        let d = grpo_objective(&a, 0.2, beta, 0.1).unwrap() - grpo_objective(&b, 0.2, beta, 0.1).unwrap();
        prop_assert!(d.abs() < 1e-6);
        let (a, b) = (build(0.0, true), build(shift, true));
        let d = guided_objective(&a, 0.2, beta, 0.1).unwrap() - guided_objective(&b, 0.2, beta, 0.1).unwrap();
        prop_assert!(d.abs() < 1e-6);
    }

    #[test]
    fn hardness_is_monotone_in_the_threshold(seed in any::<u64>(), lo in 0.05f64..1.0, hi in 0.05f64..1.0) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let policy = tiny_policy([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]);
        let q = question("q", 1);
        let h_lo = classify_hardness(&q, &policy, &text_reward, 8, lo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let h_hi = classify_hardness(&q, &policy, &text_reward, 8, hi, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&h_lo.rewards, &h_hi.rewards);
        prop_assert!(!h_lo.hard || h_hi.hard);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn curriculum_is_a_sorted_permutation(seeds in prop::collection::vec(any::<u64>(), 1..4)) {
        let models: Vec<(String, CADModel)> = seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| (format!("m{i}"), random_model(&mut ChaCha8Rng::seed_from_u64(s), 3)))
            .collect();
        // a threshold above one keeps everything but exact copies
        let cfg = CurriculumConfig { threshold: 1.5, resolution: 16 };
        let out = build_curriculum(&models, &cfg, &OccupancyEncoder);
        prop_assert!(out.manifest.is_ordered());
        let mut want: BTreeMap<String, usize> = BTreeMap::new();
        for (_, m) in &models {
            for p in extract_primitives(m).unwrap() {
                want.insert(serde_json::to_string(&(p.level, &p.primitive)).unwrap(), 1);
            }
        }
        let mut got: BTreeMap<String, usize> = BTreeMap::new();
        for e in &out.manifest.entries {
            *got.entry(serde_json::to_string(&(e.level, &e.primitive)).unwrap()).or_default() += 1;
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn sampled_objective_tracks_the_exact_expectation(
        theta in prop::array::uniform3(-1.0f64..1.0),
        old in prop::array::uniform3(-1.0f64..1.0),
        guided in 0usize..2,
    ) {
        let policy = tiny_policy(theta, old);
        let q = question("q", 1);
        let exact = expected_objective(&policy, &q, &text_reward, 3, guided, 0.2, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 4000;
        let mut sum = 0.0;
        for _ in 0..trials {
            let g = sample_group(&q, &policy, &text_reward, 3, guided > 0, &mut rng).unwrap();
            let kl = recad_core::harness::Policy::kl(&policy, &q);
            sum += if guided > 0 { guided_objective(&g, 0.2, 0.05, kl) } else { grpo_objective(&g, 0.2, 0.05, kl) }.unwrap();
        }
        let mc = sum / trials as f64;
        prop_assert!((mc - exact).abs() < 0.08, "sampled {} exact {}", mc, exact);
    }
}
