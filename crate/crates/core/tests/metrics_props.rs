use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recad_core::geometry::{voxelize, AxisRotation, Bounds};
use recad_core::metrics::{
    chamfer, curve_type_counts, f1_from_counts, invalidity_ratio, iou_best, primitive_f1, Encoder, OccupancyEncoder,
};
use recad_core::model::synth::random_model;
use recad_core::model::{CADModel, Vec3};

fn model(seed: u64) -> CADModel {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), 3)
}

fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let side = |x: &[Vec3], y: &[Vec3]| {
        x.iter()
            .map(|p| y.iter().map(|q| { let d = *p - *q; d.dot(d) }).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / x.len() as f64
    };
    0.5 * (side(a, b) + side(b, a))
}

fn points() -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0).prop_map(|p| Vec3::new(p[0], p[1], p[2])), 1..80)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chamfer_is_brute_force_and_symmetric(a in points(), b in points()) {
        let ab = chamfer(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, chamfer(&b, &a).unwrap());
        let want = brute_chamfer(&a, &b);
        prop_assert!((ab - want).abs() <= 1e-12 * want.max(1.0), "{} vs {}", ab, want);
        prop_assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn f1_is_symmetric_and_bounded(p in prop::array::uniform3(0usize..20), g in prop::array::uniform3(0usize..20)) {
        let f = f1_from_counts(p, g);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(f, f1_from_counts(g, p));
        prop_assert_eq!(f1_from_counts(p, p), 1.0);
    }

    #[test]
    fn f1_ignores_pair_order(seed in any::<u64>()) {
        let a = model(seed);
        let b = model(seed ^ 0x9e37);
        let mut rev = a.clone();
        rev.pairs.reverse();
        prop_assert_eq!(curve_type_counts(&rev), curve_type_counts(&a));
        prop_assert_eq!(primitive_f1(&rev, &b), primitive_f1(&a, &b));
    }

    #[test]
    fn invalidity_ratio_is_a_share(flags in prop::collection::vec(any::<bool>(), 1..50)) {
        let outcomes: Vec<Result<(), ()>> = flags.iter().map(|&ok| if ok { Ok(()) } else { Err(()) }).collect();
        let ir = invalidity_ratio(&outcomes).unwrap();
        prop_assert!((0.0..=1.0).contains(&ir));
        prop_assert_eq!(ir, flags.iter().filter(|&&ok| !ok).count() as f64 / flags.len() as f64);
    }

    #[test]
    fn similarity_is_symmetric(sa in any::<u64>(), sb in any::<u64>()) {
        let cube = Bounds::Cube { center: Vec3::ZERO, half: 1.5 };
        let a = voxelize(&model(sa), 16, cube).unwrap();
        let b = voxelize(&model(sb), 16, cube).unwrap();
        let enc = OccupancyEncoder;
        let s = enc.similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, enc.similarity(&b, &a));
        if a.count() > 0 {
            prop_assert_eq!(enc.similarity(&a, &a), 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn iou_best_sees_through_rotations(seed in any::<u64>(), r in 0usize..24) {
        let a = model(seed);
        let Ok(base) = iou_best(&a, &a, 24, false) else { return Ok(()) };
        let rot = AxisRotation::all()[r];
        let turned = iou_best(&a, &a.rotated(&rot), 24, false).unwrap();
        prop_assert_eq!(base.score, 1.0);
        prop_assert_eq!(turned.score, base.score);
    }
}
