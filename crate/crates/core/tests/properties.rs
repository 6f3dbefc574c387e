mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decision_stream::context::SplitContext;
use decision_stream::data::{split_indices, SampleIndexSet};
use decision_stream::ensemble::{train_ensemble, EnsembleConfig, EnsembleKind};
use decision_stream::evaluation::{accuracy_error, wape};
use decision_stream::graph::{DsModel, SplitMode};
use decision_stream::splitting::{best_binary_split, scalable_split};
use decision_stream::stats::{
    correlation_strength, ks_test, mwu_test, r_squared, t_test, z_test, ColumnView, TestFamily,
};
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{train, TrainConfig};

fn sample(min: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50i32..50, min..40).prop_map(|v| v.into_iter().map(|x| f64::from(x) / 4.0).collect())
}

fn family() -> impl Strategy<Value = TestFamily> {
    prop_oneof![Just(TestFamily::Parametric), Just(TestFamily::Nonparametric)]
}

fn config() -> impl Strategy<Value = TrainConfig> {
    (
        prop_oneof![Just(0.05), Just(0.2), Just(0.5)],
        family(),
        prop_oneof![Just(SplitMode::Exact), Just(SplitMode::Scalable)],
        any::<bool>(),
    )
        .prop_map(|(p_lim, family, split_mode, merge_enabled)| TrainConfig {
            p_lim,
            family,
            split_mode,
            merge_enabled,
            ..TrainConfig::default()
        })
}

/// Strictly increasing and exact on quarter-integers.
fn monotone(x: f64) -> f64 {
    x * x * x + 3.0 * x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tests_are_symmetric_and_bounded(a in sample(2), b in sample(2)) {
        for f in [z_test, t_test, ks_test, mwu_test] {
            let ab = f(&a, &b).unwrap().p_value;
            let ba = f(&b, &a).unwrap().p_value;
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn rank_tests_ignore_monotone_transforms(a in sample(1), b in sample(1)) {
        let ta: Vec<f64> = a.iter().map(|&x| monotone(x)).collect();
        let tb: Vec<f64> = b.iter().map(|&x| monotone(x)).collect();
        prop_assert_eq!(ks_test(&a, &b).unwrap().p_value, ks_test(&ta, &tb).unwrap().p_value);
        prop_assert_eq!(mwu_test(&a, &b).unwrap().p_value, mwu_test(&ta, &tb).unwrap().p_value);
    }

    #[test]
    fn r_squared_is_affine_invariant(
        pairs in prop::collection::vec((-100i32..100, -100i32..100), 3..50),
        slope in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
        offset in -10.0..10.0f64,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let r = r_squared(&x, &y);
        prop_assert!((0.0..=1.0).contains(&r));
        let moved: Vec<f64> = x.iter().map(|v| slope * v + offset).collect();
        prop_assert!((r_squared(&moved, &y) - r).abs() < 1e-9);
    }

    #[test]
    fn correlation_strength_is_bounded(codes in prop::collection::vec(0u32..5, 2..60), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = codes.iter().map(|_| rng.random_range(-3.0..3.0)).collect();
        let s = correlation_strength(
            ColumnView::Categorical { codes: &codes, cardinality: 5 },
            ColumnView::Continuous(&y),
        ).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn accuracy_and_error_sum_to_hundred(pairs in prop::collection::vec((0u32..3, 0u32..3), 1..100)) {
        let p: Vec<f64> = pairs.iter().map(|x| f64::from(x.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|x| f64::from(x.1)).collect();
        let right = pairs.iter().filter(|x| x.0 == x.1).count() as f64 * 100.0 / pairs.len() as f64;
        prop_assert_eq!(accuracy_error(&p, &y).unwrap() + right, 100.0);
    }

    #[test]
    fn wape_is_scale_equivariant(
        pairs in prop::collection::vec((1.0..100.0f64, 1.0..100.0f64), 1..50),
        c in 0.01..100.0f64,
    ) {
        let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        let y: Vec<f64> = pairs.iter().map(|x| x.1).collect();
        let (ps, ys): (Vec<f64>, Vec<f64>) = (p.iter().map(|v| v * c).collect(), y.iter().map(|v| v * c).collect());
        let (w, ws) = (wape(&p, &y).unwrap(), wape(&ps, &ys).unwrap());
        prop_assert!((w - ws).abs() <= 1e-9 * w.max(1.0));
    }

    #[test]
    fn index_sets_stay_sorted(a in prop::collection::vec(0u32..200, 0..50), b in prop::collection::vec(0u32..200, 0..50)) {
        let (sa, sb) = (SampleIndexSet::from_unsorted(a.clone()), SampleIndexSet::from_unsorted(b.clone()));
        let u = sa.union(&sb);
        prop_assert!(u.as_slice().windows(2).all(|w| w[0] < w[1]));
        let mut all: Vec<u32> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(u.as_slice(), all.as_slice());
    }

    #[test]
    fn split_indices_partition_rows(n in 2usize..500, frac in 0.05..0.95f64, seed in any::<u64>()) {
        if let Ok((train, valid)) = split_indices(n, frac, seed) {
            prop_assert_eq!(valid.len(), (frac * n as f64).round() as usize);
            let mut all: Vec<usize> = train.into_iter().chain(valid).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn training_preserves_graph_invariants(seed in any::<u64>(), rows in 10usize..80, cfg in config()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = common::random_dataset(&mut rng, rows, 3);
        let (model, trace) = train(&data, cfg).unwrap();
        prop_assert!(common::structural_violations(&model).is_empty());
        let total: u64 = model.leaves().map(|n| n.stats.count()).sum();
        prop_assert_eq!(total, rows as u64);
        // Every iteration but the last (which may be the non-improving one) lowers impurity.
        let r = &trace.records;
        for i in 1..r.len() {
            prop_assert!(r[i].leaves_after_merge <= r[i].leaves_after_split);
            if i + 1 < r.len() {
                prop_assert!(r[i].improved && r[i].impurity < r[i - 1].impurity);
            }
        }
        let text = model.to_json().unwrap();
        let back = DsModel::from_json(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.to_json().unwrap(), text);
        let (again, _) = train(&data, cfg).unwrap();
        prop_assert_eq!(again.to_json().unwrap(), model.to_json().unwrap());
        prop_assert_eq!(model.predict_batch(data.features()).unwrap().len(), rows);
    }

    #[test]
    fn exact_mode_without_merging_grows_a_tree(seed in any::<u64>(), rows in 10usize..80, fam in family()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = common::random_dataset(&mut rng, rows, 3);
        let cfg = TrainConfig { family: fam, merge_enabled: false, p_lim: 0.3, ..TrainConfig::default() };
        let (model, _) = train(&data, cfg).unwrap();
        prop_assert!(model.is_tree());
        prop_assert!(model.nodes.values().all(|n| n.id == model.root || n.parents.len() == 1));
    }

    #[test]
    fn splits_partition_the_node(seed in any::<u64>(), rows in 2usize..60, fam in family()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = common::random_dataset(&mut rng, rows, 3);
        let ctx = SplitContext::new(&data, fam).unwrap();
        let all = SampleIndexSet::all(rows);
        let exact = best_binary_split(&all, &ctx, 0.5);
        let scalable = scalable_split(&all, &ctx, 0.5).unwrap();
        for split in exact.iter().chain(scalable.iter()) {
            prop_assert!(split.p_value <= 1.0);
            prop_assert_eq!(split.parts.len(), split.rule.arity());
            let mut seen: Vec<usize> = split.parts.iter().flat_map(|p| p.iter()).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..rows).collect::<Vec<_>>());
            let col = data.column(split.rule.feature());
            for (ordinal, part) in split.parts.iter().enumerate() {
                prop_assert!(!part.is_empty());
                for r in part.iter() {
                    prop_assert_eq!(split.rule.route(col.value(r)), Some(ordinal));
                }
            }
        }
        if let Some(s) = exact {
            prop_assert!(s.p_value < 0.5);
        }
    }

    #[test]
    fn ensemble_members_are_independent(seed in any::<u64>(), kind in prop_oneof![
        Just(EnsembleKind::Bagging), Just(EnsembleKind::Subspace), Just(EnsembleKind::Forest)
    ]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = common::random_dataset(&mut rng, 40, 3);
        let small = EnsembleConfig::preset(kind, 2, &data, TrainConfig::default(), seed);
        let large = EnsembleConfig { n_members: 4, ..small };
        let (Ok(a), Ok(b)) = (train_ensemble(&data, small), train_ensemble(&data, large)) else {
            // A subspace of a one-feature schema can round to zero features.
            prop_assert!(small.features_per_member(data.num_features()).is_err());
            return Ok(());
        };
        prop_assert_eq!(&a.members[..], &b.members[..2]);
        let k = small.features_per_member(data.num_features()).unwrap();
        for m in &b.members {
            prop_assert_eq!(m.features.len(), k);
            prop_assert!(m.features.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn synthetic_values_stay_in_domain() {
    let d = generate(&SynthConfig::new(300, SynthTask::Classification { num_classes: 2 }, 5)).unwrap();
    assert_eq!(d.num_features(), 500);
    let ones = d.label_values().iter().filter(|&&y| y == 1.0).count();
    assert_eq!(ones, 150);
}
