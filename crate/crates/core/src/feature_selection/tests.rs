use super::*;
use crate::synthetic::informative_dataset;
use approx::assert_abs_diff_eq;
use ndarray::Array2;
use proptest::prelude::*;

fn knn_config() -> FsConfig {
    FsConfig {
        classifier: ClassifierKind::Knn,
        ..Default::default()
    }
}

#[test]
fn binarize_threshold_rule() {
    assert_eq!(
        binarize(&[0.7, 0.2, 0.5], 0.5).as_slice(),
        &[true, false, true]
    );
    assert_eq!(binarize(&[0.6, 0.9, 0.5], 0.5).count(), 3);
}

#[test]
fn binarize_forces_one_feature() {
    let m = binarize(&[0.1; 6], 0.5);
    assert_eq!(m.indices(), vec![0]);
    let m = binarize(&[0.1, 0.3, 0.2, 0.3], 0.5);
    assert_eq!(m.indices(), vec![1]);
}

#[test]
fn cost_arithmetic() {
    let unit = FsConfig {
        w1: 1.0,
        w2: 1.0,
        w3: 1.0,
        ..Default::default()
    };
    assert_eq!(cost_function(1.0, 0.0, 0.0, &FsConfig::default()), 0.0);
    assert_eq!(cost_function(1.0, 0.0, 0.0, &unit), 0.0);
    assert_abs_diff_eq!(cost_function(0.9, 0.1, 0.2, &unit), 0.4, epsilon = 1e-12);
    assert_abs_diff_eq!(
        cost_function(0.95, 0.05, 0.1, &FsConfig::default()),
        0.0575,
        epsilon = 1e-12
    );
}

#[test]
fn config_validation() {
    assert!(FsConfig::default().validate().is_ok());
    let zero = FsConfig {
        w1: 0.0,
        w2: 0.0,
        w3: 0.0,
        ..Default::default()
    };
    assert!(zero.validate().is_err());
    let neg = FsConfig {
        w2: -0.1,
        ..Default::default()
    };
    assert!(neg.validate().is_err());
    let frac = FsConfig {
        validation_fraction: 1.0,
        ..Default::default()
    };
    assert!(frac.validate().is_err());
}

#[test]
fn mask_serialization() {
    let m = FeatureMask::from_indices(5, &[1, 4]).unwrap();
    assert_eq!(m.bit_string(), "01001");
    let json = serde_json::to_string(&m).unwrap();
    assert_eq!(json, "\"01001\"");
    assert_eq!(serde_json::from_str::<FeatureMask>(&json).unwrap(), m);
    assert!(serde_json::from_str::<FeatureMask>("\"000\"").is_err());
    assert!(matches!(
        "01x".parse::<FeatureMask>(),
        Err(FsError::BadBits(_))
    ));
    let names: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
    assert_eq!(m.names(&names), vec!["c1", "c4"]);
}

#[test]
fn evaluate_all_features_in_unit_range_and_deterministic() {
    let ds = informative_dataset(200, 41, &[0, 1, 2, 3, 4], 1);
    let cfg = FsConfig::default();
    let mask = FeatureMask::all(41);
    let (a, report) = evaluate_mask(&mask, &ds, &cfg, 7).unwrap();
    let (b, _) = evaluate_mask(&mask, &ds, &cfg, 7).unwrap();
    assert!((0.0..=1.0).contains(&a));
    assert_eq!(a, b);
    assert_eq!(report.confusion.total(), 40);
}

#[test]
fn separating_feature_gives_zero_cost() {
    // column 2 is the label itself; every superset of {2} fits perfectly
    let rows = 120;
    let labels: Vec<ClassLabel> = (0..rows)
        .map(|i| {
            if i % 3 == 0 {
                ClassLabel::Probe
            } else {
                ClassLabel::Normal
            }
        })
        .collect();
    let x = Array2::from_shape_fn((rows, 4), |(i, j)| match j {
        2 => labels[i].binary() as f64,
        _ => ((i * 7 + j * 13) % 17) as f64 / 16.0,
    });
    let ds = Dataset::new(x, labels, (0..4).map(|j| format!("c{j}")).collect());
    let mask = FeatureMask::from_indices(4, &[0, 2]).unwrap();
    let (cost, _) = evaluate_mask(&mask, &ds, &FsConfig::default(), 3).unwrap();
    assert_eq!(cost, 0.0);
}

#[test]
fn missing_validation_class_is_named() {
    let mut labels = vec![ClassLabel::Normal; 30];
    labels[0] = ClassLabel::U2R;
    let ds = Dataset::new(Array2::zeros((30, 2)), labels, vec!["a".into(), "b".into()]);
    let err = evaluate_mask(&FeatureMask::all(2), &ds, &FsConfig::default(), 0).unwrap_err();
    assert!(
        matches!(err, FsError::MissingValidationClass("Attack")),
        "{err}"
    );
}

#[test]
fn mask_length_must_match() {
    let ds = informative_dataset(60, 6, &[0], 0);
    let err = evaluate_mask(&FeatureMask::all(5), &ds, &FsConfig::default(), 0).unwrap_err();
    assert!(matches!(
        err,
        FsError::MaskLength {
            expected: 6,
            got: 5
        }
    ));
}

#[test]
fn initial_budget_returns_best_initial_mask() {
    let ds = informative_dataset(150, 12, &[0, 1], 4);
    let evo = EvoConfig {
        pop_size: 8,
        max_evaluations: 8,
        rng_seed: 2,
        ..Default::default()
    };
    let res = select_features(&ds, &evo, &knn_config()).unwrap();
    assert_eq!(res.history.best_cost_per_iteration.len(), 1);
    assert_eq!(res.per_iteration_masks.len(), 1);
    assert_eq!(res.mask, res.per_iteration_masks[0]);
}

#[test]
fn result_invariants_and_determinism() {
    let ds = informative_dataset(150, 12, &[3, 7], 5);
    let evo = EvoConfig {
        pop_size: 10,
        max_evaluations: 120,
        rng_seed: 11,
        ..Default::default()
    };
    let cfg = knn_config();
    let res = select_features(&ds, &evo, &cfg).unwrap();
    assert_eq!(
        res.cost,
        *res.history.best_cost_per_iteration.last().unwrap()
    );
    assert_eq!(
        binarize(&res.best_position, cfg.binarize_threshold),
        res.mask
    );
    assert_eq!(res.selected_count, res.mask.count());
    assert_eq!(res.selected_features.len(), res.selected_count);
    assert_eq!(
        res.per_iteration_masks.len(),
        res.history.best_cost_per_iteration.len()
    );

    // the reported cost is reproducible from the mask alone
    let (again, _) = evaluate_mask(&res.mask, &ds, &cfg, evo.rng_seed).unwrap();
    assert_eq!(again, res.cost);

    let rerun = select_features(&ds, &evo, &cfg).unwrap();
    assert_eq!(rerun, res);
}

#[test]
fn informative_only_mask_dominates_exhaustively() {
    // every mask that drops an informative column must score no better than
    // the informative-only mask
    let informative = [1, 4, 6];
    let d = 8;
    let ds = informative_dataset(400, d, &informative, 21);
    let cfg = knn_config();
    let fold = Fold::new(&ds, cfg.validation_fraction, 0).unwrap();
    let reference = FeatureMask::from_indices(d, &informative).unwrap();
    let (best, _) = fold.evaluate(&reference, &cfg).unwrap();
    for bits in 1u32..(1 << d) {
        let mask = FeatureMask::new((0..d).map(|j| bits >> j & 1 == 1).collect()).unwrap();
        if informative.iter().all(|&c| mask.as_slice()[c]) {
            continue;
        }
        let (cost, _) = fold.evaluate(&mask, &cfg).unwrap();
        assert!(best <= cost, "mask {mask} scored {cost} < {best}");
    }
}

proptest! {
    #[test]
    fn binarize_is_total_and_round_trips(
        pos in proptest::collection::vec(0.0f64..=1.0, 1..60),
        threshold in 0.01f64..0.99,
    ) {
        let m = binarize(&pos, threshold);
        prop_assert!(m.count() >= 1);
        prop_assert_eq!(m.len(), pos.len());
        for (i, &s) in m.as_slice().iter().enumerate() {
            if pos[i] >= threshold {
                prop_assert!(s);
            }
        }
        let back: FeatureMask = m.bit_string().parse().unwrap();
        prop_assert_eq!(&back, &m);
        let json = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(serde_json::from_str::<FeatureMask>(&json).unwrap(), m);
    }

    #[test]
    fn cost_is_bounded(
        acc in 0.0f64..=1.0, fpr in 0.0f64..=1.0, fnr in 0.0f64..=1.0,
        w in proptest::array::uniform3(0.0f64..5.0),
    ) {
        let cfg = FsConfig { w1: w[0], w2: w[1], w3: w[2], ..Default::default() };
        let c = cost_function(acc, fpr, fnr, &cfg);
        prop_assert!(c >= 0.0 && c <= w.iter().sum::<f64>() + 1e-12);
        let s = w.iter().sum::<f64>();
        if s > 0.0 {
            let norm = FsConfig { w1: w[0] / s, w2: w[1] / s, w3: w[2] / s, ..Default::default() };
            prop_assert!(cost_function(acc, fpr, fnr, &norm) <= 1.0 + 1e-12);
        }
    }
}
