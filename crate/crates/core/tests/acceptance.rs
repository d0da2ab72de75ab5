//! Acceptance criteria, one PASS/FAIL/SKIP line each. Runs without the libtest
//! harness so the lines always reach the console.
//!
//! Criteria 1-5 need the NSL-KDD files in `$EVOIDS_DATA_DIR`; without them
//! they print SKIP, or FAIL when `EVOIDS_REQUIRE_DATA=1`.

use evoids::classifiers::{
    gradient_check, ClassifierKind, ClassifierParams, KnnModel, LogRegModel,
};
use evoids::data::{balance_indices, class_counts, parse_file, BalanceTarget, ClassLabel};
use evoids::evo::benchmarks::{rastrigin, rosenbrock, sphere};
use evoids::evo::{self, DecayDraws, EvoConfig};
use evoids::feature_selection::{binarize, select_features, FeatureMask, Fold, FsConfig};
use evoids::harness::{
    self, ExperimentReport, RunConfig, Stage, DATA_DIR_ENV, TEST_FILE_NAME, TRAIN_FILE_NAME,
};
use evoids::metrics::{build_confusion, classification_report};
use evoids::synthetic::informative_dataset;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

type Benchmark = (&'static str, fn(&[f64]) -> f64);
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn data_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os(DATA_DIR_ENV)?);
    (dir.join(TRAIN_FILE_NAME).is_file() && dir.join(TEST_FILE_NAME).is_file()).then_some(dir)
}

fn missing_data() -> Outcome {
    let msg = format!("{TRAIN_FILE_NAME}/{TEST_FILE_NAME} not found under ${DATA_DIR_ENV}");
    if std::env::var("EVOIDS_REQUIRE_DATA").is_ok_and(|v| v == "1") {
        Fail(msg)
    } else {
        Skip(msg)
    }
}

fn real_config(dir: PathBuf, seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        data_dir: Some(dir),
        out_dir: std::env::temp_dir().join(format!("evoids-acceptance-{seed}")),
        seed,
        ..Default::default()
    };
    cfg.evo.pop_size = 30;
    cfg.evo.max_evaluations = 3000;
    cfg.resolve().expect("valid config")
}

/// Paper-split experiment on the real data, shared by criteria 2-4.
fn experiment() -> &'static Result<ExperimentReport, String> {
    static REPORT: OnceLock<Result<ExperimentReport, String>> = OnceLock::new();
    REPORT.get_or_init(|| {
        let dir = data_dir().ok_or("no data")?;
        harness::cmd_experiment(&real_config(dir, 0)).map_err(|e| e.to_string())
    })
}

fn row(r: &ExperimentReport, stage: Stage, kind: ClassifierKind) -> &harness::ReportRow {
    r.rows
        .iter()
        .find(|row| row.stage == stage && row.model == kind.display_name())
        .expect("row present")
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn c1_feature_reduction() -> Outcome {
    let Some(dir) = data_dir() else {
        return missing_data();
    };
    let mut counts = Vec::new();
    let start = Instant::now();
    for seed in 0..3 {
        let cfg = real_config(dir.clone(), seed);
        match harness::cmd_select_features(&cfg, None) {
            Ok(r) => counts.push(r.selected_count),
            Err(e) => return Fail(format!("seed {seed}: {e}")),
        }
    }
    let minutes = start.elapsed().as_secs_f64() / 60.0 / 3.0;
    check(
        counts.iter().all(|c| (12..=24).contains(c)),
        format!("selected counts {counts:?} (band 12..=24), {minutes:.1} min per run"),
    )
}

fn c2_baseline_accuracy() -> Outcome {
    if data_dir().is_none() {
        return missing_data();
    }
    let r = match experiment() {
        Ok(r) => r,
        Err(e) => return Fail(e.clone()),
    };
    let knn = row(r, Stage::Baseline, ClassifierKind::Knn).accuracy * 100.0;
    let tree = row(r, Stage::Baseline, ClassifierKind::Dtree).accuracy * 100.0;
    let lr = row(r, Stage::Baseline, ClassifierKind::Logreg).accuracy * 100.0;
    check(
        within(knn, 97.38, 2.0) && tree >= 97.0 && within(lr, 87.94, 5.0),
        format!("KNN {knn:.2}% (97.38±2), D_Tree {tree:.2}% (≥97), LogReg {lr:.2}% (87.94±5)"),
    )
}

fn c3_selected_accuracy() -> Outcome {
    if data_dir().is_none() {
        return missing_data();
    }
    let r = match experiment() {
        Ok(r) => r,
        Err(e) => return Fail(e.clone()),
    };
    let tree = row(r, Stage::Selected, ClassifierKind::Dtree).accuracy * 100.0;
    let knn = row(r, Stage::Selected, ClassifierKind::Knn).accuracy * 100.0;
    let lr = row(r, Stage::Selected, ClassifierKind::Logreg).accuracy * 100.0;
    check(
        within(tree, 98.95, 3.0) && within(knn, 98.47, 3.0) && within(lr, 88.84, 5.0),
        format!("D_Tree {tree:.2}% (98.95±3), KNN {knn:.2}% (98.47±3), LogReg {lr:.2}% (88.84±5)"),
    )
}

fn c4_selected_tree_prf() -> Outcome {
    if data_dir().is_none() {
        return missing_data();
    }
    let r = match experiment() {
        Ok(r) => r,
        Err(e) => return Fail(e.clone()),
    };
    let t = row(r, Stage::Selected, ClassifierKind::Dtree);
    let (p, rc, f) = (t.precision * 100.0, t.recall * 100.0, t.f1 * 100.0);
    check(
        p >= 95.0 && rc >= 95.0 && f >= 95.0,
        format!("weighted P/R/F1 {p:.2}/{rc:.2}/{f:.2} (each ≥95)"),
    )
}

fn c5_dataset_integrity() -> Outcome {
    let Some(dir) = data_dir() else {
        return missing_data();
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, expected) in [(TRAIN_FILE_NAME, 125_973), (TEST_FILE_NAME, 22_543)] {
        match parse_file(dir.join(name)) {
            Ok(out) => {
                let unknown = out
                    .records
                    .iter()
                    .filter(|r| evoids::data::map_attack_to_class(&r.attack_name).is_err())
                    .count();
                ok &= out.records.len() == expected && unknown == 0;
                detail.push(format!(
                    "{name}: {} rows (want {expected}), {unknown} unknown attacks",
                    out.records.len()
                ));
            }
            Err(e) => return Fail(format!("{name}: {e}")),
        }
    }
    check(ok, detail.join("; "))
}

fn c6_balancing() -> Outcome {
    let reference = [
        (ClassLabel::DoS, 45_927),
        (ClassLabel::Normal, 13_449),
        (ClassLabel::Probe, 11_656),
        (ClassLabel::R2L, 995),
        (ClassLabel::U2R, 52),
    ];
    let labels: Vec<ClassLabel> = reference
        .iter()
        .flat_map(|&(c, n)| std::iter::repeat_n(c, n))
        .collect();
    let kept =
        balance_indices(&labels, BalanceTarget::Reference(ClassLabel::Normal), 0).expect("balance");
    let after = class_counts(&kept.iter().map(|&i| labels[i]).collect::<Vec<_>>());
    let expected = [13_449, 13_449, 11_656, 995, 52];
    let exact = reference
        .iter()
        .zip(expected)
        .all(|(&(c, _), e)| after.get(&c).copied() == Some(e));

    // random synthetic datasets: per-class count == min(original, cap)
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut prop_ok = true;
    for trial in 0..200 {
        let n = rng.gen_range(1..400);
        let labels: Vec<ClassLabel> = (0..n)
            .map(|_| ClassLabel::ALL[rng.gen_range(0..5)])
            .collect();
        let cap = rng.gen_range(1..120);
        let kept = balance_indices(&labels, BalanceTarget::Cap(cap), trial).expect("balance");
        let before = class_counts(&labels);
        let after = class_counts(&kept.iter().map(|&i| labels[i]).collect::<Vec<_>>());
        prop_ok &= before
            .iter()
            .all(|(c, &b)| after.get(c).copied().unwrap_or(0) == b.min(cap));
    }
    check(
        exact && prop_ok,
        format!(
            "reference counts -> DoS {} Normal {} Probe {} R2L {} U2R {}; 200 random cap checks {}",
            after[&ClassLabel::DoS],
            after[&ClassLabel::Normal],
            after[&ClassLabel::Probe],
            after[&ClassLabel::R2L],
            after[&ClassLabel::U2R],
            if prop_ok { "hold" } else { "violated" }
        ),
    )
}

fn c7_optimizer_properties() -> Outcome {
    let objectives: [Benchmark; 3] = [
        ("sphere", sphere),
        ("rastrigin", rastrigin),
        ("rosenbrock", rosenbrock),
    ];
    let mut monotone = true;
    for seed in 0..100 {
        for (_, f) in objectives {
            let cfg = EvoConfig {
                pop_size: 10,
                max_evaluations: 200,
                rng_seed: seed,
                ..Default::default()
            };
            let h = evo::run(&cfg, 5, &f).expect("run");
            monotone &= h.best_cost_per_iteration.windows(2).all(|w| w[1] <= w[0]);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bounded = true;
    let in_unit = |v: &[f64]| v.iter().all(|x| (0.0..=1.0).contains(x));
    for _ in 0..10_000 {
        let dim = rng.gen_range(1..12);
        let vec = |r: &mut ChaCha8Rng| (0..dim).map(|_| r.gen::<f64>()).collect::<Vec<f64>>();
        let (x, best, center, neighbor) =
            (vec(&mut rng), vec(&mut rng), vec(&mut rng), vec(&mut rng));
        let draws = DecayDraws::sample(&mut rng, dim, &[0]);
        let stability = if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen::<f64>()
        };
        bounded &= in_unit(&evo::alpha_decay_update(&x, &best, &draws))
            && in_unit(&evo::gamma_decay_update(&x, &neighbor, &draws))
            && in_unit(&evo::beta_decay_update_1(
                &x, &best, &center, stability, &draws, 1e-9,
            ))
            && in_unit(&evo::beta_decay_update_2(&x, &best, &neighbor, &draws))
            && in_unit(&evo::random_walk_update(&x, &draws));
    }

    let base = EvoConfig {
        pop_size: 20,
        max_evaluations: 600,
        rng_seed: 42,
        ..Default::default()
    };
    let one = evo::run(
        &EvoConfig {
            workers: Some(1),
            ..base.clone()
        },
        8,
        &rastrigin,
    )
    .expect("run");
    let many = evo::run(
        &EvoConfig {
            workers: Some(4),
            ..base
        },
        8,
        &rastrigin,
    )
    .expect("run");
    let bits = |h: &evo::RunHistory| -> Vec<u64> {
        h.best_cost_per_iteration
            .iter()
            .chain(h.best_position_per_iteration.iter().flatten())
            .map(|v| v.to_bits())
            .collect()
    };
    let deterministic = bits(&one) == bits(&many);

    let cfg = EvoConfig {
        pop_size: 30,
        max_evaluations: 5000,
        rng_seed: 0,
        ..Default::default()
    };
    let sphere_best = evo::run(&cfg, 10, &sphere).expect("run").final_best.cost;

    check(
        monotone && bounded && deterministic && sphere_best <= 1e-2,
        format!(
            "monotone(100 seeds x 3)={monotone}, bounds(10k updates)={bounded}, 1-vs-4 workers bitwise={deterministic}, sphere-10D@5000={sphere_best:.3e} (≤1e-2)"
        ),
    )
}

fn knn_oracle(train: &Array2<f64>, labels: &[usize], q: &[f64], k: usize, classes: usize) -> usize {
    let mut d: Vec<(f64, usize)> = train
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            (
                r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
                i,
            )
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0; classes];
    d[..k].iter().for_each(|&(_, i)| votes[labels[i]] += 1);
    let max = *votes.iter().max().expect("classes > 0");
    votes.iter().position(|&v| v == max).expect("max present")
}

fn naive_rates(t: &[usize], p: &[usize], k: usize) -> Vec<f64> {
    let n = t.len();
    let mut out = vec![t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / n as f64];
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    for c in 0..k {
        let tp = (0..n).filter(|&i| t[i] == c && p[i] == c).count();
        out.push(div(tp, (0..n).filter(|&i| p[i] == c).count()));
        out.push(div(tp, (0..n).filter(|&i| t[i] == c).count()));
    }
    let fp = (0..n).filter(|&i| t[i] == 0 && p[i] != 0).count();
    let fneg = (0..n).filter(|&i| t[i] != 0 && p[i] == 0).count();
    out.push(div(fp, (0..n).filter(|&i| t[i] == 0).count()));
    out.push(div(fneg, (0..n).filter(|&i| t[i] != 0).count()));
    out
}

fn c8_oracle_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let train = Array2::from_shape_simple_fn((200, 20), || rng.gen::<f64>());
    let labels: Vec<usize> = (0..200).map(|_| rng.gen_range(0..3)).collect();
    let queries = Array2::from_shape_simple_fn((60, 20), || rng.gen::<f64>());
    let mut knn_ok = true;
    for k in [1, 3, 5] {
        let model = KnnModel::fit(train.view(), &labels, 3, k).expect("fit");
        let pred = model.predict(queries.view());
        for (q, &p) in queries.rows().into_iter().zip(&pred) {
            knn_ok &= p == knn_oracle(&train, &labels, q.as_slice().expect("row"), k, 3);
        }
        // training points themselves exercise exact-zero distances
        let own = model.predict(train.view());
        for (q, &p) in train.rows().into_iter().zip(&own) {
            knn_ok &= p == knn_oracle(&train, &labels, q.as_slice().expect("row"), k, 3);
        }
    }

    let x = Array2::from_shape_simple_fn((80, 6), || rng.gen::<f64>());
    let y: Vec<usize> = (0..80).map(|i| i % 3).collect();
    let p = ClassifierParams::default();
    let zero = LogRegModel::zeros(6, 3, p.learning_rate, 0, p.l2);
    let trained = LogRegModel::fit(x.view(), &y, 3, p.learning_rate, p.epochs, p.l2).expect("fit");
    let grad_err =
        gradient_check(&zero, x.view(), &y, 1e-5).max(gradient_check(&trained, x.view(), &y, 1e-5));

    let mut metrics_ok = true;
    for _ in 0..1000 {
        let k = rng.gen_range(2..5);
        let n = rng.gen_range(1..=50);
        let t: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let pr: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let names: Vec<String> = (0..k).map(|c| c.to_string()).collect();
        let r = classification_report(&build_confusion(&t, &pr, &names).expect("labels in range"));
        let mut got = vec![r.accuracy];
        r.per_class
            .iter()
            .for_each(|c| got.extend([c.precision, c.recall]));
        got.extend([r.fpr, r.fnr]);
        let want = naive_rates(&t, &pr, k);
        metrics_ok &= got.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-12);
    }

    let mut round_trip = true;
    for _ in 0..1000 {
        let pos: Vec<f64> = (0..41)
            .map(|_| rng.gen::<f64>() * rng.gen::<f64>())
            .collect();
        let mask = binarize(&pos, 0.5);
        let parsed: FeatureMask = mask.bit_string().parse().expect("bits");
        let json: FeatureMask =
            serde_json::from_str(&serde_json::to_string(&mask).expect("json")).expect("json");
        let as_position: Vec<f64> = mask
            .as_slice()
            .iter()
            .map(|&s| f64::from(u8::from(s)))
            .collect();
        round_trip &= parsed == mask && json == mask && binarize(&as_position, 0.5) == mask;
    }

    check(
        knn_ok && grad_err < 1e-4 && metrics_ok && round_trip,
        format!(
            "knn==exhaustive(k=1,3,5)={knn_ok}, logreg grad rel err {grad_err:.2e} (<1e-4), metrics==naive(1000)={metrics_ok}, mask round-trip={round_trip}"
        ),
    )
}

fn c9_toy_recovery() -> Outcome {
    let informative = [2usize, 9, 17, 26, 33];
    let fs = FsConfig {
        classifier: ClassifierKind::Knn,
        ..Default::default()
    };
    let mut hits = Vec::new();
    for seed in 0..5u64 {
        let ds = informative_dataset(500, 41, &informative, 100 + seed);
        let evo = EvoConfig {
            pop_size: 30,
            max_evaluations: 1500,
            rng_seed: seed,
            ..Default::default()
        };
        match select_features(&ds, &evo, &fs) {
            Ok(r) => hits.push(
                informative
                    .iter()
                    .filter(|&&c| r.mask.as_slice()[c])
                    .count(),
            ),
            Err(e) => return Fail(format!("seed {seed}: {e}")),
        }
    }
    let recovered = hits.iter().filter(|&&h| h >= 4).count();

    // exhaustive oracle at d = 10: the informative-only mask is never beaten
    // by a mask that drops an informative column
    let small_inf = [0usize, 3, 5, 8];
    let d = 10;
    let ds = informative_dataset(400, d, &small_inf, 77);
    let fold = Fold::new(&ds, fs.validation_fraction, 0).expect("fold");
    let reference = FeatureMask::from_indices(d, &small_inf).expect("mask");
    let (best, _) = fold.evaluate(&reference, &fs).expect("evaluate");
    let mut dominated = true;
    for bits in 1u32..(1 << d) {
        let mask =
            FeatureMask::new((0..d).map(|j| bits >> j & 1 == 1).collect()).expect("non-empty");
        if small_inf.iter().any(|&c| !mask.as_slice()[c]) {
            dominated &= best <= fold.evaluate(&mask, &fs).expect("evaluate").0;
        }
    }
    check(
        recovered >= 4 && dominated,
        format!("informative hits per seed {hits:?} ({recovered}/5 seeds ≥4); informative-only mask dominates all 2^10 masks={dominated}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "feature reduction", c1_feature_reduction),
        (2, "baseline accuracy", c2_baseline_accuracy),
        (3, "post-FS accuracy", c3_selected_accuracy),
        (4, "post-FS D_Tree P/R/F1", c4_selected_tree_prf),
        (5, "dataset integrity", c5_dataset_integrity),
        (6, "balancing", c6_balancing),
        (7, "optimizer properties", c7_optimizer_properties),
        (8, "oracle suites", c8_oracle_suites),
        (9, "toy recovery", c9_toy_recovery),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|p| name.contains(p.as_str()) || *p == n.to_string())
        {
            continue;
        }
        let start = Instant::now();
        let (tag, detail) = match f() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!(
            "criterion {n} [{name}] {tag}: {detail} ({:.1}s)",
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
