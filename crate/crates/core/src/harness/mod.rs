//! End-to-end flows behind the `evoids` command line: preprocessing,
//! balancing, feature selection, evaluation and optimizer benchmarks.

mod report;

pub use report::{
    render_benchmark_csv, render_benchmark_markdown, render_experiment_csv,
    render_experiment_markdown, BenchmarkReport, BenchmarkSeries, Environment, ExperimentReport,
    ReportRow, Stage,
};

use crate::classifiers::{self, ClassifierError, ClassifierKind};
use crate::data::{
    balance_downsample, class_counts, fit_encoders, map_attack_to_class, parse_file, read_snapshot,
    split_indices, stratified_subsample, transform, write_snapshot, BalanceTarget, ClassLabel,
    DataError, Dataset, EncoderState, RawRecord,
};
use crate::evo::benchmarks::Benchmark;
use crate::evo::{self, EvoConfig, EvoError};
use crate::feature_selection::{select_features, FeatureMask, FsConfig, FsError, FsResult};
use crate::metrics::{build_confusion, classification_report, MetricsError, MetricsReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Environment variable the CLI reads for `data_dir`.
pub const DATA_DIR_ENV: &str = "EVOIDS_DATA_DIR";
pub const TRAIN_FILE_NAME: &str = "KDDTrain+.txt";
pub const TEST_FILE_NAME: &str = "KDDTest+.txt";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: String,
        #[source]
        source: DataError,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    FeatureSelection(#[from] FsError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Evo(#[from] EvoError),
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Seeded stratified split of the training file.
    #[default]
    PaperSplit,
    /// Train on the training file, test on the separate test file.
    OfficialTest,
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-split" => Ok(Mode::PaperSplit),
            "official-test" => Ok(Mode::OfficialTest),
            other => Err(HarnessError::Config(format!(
                "unknown mode {other:?}; expected paper-split or official-test"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::PaperSplit => "paper-split",
            Mode::OfficialTest => "official-test",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Md,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Md, ReportFormat::Csv, ReportFormat::Json];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Md => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "md" => Ok(ReportFormat::Md),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(HarnessError::Config(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// Fully resolved settings for one command. `seed` overrides `evo.rng_seed`
/// and feeds every other random step through [`RunConfig::stream_seed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Fallback location of the raw files (see [`DATA_DIR_ENV`]).
    pub data_dir: Option<PathBuf>,
    pub train_file: Option<PathBuf>,
    pub test_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub mode: Mode,
    pub seed: u64,
    /// Train share of the paper-split mode.
    pub split_ratio: f64,
    pub evo: EvoConfig,
    pub fs: FsConfig,
    /// Majority-class cap applied to training data; `None` keeps every row.
    pub balance_target: Option<BalanceTarget>,
    /// Stratified row cap for the data fed to feature selection.
    pub fs_max_rows: Option<usize>,
    pub formats: Vec<ReportFormat>,
    pub benchmark_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            train_file: None,
            test_file: None,
            out_dir: PathBuf::from("evoids-out"),
            mode: Mode::PaperSplit,
            seed: 0,
            split_ratio: 0.8,
            evo: EvoConfig::default(),
            fs: FsConfig::default(),
            balance_target: Some(BalanceTarget::Reference(ClassLabel::Normal)),
            fs_max_rows: Some(20_000),
            formats: ReportFormat::ALL.to_vec(),
            benchmark_dim: 10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Split = 1,
    Balance = 2,
    Subsample = 3,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Applies the seed to the optimizer, fills missing data paths from
    /// `data_dir` and validates the nested configs.
    pub fn resolve(mut self) -> Result<Self, HarnessError> {
        self.evo.rng_seed = self.seed;
        if let Some(dir) = self.data_dir.clone() {
            self.train_file
                .get_or_insert_with(|| dir.join(TRAIN_FILE_NAME));
            self.test_file
                .get_or_insert_with(|| dir.join(TEST_FILE_NAME));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(HarnessError::Config(format!(
                "split_ratio must lie in (0,1), got {}",
                self.split_ratio
            )));
        }
        if self.formats.is_empty() {
            return Err(HarnessError::Config(
                "at least one report format is required".into(),
            ));
        }
        self.evo.validate()?;
        self.fs.validate()?;
        Ok(self)
    }

    fn stream_seed(&self, stream: Stream) -> u64 {
        self.seed.wrapping_add(stream as u64)
    }

    fn train_path(&self) -> Result<&Path, HarnessError> {
        self.train_file.as_deref().ok_or_else(|| {
            HarnessError::Config(format!(
                "no training file: pass --train-file or set {DATA_DIR_ENV}"
            ))
        })
    }

    fn test_path(&self) -> Result<&Path, HarnessError> {
        self.test_file.as_deref().ok_or_else(|| {
            HarnessError::Config(format!(
                "no test file: pass --test-file or set {DATA_DIR_ENV}"
            ))
        })
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    fs::write(path, contents).map_err(io_err)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

/// Attaches the file name unless the error already carries it.
fn in_file<T>(path: &Path, r: Result<T, DataError>) -> Result<T, HarnessError> {
    r.map_err(|source| match source {
        DataError::Io { .. } | DataError::TooManyMalformed { .. } => HarnessError::Data(source),
        source => HarnessError::Input {
            path: path.display().to_string(),
            source,
        },
    })
}

fn load_records(path: &Path) -> Result<(Vec<RawRecord>, usize), HarnessError> {
    let parsed = in_file(path, parse_file(path))?;
    if !parsed.rejects.is_empty() {
        log::warn!(
            "{}: skipped {} malformed line(s)",
            path.display(),
            parsed.rejects.len()
        );
    }
    Ok((parsed.records, parsed.rejects.len()))
}

/// Encoders fitted on `fit`, applied to every record set in `apply`.
fn encode(
    fit: &[RawRecord],
    apply: &[(&Path, &[RawRecord])],
) -> Result<(EncoderState, Vec<Dataset>, Vec<usize>), HarnessError> {
    let encoder = fit_encoders(fit)?;
    let mut out = Vec::new();
    let mut rejects = Vec::new();
    for (path, records) in apply {
        let t = in_file(path, transform(records, &encoder))?;
        rejects.push(t.rejects.len());
        out.push(t.dataset);
    }
    Ok((encoder, out, rejects))
}

pub fn read_dataset(path: &Path) -> Result<Dataset, HarnessError> {
    let file = fs::File::open(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    in_file(path, read_snapshot(io::BufReader::new(file)))
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), HarnessError> {
    let mut buf = Vec::new();
    write_snapshot(ds, &mut buf)?;
    write_file(path, buf)
}

pub fn named_counts(labels: &[ClassLabel]) -> BTreeMap<String, usize> {
    class_counts(labels)
        .into_iter()
        .map(|(c, n)| (c.name().to_string(), n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileSummary {
    pub path: String,
    pub rows: usize,
    pub rejects: usize,
    pub class_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub train: FileSummary,
    pub test: Option<FileSummary>,
}

/// Parses the raw files, fits encoders on the training file and writes
/// `train.csv`, `test.csv` (when a test file is configured), `encoder.json`
/// and `preprocess_summary.json` into the output directory.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<PreprocessSummary, HarnessError> {
    let train_path = cfg.train_path()?;
    let (train_records, train_bad) = load_records(train_path)?;
    let test = cfg.test_file.as_deref().map(load_records).transpose()?;

    let mut apply: Vec<(&Path, &[RawRecord])> = vec![(train_path, &train_records)];
    if let (Some(path), Some((records, _))) = (cfg.test_file.as_deref(), &test) {
        apply.push((path, records));
    }
    let (encoder, sets, rejects) = encode(&train_records, &apply)?;

    let summarize =
        |path: &Path, ds: &Dataset, parse_rejects: usize, enc_rejects: usize| FileSummary {
            path: path.display().to_string(),
            rows: ds.len(),
            rejects: parse_rejects + enc_rejects,
            class_counts: named_counts(&ds.labels5),
        };
    let summary = PreprocessSummary {
        train: summarize(train_path, &sets[0], train_bad, rejects[0]),
        test: test.as_ref().map(|(_, bad)| {
            summarize(
                cfg.test_file.as_deref().expect("test path"),
                &sets[1],
                *bad,
                rejects[1],
            )
        }),
    };

    write_dataset(&sets[0], &cfg.out_path("train.csv"))?;
    if let Some(ds) = sets.get(1) {
        write_dataset(ds, &cfg.out_path("test.csv"))?;
    }
    write_file(&cfg.out_path("encoder.json"), to_json(&encoder))?;
    write_file(&cfg.out_path("preprocess_summary.json"), to_json(&summary))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub target: String,
    pub before: BTreeMap<String, usize>,
    pub after: BTreeMap<String, usize>,
    pub row_ids: Vec<usize>,
}

/// Downsamples a snapshot and writes `train_balanced.csv`.
pub fn cmd_balance(cfg: &RunConfig, input: &Path) -> Result<BalanceSummary, HarnessError> {
    let target = cfg
        .balance_target
        .ok_or_else(|| HarnessError::Config("balance needs a --balance-target".into()))?;
    let ds = read_dataset(input)?;
    let balanced = balance_downsample(&ds, target, cfg.stream_seed(Stream::Balance))?;
    write_dataset(&balanced, &cfg.out_path("train_balanced.csv"))?;
    Ok(BalanceSummary {
        target: target.to_string(),
        before: named_counts(&ds.labels5),
        after: named_counts(&balanced.labels5),
        row_ids: balanced.row_ids,
    })
}

/// Training data for feature selection: a snapshot when given, otherwise the
/// preprocessed raw training file; balanced and capped as configured.
fn selection_data(cfg: &RunConfig, input: Option<&Path>) -> Result<Dataset, HarnessError> {
    let ds = match input {
        Some(path) => read_dataset(path)?,
        None => {
            let path = cfg.train_path()?;
            let (records, _) = load_records(path)?;
            encode(&records, &[(path, &records)])?.1.remove(0)
        }
    };
    prepare_selection_rows(cfg, &balance(cfg, ds)?)
}

fn balance(cfg: &RunConfig, ds: Dataset) -> Result<Dataset, HarnessError> {
    match cfg.balance_target {
        Some(target) => Ok(balance_downsample(
            &ds,
            target,
            cfg.stream_seed(Stream::Balance),
        )?),
        None => Ok(ds),
    }
}

fn prepare_selection_rows(cfg: &RunConfig, ds: &Dataset) -> Result<Dataset, HarnessError> {
    match cfg.fs_max_rows {
        Some(cap) => Ok(stratified_subsample(
            ds,
            cap,
            cfg.stream_seed(Stream::Subsample),
        )?),
        None => Ok(ds.clone()),
    }
}

/// Per-iteration convergence rows: `iteration,evaluations,best_cost,selected_count`.
pub fn convergence_csv(result: &FsResult) -> String {
    let mut out = String::from("iteration,evaluations,best_cost,selected_count\n");
    let h = &result.history;
    for (i, mask) in result.per_iteration_masks.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{}\n",
            h.evaluations_per_iteration[i],
            h.best_cost_per_iteration[i],
            mask.count()
        ));
    }
    out
}

fn run_selection(cfg: &RunConfig, ds: &Dataset) -> Result<FsResult, HarnessError> {
    log::info!(
        "selecting features on {} rows with {} (pop {}, {} evaluations)",
        ds.len(),
        cfg.fs.classifier,
        cfg.evo.pop_size,
        cfg.evo.max_evaluations
    );
    let result = select_features(ds, &cfg.evo, &cfg.fs)?;
    write_file(&cfg.out_path("fs_result.json"), to_json(&result))?;
    write_file(&cfg.out_path("convergence.csv"), convergence_csv(&result))?;
    Ok(result)
}

/// Runs EVO feature selection and writes `fs_result.json` and `convergence.csv`.
pub fn cmd_select_features(
    cfg: &RunConfig,
    input: Option<&Path>,
) -> Result<FsResult, HarnessError> {
    let ds = selection_data(cfg, input)?;
    run_selection(cfg, &ds)
}

/// Train/test datasets for the configured mode, encoders fitted on the
/// training side only. The training side is balanced if a target is set.
pub fn prepare_split(cfg: &RunConfig) -> Result<(Dataset, Dataset), HarnessError> {
    let train_path = cfg.train_path()?;
    let (records, _) = load_records(train_path)?;
    let (train, test) = match cfg.mode {
        Mode::PaperSplit => {
            let labels = records
                .iter()
                .map(|r| {
                    map_attack_to_class(&r.attack_name).map_err(|e| DataError::Record {
                        line: r.line,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>, _>>();
            let labels = in_file(train_path, labels)?;
            let (fit, held) =
                split_indices(&labels, cfg.split_ratio, cfg.stream_seed(Stream::Split))?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
            let (fit, held) = (pick(&fit), pick(&held));
            let mut sets = encode(&fit, &[(train_path, &fit), (train_path, &held)])?.1;
            let test = sets.pop().expect("two sets");
            (sets.pop().expect("two sets"), test)
        }
        Mode::OfficialTest => {
            let test_path = cfg.test_path()?;
            let (test_records, _) = load_records(test_path)?;
            let mut sets = encode(
                &records,
                &[(train_path, &records), (test_path, &test_records)],
            )?
            .1;
            let test = sets.pop().expect("two sets");
            (sets.pop().expect("two sets"), test)
        }
    };
    Ok((balance(cfg, train)?, test))
}

fn class_names() -> Vec<String> {
    ClassLabel::names()
}

/// Trains one classifier on the masked 5-class training data and scores it on
/// the test side.
pub fn evaluate_model(
    kind: ClassifierKind,
    cfg: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    mask: &FeatureMask,
) -> Result<(classifiers::Model, MetricsReport), HarnessError> {
    let cols = mask.indices();
    let (x_train, x_test) = (train.columns(&cols), test.columns(&cols));
    let (model, fit) = classifiers::train(
        kind,
        x_train.view(),
        &train.class_indices(),
        ClassLabel::ALL.len(),
        &cfg.fs.params,
    )?;
    let (pred, test_time) = classifiers::predict(&model, x_test.view())?;
    let cm = build_confusion(&test.class_indices(), &pred, &class_names())?;
    let mut report = classification_report(&cm);
    report.train_time = fit.train_time;
    report.test_time = test_time;
    Ok((model, report))
}

pub fn load_mask(arg: &str, n_features: usize) -> Result<FeatureMask, HarnessError> {
    let mask = if Path::new(arg).is_file() {
        let text = read_text(Path::new(arg))?;
        let result: FsResult =
            serde_json::from_str(&text).map_err(|source| HarnessError::Json {
                path: arg.to_string(),
                source,
            })?;
        result.mask
    } else {
        arg.parse::<FeatureMask>()?
    };
    if mask.len() != n_features {
        return Err(FsError::MaskLength {
            expected: n_features,
            got: mask.len(),
        }
        .into());
    }
    Ok(mask)
}

/// Trains the configured classifier on (optionally masked) features and writes
/// the model plus its metrics report.
pub fn cmd_train_eval(
    cfg: &RunConfig,
    mask: Option<&str>,
) -> Result<ExperimentReport, HarnessError> {
    let (train, test) = prepare_split(cfg)?;
    let mask = match mask {
        Some(arg) => load_mask(arg, train.n_features())?,
        None => FeatureMask::all(train.n_features()),
    };
    let kind = cfg.fs.classifier;
    let (model, metrics) = evaluate_model(kind, cfg, &train, &test, &mask)?;
    write_file(
        &cfg.out_path(&format!("model_{kind}.json")),
        model.to_json(),
    )?;

    let mut report = ExperimentReport::new(cfg, &train, &test);
    report.selected_features = mask
        .names(&train.feature_names)
        .into_iter()
        .map(String::from)
        .collect();
    report.mask = Some(mask.clone());
    let stage = if mask.count() == train.n_features() {
        Stage::Baseline
    } else {
        Stage::Selected
    };
    report
        .rows
        .push(ReportRow::new(stage, kind, mask.count(), metrics));
    report.complete = true;
    write_reports(cfg, "train_eval", &report)?;
    Ok(report)
}

pub fn write_reports(
    cfg: &RunConfig,
    stem: &str,
    report: &ExperimentReport,
) -> Result<(), HarnessError> {
    for format in &cfg.formats {
        let body = match format {
            ReportFormat::Md => render_experiment_markdown(report),
            ReportFormat::Csv => render_experiment_csv(report),
            ReportFormat::Json => to_json(report),
        };
        write_file(
            &cfg.out_path(&format!("{stem}.{}", format.extension())),
            body,
        )?;
    }
    Ok(())
}

/// Baseline (all features) and EVO-selected runs of every classifier on one
/// seeded split. `experiment.json` is rewritten after every row so a failure
/// leaves the finished rows on disk.
pub fn cmd_experiment(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let (train, test) = prepare_split(cfg)?;
    let mut report = ExperimentReport::new(cfg, &train, &test);
    let partial = cfg.out_path("experiment.json");
    let flush = |r: &ExperimentReport| write_file(&partial, to_json(r));

    let all = FeatureMask::all(train.n_features());
    for kind in ClassifierKind::ALL {
        log::info!("baseline {kind}");
        let (_, metrics) = evaluate_model(kind, cfg, &train, &test, &all)?;
        report
            .rows
            .push(ReportRow::new(Stage::Baseline, kind, all.count(), metrics));
        flush(&report)?;
    }

    let fs = run_selection(cfg, &prepare_selection_rows(cfg, &train)?)?;
    report.selected_features = fs.selected_features.clone();
    report.mask = Some(fs.mask.clone());
    report.fs_cost = Some(fs.cost);
    flush(&report)?;

    for kind in ClassifierKind::ALL {
        log::info!("selected-feature {kind}");
        let (_, metrics) = evaluate_model(kind, cfg, &train, &test, &fs.mask)?;
        report.rows.push(ReportRow::new(
            Stage::Selected,
            kind,
            fs.mask.count(),
            metrics,
        ));
        flush(&report)?;
    }
    report.complete = true;
    write_reports(cfg, "experiment", &report)?;
    Ok(report)
}

/// EVO on the sphere, Rastrigin and Rosenbrock functions at `benchmark_dim`.
pub fn cmd_benchmark_evo(cfg: &RunConfig) -> Result<BenchmarkReport, HarnessError> {
    let mut series = Vec::new();
    for bench in Benchmark::ALL {
        let history = evo::run(&cfg.evo, cfg.benchmark_dim, &bench.function())?;
        series.push(BenchmarkSeries {
            objective: bench.name().to_string(),
            evaluations: history.evaluations_per_iteration,
            best_cost: history.best_cost_per_iteration,
            final_best: history.final_best.cost,
        });
    }
    let report = BenchmarkReport {
        dim: cfg.benchmark_dim,
        config: cfg.clone(),
        environment: Environment::capture(),
        series,
    };
    for format in &cfg.formats {
        let body = match format {
            ReportFormat::Md => render_benchmark_markdown(&report),
            ReportFormat::Csv => render_benchmark_csv(&report),
            ReportFormat::Json => to_json(&report),
        };
        write_file(
            &cfg.out_path(&format!("benchmark.{}", format.extension())),
            body,
        )?;
    }
    Ok(report)
}
