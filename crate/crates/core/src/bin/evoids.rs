use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use evoids::classifiers::ClassifierKind;
use evoids::data::BalanceTarget;
use evoids::harness::{self, Mode, ReportFormat, RunConfig, DATA_DIR_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

/// EVO wrapper feature selection for NSL-KDD intrusion detection.
#[derive(Parser)]
#[command(name = "evoids", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and scale the raw files into snapshots.
    Preprocess(Common),
    /// Downsample majority classes of a snapshot.
    Balance {
        #[command(flatten)]
        common: Common,
        /// Snapshot to balance (default: <out-dir>/train.csv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run EVO feature selection.
    SelectFeatures {
        #[command(flatten)]
        common: Common,
        /// Training snapshot; the raw training file is used when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train and evaluate one classifier.
    TrainEval {
        #[command(flatten)]
        common: Common,
        /// Bit string or path to an fs_result.json.
        #[arg(long)]
        mask: Option<String>,
    },
    /// All-feature vs EVO-selected comparison of every classifier.
    Experiment(Common),
    /// Optimizer convergence on synthetic benchmark functions.
    BenchmarkEvo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<usize>,
    },
}

/// Overrides for the JSON config; every flag beats the file.
#[derive(Args)]
struct Common {
    /// JSON file with a full or partial RunConfig.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    train_file: Option<PathBuf>,
    #[arg(long)]
    test_file: Option<PathBuf>,
    /// paper-split or official-test.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    stagnation_limit: Option<usize>,
    /// Evaluation threads; 1 evaluates sequentially.
    #[arg(long)]
    workers: Option<usize>,
    /// Cost weights as w1,w2,w3.
    #[arg(long)]
    weights: Option<String>,
    /// knn, dtree or logreg.
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Row cap, class name (e.g. Normal) or "none".
    #[arg(long)]
    balance_target: Option<String>,
    /// Row cap for feature selection data, or "none".
    #[arg(long)]
    fs_max_rows: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of md,csv,json.
    #[arg(long)]
    format: Option<String>,
}

fn parse_weights(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!("--weights {s:?}: {e}"))?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("--weights expects three comma-separated numbers, got {s:?}"),
    }
}

fn parse_optional<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|e| anyhow!("{flag} {s:?}: {e}"))
}

impl Common {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $($field:tt)+) => {
                if let Some(v) = $flag {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(self.data_dir.map(Some) => data_dir);
        set!(self.train_file.map(Some) => train_file);
        set!(self.test_file.map(Some) => test_file);
        set!(self.mode => mode);
        set!(self.seed => seed);
        set!(self.pop_size => evo.pop_size);
        set!(self.max_evals => evo.max_evaluations);
        set!(self.neighbors => evo.neighbor_count);
        set!(self.stagnation_limit.map(Some) => evo.stagnation_limit);
        set!(self.workers.map(Some) => evo.workers);
        set!(self.classifier => fs.classifier);
        set!(self.knn_k => fs.params.knn_k);
        set!(self.max_depth.map(Some) => fs.params.max_depth);
        set!(self.out_dir => out_dir);
        if let Some(w) = &self.weights {
            [cfg.fs.w1, cfg.fs.w2, cfg.fs.w3] = parse_weights(w)?;
        }
        if let Some(t) = &self.balance_target {
            cfg.balance_target = parse_optional::<BalanceTarget>(t, "--balance-target")?;
        }
        if let Some(n) = &self.fs_max_rows {
            cfg.fs_max_rows = parse_optional::<usize>(n, "--fs-max-rows")?;
        }
        if let Some(f) = &self.format {
            cfg.formats = f
                .split(',')
                .map(str::parse::<ReportFormat>)
                .collect::<Result<_, _>>()?;
        }
        Ok(cfg.resolve()?)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(common) => {
            let cfg = common.resolve()?;
            let summary = harness::cmd_preprocess(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Balance { common, input } => {
            let cfg = common.resolve()?;
            let input = input.unwrap_or_else(|| cfg.out_dir.join("train.csv"));
            let s = harness::cmd_balance(&cfg, &input)?;
            println!("balance target {}", s.target);
            println!("{:<8} {:>8} {:>8}", "class", "before", "after");
            for (class, before) in &s.before {
                println!(
                    "{class:<8} {before:>8} {:>8}",
                    s.after.get(class).copied().unwrap_or(0)
                );
            }
        }
        Command::SelectFeatures { common, input } => {
            let cfg = common.resolve()?;
            let r = harness::cmd_select_features(&cfg, input.as_deref())?;
            println!(
                "selected {} features (cost {}): {}",
                r.selected_count,
                r.cost,
                r.selected_features.join(", ")
            );
            println!("mask {}", r.mask);
        }
        Command::TrainEval { common, mask } => {
            let cfg = common.resolve()?;
            let report = harness::cmd_train_eval(&cfg, mask.as_deref())?;
            print!("{}", harness::render_experiment_markdown(&report));
        }
        Command::Experiment(common) => {
            let cfg = common.resolve()?;
            let report = harness::cmd_experiment(&cfg)?;
            print!("{}", harness::render_experiment_markdown(&report));
        }
        Command::BenchmarkEvo { common, dim } => {
            let mut cfg = common.resolve()?;
            if let Some(d) = dim {
                cfg.benchmark_dim = d;
            }
            let report = harness::cmd_benchmark_evo(&cfg)?;
            print!("{}", harness::render_benchmark_markdown(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already embed their causes in Display
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
