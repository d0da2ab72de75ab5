use super::RunConfig;
use crate::classifiers::ClassifierKind;
use crate::data::Dataset;
use crate::feature_selection::FeatureMask;
use crate::metrics::MetricsReport;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub created_unix: u64,
}

impl Environment {
    pub fn capture() -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: rayon::current_num_threads(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Baseline,
    Selected,
}

impl Stage {
    pub fn title(self) -> &'static str {
        match self {
            Stage::Baseline => "All features",
            Stage::Selected => "EVO-selected features",
        }
    }
}

/// One table row. Precision, recall and F1 are support-weighted averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub stage: Stage,
    pub model: String,
    pub features: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub train_time: f64,
    pub test_time: f64,
    pub details: MetricsReport,
}

impl ReportRow {
    pub fn new(stage: Stage, kind: ClassifierKind, features: usize, m: MetricsReport) -> Self {
        Self {
            stage,
            model: kind.display_name().to_string(),
            features,
            accuracy: m.accuracy,
            precision: m.weighted_avg.precision,
            recall: m.weighted_avg.recall,
            f1: m.weighted_avg.f1,
            train_time: m.train_time,
            test_time: m.test_time,
            details: m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub environment: Environment,
    pub train_rows: usize,
    pub test_rows: usize,
    pub selected_features: Vec<String>,
    pub mask: Option<FeatureMask>,
    pub fs_cost: Option<f64>,
    pub rows: Vec<ReportRow>,
    /// False while rows are still being added.
    pub complete: bool,
}

impl ExperimentReport {
    pub fn new(config: &RunConfig, train: &Dataset, test: &Dataset) -> Self {
        Self {
            config: config.clone(),
            environment: Environment::capture(),
            train_rows: train.len(),
            test_rows: test.len(),
            selected_features: Vec::new(),
            mask: None,
            fs_cost: None,
            rows: Vec::new(),
            complete: false,
        }
    }
}

pub const TABLE_COLUMNS: [&str; 8] = [
    "Model",
    "Number of features",
    "Accuracy",
    "Precision",
    "Recall",
    "F1-score",
    "Training Time(sec.)",
    "Testing Time(sec.)",
];

fn row_cells(r: &ReportRow) -> [String; 8] {
    [
        r.model.clone(),
        r.features.to_string(),
        r.accuracy.to_string(),
        r.precision.to_string(),
        r.recall.to_string(),
        r.f1.to_string(),
        r.train_time.to_string(),
        r.test_time.to_string(),
    ]
}

/// Markdown tables with the resolved config as a JSON header block. Numbers
/// are printed in shortest round-trip form so they match the JSON exactly.
pub fn render_experiment_markdown(report: &ExperimentReport) -> String {
    let mut out = String::from("# EVO feature selection experiment\n\n");
    let _ = writeln!(
        out,
        "Mode `{}`, seed {}, {} training rows, {} test rows.\n",
        report.config.mode, report.config.seed, report.train_rows, report.test_rows
    );
    for stage in [Stage::Baseline, Stage::Selected] {
        let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.stage == stage).collect();
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(out, "## {}\n", stage.title());
        let _ = writeln!(out, "| {} |", TABLE_COLUMNS.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(TABLE_COLUMNS.len()));
        for r in rows {
            let _ = writeln!(out, "| {} |", row_cells(r).join(" | "));
        }
        out.push('\n');
    }
    if !report.selected_features.is_empty() {
        let _ = writeln!(
            out,
            "Selected features ({}): {}\n",
            report.selected_features.len(),
            report.selected_features.join(", ")
        );
    }
    let config = serde_json::to_string_pretty(&report.config).expect("config serializes");
    let _ = writeln!(out, "## Configuration\n\n```json\n{config}\n```");
    out
}

/// Fixed-column CSV: `stage` followed by the table columns.
pub fn render_experiment_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["stage"];
    header.extend(TABLE_COLUMNS);
    w.write_record(&header).expect("in-memory write");
    for r in &report.rows {
        let stage = match r.stage {
            Stage::Baseline => "baseline",
            Stage::Selected => "selected",
        };
        let mut rec = vec![stage.to_string()];
        rec.extend(row_cells(r));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSeries {
    pub objective: String,
    pub evaluations: Vec<usize>,
    pub best_cost: Vec<f64>,
    pub final_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dim: usize,
    pub config: RunConfig,
    pub environment: Environment,
    pub series: Vec<BenchmarkSeries>,
}

pub fn render_benchmark_markdown(report: &BenchmarkReport) -> String {
    let mut out = format!(
        "# EVO benchmark ({}-D, pop {}, {} evaluations, seed {})\n\n",
        report.dim,
        report.config.evo.pop_size,
        report.config.evo.max_evaluations,
        report.config.seed
    );
    out.push_str("| Objective | Iterations | Final best |\n|---|---|---|\n");
    for s in &report.series {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            s.objective,
            s.best_cost.len() - 1,
            s.final_best
        );
    }
    out
}

/// Long-form convergence data: `objective,iteration,evaluations,best_cost`.
pub fn render_benchmark_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("objective,iteration,evaluations,best_cost\n");
    for s in &report.series {
        for (i, (e, c)) in s.evaluations.iter().zip(&s.best_cost).enumerate() {
            let _ = writeln!(out, "{},{i},{e},{c}", s.objective);
        }
    }
    out
}
