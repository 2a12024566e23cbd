//! Run reports: per-statistic rows with declared tolerances, resolved
//! constants, seed provenance, and pass/fail aggregation.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};

#[derive(Debug, Clone, Serialize)]
pub struct StatRow {
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    pub n_samples: usize,
    /// Target value and the tolerance it must meet, when the row is a check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl StatRow {
    /// A checked row: passes when `|estimate - target| <= tolerance`.
    pub fn check(name: impl Into<String>, estimate: f64, target: f64, tolerance: f64) -> Self {
        StatRow {
            name: name.into(),
            estimate,
            std_error: None,
            ci_low: None,
            ci_high: None,
            n_samples: 0,
            target: Some(target),
            tolerance: Some(tolerance),
            pass: (estimate - target).abs() <= tolerance,
            note: String::new(),
        }
    }

    /// A checked row that passes when `estimate <= bound`.
    pub fn check_upper(name: impl Into<String>, estimate: f64, bound: f64) -> Self {
        StatRow {
            name: name.into(),
            estimate,
            std_error: None,
            ci_low: None,
            ci_high: None,
            n_samples: 0,
            target: Some(bound),
            tolerance: None,
            pass: estimate <= bound,
            note: "upper bound".into(),
        }
    }

    /// An informational row that never fails the run.
    pub fn info(name: impl Into<String>, estimate: f64) -> Self {
        StatRow {
            name: name.into(),
            estimate,
            std_error: None,
            ci_low: None,
            ci_high: None,
            n_samples: 0,
            target: None,
            tolerance: None,
            pass: true,
            note: "informational".into(),
        }
    }

    pub fn with_summary(mut self, summary: &trap_model::stats::StatsSummary) -> Self {
        self.std_error = Some(summary.std_error);
        self.ci_low = Some(summary.ci_low);
        self.ci_high = Some(summary.ci_high);
        self.n_samples = summary.n_samples;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Constants the run resolved, echoed so every report is self-describing.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ResolvedConstants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub green_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_d_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_d_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_eps_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub constants: ResolvedConstants,
    pub rows: Vec<StatRow>,
    pub passed: bool,
    pub wall_clock_secs: f64,
    /// Files written alongside the report, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(experiment: Experiment, config: &ExperimentConfig) -> Self {
        RunReport {
            experiment: experiment.name().to_string(),
            config: config.clone(),
            constants: ResolvedConstants::default(),
            rows: Vec::new(),
            passed: true,
            wall_clock_secs: 0.0,
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, row: StatRow) {
        self.passed &= row.pass;
        self.rows.push(row);
    }

    pub fn print_summary(&self) {
        println!("experiment: {}", self.experiment);
        for row in &self.rows {
            let status = if row.pass { "pass" } else { "FAIL" };
            let target = match (row.target, row.tolerance) {
                (Some(t), Some(tol)) => format!(" target {t:.6} +- {tol:.6}"),
                (Some(t), None) => format!(" bound {t:.6}"),
                _ => String::new(),
            };
            println!("  [{status}] {:<44} {:.6}{target}", row.name, row.estimate);
        }
        println!(
            "result: {} ({:.2}s)",
            if self.passed { "all tolerances met" } else { "statistical failure" },
            self.wall_clock_secs
        );
    }

    /// Write `report.json` (and return its path) into `dir`.
    pub fn write_json(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}-report.json", self.experiment));
        std::fs::write(&path, serde_json::to_string_pretty(self).unwrap())?;
        Ok(path)
    }
}
