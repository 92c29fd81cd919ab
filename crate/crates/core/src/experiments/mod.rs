//! Scripted reproductions of the worked examples, each producing a data
//! table and a list of judged checks.

mod chebyshev;
pub mod config;
mod corphi;
mod mp_scaling;
mod renormalization;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::report::{fmt_real, write_atomic, Table};

pub use chebyshev::{chebyshev_case, conjugacy_defect, ChebyshevOptions};
pub use config::{apply_override, skeleton, ExperimentConfig, ExperimentKind};
pub use corphi::{corphi_scan, CorphiOptions};
pub use mp_scaling::{mp_preimage_diameters, mp_scaling_experiment, MpScalingOptions};
pub use renormalization::{renormalization_case, RenormalizationOptions, FEIGENBAUM_LIKE_A};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    LessThan,
    GreaterThan,
}

/// One judged quantity with the threshold it was compared against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, comparison: Comparison::LessThan, passed: value < threshold }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, comparison: Comparison::GreaterThan, passed: value > threshold }
    }

    /// A yes/no condition recorded as `value = 1` against `> 0.5`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::above(name, if ok { 1.0 } else { 0.0 }, 0.5)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub table: Table,
    pub checks: Vec<Check>,
    /// Headline numbers for the summary, in insertion order.
    pub metrics: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// Columns `check, value, comparison, threshold, passed`.
    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(["check", "value", "comparison", "threshold", "passed"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                fmt_real(c.value),
                match c.comparison {
                    Comparison::LessThan => "<".into(),
                    Comparison::GreaterThan => ">".into(),
                },
                fmt_real(c.threshold),
                c.passed.to_string(),
            ]);
        }
        t
    }

    /// Writes `<name>.csv` and `<name>_checks.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let data = dir.join(format!("{}.csv", self.name));
        let checks = dir.join(format!("{}_checks.csv", self.name));
        write_atomic(&data, self.table.to_csv_string()?.as_bytes())?;
        write_atomic(&checks, self.checks_table().to_csv_string()?.as_bytes())?;
        Ok(vec![data, checks])
    }
}

/// Runs the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentKind::Chebyshev => chebyshev_case(&ChebyshevOptions::from(cfg)),
        ExperimentKind::Renormalization => renormalization_case(&RenormalizationOptions::from(cfg)),
        ExperimentKind::MpScaling => mp_scaling_experiment(&MpScalingOptions::from(cfg)),
        ExperimentKind::CorphiScan => corphi_scan(&CorphiOptions::from(cfg)),
    }
}

/// `λ̄` of a map: quadrature when an analytic density is attached,
/// a Birkhoff average otherwise.
pub fn lambda_bar(map: &crate::dynamics::PiecewiseMap<f64>, iterates: u64, seed: u64) -> Result<f64> {
    match map.density() {
        Some(d) if d.is_analytic() => crate::dynamics::mean_log_derivative(map),
        _ => crate::dynamics::lyapunov_exponent(map, 10_000, iterates, seed),
    }
}
