//! JSON experiment configuration with whole-schema validation.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Chebyshev,
    Renormalization,
    MpScaling,
    CorphiScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] =
        [ExperimentKind::Chebyshev, ExperimentKind::Renormalization, ExperimentKind::MpScaling, ExperimentKind::CorphiScan];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Chebyshev => "chebyshev",
            ExperimentKind::Renormalization => "renormalization",
            ExperimentKind::MpScaling => "mp_scaling",
            ExperimentKind::CorphiScan => "corphi_scan",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(vec![format!("unknown experiment `{s}` (expected one of chebyshev, renormalization, mp_scaling, corphi_scan)")]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Str,
    Num,
    Int,
    NumList,
    NumPair,
}

impl Ty {
    fn describe(self) -> &'static str {
        match self {
            Ty::Str => "a string",
            Ty::Num => "a number",
            Ty::Int => "a non-negative integer",
            Ty::NumList => "an array of numbers",
            Ty::NumPair => "an array of two numbers",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        match self {
            Ty::Str => v.is_string(),
            Ty::Num => v.is_number(),
            Ty::Int => v.is_u64(),
            Ty::NumList => v.as_array().is_some_and(|a| a.iter().all(Value::is_number)),
            Ty::NumPair => v.as_array().is_some_and(|a| a.len() == 2 && a.iter().all(Value::is_number)),
        }
    }
}

/// Every accepted key with its type.
const SCHEMA: &[(&str, Ty)] = &[
    ("experiment", Ty::Str),
    ("output", Ty::Str),
    ("cocycle", Ty::Str),
    ("seed", Ty::Int),
    ("grid_size", Ty::Int),
    ("tol", Ty::Num),
    ("deviation_tol", Ty::Num),
    ("max_period", Ty::Int),
    ("anchor_length", Ty::Int),
    ("iterates", Ty::Int),
    ("a_values", Ty::NumList),
    ("a_range", Ty::NumPair),
    ("steps", Ty::Int),
    ("p", Ty::Num),
    ("alphas", Ty::NumList),
    ("depth", Ty::Int),
];

/// Validated experiment parameters; absent keys take the listed defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Output directory override.
    pub output: Option<String>,
    /// Only `log_derivative` (`log|f′| − λ̄`) is defined.
    pub cocycle: String,
    pub seed: u64,
    /// Grid points for reconstruction (128).
    pub grid_size: usize,
    /// Obstruction residual tolerance (1e-8).
    pub tol: f64,
    /// Tolerance for reconstructed-function comparisons (1e-4).
    pub deviation_tol: f64,
    pub max_period: usize,
    pub anchor_length: usize,
    /// Birkhoff iterates for `λ̄`.
    pub iterates: u64,
    pub a_values: Vec<f64>,
    pub a_range: (f64, f64),
    pub steps: usize,
    pub p: f64,
    /// Defaults to `p/(1+p) ± 0.1`.
    pub alphas: Vec<f64>,
    pub depth: usize,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let p = 1.0;
        Self {
            experiment,
            output: None,
            cocycle: "log_derivative".into(),
            seed: 0,
            grid_size: 128,
            tol: 1e-8,
            deviation_tol: 1e-4,
            max_period: 8,
            anchor_length: 400,
            iterates: 2_000_000,
            a_values: vec![2.0, 1.54368901, 1.2, 1.6, 1.9],
            a_range: (1.45, 2.0),
            steps: 12,
            p,
            alphas: default_alphas(p),
            depth: 10_000,
        }
    }

    /// Parses and validates a JSON document, reporting every problem at once.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("invalid JSON: {e}")]))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let Some(obj) = value.as_object() else {
            return Err(Error::Config(vec!["config must be a JSON object".into()]));
        };
        let mut errors = Vec::new();
        for (k, v) in obj {
            match SCHEMA.iter().find(|(name, _)| name == k) {
                None => errors.push(format!("unknown key `{k}`")),
                Some((_, ty)) if !ty.accepts(v) => errors.push(format!("`{k}` must be {}", ty.describe())),
                _ => {}
            }
        }
        let experiment = match obj.get("experiment").and_then(Value::as_str) {
            Some(s) => match s.parse::<ExperimentKind>() {
                Ok(k) => Some(k),
                Err(Error::Config(e)) => {
                    errors.extend(e);
                    None
                }
                Err(e) => return Err(e),
            },
            None => {
                if !obj.contains_key("experiment") {
                    errors.push("missing key `experiment`".into());
                }
                None
            }
        };
        let Some(experiment) = experiment else {
            return Err(Error::Config(errors));
        };
        let mut cfg = Self::defaults(experiment);
        let good = |k: &str| obj.get(k).filter(|v| SCHEMA.iter().any(|(n, t)| *n == k && t.accepts(v)));
        let num = |k: &str| good(k).and_then(Value::as_f64);
        let int = |k: &str| good(k).and_then(Value::as_u64);
        let list = |k: &str| good(k).and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<f64>>());

        if let Some(s) = good("output").and_then(Value::as_str) {
            cfg.output = Some(s.to_string());
        }
        if let Some(s) = good("cocycle").and_then(Value::as_str) {
            cfg.cocycle = s.to_string();
        }
        if let Some(v) = int("seed") {
            cfg.seed = v;
        }
        if let Some(v) = int("grid_size") {
            cfg.grid_size = v as usize;
        }
        if let Some(v) = num("tol") {
            cfg.tol = v;
        }
        if let Some(v) = num("deviation_tol") {
            cfg.deviation_tol = v;
        }
        if let Some(v) = int("max_period") {
            cfg.max_period = v as usize;
        }
        if let Some(v) = int("anchor_length") {
            cfg.anchor_length = v as usize;
        }
        if let Some(v) = int("iterates") {
            cfg.iterates = v;
        }
        if let Some(v) = list("a_values") {
            cfg.a_values = v;
        }
        if let Some(v) = list("a_range") {
            cfg.a_range = (v[0], v[1]);
        }
        if let Some(v) = int("steps") {
            cfg.steps = v as usize;
        }
        if let Some(v) = num("p") {
            cfg.p = v;
            cfg.alphas = default_alphas(v);
        }
        if let Some(v) = list("alphas") {
            cfg.alphas = v;
        }
        if let Some(v) = int("depth") {
            cfg.depth = v as usize;
        }
        cfg.check_ranges(&mut errors);
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    fn check_ranges(&self, errors: &mut Vec<String>) {
        if self.cocycle != "log_derivative" {
            errors.push(format!("cocycle `{}` is not supported (expected log_derivative)", self.cocycle));
        }
        if !(self.tol > 0.0) {
            errors.push("`tol` must be positive".into());
        }
        if !(self.deviation_tol > 0.0) {
            errors.push("`deviation_tol` must be positive".into());
        }
        if self.grid_size < 2 {
            errors.push("`grid_size` must be at least 2".into());
        }
        if self.max_period == 0 || self.max_period > 12 {
            errors.push("`max_period` must be in 1..=12".into());
        }
        if self.anchor_length < 20 {
            errors.push("`anchor_length` must be at least 20".into());
        }
        if self.iterates == 0 {
            errors.push("`iterates` must be positive".into());
        }
        if self.a_values.is_empty() {
            errors.push("`a_values` must not be empty".into());
        }
        for &a in &self.a_values {
            if !(a > 1.0 && a <= 2.0) {
                errors.push(format!("a = {a} in `a_values` is outside (1, 2]"));
            }
        }
        let (lo, hi) = self.a_range;
        if !(lo > 1.4 && lo <= hi && hi <= 2.0) {
            errors.push(format!("`a_range` [{lo}, {hi}] must lie in (1.4, 2] with lo ≤ hi"));
        }
        if self.steps == 0 {
            errors.push("`steps` must be positive".into());
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            errors.push("`p` must be positive".into());
        }
        for &al in &self.alphas {
            if !(al > 0.0 && al <= 1.0) {
                errors.push(format!("alpha = {al} in `alphas` is outside (0, 1]"));
            }
        }
        if self.depth < 100 {
            errors.push("`depth` must be at least 100".into());
        }
    }
}

fn default_alphas(p: f64) -> Vec<f64> {
    let t = p / (1.0 + p);
    vec![(t + 0.1).min(1.0), (t - 0.1).max(0.01)]
}

/// Applies a `key=value` override to a raw config object. The value is
/// parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(config: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .filter(|(k, _)| !k.trim().is_empty())
        .ok_or_else(|| Error::Config(vec![format!("malformed override `{assignment}` (expected key=value)")]))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let obj = config.as_object_mut().ok_or_else(|| Error::Config(vec!["config must be a JSON object".into()]))?;
    obj.insert(key.trim().to_string(), value);
    Ok(())
}

/// An empty config object naming the experiment.
pub fn skeleton(kind: ExperimentKind) -> Value {
    let mut m = Map::new();
    m.insert("experiment".into(), Value::String(kind.as_str().into()));
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "mp_scaling", "p": 0.5}"#).unwrap();
        assert_eq!(c.experiment, ExperimentKind::MpScaling);
        assert!((c.alphas[0] - (1.0 / 3.0 + 0.1)).abs() < 1e-12);
        let mut v = skeleton(ExperimentKind::Chebyshev);
        apply_override(&mut v, "grid_size=64").unwrap();
        apply_override(&mut v, "grid_size=32").unwrap();
        assert_eq!(ExperimentConfig::from_value(&v).unwrap().grid_size, 32);
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn all_errors_reported_together() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "chebyshev", "bogus": 1, "grid_size": "x", "tol": -1, "a_values": [0.5]}"#)
            .unwrap_err();
        let Error::Config(msgs) = err else { panic!() };
        assert_eq!(msgs.len(), 4, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("bogus")));
        assert!(msgs.iter().any(|m| m.contains("grid_size")));
        assert!(msgs.iter().any(|m| m.contains("tol")));
        assert!(msgs.iter().any(|m| m.contains("a_values")));
    }

    #[test]
    fn experiment_name_required() {
        assert!(matches!(ExperimentConfig::from_json("{}"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_json(r#"{"experiment": "nope", "x": 1}"#), Err(Error::Config(m)) if m.len() == 2));
    }
}
