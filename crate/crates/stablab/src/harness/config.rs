//! Flat key-value experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value
//! ```
//!
//! Keys are lowercase identifiers, values run to the end of the line
//! (trailing `# …` comments are stripped). Repeating a key is an error.
//! Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optimizers::{Method, StepSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    StabilityScaling,
    RiskDecomposition,
    LecamAudit,
    LemmaAudit,
    BoundsTable,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::StabilityScaling => "stability_scaling",
            Experiment::RiskDecomposition => "risk_decomposition",
            Experiment::LecamAudit => "lecam_audit",
            Experiment::LemmaAudit => "lemma_audit",
            Experiment::BoundsTable => "bounds_table",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "stability_scaling" => Experiment::StabilityScaling,
            "risk_decomposition" => Experiment::RiskDecomposition,
            "lecam_audit" => Experiment::LecamAudit,
            "lemma_audit" => Experiment::LemmaAudit,
            "bounds_table" => Experiment::BoundsTable,
            other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
        })
    }
}

/// Method names accepted in the `methods` list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodName {
    Gd,
    Sgd,
    Nag,
    NagSc,
    Hb,
    Sgld,
}

impl MethodName {
    pub fn name(&self) -> &'static str {
        match self {
            MethodName::Gd => "gd",
            MethodName::Sgd => "sgd",
            MethodName::Nag => "nag",
            MethodName::NagSc => "nag_sc",
            MethodName::Hb => "hb",
            MethodName::Sgld => "sgld",
        }
    }
}

impl FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gd" => MethodName::Gd,
            "sgd" => MethodName::Sgd,
            "nag" => MethodName::Nag,
            "nag_sc" => MethodName::NagSc,
            "hb" => MethodName::Hb,
            "sgld" => MethodName::Sgld,
            other => return Err(Error::Config(format!("unknown method '{other}'"))),
        })
    }
}

/// Loss used by the optimization experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Logistic,
    /// Rank-deficient diagonal curvature plus the labeled data term.
    Quadratic,
    /// Full-rank diagonal curvature plus the labeled data term.
    Ridge,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Quadratic => "quadratic",
            LossKind::Ridge => "ridge",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "logistic" => LossKind::Logistic,
            "quadratic" => LossKind::Quadratic,
            "ridge" => LossKind::Ridge,
            other => return Err(Error::Config(format!("unknown loss '{other}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataSource {
    Synthetic,
    /// Breast-cancer style CSV file.
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleKind {
    Fixed,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub methods: Vec<MethodName>,
    pub loss: LossKind,
    pub data: DataSource,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub reps: usize,
    pub seed: u64,
    pub eta: f64,
    pub schedule: ScheduleKind,
    pub power_exponent: f64,
    pub momentum: f64,
    /// Condition number for `nag_sc`; taken from the loss when absent.
    pub kappa: Option<f64>,
    pub temperature: f64,
    pub holdout: usize,
    pub test_n: usize,
    pub radius: f64,
    /// Start of the slope-fit window; `horizon / 10` when absent.
    pub window_lo: Option<usize>,
    /// Length of the reference GD run; `50 · horizon` when absent.
    pub reference_steps: Option<usize>,
    pub lemma_draws: usize,
    pub out: PathBuf,
}

/// Every key, in canonical order.
pub const KEYS: &[&str] = &[
    "experiment",
    "methods",
    "loss",
    "data",
    "n",
    "d",
    "horizon",
    "reps",
    "seed",
    "eta",
    "schedule",
    "power_exponent",
    "momentum",
    "kappa",
    "temperature",
    "holdout",
    "test_n",
    "radius",
    "window_lo",
    "reference_steps",
    "lemma_draws",
    "out",
];

impl ExperimentConfig {
    /// Defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            methods: vec![MethodName::Gd, MethodName::Sgd, MethodName::Nag, MethodName::Hb],
            loss: LossKind::Logistic,
            data: DataSource::Synthetic,
            n: 500,
            d: 10,
            horizon: 1000,
            reps: 50,
            seed: 0,
            eta: 0.1,
            schedule: ScheduleKind::Fixed,
            power_exponent: 0.5,
            momentum: 0.8,
            kappa: None,
            temperature: 1.0,
            holdout: 100,
            test_n: 2000,
            radius: 1.0,
            window_lo: None,
            reference_steps: None,
            lemma_draws: 100_000,
            out: PathBuf::from("out"),
        }
    }

    /// Parse config text, then apply `overrides` (later entries win).
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = parse_entries(text)?;
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        ExperimentConfig::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        let experiment: Experiment = map
            .get("experiment")
            .ok_or_else(|| Error::Config("missing key 'experiment'".into()))?
            .parse()?;
        let mut c = ExperimentConfig::defaults(experiment);
        for (key, value) in map {
            c.set(key, value)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
        }
        let optional = |v: &str| v.is_empty() || v == "auto";
        match key {
            "experiment" => self.experiment = value.parse()?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "loss" => self.loss = value.parse()?,
            "data" => {
                self.data = if value == "synthetic" { DataSource::Synthetic } else { DataSource::File(value.into()) }
            }
            "n" => self.n = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "reps" => self.reps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "schedule" => {
                self.schedule = match value {
                    "fixed" => ScheduleKind::Fixed,
                    "power" => ScheduleKind::Power,
                    other => return Err(Error::Config(format!("unknown schedule '{other}'"))),
                }
            }
            "power_exponent" => self.power_exponent = num(key, value)?,
            "momentum" => self.momentum = num(key, value)?,
            "kappa" => self.kappa = if optional(value) { None } else { Some(num(key, value)?) },
            "temperature" => self.temperature = num(key, value)?,
            "holdout" => self.holdout = num(key, value)?,
            "test_n" => self.test_n = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "window_lo" => self.window_lo = if optional(value) { None } else { Some(num(key, value)?) },
            "reference_steps" => {
                self.reference_steps = if optional(value) { None } else { Some(num(key, value)?) }
            }
            "lemma_draws" => self.lemma_draws = num(key, value)?,
            "out" => self.out = value.into(),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Checks that do not need data; method preconditions against the loss
    /// constants are checked again by the experiment before any run.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 1 || self.d < 1 {
            return bad("n and d must be at least 1".into());
        }
        if self.reps < 1 {
            return bad("reps must be at least 1".into());
        }
        if self.horizon < 2 && matches!(self.experiment, Experiment::StabilityScaling | Experiment::BoundsTable) {
            return bad("horizon must be at least 2 for slope fits".into());
        }
        if self.holdout < 1 || self.test_n < 1 {
            return bad("holdout and test_n must be at least 1".into());
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if self.methods.is_empty()
            && matches!(
                self.experiment,
                Experiment::StabilityScaling | Experiment::RiskDecomposition | Experiment::BoundsTable
            )
        {
            return bad("methods list is empty".into());
        }
        if let Some(w) = self.window_lo {
            if w < 1 || w >= self.horizon {
                return bad(format!("window_lo must lie in [1, horizon), got {w}"));
            }
        }
        self.step_schedule().validate()?;
        for m in &self.methods {
            self.method(*m, f64::INFINITY)?;
        }
        Ok(())
    }

    pub fn step_schedule(&self) -> StepSchedule {
        match self.schedule {
            ScheduleKind::Fixed => StepSchedule::Fixed { eta0: self.eta },
            ScheduleKind::Power => StepSchedule::Power { eta0: self.eta, exponent: self.power_exponent },
        }
    }

    /// Concrete optimizer for `name`; `loss_kappa` fills in a missing `κ`.
    pub fn method(&self, name: MethodName, loss_kappa: f64) -> Result<Method> {
        Ok(match name {
            MethodName::Gd => Method::Gd,
            MethodName::Sgd => Method::Sgd,
            MethodName::Nag => Method::NagConvex,
            MethodName::NagSc => {
                let kappa = self.kappa.unwrap_or(loss_kappa);
                if kappa.is_finite() && kappa < 1.0 {
                    return Err(Error::Config(format!("kappa must be at least 1, got {kappa}")));
                }
                Method::NagStronglyConvex { kappa }
            }
            MethodName::Hb => {
                if !(0.0..1.0).contains(&self.momentum) {
                    return Err(Error::Config(format!("momentum must lie in [0, 1), got {}", self.momentum)));
                }
                Method::HeavyBall { momentum: self.momentum }
            }
            MethodName::Sgld => {
                if self.temperature.is_nan() || self.temperature <= 0.0 {
                    return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
                }
                Method::Sgld { temperature: self.temperature }
            }
        })
    }

    pub fn window_lo(&self) -> usize {
        self.window_lo.unwrap_or((self.horizon / 10).max(1))
    }

    pub fn reference_steps(&self) -> usize {
        self.reference_steps.unwrap_or(50 * self.horizon)
    }

    /// Canonical `key = value` text; parsing it gives back this config.
    pub fn canonical(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut s = String::new();
        for key in KEYS {
            let value = match *key {
                "experiment" => self.experiment.name().to_string(),
                "methods" => self.methods.iter().map(MethodName::name).collect::<Vec<_>>().join(","),
                "loss" => self.loss.name().to_string(),
                "data" => match &self.data {
                    DataSource::Synthetic => "synthetic".into(),
                    DataSource::File(p) => p.display().to_string(),
                },
                "n" => self.n.to_string(),
                "d" => self.d.to_string(),
                "horizon" => self.horizon.to_string(),
                "reps" => self.reps.to_string(),
                "seed" => self.seed.to_string(),
                "eta" => self.eta.to_string(),
                "schedule" => match self.schedule {
                    ScheduleKind::Fixed => "fixed".into(),
                    ScheduleKind::Power => "power".into(),
                },
                "power_exponent" => self.power_exponent.to_string(),
                "momentum" => self.momentum.to_string(),
                "kappa" => opt(self.kappa.map(|v| v.to_string())),
                "temperature" => self.temperature.to_string(),
                "holdout" => self.holdout.to_string(),
                "test_n" => self.test_n.to_string(),
                "radius" => self.radius.to_string(),
                "window_lo" => opt(self.window_lo.map(|v| v.to_string())),
                "reference_steps" => opt(self.reference_steps.map(|v| v.to_string())),
                "lemma_draws" => self.lemma_draws.to_string(),
                "out" => self.out.display().to_string(),
                _ => unreachable!("every key is listed"),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    /// SHA-256 of the canonical text, excluding the output directory, as
    /// 16 hex digits.
    pub fn hash(&self) -> String {
        let text: String = self.canonical().lines().filter(|l| !l.starts_with("out =")).map(|l| format!("{l}\n")).collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Split config text into key-value entries.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected 'key = value', got '{line}'") })?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
            return Err(Error::Parse { line: line_no, msg: format!("invalid key '{key}'") });
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate key '{key}'") });
        }
    }
    Ok(map)
}

/// Split a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override '{s}' is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_applies_overrides() {
        let text = "# demo\nexperiment = stability_scaling\nmethods = gd, nag # trailing\nreps = 3\n\n";
        let c = ExperimentConfig::parse(text, &[("reps".into(), "7".into())]).unwrap();
        assert_eq!(c.methods, vec![MethodName::Gd, MethodName::Nag]);
        assert_eq!(c.reps, 7);
        assert_eq!(c.horizon, 1000);
    }

    #[test]
    fn canonical_round_trip_and_hash() {
        let text = "experiment = risk_decomposition\nloss = ridge\nkappa = 3\nwindow_lo = 20\n";
        let c = ExperimentConfig::parse(text, &[]).unwrap();
        let again = ExperimentConfig::parse(&c.canonical(), &[]).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 16);
        let other = ExperimentConfig::parse(text, &[("seed".into(), "1".into())]).unwrap();
        assert_ne!(c.hash(), other.hash());
        let moved = ExperimentConfig::parse(text, &[("out".into(), "elsewhere".into())]).unwrap();
        assert_eq!(c.hash(), moved.hash());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_entries("experiment"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_entries("a = 1\na = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(ExperimentConfig::parse("experiment = nope", &[]).is_err());
        assert!(ExperimentConfig::parse("experiment = lecam_audit\ncolour = red", &[]).is_err());
        assert!(ExperimentConfig::parse("experiment = lecam_audit\nreps = 0", &[]).is_err());
        assert!(ExperimentConfig::parse("experiment = lecam_audit\nmomentum = 1.0\nmethods = hb", &[]).is_err());
        assert!(ExperimentConfig::parse("experiment = lecam_audit", &[]).is_ok());
    }
}
