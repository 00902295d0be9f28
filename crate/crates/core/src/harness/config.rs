use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::env::NoiseMode;
use crate::error::{Error, Result};
use crate::model::{DistributionSpec, FunctionalSpec};
use crate::offline::ScheduleMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Offline,
    Online,
}

impl Mode {
    pub fn index(self) -> u64 {
        match self {
            Mode::Offline => 0,
            Mode::Online => 1,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Offline => "offline",
            Mode::Online => "online",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "offline" => Ok(Mode::Offline),
            "online" => Ok(Mode::Online),
            other => Err(Error::config("modes", format!("unknown mode `{other}`"))),
        }
    }
}

/// An epsilon sweep with Monte Carlo repetition.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub functional: FunctionalSpec,
    pub distribution: DistributionSpec,
    /// Strictly decreasing.
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub modes: Vec<Mode>,
    pub schedule_mode: ScheduleMode,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub noise_sd: f64,
    pub noise_mode: NoiseMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            functional: FunctionalSpec::mean(),
            distribution: DistributionSpec::uniform(0.0, 1.0).expect("valid"),
            eps_grid: vec![0.1],
            delta: 0.1,
            trials: 1,
            modes: vec![Mode::Offline, Mode::Online],
            schedule_mode: ScheduleMode::Theoretical,
            seed: 0,
            output_path: None,
            noise_sd: 1.0,
            noise_mode: NoiseMode::Exact,
        }
    }
}

fn number<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(field, format!("cannot parse `{}`", value.trim())))
}

fn list<T>(field: &str, value: &str, each: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| each(s).map_err(|e| Error::config(field, e.to_string())))
        .collect()
}

impl SweepConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "functional" => self.functional = value.parse()?,
            "distribution" => self.distribution = value.parse()?,
            "eps_grid" => self.eps_grid = list("eps_grid", value, |s| number("eps_grid", s))?,
            "delta" => self.delta = number("delta", value)?,
            "trials" => self.trials = number("trials", value)?,
            "modes" => self.modes = list("modes", value, str::parse)?,
            "schedule_mode" => self.schedule_mode = value.parse()?,
            "seed" => self.seed = number("seed", value)?,
            "output_path" => self.output_path = Some(PathBuf::from(value)),
            "noise_sd" => self.noise_sd = number("noise_sd", value)?,
            "noise_mode" => {
                self.noise_mode = match value {
                    "exact" => NoiseMode::Exact,
                    "aggregated" => NoiseMode::Aggregated,
                    other => return Err(Error::config("noise_mode", format!("unknown mode `{other}`"))),
                }
            }
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    /// Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_grid.is_empty() {
            return Err(Error::config("eps_grid", "must list at least one value"));
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::config("eps_grid", "values must be positive"));
        }
        if self.eps_grid.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::config("eps_grid", "must be strictly decreasing"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(Error::config("modes", "must list offline and/or online"));
        }
        let mut seen = self.modes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.modes.len() {
            return Err(Error::config("modes", "duplicate mode"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::config("noise_sd", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Every field in its textual form, keyed by name.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: Vec<String>| v.join(",");
        let mut m = BTreeMap::new();
        m.insert("functional".into(), self.functional.to_string());
        m.insert("distribution".into(), self.distribution.to_string());
        m.insert(
            "eps_grid".into(),
            join(self.eps_grid.iter().map(|e| e.to_string()).collect()),
        );
        m.insert("delta".into(), self.delta.to_string());
        m.insert("trials".into(), self.trials.to_string());
        m.insert("modes".into(), join(self.modes.iter().map(|x| x.to_string()).collect()));
        m.insert(
            "schedule_mode".into(),
            match self.schedule_mode {
                ScheduleMode::Theoretical => "theoretical",
                ScheduleMode::UnitConstant => "unit_constant",
            }
            .into(),
        );
        m.insert("seed".into(), self.seed.to_string());
        if let Some(p) = &self.output_path {
            m.insert("output_path".into(), p.display().to_string());
        }
        m.insert("noise_sd".into(), self.noise_sd.to_string());
        m.insert(
            "noise_mode".into(),
            match self.noise_mode {
                NoiseMode::Exact => "exact",
                NoiseMode::Aggregated => "aggregated",
            }
            .into(),
        );
        m
    }
}
