//! Experiment configuration and its file format.
//!
//! A config file is either a JSON object or `key = value` lines. In the
//! line form a value is read as JSON when it parses as JSON, a
//! comma-separated value becomes a list, and anything else is a string.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lowrank_core::solvers::SolverOptions;
use lowrank_core::{Error, Result, RngSeed};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Default p-grid resolution.
pub const DEFAULT_GRID_STEP: f64 = 0.02;
/// Default number of successes out of [`DEFAULT_TRIALS`] required at a grid
/// point.
pub const DEFAULT_QUOTA: usize = 19;
pub const DEFAULT_TRIALS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Nuclear-norm completion of block-diagonal PSD matrices.
    Complete,
    /// Trimmed rank-r SVD projection against the error bound.
    SvdProject,
    /// Completion of clustering affinities with a side basis.
    Structured,
    /// Low-rank plus sparse split of planted-clique instances.
    Decompose,
    /// Golfing certificate checks on random low-rank instances.
    Certify,
    /// Minimal p per rank for nuclear-norm completion.
    Phase,
    /// Exact clique recovery rates.
    Clique,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Complete,
        Experiment::SvdProject,
        Experiment::Structured,
        Experiment::Decompose,
        Experiment::Certify,
        Experiment::Phase,
        Experiment::Clique,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::Complete => "complete",
            Experiment::SvdProject => "svd-project",
            Experiment::Structured => "structured",
            Experiment::Decompose => "decompose",
            Experiment::Certify => "certify",
            Experiment::Phase => "phase",
            Experiment::Clique => "clique",
        }
    }

    pub(crate) fn index(self) -> u64 {
        Experiment::ALL.iter().position(|&e| e == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    /// Ranks; for `clique` and `decompose` these are clique sizes, for
    /// `structured` the number of equal clusters.
    pub ranks: Vec<usize>,
    /// Sampling probabilities. `phase` builds its own grid from `grid_step`.
    pub ps: Vec<f64>,
    pub trials: usize,
    pub base_seed: RngSeed,
    pub solver: SolverOptions,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub grid_step: f64,
    pub success_quota: usize,
    /// Scan the whole p grid instead of bisecting it.
    pub linear_scan: bool,
    /// RPCA weight; `1/√n` when unset.
    pub lambda: Option<f64>,
    /// Extra random side directions on top of the cluster indicators.
    pub side_extra: usize,
    /// Golfing batches; `ceil(20 ln n)` when unset.
    pub k0: Option<usize>,
    /// Constant `c′` of the SVD-projection bound.
    pub svd_constant: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Complete,
            n: 240,
            ranks: vec![2],
            ps: vec![0.5],
            trials: DEFAULT_TRIALS,
            base_seed: RngSeed(0),
            solver: SolverOptions::default(),
            out: None,
            workers: 1,
            grid_step: DEFAULT_GRID_STEP,
            success_quota: DEFAULT_QUOTA,
            linear_scan: false,
            lambda: None,
            side_extra: 0,
            k0: None,
            svd_constant: 10.0,
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.ranks.is_empty() {
            return bad("the rank grid is empty".into());
        }
        if self.experiment != Experiment::Phase && self.ps.is_empty() {
            return bad("the probability grid is empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if let Some(&r) = self.ranks.iter().find(|&&r| r == 0 || r > self.n) {
            return bad(format!("rank {r} must lie in 1..={}", self.n));
        }
        if let Some(p) = self.ps.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p <= 1.0)) {
            return bad(format!("probability {p} must lie in (0, 1]"));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return bad(format!("grid step {} must lie in (0, 1]", self.grid_step));
        }
        if self.success_quota == 0 || self.success_quota > self.trials {
            return bad(format!(
                "success quota {} must lie in 1..={}",
                self.success_quota, self.trials
            ));
        }
        if self.k0 == Some(0) {
            return bad("k0 must be at least 1".into());
        }
        if !(self.svd_constant.is_finite() && self.svd_constant > 0.0) {
            return bad("the bound constant must be positive".into());
        }
        if self.experiment == Experiment::Phase {
            if let Some(r) = self.ranks.windows(2).find(|w| w[0] >= w[1]) {
                return bad(format!("phase ranks must increase strictly, got {} then {}", r[0], r[1]));
            }
        }
        if matches!(
            self.experiment,
            Experiment::Phase | Experiment::SvdProject | Experiment::Complete
        ) {
            if let Some(r) = self.ranks.iter().find(|&&r| !self.n.is_multiple_of(r)) {
                return bad(format!("block-diagonal instances need r | n, got r = {r}, n = {}", self.n));
            }
        }
        if self.experiment == Experiment::Structured {
            if let Some(r) = self.ranks.iter().find(|&&r| !self.n.is_multiple_of(r)) {
                return bad(format!("{r} equal clusters do not divide n = {}", self.n));
            }
        }
        self.solver.validate()
    }

    /// `step, 2·step, …` up to and including 1.
    pub fn p_grid(&self) -> Vec<f64> {
        let count = (1.0 / self.grid_step - 1e-9).ceil() as usize;
        let mut grid: Vec<f64> = (1..count)
            .map(|k| (k as f64 * self.grid_step * 1e12).round() / 1e12)
            .collect();
        grid.push(1.0);
        grid
    }

    /// Applies the fields present in `file`.
    pub fn apply(&mut self, file: &ConfigFile) -> Result<()> {
        if let Some(e) = &file.experiment {
            self.experiment = e.parse()?;
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = file.$field.clone() { $target = v; })*
            };
        }
        set!(
            n => self.n,
            rank => self.ranks,
            p => self.ps,
            trials => self.trials,
            workers => self.workers,
            grid_step => self.grid_step,
            quota => self.success_quota,
            linear_scan => self.linear_scan,
            side_extra => self.side_extra,
            svd_constant => self.svd_constant,
            max_iters => self.solver.max_iters,
            tol => self.solver.rel_tol,
        );
        if let Some(s) = file.seed {
            self.base_seed = RngSeed(s);
        }
        if let Some(out) = &file.out {
            self.out = Some(out.clone());
        }
        if file.lambda.is_some() {
            self.lambda = file.lambda;
        }
        if file.k0.is_some() {
            self.k0 = file.k0;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<OneOrMany<T>>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// Settings read from a config file. Every field is optional; `rank` and
/// `p` take a single value or a list.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub n: Option<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub rank: Option<Vec<usize>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub p: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub grid_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub quota: Option<usize>,
    pub linear_scan: Option<bool>,
    pub lambda: Option<f64>,
    pub side_extra: Option<usize>,
    pub k0: Option<usize>,
    pub svd_constant: Option<f64>,
    pub max_iters: Option<usize>,
}

fn line_value(raw: &str) -> Value {
    let raw = raw.trim();
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(line_value).collect());
    }
    Value::String(raw.to_string())
}

/// Parses a JSON object or `key = value` lines (`#` starts a comment line).
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let trimmed = text.trim_start();
    let value = if trimmed.starts_with('{') {
        serde_json::from_str::<Value>(trimmed).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        let mut map = Map::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: k + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim().replace('-', "_");
            if map.insert(key.clone(), line_value(raw)).is_some() {
                return Err(Error::Parse {
                    line: k + 1,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Value::Object(map)
    };
    serde_json::from_value(value).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = "# sweep\nexperiment = phase\nn = 60\nrank = 2, 4\np=0.5\nseed=7\nlinear-scan = true\n";
        let json = r#"{"experiment": "phase", "n": 60, "rank": [2, 4], "p": 0.5, "seed": 7, "linear_scan": true}"#;
        let a = parse_config(kv).unwrap();
        assert_eq!(a, parse_config(json).unwrap());
        assert_eq!(a.rank, Some(vec![2, 4]));
        assert_eq!(a.p, Some(vec![0.5]));
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_errors() {
        assert!(parse_config("colour = red\n").is_err());
        assert!(parse_config("n 5\n").is_err());
        assert!(parse_config("n = 5\nn = 6\n").is_err());
        assert!(parse_config("n = -1\n").is_err());
        assert!(parse_config("{\"n\": ").is_err());
    }

    #[test]
    fn apply_overrides_only_present_fields() {
        let mut c = ExperimentConfig::default();
        c.apply(&parse_config("trials = 3\ntol = 1e-6\n").unwrap()).unwrap();
        assert_eq!(c.trials, 3);
        assert_eq!(c.solver.rel_tol, 1e-6);
        assert_eq!(c.n, 240);
    }

    #[test]
    fn p_grid_ends_at_one() {
        let c = ExperimentConfig::default();
        let g = c.p_grid();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.02);
        assert_eq!(g[48], 0.98);
        assert_eq!(*g.last().unwrap(), 1.0);
        let coarse = ExperimentConfig { grid_step: 0.3, ..c };
        assert_eq!(coarse.p_grid(), vec![0.3, 0.6, 0.9, 1.0]);
        let one = ExperimentConfig { grid_step: 1.0, ..ExperimentConfig::default() };
        assert_eq!(one.p_grid(), vec![1.0]);
    }

    #[test]
    fn validation_catches_bad_grids() {
        let mut c = ExperimentConfig::for_experiment(Experiment::Phase);
        c.ranks = vec![4, 2];
        assert!(c.validate().is_err());
        c.ranks = vec![7];
        assert!(c.validate().is_err());
        c.ranks = vec![2, 4];
        assert!(c.validate().is_ok());
        c.success_quota = 21;
        assert!(c.validate().is_err());
    }
}
