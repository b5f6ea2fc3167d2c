//! Minimal sampling probability per rank for exact completion of
//! block-diagonal PSD matrices.

use lowrank_core::instances::{block_diagonal_subspaces, IncoherenceReport};
use lowrank_core::Result;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::experiments::run_jobs;
use crate::records::TrialRecord;

/// Quota decision at one `(r, p)` grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub r: usize,
    pub p: f64,
    pub successes: usize,
    /// Trials actually run; fewer than configured once the decision is
    /// settled.
    pub trials_run: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCurve {
    pub n: usize,
    pub ranks: Vec<usize>,
    /// Smallest grid `p` meeting the quota; `None` when even `p = 1` fails.
    pub p_star: Vec<Option<f64>>,
    pub mu0: Vec<f64>,
    /// `½·μ0·r·ln(2n)/n` per rank.
    pub reference: Vec<f64>,
    pub trials_per_point: usize,
    pub success_quota: usize,
    pub grid_step: f64,
    pub linear_scan: bool,
    pub cells: Vec<CellSummary>,
}

impl PhaseCurve {
    pub fn p_star_of(&self, r: usize) -> Option<f64> {
        self.ranks
            .iter()
            .position(|&x| x == r)
            .and_then(|i| self.p_star[i])
    }
}

/// `½·μ0·r·ln(2n)/n`.
pub fn reference_line(mu0: f64, r: usize, n: usize) -> f64 {
    0.5 * mu0 * r as f64 * (2.0 * n as f64).ln() / n as f64
}

pub fn phase_transition(config: &ExperimentConfig) -> Result<PhaseCurve> {
    Ok(phase_transition_with_records(config)?.0)
}

/// Bisection over the p grid assumes the success rate is nondecreasing in
/// `p`; `linear_scan` evaluates every grid point from the bottom instead.
pub fn phase_transition_with_records(
    config: &ExperimentConfig,
) -> Result<(PhaseCurve, Vec<TrialRecord>)> {
    let config = ExperimentConfig {
        experiment: Experiment::Phase,
        ..config.clone()
    };
    config.validate()?;
    let grid = config.p_grid();
    let mut records = Vec::new();
    let mut cells = Vec::new();
    let mut p_star = Vec::new();
    let mut mu0s = Vec::new();
    let mut reference = Vec::new();
    for &r in &config.ranks {
        let mu0 = IncoherenceReport::of(&block_diagonal_subspaces(config.n, r)?).mu0;
        mu0s.push(mu0);
        reference.push(reference_line(mu0, r, config.n));
        let mut cell = |k: usize| -> Result<bool> {
            let (summary, recs) = evaluate_cell(&config, r, grid[k])?;
            records.extend(recs);
            let pass = summary.pass;
            cells.push(summary);
            Ok(pass)
        };
        let found = if config.linear_scan {
            let mut found = None;
            for k in 0..grid.len() {
                if cell(k)? {
                    found = Some(k);
                    break;
                }
            }
            found
        } else if !cell(grid.len() - 1)? {
            None
        } else {
            // invariant: grid[hi] passes, everything at or below lo fails
            let (mut lo, mut hi) = (None::<usize>, grid.len() - 1);
            while hi > lo.map_or(0, |l| l + 1) {
                let mid = (lo.map_or(0, |l| l + 1) + hi) / 2;
                if cell(mid)? {
                    hi = mid;
                } else {
                    lo = Some(mid);
                }
            }
            Some(hi)
        };
        p_star.push(found.map(|k| grid[k]));
    }
    let curve = PhaseCurve {
        n: config.n,
        ranks: config.ranks.clone(),
        p_star,
        mu0: mu0s,
        reference,
        trials_per_point: config.trials,
        success_quota: config.success_quota,
        grid_step: config.grid_step,
        linear_scan: config.linear_scan,
        cells,
    };
    Ok((curve, records))
}

/// Runs trials in rounds of `workers` until the quota is met or out of
/// reach. The verdict equals the one from running every trial.
pub fn evaluate_cell(
    config: &ExperimentConfig,
    r: usize,
    p: f64,
) -> Result<(CellSummary, Vec<TrialRecord>)> {
    let quota = config.success_quota;
    let mut records = Vec::new();
    let mut successes = 0;
    let mut next = 0;
    while next < config.trials {
        let failures = records.len() - successes;
        if successes >= quota || failures > config.trials - quota {
            break;
        }
        let end = (next + config.workers).min(config.trials);
        let jobs: Vec<_> = (next..end).map(|t| (r, p, t)).collect();
        for outcome in run_jobs(config, &jobs)? {
            successes += usize::from(outcome.record.success);
            records.push(outcome.record);
        }
        next = end;
    }
    Ok((
        CellSummary {
            r,
            p,
            successes,
            trials_run: records.len(),
            pass: successes >= quota,
        },
        records,
    ))
}
