//! Monte Carlo first-return statistics and the empirical classifier built on
//! them.
//!
//! A return to level `k` is the first time `n >= 1` with `X_n = k` (holding
//! at `k` for one step counts as a return at `n = 1`). Each trial uses the
//! stream `hash(seed, trial)`, and every rung of the horizon ladder is read
//! from the same set of paths.

use rayon::prelude::*;

use super::irreducible::check_irreducible;
use super::report::{ChainClass, ChainKind, EmpiricalEvidence, Evidence, RungStats};
use crate::error::{Error, Result};
use crate::evolve::walker_from_seed;
use crate::rng::derive_seed;
use crate::transition::TransitionMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnStats {
    pub origin: usize,
    pub trials: u64,
    pub horizon: u64,
    pub seed: u64,
    pub return_count: u64,
    /// Paths that left the truncated window before returning.
    pub edge_count: u64,
    /// First-return times of the returning paths, ascending.
    pub return_times: Vec<u64>,
}

impl ReturnStats {
    pub fn return_probability(&self) -> f64 {
        self.return_count as f64 / self.trials as f64
    }

    pub fn mean_return_time(&self) -> Option<f64> {
        mean(&self.return_times)
    }

    /// Returns and mean return time counting only returns by `horizon`.
    pub fn truncated_at(&self, horizon: u64) -> (u64, Option<f64>) {
        let cut = self.return_times.partition_point(|&t| t <= horizon);
        (cut as u64, mean(&self.return_times[..cut]))
    }
}

fn mean(xs: &[u64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().map(|&t| t as f64).sum::<f64>() / xs.len() as f64)
}

enum Outcome {
    Returned(u64),
    Edge,
    Survived,
}

/// Runs `trials` independent paths from level `k` for at most `horizon`
/// steps each and records first-return times.
pub fn estimate_return_stats(
    t: &TransitionMatrix,
    k: usize,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<ReturnStats> {
    if k == 0 || k > t.n() {
        return Err(Error::InvalidParameter(format!("origin {k} outside 1..={}", t.n())));
    }
    if trials == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("trials and horizon must be at least 1".into()));
    }
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut walker = walker_from_seed(t, k, derive_seed(seed, trial))
                .expect("origin checked above");
            for step in 1..=horizon {
                match walker.step() {
                    None => return Outcome::Edge,
                    Some(level) if level == k => return Outcome::Returned(step),
                    Some(_) => {}
                }
            }
            Outcome::Survived
        })
        .collect();

    let mut return_times = Vec::new();
    let mut edge_count = 0;
    for o in outcomes {
        match o {
            Outcome::Returned(s) => return_times.push(s),
            Outcome::Edge => edge_count += 1,
            Outcome::Survived => {}
        }
    }
    return_times.sort_unstable();
    Ok(ReturnStats {
        origin: k,
        trials,
        horizon,
        seed,
        return_count: return_times.len() as u64,
        edge_count,
        return_times,
    })
}

/// Sample sizes and decision thresholds for [`classify_empirical`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationBudget {
    pub trials: u64,
    /// Increasing horizon ladder; at least two rungs.
    pub horizons: Vec<u64>,
    pub seed: u64,
    /// Return probabilities below `1 - eps_p` count as escape.
    pub eps_p: f64,
    /// Minimum growth of the mean return time between the top two rungs
    /// for a null-recurrent verdict.
    pub growth_factor: f64,
    /// Maximum relative change of the mean return time between the top two
    /// rungs for a positive-recurrent verdict.
    pub stable_rel_change: f64,
    /// Normal quantile for the Wilson intervals.
    pub z: f64,
    /// Window used when a classifier has to build the matrix itself.
    pub truncation: usize,
}

impl Default for EstimationBudget {
    fn default() -> Self {
        Self {
            trials: 10_000,
            horizons: vec![1_000, 10_000, 100_000],
            seed: 0x5eed,
            eps_p: 0.02,
            growth_factor: 1.5,
            stable_rel_change: 0.05,
            z: 3.0,
            truncation: 4096,
        }
    }
}

fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Classifies the chain from return statistics at level `k` across the
/// horizon ladder of `budget`.
///
/// * Transient: the return probability at the top two rungs has plateaued
///   (intervals overlap) and both intervals lie below `1 - eps_p`.
/// * Null-recurrent: return probability at least `1 - eps_p` and the mean
///   return time grows by at least `growth_factor` between the top rungs.
/// * Positive-recurrent: return probability at least `1 - eps_p` and the
///   mean return time changes by less than `stable_rel_change`.
/// * Inconclusive otherwise.
pub fn classify_empirical(
    t: &TransitionMatrix,
    k: usize,
    budget: &EstimationBudget,
) -> Result<ChainClass> {
    if budget.horizons.len() < 2 || budget.horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "horizon ladder needs at least two increasing rungs".into(),
        ));
    }
    if !check_irreducible(t) {
        return Err(Error::Reducible(
            "retained levels do not communicate; classify each component separately".into(),
        ));
    }
    let top_horizon = *budget.horizons.last().expect("non-empty ladder");
    let stats = estimate_return_stats(t, k, budget.trials, top_horizon, budget.seed)?;
    let rungs: Vec<RungStats> = budget
        .horizons
        .iter()
        .map(|&h| {
            let (returns, mean) = stats.truncated_at(h);
            let (ci_low, ci_high) = wilson(returns, budget.trials, budget.z);
            RungStats {
                horizon: h,
                returns,
                return_probability: returns as f64 / budget.trials as f64,
                ci_low,
                ci_high,
                mean_return_time: mean,
            }
        })
        .collect();

    let top = &rungs[rungs.len() - 1];
    let prev = &rungs[rungs.len() - 2];
    let escape_line = 1.0 - budget.eps_p;
    let (kind, reason) = if top.ci_high < escape_line
        && prev.ci_high < escape_line
        && top.ci_low <= prev.ci_high
    {
        (
            ChainKind::Transient,
            format!(
                "return probability plateaued at {:.4} below {escape_line}",
                top.return_probability
            ),
        )
    } else if top.return_probability >= escape_line {
        match (prev.mean_return_time, top.mean_return_time) {
            (Some(a), Some(b)) => {
                let growth = b / a;
                if growth >= budget.growth_factor {
                    (
                        ChainKind::NullRecurrent,
                        format!("mean return time grew by {growth:.3} between the top rungs"),
                    )
                } else if (growth - 1.0).abs() < budget.stable_rel_change {
                    (
                        ChainKind::PositiveRecurrent,
                        format!("mean return time stable (ratio {growth:.4})"),
                    )
                } else {
                    (
                        ChainKind::Inconclusive,
                        format!("mean return time ratio {growth:.3} is neither stable nor growing"),
                    )
                }
            }
            _ => (ChainKind::Inconclusive, "no returns observed".into()),
        }
    } else {
        (
            ChainKind::Inconclusive,
            format!(
                "return probability {:.4} neither plateaued below nor reached {escape_line}",
                top.return_probability
            ),
        )
    };

    Ok(ChainClass {
        kind,
        evidence: Evidence::Empirical(EmpiricalEvidence {
            origin: k,
            trials: budget.trials,
            seed: budget.seed,
            truncation: t.n(),
            edge_hits: stats.edge_count,
            rungs,
            eps_p: budget.eps_p,
            growth_factor: budget.growth_factor,
            stable_rel_change: budget.stable_rel_change,
            z: budget.z,
            reason,
        }),
    })
}
