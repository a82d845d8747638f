use std::fmt::{self, Write as _};

use super::lyapunov::DriftReport;
use crate::format::sig17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Transient,
    PositiveRecurrent,
    NullRecurrent,
    Inconclusive,
}

impl ChainKind {
    pub fn label(self) -> &'static str {
        match self {
            ChainKind::Transient => "transient",
            ChainKind::PositiveRecurrent => "positive-recurrent",
            ChainKind::NullRecurrent => "null-recurrent",
            ChainKind::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticEvidence {
    /// Which closed-form criterion produced the verdict.
    pub rule: String,
    /// Levels over which the witness was evaluated.
    pub window: usize,
    pub drift: Option<DriftReport>,
    pub notes: Vec<String>,
}

/// Statistics at one horizon of the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct RungStats {
    pub horizon: u64,
    pub returns: u64,
    pub return_probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean first-return time among paths that returned by `horizon`.
    pub mean_return_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEvidence {
    pub origin: usize,
    pub trials: u64,
    pub seed: u64,
    pub truncation: usize,
    pub edge_hits: u64,
    pub rungs: Vec<RungStats>,
    pub eps_p: f64,
    pub growth_factor: f64,
    pub stable_rel_change: f64,
    pub z: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Analytic(AnalyticEvidence),
    Empirical(EmpiricalEvidence),
    /// Analytic criteria were silent; the verdict comes from the estimator.
    Escalated { analytic_note: String, empirical: EmpiricalEvidence },
}

/// Verdict plus the evidence behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainClass {
    pub kind: ChainKind,
    pub evidence: Evidence,
}

impl ChainClass {
    /// `key: value` report, one entry per line.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verdict: {}", self.kind);
        match &self.evidence {
            Evidence::Analytic(a) => {
                let _ = writeln!(out, "method: analytic");
                write_analytic(&mut out, a);
            }
            Evidence::Empirical(e) => {
                let _ = writeln!(out, "method: empirical");
                write_empirical(&mut out, e);
            }
            Evidence::Escalated { analytic_note, empirical } => {
                let _ = writeln!(out, "method: empirical (escalated)");
                let _ = writeln!(out, "analytic_note: {analytic_note}");
                write_empirical(&mut out, empirical);
            }
        }
        out
    }
}

fn write_analytic(out: &mut String, a: &AnalyticEvidence) {
    let _ = writeln!(out, "rule: {}", a.rule);
    let _ = writeln!(out, "window_levels: {}", a.window);
    if let Some(d) = &a.drift {
        let _ = writeln!(out, "drift_max_violation: {}", sig17(d.max_violation));
        let _ = writeln!(out, "drift_satisfied: {}", d.satisfied);
        let mode = match d.mode {
            Some(super::DriftMode::RecurrenceForm) => "recurrence",
            Some(super::DriftMode::TransienceForm) => "transience",
            None => "none",
        };
        let _ = writeln!(out, "drift_mode: {mode}");
        let _ = writeln!(out, "drift_columns_checked: {}", d.columns_checked);
    }
    for (i, note) in a.notes.iter().enumerate() {
        let _ = writeln!(out, "note_{}: {note}", i + 1);
    }
}

fn write_empirical(out: &mut String, e: &EmpiricalEvidence) {
    let _ = writeln!(out, "origin: {}", e.origin);
    let _ = writeln!(out, "trials: {}", e.trials);
    let _ = writeln!(out, "seed: {}", e.seed);
    let _ = writeln!(out, "truncation: {}", e.truncation);
    let _ = writeln!(out, "edge_hits: {}", e.edge_hits);
    let _ = writeln!(out, "threshold_eps_p: {}", sig17(e.eps_p));
    let _ = writeln!(out, "threshold_growth_factor: {}", sig17(e.growth_factor));
    let _ = writeln!(out, "threshold_stable_rel_change: {}", sig17(e.stable_rel_change));
    let _ = writeln!(out, "threshold_z: {}", sig17(e.z));
    let horizons: Vec<String> = e.rungs.iter().map(|r| r.horizon.to_string()).collect();
    let _ = writeln!(out, "horizons: {}", horizons.join(","));
    for r in &e.rungs {
        let h = r.horizon;
        let _ = writeln!(out, "return_probability@{h}: {}", sig17(r.return_probability));
        let _ = writeln!(out, "return_probability_ci@{h}: {},{}", sig17(r.ci_low), sig17(r.ci_high));
        let mean = r.mean_return_time.map(sig17).unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "mean_return_time@{h}: {mean}");
    }
    let _ = writeln!(out, "reason: {}", e.reason);
}
