//! Experiment runners behind the command-line subcommands, plus the CSV
//! formats they emit.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;

use crate::distribution::{ergotropy, tv_distance, BatteryDistribution};
use crate::error::{Error, Result};
use crate::evolve::{evolve_growing, AutoGrow, EvolveOptions, SnapshotPolicy, Trajectory};
use crate::format::sig17;
use crate::markov::{classify_qubit_chain, stationary_distribution, ChainClass};
use crate::rng::derive_seed;
use crate::sampling::SamplerConfig;
use crate::state::{classify_state, QuditState, StateClass, PASSIVITY_TOL};
use crate::transition::{
    build_transition_matrix, qubit_transition_matrix, QubitSwapParams, TransitionMatrix,
};

/// Fuels used when no regime is specified: passive, maximally mixed, active.
pub const CANONICAL_FUELS: [(f64, f64); 3] = [(0.7, 0.3), (0.5, 0.5), (0.3, 0.7)];

/// Ergotropy growth above this between `steps / 10` and the last step flags
/// a passive-fuel run.
pub const VIOLATION_TOL: f64 = 1e-6;

/// Full-swap qubit chain on `n` levels.
pub fn swap_chain(xi: &QuditState, n: usize) -> Result<TransitionMatrix> {
    qubit_transition_matrix(&QubitSwapParams::constant(1.0, n + 1)?, xi, n)
}

#[derive(Debug, Clone)]
pub struct RegimeRun {
    pub fuel: QuditState,
    pub class: ChainClass,
    pub trajectory: Trajectory,
}

/// Evolves `delta_1` under the full-swap chain for `max(snapshot_steps)`
/// steps, starting from an `n0`-level window that doubles as needed.
pub fn run_regime(
    xi: &QuditState,
    snapshot_steps: &[usize],
    n0: usize,
    grow: &AutoGrow,
) -> Result<RegimeRun> {
    let steps = snapshot_steps.iter().copied().max().unwrap_or(0);
    let class = classify_qubit_chain(&QubitSwapParams::constant(1.0, n0.max(2) + 1)?, xi)?;
    let opts = EvolveOptions {
        snapshots: SnapshotPolicy::At(snapshot_steps.to_vec()),
        ..EvolveOptions::default()
    };
    let trajectory =
        evolve_growing(|n| swap_chain(xi, n), &BatteryDistribution::ground(n0)?, steps, &opts, grow)?;
    Ok(RegimeRun { fuel: xi.clone(), class, trajectory })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub d: usize,
    pub num_runs: usize,
    pub steps: usize,
    pub seed: u64,
    /// Initial pure battery level (1-based).
    pub initial_level: usize,
    /// Initial window; grows by doubling.
    pub n0: usize,
    /// Forces every run to this fuel class instead of cycling through
    /// passive, active and maximally mixed.
    pub fuel_class: Option<StateClass>,
}

impl EnsembleConfig {
    pub fn new(d: usize, num_runs: usize, steps: usize, seed: u64) -> Self {
        Self { d, num_runs, steps, seed, initial_level: 1, n0: 200, fuel_class: None }
    }

    /// Fuel class of run `run` (0-based).
    pub fn class_of(&self, run: usize) -> StateClass {
        const CYCLE: [StateClass; 3] =
            [StateClass::StrictlyPassive, StateClass::Active, StateClass::MaximallyMixed];
        self.fuel_class.unwrap_or(CYCLE[run % 3])
    }

    fn sampler(&self, run: usize) -> Result<SamplerConfig> {
        let mut s = SamplerConfig::new(derive_seed(self.seed, run as u64), self.d, self.d)?;
        s.state_class_constraint = Some(self.class_of(run));
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub run: usize,
    pub class: StateClass,
    pub fuel: QuditState,
    pub trajectory: Trajectory,
}

/// Each run samples its own fuel and bistochastic spec and evolves a pure
/// initial battery state.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<Vec<EnsembleRun>> {
    if cfg.d < 2 || cfg.num_runs == 0 {
        return Err(Error::InvalidParameter("need d >= 2 and at least one run".into()));
    }
    if cfg.initial_level == 0 || cfg.initial_level > cfg.n0 {
        return Err(Error::InvalidParameter(format!(
            "initial level {} outside 1..={}",
            cfg.initial_level, cfg.n0
        )));
    }
    (0..cfg.num_runs)
        .into_par_iter()
        .map(|run| {
            let sampler = cfg.sampler(run)?;
            let fuel = sampler.qudit_state()?;
            let build = |n: usize| {
                let blocks = SamplerConfig { n_shells: n + cfg.d - 1, ..sampler.clone() }
                    .bistochastic_blocks()?;
                build_transition_matrix(&blocks, &fuel, n)
            };
            let p0 = BatteryDistribution::delta(cfg.initial_level, cfg.n0)?;
            let trajectory =
                evolve_growing(build, &p0, cfg.steps, &EvolveOptions::default(), &AutoGrow::default())?;
            Ok(EnsembleRun { run, class: cfg.class_of(run), fuel, trajectory })
        })
        .collect()
}

/// One row of the ensemble CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleRow {
    pub run: usize,
    pub step: usize,
    pub class: StateClass,
    pub mean_energy: f64,
    pub ergotropy: f64,
    pub leaked_mass: f64,
}

pub const ENSEMBLE_HEADER: &str = "run,step,state_class,mean_energy,ergotropy,leaked_mass";

pub fn ensemble_rows(runs: &[EnsembleRun]) -> Vec<EnsembleRow> {
    runs.iter()
        .flat_map(|r| {
            r.trajectory.records.iter().map(move |rec| EnsembleRow {
                run: r.run,
                step: rec.step,
                class: r.class,
                mean_energy: rec.mean_energy,
                ergotropy: rec.ergotropy,
                leaked_mass: rec.leaked_mass,
            })
        })
        .collect()
}

pub fn write_ensemble_csv<W: Write>(rows: &[EnsembleRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{ENSEMBLE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.run,
            r.step,
            r.class,
            sig17(r.mean_energy),
            sig17(r.ergotropy),
            sig17(r.leaked_mass)
        )?;
    }
    Ok(())
}

pub fn read_ensemble_csv<R: BufRead>(input: R) -> Result<Vec<EnsembleRow>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == ENSEMBLE_HEADER => {}
        Some((_, Ok(h))) => {
            return Err(Error::Parse { line: 1, msg: format!("unexpected header '{h}'") })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::Parse { line: 1, msg: "empty file".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
        rows.push(EnsembleRow {
            run: f[0].parse().map_err(|e| bad(format!("run '{}': {e}", f[0])))?,
            step: f[1].parse().map_err(|e| bad(format!("step '{}': {e}", f[1])))?,
            class: f[2].parse().map_err(|e: Error| bad(e.to_string()))?,
            mean_energy: num(f[3])?,
            ergotropy: num(f[4])?,
            leaked_mass: num(f[5])?,
        });
    }
    Ok(rows)
}

/// Late-stage ergotropy check for one passive-fuel run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveRunCheck {
    pub run: usize,
    pub early_step: usize,
    pub early_ergotropy: f64,
    pub final_step: usize,
    pub final_ergotropy: f64,
}

impl PassiveRunCheck {
    pub fn growth(&self) -> f64 {
        self.final_ergotropy - self.early_ergotropy
    }

    pub fn is_violation(&self) -> bool {
        self.growth() > VIOLATION_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub passive: Vec<PassiveRunCheck>,
}

impl EnsembleSummary {
    pub fn violations(&self) -> Vec<usize> {
        self.passive.iter().filter(|c| c.is_violation()).map(|c| c.run).collect()
    }

    pub fn max_passive_final_ergotropy(&self) -> f64 {
        self.passive.iter().map(|c| c.final_ergotropy).fold(0.0, f64::max)
    }

    pub fn to_report(&self) -> String {
        let mut s = format!("runs: {}\npassive_runs: {}\n", self.runs, self.passive.len());
        for c in &self.passive {
            s += &format!(
                "passive_run {}: ergotropy@{} = {} ergotropy@{} = {} growth = {}\n",
                c.run,
                c.early_step,
                sig17(c.early_ergotropy),
                c.final_step,
                sig17(c.final_ergotropy),
                sig17(c.growth())
            );
        }
        s += &format!(
            "max_passive_final_ergotropy: {}\nviolation_candidates: {}\n",
            sig17(self.max_passive_final_ergotropy()),
            self.violations().len()
        );
        s
    }
}

/// Compares each passive run's ergotropy at its last step with the value at
/// one tenth of that step.
pub fn summarize_ensemble(rows: &[EnsembleRow]) -> EnsembleSummary {
    use std::collections::BTreeMap;
    let mut by_run: BTreeMap<usize, Vec<&EnsembleRow>> = BTreeMap::new();
    for r in rows {
        by_run.entry(r.run).or_default().push(r);
    }
    let runs = by_run.len();
    let passive = by_run
        .into_iter()
        .filter(|(_, rs)| rs[0].class == StateClass::StrictlyPassive)
        .map(|(run, rs)| {
            let last = rs.iter().max_by_key(|r| r.step).expect("non-empty run");
            let early_step = last.step / 10;
            let early = rs
                .iter()
                .find(|r| r.step == early_step)
                .map_or(f64::NAN, |r| r.ergotropy);
            PassiveRunCheck {
                run,
                early_step,
                early_ergotropy: early,
                final_step: last.step,
                final_ergotropy: last.ergotropy,
            }
        })
        .collect();
    EnsembleSummary { runs, passive }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryConfig {
    pub d: usize,
    pub seed_a: u64,
    pub seed_b: u64,
    /// Seed of the passive fuel draw.
    pub fuel_seed: u64,
    pub n0: usize,
    pub max_levels: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl StationaryConfig {
    pub fn new(d: usize, seed_a: u64, seed_b: u64) -> Self {
        Self {
            d,
            seed_a,
            seed_b,
            fuel_seed: seed_a,
            n0: 200,
            max_levels: 1 << 16,
            tol: 1e-13,
            max_iters: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StationaryComparison {
    pub fuel: QuditState,
    pub a: BatteryDistribution,
    pub b: BatteryDistribution,
    /// TV distance after padding to a common window.
    pub tv: f64,
}

/// Fixed points of two independently sampled specs driven by the same
/// strictly passive fuel. The window doubles until the fixed point fits.
pub fn run_stationary(cfg: &StationaryConfig) -> Result<StationaryComparison> {
    let mut fuel_cfg = SamplerConfig::new(cfg.fuel_seed, cfg.d, cfg.d)?;
    fuel_cfg.state_class_constraint = Some(StateClass::StrictlyPassive);
    let fuel = fuel_cfg.qudit_state()?;
    debug_assert_eq!(classify_state(&fuel, PASSIVITY_TOL)?, StateClass::StrictlyPassive);
    let solve = |seed: u64| -> Result<BatteryDistribution> {
        let mut n = cfg.n0;
        loop {
            let blocks = SamplerConfig::new(seed, cfg.d, n + cfg.d - 1)?.bistochastic_blocks()?;
            let t = build_transition_matrix(&blocks, &fuel, n)?;
            if let Some(p) = stationary_distribution(&t, cfg.tol, cfg.max_iters)? {
                return Ok(p);
            }
            n *= 2;
            if n > cfg.max_levels {
                return Err(Error::Convergence(format!(
                    "no fixed point within {} levels for spec seed {seed}",
                    cfg.max_levels
                )));
            }
        }
    };
    let a = solve(cfg.seed_a)?;
    let b = solve(cfg.seed_b)?;
    let n = a.len().max(b.len());
    let tv = tv_distance(&a.padded(n), &b.padded(n))?;
    Ok(StationaryComparison { fuel, a, b, tv })
}

impl StationaryComparison {
    /// CSV `series,level,prob` with series `fuel`, `a` and `b`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "series,level,prob")?;
        let series: [(&str, &[f64]); 3] =
            [("fuel", self.fuel.probs()), ("a", self.a.probs()), ("b", self.b.probs())];
        for (name, probs) in series {
            for (i, p) in probs.iter().enumerate() {
                writeln!(out, "{name},{},{}", i + 1, sig17(*p))?;
            }
        }
        Ok(())
    }

    pub fn ergotropies(&self) -> (f64, f64) {
        (ergotropy(&self.a).value(), ergotropy(&self.b).value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_cycle() {
        let cfg = EnsembleConfig::new(3, 6, 10, 1);
        let classes: Vec<_> = (0..4).map(|r| cfg.class_of(r)).collect();
        assert_eq!(
            classes,
            [
                StateClass::StrictlyPassive,
                StateClass::Active,
                StateClass::MaximallyMixed,
                StateClass::StrictlyPassive
            ]
        );
        let forced = EnsembleConfig { fuel_class: Some(StateClass::Active), ..cfg };
        assert_eq!(forced.class_of(2), StateClass::Active);
    }

    #[test]
    fn ensemble_csv_round_trip() {
        let cfg = EnsembleConfig::new(3, 3, 40, 5);
        let rows = ensemble_rows(&run_ensemble(&cfg).unwrap());
        let mut buf = Vec::new();
        write_ensemble_csv(&rows, &mut buf).unwrap();
        let back = read_ensemble_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
        assert_eq!(summarize_ensemble(&back), summarize_ensemble(&rows));
    }

    #[test]
    fn corrupt_csv_names_the_line() {
        let text = format!("{ENSEMBLE_HEADER}\n0,0,passive,1,0,0\n0,1,passive,x,0,0\n");
        match read_ensemble_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_ensemble_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn qubit_stationary_ignores_spec() {
        let cmp = run_stationary(&StationaryConfig::new(2, 1, 2)).unwrap();
        assert!(cmp.tv < 1e-8);
    }
}
