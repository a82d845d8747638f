//! Repeated collisions: deterministic evolution of the level populations and
//! Monte Carlo realizations of the underlying chain.

use std::io::{self, Write};

use rand::Rng;

use crate::distribution::{ergotropy_of, mean_energy_of, BatteryDistribution};
use crate::error::{Error, Result};
use crate::format::sig17;
use crate::rng::{seeded, SimRng};
use crate::transition::TransitionMatrix;

/// Default cap on leaked mass for fixed-truncation runs.
pub const DEFAULT_LEAK_BUDGET: f64 = 1e-9;

// entries above this after a step are rounding noise and get clamped to 0
const CLAMP_FLOOR: f64 = -1e-14;

/// One collision: `p'_k = sum_m T[k, m] p_m`. Mass sent past the window is
/// added to the leaked mass.
pub fn apply_step(t: &TransitionMatrix, p: &BatteryDistribution) -> Result<BatteryDistribution> {
    check_dims(t, p)?;
    let mut out = vec![0.0; t.n()];
    let (leak, _) = step_into(t, p.probs(), &mut out);
    Ok(BatteryDistribution::from_parts(out, p.leaked_mass() + leak))
}

fn check_dims(t: &TransitionMatrix, p: &BatteryDistribution) -> Result<()> {
    if t.n() != p.len() {
        return Err(Error::Dimension(format!(
            "matrix has {} levels, distribution has {}",
            t.n(),
            p.len()
        )));
    }
    Ok(())
}

/// Returns `(leaked, clamped)` for one step from `src` into `dst`.
pub(crate) fn step_into(t: &TransitionMatrix, src: &[f64], dst: &mut [f64]) -> (f64, usize) {
    dst.iter_mut().for_each(|x| *x = 0.0);
    let mut leak = 0.0;
    for (idx, &pm) in src.iter().enumerate() {
        if pm == 0.0 {
            continue;
        }
        let m = idx + 1;
        let lo = t.column_start(m) - 1;
        for (slot, &v) in dst[lo..].iter_mut().zip(t.column_slice(m)) {
            *slot += v * pm;
        }
        leak += t.deficit(m) * pm;
    }
    let mut clamped = 0;
    for x in dst.iter_mut() {
        if *x < 0.0 {
            debug_assert!(*x >= CLAMP_FLOOR, "negative population {x}");
            *x = 0.0;
            clamped += 1;
        }
    }
    (leak, clamped)
}

/// Observables recorded after each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub mean_energy: f64,
    pub ergotropy: f64,
    pub leaked_mass: f64,
}

impl StepRecord {
    fn of(step: usize, probs: &[f64], leaked_mass: f64) -> Self {
        Self {
            step,
            mean_energy: mean_energy_of(probs),
            ergotropy: ergotropy_of(probs),
            leaked_mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub probs: Vec<f64>,
}

/// Which steps keep a full copy of the distribution.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SnapshotPolicy {
    #[default]
    Never,
    Every(usize),
    At(Vec<usize>),
}

impl SnapshotPolicy {
    fn wants(&self, step: usize) -> bool {
        match self {
            SnapshotPolicy::Never => false,
            SnapshotPolicy::Every(k) => *k > 0 && step.is_multiple_of(*k),
            SnapshotPolicy::At(steps) => steps.contains(&step),
        }
    }
}

/// Window growth for runs that drift upward without bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoGrow {
    /// Fraction of the window (from the top) that is monitored.
    pub top_fraction: f64,
    /// Mass in the monitored levels that triggers a doubling.
    pub threshold: f64,
    /// Hard cap on the number of levels.
    pub max_levels: usize,
}

impl Default for AutoGrow {
    fn default() -> Self {
        Self { top_fraction: 0.01, threshold: 1e-12, max_levels: 1 << 22 }
    }
}

impl AutoGrow {
    fn needs_growth(&self, probs: &[f64]) -> bool {
        let n = probs.len();
        let top = ((n as f64 * self.top_fraction).ceil() as usize).clamp(1, n);
        probs[n - top..].iter().sum::<f64>() > self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub snapshots: SnapshotPolicy,
    pub leak_budget: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { snapshots: SnapshotPolicy::Never, leak_budget: DEFAULT_LEAK_BUDGET }
    }
}

/// Observables of a run, one record per step including step 0.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: BatteryDistribution,
    /// Number of entries flushed from tiny negatives to zero.
    pub clamp_count: usize,
    /// `(step, N)` each time the window was set or grown.
    pub truncations: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    /// CSV `step,mean_energy,ergotropy,leaked_mass`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,mean_energy,ergotropy,leaked_mass")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{}",
                r.step,
                sig17(r.mean_energy),
                sig17(r.ergotropy),
                sig17(r.leaked_mass)
            )?;
        }
        Ok(())
    }

    /// CSV `step,level,prob`, one row per retained level of each snapshot.
    pub fn write_snapshots_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,level,prob")?;
        for s in &self.snapshots {
            for (i, p) in s.probs.iter().enumerate() {
                writeln!(out, "{},{},{}", s.step, i + 1, sig17(*p))?;
            }
        }
        Ok(())
    }
}

/// Iterates [`apply_step`] `steps` times from `p0`, keeping a snapshot every
/// `snapshot_every` steps (0 disables snapshots). Fails with
/// [`Error::TruncationOverflow`] once leaked mass exceeds
/// [`DEFAULT_LEAK_BUDGET`].
pub fn evolve(
    t: &TransitionMatrix,
    p0: &BatteryDistribution,
    steps: usize,
    snapshot_every: usize,
) -> Result<Trajectory> {
    let opts = EvolveOptions {
        snapshots: SnapshotPolicy::Every(snapshot_every),
        ..EvolveOptions::default()
    };
    evolve_with(t, p0, steps, &opts)
}

pub fn evolve_with(
    t: &TransitionMatrix,
    p0: &BatteryDistribution,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_dims(t, p0)?;
    let mut run = Run::start(p0, opts);
    run.truncations.push((0, t.n()));
    for step in 1..=steps {
        run.advance(t, step, opts)?;
    }
    Ok(run.finish())
}

/// Like [`evolve_with`], but doubles the window whenever the top levels hold
/// more than `grow.threshold` mass. `build(n)` must return the matrix for an
/// `n`-level window; the initial window is `p0.len()`.
pub fn evolve_growing<F>(
    mut build: F,
    p0: &BatteryDistribution,
    steps: usize,
    opts: &EvolveOptions,
    grow: &AutoGrow,
) -> Result<Trajectory>
where
    F: FnMut(usize) -> Result<TransitionMatrix>,
{
    let mut run = Run::start(p0, opts);
    let mut t = build(p0.len())?;
    check_dims(&t, p0)?;
    run.truncations.push((0, t.n()));
    for step in 1..=steps {
        let mut n = t.n();
        while grow.needs_growth(&run.current) {
            n *= 2;
            if n > grow.max_levels {
                return Err(Error::TruncationOverflow {
                    step,
                    leaked: run.leaked,
                    budget: opts.leak_budget,
                });
            }
            run.current.resize(n, 0.0);
            run.truncations.push((step - 1, n));
        }
        if n != t.n() {
            t = build(n)?;
            if t.n() != n {
                return Err(Error::Dimension(format!(
                    "builder returned {} levels, requested {n}",
                    t.n()
                )));
            }
            run.scratch.resize(n, 0.0);
        }
        run.advance(&t, step, opts)?;
    }
    Ok(run.finish())
}

struct Run {
    current: Vec<f64>,
    scratch: Vec<f64>,
    leaked: f64,
    clamp_count: usize,
    records: Vec<StepRecord>,
    snapshots: Vec<Snapshot>,
    truncations: Vec<(usize, usize)>,
}

impl Run {
    fn start(p0: &BatteryDistribution, opts: &EvolveOptions) -> Self {
        let mut run = Self {
            current: p0.probs().to_vec(),
            scratch: vec![0.0; p0.len()],
            leaked: p0.leaked_mass(),
            clamp_count: 0,
            records: vec![StepRecord::of(0, p0.probs(), p0.leaked_mass())],
            snapshots: Vec::new(),
            truncations: Vec::new(),
        };
        if opts.snapshots.wants(0) {
            run.snapshots.push(Snapshot { step: 0, probs: run.current.clone() });
        }
        run
    }

    fn advance(&mut self, t: &TransitionMatrix, step: usize, opts: &EvolveOptions) -> Result<()> {
        let (leak, clamped) = step_into(t, &self.current, &mut self.scratch);
        std::mem::swap(&mut self.current, &mut self.scratch);
        self.leaked += leak;
        self.clamp_count += clamped;
        if self.leaked > opts.leak_budget {
            return Err(Error::TruncationOverflow {
                step,
                leaked: self.leaked,
                budget: opts.leak_budget,
            });
        }
        self.records.push(StepRecord::of(step, &self.current, self.leaked));
        if opts.snapshots.wants(step) {
            self.snapshots.push(Snapshot { step, probs: self.current.clone() });
        }
        Ok(())
    }

    fn finish(self) -> Trajectory {
        Trajectory {
            records: self.records,
            snapshots: self.snapshots,
            final_state: BatteryDistribution::from_parts(self.current, self.leaked),
            clamp_count: self.clamp_count,
            truncations: self.truncations,
        }
    }
}

/// How a sampled path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Completed,
    /// A draw left the truncated window; the path stops at its last level.
    EdgeReached,
}

/// A realization `k_0, k_1, ...` of the level chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub levels: Vec<usize>,
    pub seed: u64,
    pub status: PathStatus,
}

/// Single-path stepper drawing `k_{t+1}` from column `k_t`.
pub struct ChainWalker<'a, R> {
    t: &'a TransitionMatrix,
    level: usize,
    rng: R,
}

impl<'a, R: Rng> ChainWalker<'a, R> {
    pub fn new(t: &'a TransitionMatrix, start: usize, rng: R) -> Result<Self> {
        if start == 0 || start > t.n() {
            return Err(Error::InvalidParameter(format!(
                "start level {start} outside 1..={}",
                t.n()
            )));
        }
        Ok(Self { t, level: start, rng })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Moves one step; `None` if the draw left the window (the walker then
    /// stays where it was).
    pub fn step(&mut self) -> Option<usize> {
        let m = self.level;
        let column = self.t.column_slice(m);
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, &v) in column.iter().enumerate() {
            if v > 0.0 {
                acc += v;
                last_positive = Some(i);
                if u < acc {
                    self.level = self.t.column_start(m) + i;
                    return Some(self.level);
                }
            }
        }
        if m > self.t.interior_columns() {
            return None;
        }
        // rounding gap below 1 in a stochastic column
        let i = last_positive.expect("stochastic column has a positive entry");
        self.level = self.t.column_start(m) + i;
        Some(self.level)
    }
}

/// Samples `horizon` steps of the chain from level `k0` with a generator
/// seeded by `seed`.
pub fn sample_path(t: &TransitionMatrix, k0: usize, horizon: usize, seed: u64) -> Result<PathSample> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut walker = ChainWalker::new(t, k0, seeded(seed))?;
    let mut levels = Vec::with_capacity(horizon + 1);
    levels.push(k0);
    let mut status = PathStatus::Completed;
    for _ in 0..horizon {
        match walker.step() {
            Some(k) => levels.push(k),
            None => {
                status = PathStatus::EdgeReached;
                break;
            }
        }
    }
    Ok(PathSample { levels, seed, status })
}

/// Walker over a seeded stream; convenience for estimators.
pub(crate) fn walker_from_seed(
    t: &TransitionMatrix,
    start: usize,
    seed: u64,
) -> Result<ChainWalker<'_, SimRng>> {
    ChainWalker::new(t, start, seeded(seed))
}
