//! Random collision specs and fuel states for ensemble experiments.
//!
//! Shell `n` of a sampled spec is drawn from its own stream, so enlarging the
//! number of shells leaves the lower shells unchanged.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::state::{classify_state, QuditState, StateClass, PASSIVITY_TOL};
use crate::transition::{BistochasticBlocks, UnitaryBlocks};

/// Rejection budget for constrained state draws.
pub const MAX_STATE_DRAWS: usize = 100_000;

const BLOCK_STREAM: u64 = 1;
const STATE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub master_seed: u64,
    pub d: usize,
    pub n_shells: usize,
    pub state_class_constraint: Option<StateClass>,
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_iters: usize,
}

impl SamplerConfig {
    pub fn new(master_seed: u64, d: usize, n_shells: usize) -> Result<Self> {
        let cfg = Self {
            master_seed,
            d,
            n_shells,
            state_class_constraint: None,
            sinkhorn_tol: 1e-13,
            sinkhorn_max_iters: 100_000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParameter(format!("d must be at least 2, got {}", self.d)));
        }
        if self.n_shells == 0 {
            return Err(Error::InvalidParameter("need at least one shell".into()));
        }
        if !(self.sinkhorn_tol > 0.0) || self.sinkhorn_max_iters == 0 {
            return Err(Error::InvalidParameter(
                "sinkhorn tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Sinkhorn-balanced blocks for shells `1..=n_shells`.
    pub fn bistochastic_blocks(&self) -> Result<BistochasticBlocks> {
        self.validate()?;
        let master = derive_seed(self.master_seed, BLOCK_STREAM);
        let blocks = (1..=self.n_shells)
            .map(|n| {
                let mut rng = stream(master, n as u64);
                random_bistochastic_block(
                    n.min(self.d),
                    &mut rng,
                    self.sinkhorn_tol,
                    self.sinkhorn_max_iters,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        BistochasticBlocks::new(self.d, blocks)
    }

    /// Haar blocks for shells `1..=n_shells`.
    pub fn unitary_blocks(&self) -> Result<UnitaryBlocks> {
        self.validate()?;
        let master = derive_seed(self.master_seed, BLOCK_STREAM);
        let blocks = (1..=self.n_shells)
            .map(|n| random_unitary_block(n.min(self.d), &mut stream(master, n as u64)))
            .collect::<Result<Vec<_>>>()?;
        UnitaryBlocks::new(self.d, blocks)
    }

    /// Fuel state honouring `state_class_constraint`.
    pub fn qudit_state(&self) -> Result<QuditState> {
        self.validate()?;
        let mut rng = stream(self.master_seed, STATE_STREAM);
        random_qudit_state(self.d, self.state_class_constraint, &mut rng)
    }
}

/// Sinkhorn balancing of a matrix with i.i.d. entries uniform on `(0, 1]`.
pub fn random_bistochastic_block<R: Rng + ?Sized>(
    size: usize,
    rng: &mut R,
    tol: f64,
    max_iters: usize,
) -> Result<DMatrix<f64>> {
    if size == 0 {
        return Err(Error::InvalidParameter("block size must be at least 1".into()));
    }
    let mut m = DMatrix::from_fn(size, size, |_, _| 1.0 - rng.random::<f64>());
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        for mut row in m.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        for mut col in m.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        residual = sinkhorn_residual(&m);
        if residual < tol {
            return Ok(m);
        }
    }
    Err(Error::Sampler(format!(
        "sinkhorn did not reach {tol:e} in {max_iters} rounds (residual {residual:e})"
    )))
}

/// Largest deviation of a row or column sum from one.
pub fn sinkhorn_residual(m: &DMatrix<f64>) -> f64 {
    let rows = m.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = m.column_iter().map(|c| (c.sum() - 1.0).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Haar unitary from the QR factorisation of a complex Gaussian matrix,
/// with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary_block<R: Rng + ?Sized>(
    size: usize,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if size == 0 {
        return Err(Error::InvalidParameter("block size must be at least 1".into()));
    }
    for _ in 0..100 {
        let g = DMatrix::from_fn(size, size, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let r = qr.r();
        if (0..size).any(|i| r[(i, i)].norm() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for (i, mut col) in q.column_iter_mut().enumerate() {
            let phase = r[(i, i)] / r[(i, i)].norm();
            col *= phase;
        }
        return Ok(q);
    }
    Err(Error::Sampler("repeated degenerate Gaussian draws".into()))
}

/// Dirichlet(1, ..., 1) fuel state, optionally constrained to a class.
pub fn random_qudit_state<R: Rng + ?Sized>(
    d: usize,
    constraint: Option<StateClass>,
    rng: &mut R,
) -> Result<QuditState> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")));
    }
    match constraint {
        Some(StateClass::MaximallyMixed) => QuditState::maximally_mixed(d),
        None => QuditState::new(dirichlet(d, rng)),
        Some(StateClass::StrictlyPassive) => {
            for _ in 0..MAX_STATE_DRAWS {
                let mut p = dirichlet(d, rng);
                p.sort_by(|a, b| b.total_cmp(a));
                if p.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let xi = QuditState::new(p)?;
                if classify_state(&xi, PASSIVITY_TOL)? == StateClass::StrictlyPassive {
                    return Ok(xi);
                }
            }
            Err(rejection_exhausted(StateClass::StrictlyPassive))
        }
        Some(StateClass::Active) => {
            for _ in 0..MAX_STATE_DRAWS {
                let xi = QuditState::new(dirichlet(d, rng))?;
                if classify_state(&xi, PASSIVITY_TOL)? == StateClass::Active {
                    return Ok(xi);
                }
            }
            Err(rejection_exhausted(StateClass::Active))
        }
    }
}

fn rejection_exhausted(class: StateClass) -> Error {
    Error::Sampler(format!("no {class} state in {MAX_STATE_DRAWS} draws"))
}

fn dirichlet<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}
