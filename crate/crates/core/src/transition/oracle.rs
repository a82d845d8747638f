//! Joint battery-plus-fuel computation of one collision, used as an
//! independent check of the transition-matrix route.
//!
//! The truncated joint space keeps battery levels `1..=L` with
//! `L = N + d - 1`, so every shell touching a retained level is complete.
//! Basis states belonging to shells above `L` are left invariant; they only
//! feed battery levels above `N`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::blocks::{shell_size, UnitaryBlocks};
use crate::distribution::BatteryDistribution;
use crate::error::{Error, Result};
use crate::state::QuditState;

struct JointSpace {
    levels: usize,
    d: usize,
}

impl JointSpace {
    fn dim(&self) -> usize {
        self.levels * self.d
    }

    /// Index of `|b>_B |i>_S` (both 1-based).
    fn index(&self, b: usize, i: usize) -> usize {
        (b - 1) * self.d + (i - 1)
    }
}

fn joint_unitary(u: &UnitaryBlocks, space: &JointSpace) -> DMatrix<Complex64> {
    let dim = space.dim();
    let mut full = DMatrix::<Complex64>::zeros(dim, dim);
    let mut covered = vec![false; dim];
    for shell in 1..=space.levels {
        let block = u.block(shell);
        let size = shell_size(shell, space.d);
        for i in 1..=size {
            let row = space.index(shell + 1 - i, i);
            covered[row] = true;
            for j in 1..=size {
                full[(row, space.index(shell + 1 - j, j))] = block[(i - 1, j - 1)];
            }
        }
    }
    for (idx, done) in covered.into_iter().enumerate() {
        if !done {
            full[(idx, idx)] = Complex64::new(1.0, 0.0);
        }
    }
    full
}

fn check_dims(u: &UnitaryBlocks, xi: &QuditState, n: usize) -> Result<JointSpace> {
    let d = xi.dim();
    if u.d() != d {
        return Err(Error::Dimension(format!(
            "blocks are for a {}-level fuel, state has {d} levels",
            u.d()
        )));
    }
    let levels = n + d - 1;
    if u.shells() < levels {
        return Err(Error::Dimension(format!(
            "oracle on {n} levels needs {levels} shells, have {}",
            u.shells()
        )));
    }
    Ok(JointSpace { levels, d })
}

/// One collision `rho' = Tr_S[U (rho ⊗ xi) U^dag]` for a diagonal battery
/// state, computed in the joint space. Mass landing above level `N` is added
/// to the leaked mass of the result.
pub fn oracle_collision_step(
    u: &UnitaryBlocks,
    xi: &QuditState,
    p: &BatteryDistribution,
) -> Result<BatteryDistribution> {
    let n = p.len();
    let space = check_dims(u, xi, n)?;
    let full = joint_unitary(u, &space);
    let dim = space.dim();

    let mut weights = vec![0.0; dim];
    for b in 1..=n {
        for i in 1..=space.d {
            weights[space.index(b, i)] = p.p(b) * xi.s(i);
        }
    }
    // diag(U W U^dag) with W diagonal
    let mut joint_diag = vec![0.0; dim];
    for (r, out) in joint_diag.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                let z = full[(r, c)];
                acc += z * w * z.conj();
            }
        }
        *out = acc.re;
    }

    let mut probs = vec![0.0; n];
    let mut above = 0.0;
    for b in 1..=space.levels {
        let mass: f64 = (1..=space.d).map(|i| joint_diag[space.index(b, i)]).sum();
        if b <= n {
            probs[b - 1] = mass;
        } else {
            above += mass;
        }
    }
    Ok(BatteryDistribution::from_parts(probs, p.leaked_mass() + above))
}

/// Reduced battery state after one collision for a general (possibly
/// coherent) battery density matrix `rho` on `N` levels. Returns the `N x N`
/// block of `Tr_S[U (rho ⊗ xi) U^dag]`.
pub fn oracle_collision_density(
    u: &UnitaryBlocks,
    xi: &QuditState,
    rho: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "density matrix is {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let n = rho.nrows();
    let space = check_dims(u, xi, n)?;
    let full = joint_unitary(u, &space);
    let dim = space.dim();

    let mut joint = DMatrix::<Complex64>::zeros(dim, dim);
    for b in 1..=n {
        for c in 1..=n {
            for i in 1..=space.d {
                joint[(space.index(b, i), space.index(c, i))] = rho[(b - 1, c - 1)] * xi.s(i);
            }
        }
    }
    let evolved = &full * joint * full.adjoint();

    let mut reduced = DMatrix::<Complex64>::zeros(n, n);
    for b in 1..=n {
        for c in 1..=n {
            reduced[(b - 1, c - 1)] = (1..=space.d)
                .map(|i| evolved[(space.index(b, i), space.index(c, i))])
                .sum();
        }
    }
    Ok(reduced)
}
