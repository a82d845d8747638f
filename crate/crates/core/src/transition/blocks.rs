use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for unitarity and bistochasticity checks on blocks.
pub const BLOCK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Unitary,
    Bistochastic,
}

/// Size of the energy shell `n` (1-based) for a `d`-level fuel.
pub(crate) fn shell_size(n: usize, d: usize) -> usize {
    n.min(d)
}

/// Block-diagonal energy-preserving unitary, one block per total-energy
/// shell. Block `n` acts on the states `|n+1-i>_B |i>_S`, `i = 1..=min(n, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryBlocks {
    d: usize,
    blocks: Vec<DMatrix<Complex64>>,
}

impl UnitaryBlocks {
    pub fn new(d: usize, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        check_layout(d, blocks.iter().map(|b| (b.nrows(), b.ncols())))?;
        for (idx, b) in blocks.iter().enumerate() {
            let n = idx + 1;
            let gram = b.adjoint() * b;
            let dev = gram
                .iter()
                .enumerate()
                .map(|(flat, z)| {
                    let (r, c) = (flat % b.ncols(), flat / b.ncols());
                    let target = if r == c { 1.0 } else { 0.0 };
                    (z - Complex64::new(target, 0.0)).norm()
                })
                .fold(0.0, f64::max);
            if dev > BLOCK_TOL {
                return Err(Error::InvalidBlocks(format!(
                    "block {n} is not unitary (max |U^dag U - I| = {dev:e})"
                )));
            }
        }
        Ok(Self { d, blocks })
    }

    /// Trivial collision: every block is the identity.
    pub fn identity(d: usize, shells: usize) -> Result<Self> {
        let blocks = (1..=shells)
            .map(|n| DMatrix::identity(shell_size(n, d), shell_size(n, d)))
            .collect();
        Self::new(d, blocks)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shells(&self) -> usize {
        self.blocks.len()
    }

    /// Block of shell `n` (1-based).
    pub fn block(&self, n: usize) -> &DMatrix<Complex64> {
        &self.blocks[n - 1]
    }

    pub fn kind(&self) -> BlockKind {
        BlockKind::Unitary
    }

    /// Entrywise squared moduli; always bistochastic for a unitary.
    pub fn unistochastic(&self) -> BistochasticBlocks {
        BistochasticBlocks {
            d: self.d,
            blocks: self.blocks.iter().map(|b| b.map(|z| z.norm_sqr())).collect(),
        }
    }
}

/// Real doubly stochastic blocks, one per shell; the unistochastic images
/// of [`UnitaryBlocks`] are a special case.
#[derive(Debug, Clone, PartialEq)]
pub struct BistochasticBlocks {
    d: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl BistochasticBlocks {
    pub fn new(d: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        check_layout(d, blocks.iter().map(|b| (b.nrows(), b.ncols())))?;
        for (idx, b) in blocks.iter().enumerate() {
            let n = idx + 1;
            if let Some(x) = b.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidBlocks(format!("block {n} has entry {x}")));
            }
            let rows = (0..b.nrows()).map(|r| b.row(r).sum());
            let cols = (0..b.ncols()).map(|c| b.column(c).sum());
            let dev = rows.chain(cols).map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
            if dev > BLOCK_TOL {
                return Err(Error::InvalidBlocks(format!(
                    "block {n} is not bistochastic (max |line sum - 1| = {dev:e})"
                )));
            }
        }
        Ok(Self { d, blocks })
    }

    pub fn identity(d: usize, shells: usize) -> Result<Self> {
        let blocks = (1..=shells)
            .map(|n| DMatrix::identity(shell_size(n, d), shell_size(n, d)))
            .collect();
        Self::new(d, blocks)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shells(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, n: usize) -> &DMatrix<f64> {
        &self.blocks[n - 1]
    }

    pub fn kind(&self) -> BlockKind {
        BlockKind::Bistochastic
    }
}

fn check_layout(d: usize, dims: impl Iterator<Item = (usize, usize)>) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidBlocks(format!("fuel dimension must be >= 2, got {d}")));
    }
    let mut count = 0;
    for (idx, (r, c)) in dims.enumerate() {
        let n = idx + 1;
        let want = shell_size(n, d);
        if r != want || c != want {
            return Err(Error::InvalidBlocks(format!(
                "block {n} is {r}x{c}, expected {want}x{want}"
            )));
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidBlocks("no shells supplied".into()));
    }
    Ok(())
}

/// The full resonant swap `|n, g> <-> |n-1, e>` on `shells` shells of a
/// two-level fuel; the ground shell is the trivial 1x1 block.
pub fn swap_unitary_blocks(shells: usize) -> Result<UnitaryBlocks> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let blocks = (1..=shells)
        .map(|n| {
            if n == 1 {
                DMatrix::from_element(1, 1, one)
            } else {
                DMatrix::from_row_slice(2, 2, &[zero, one, one, zero])
            }
        })
        .collect();
    UnitaryBlocks::new(2, blocks)
}

pub fn unistochastic_from_blocks(u: &UnitaryBlocks) -> BistochasticBlocks {
    u.unistochastic()
}

/// Qubit collision weights: `alpha_n = |u_12^(n)|^2` for shells `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitSwapParams {
    // alphas[i] is alpha_{i + 2}
    alphas: Vec<f64>,
}

impl QubitSwapParams {
    /// `alphas[0]` is the weight of shell 2.
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        for (i, &a) in alphas.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter(format!(
                    "alpha_{} = {a} outside [0, 1]",
                    i + 2
                )));
            }
        }
        Ok(Self { alphas })
    }

    /// `alpha_n = value` for `n = 2..=last_shell`.
    pub fn constant(value: f64, last_shell: usize) -> Result<Self> {
        Self::from_fn(last_shell, |_| value)
    }

    /// `alpha_n = f(n)` for `n = 2..=last_shell`.
    pub fn from_fn(last_shell: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((2..=last_shell.max(1)).map(f).collect())
    }

    /// Weight of shell `n >= 2`.
    pub fn alpha(&self, n: usize) -> f64 {
        self.alphas[n - 2]
    }

    /// Largest shell index with a defined weight.
    pub fn last_shell(&self) -> usize {
        self.alphas.len() + 1
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Bistochastic blocks `[[1 - a, a], [a, 1 - a]]` behind these weights.
    pub fn to_blocks(&self) -> BistochasticBlocks {
        let mut blocks = vec![DMatrix::from_element(1, 1, 1.0)];
        blocks.extend(
            self.alphas
                .iter()
                .map(|&a| DMatrix::from_row_slice(2, 2, &[1.0 - a, a, a, 1.0 - a])),
        );
        BistochasticBlocks { d: 2, blocks }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_blocks_layout() {
        let u = swap_unitary_blocks(1).unwrap();
        assert_eq!(u.shells(), 1);
        assert_eq!(u.block(1)[(0, 0)], Complex64::new(1.0, 0.0));

        let u = swap_unitary_blocks(3).unwrap();
        for n in 2..=3 {
            let b = u.block(n);
            assert_eq!(b[(0, 1)].re, 1.0);
            assert_eq!(b[(1, 0)].re, 1.0);
            assert_eq!(b[(0, 0)].norm(), 0.0);
            assert_eq!(b[(1, 1)].norm(), 0.0);
        }
        let b = u.unistochastic();
        assert_eq!(b.block(2), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn unistochastic_examples() {
        let id = UnitaryBlocks::identity(3, 4).unwrap().unistochastic();
        for n in 1..=4 {
            let s = shell_size(n, 3);
            assert_eq!(id.block(n), &DMatrix::identity(s, s));
        }
        // |u11|^2 = 0.36 forces the complement by unitarity
        let (c, s) = (0.6, 0.8);
        let rot = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(c, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, s),
                Complex64::new(c, 0.0),
            ],
        );
        let u = UnitaryBlocks::new(2, vec![DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0)), rot])
            .unwrap();
        let b = unistochastic_from_blocks(&u);
        let want = DMatrix::from_row_slice(2, 2, &[0.36, 0.64, 0.64, 0.36]);
        assert!((b.block(2) - want).amax() < 1e-15);
    }

    #[test]
    fn rejects_bad_blocks() {
        let half = DMatrix::from_element(1, 1, Complex64::new(0.5, 0.0));
        assert!(matches!(UnitaryBlocks::new(2, vec![half]), Err(Error::InvalidBlocks(_))));
        // wrong size for shell 2 of a qutrit
        let blocks = vec![DMatrix::identity(1, 1), DMatrix::identity(3, 3)];
        assert!(BistochasticBlocks::new(3, blocks).is_err());
        let blocks = vec![
            DMatrix::identity(1, 1),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.4]),
        ];
        assert!(BistochasticBlocks::new(2, blocks).is_err());
        let blocks = vec![DMatrix::from_element(1, 1, 0.9)];
        assert!(BistochasticBlocks::new(2, blocks).is_err());
        assert!(BistochasticBlocks::new(2, vec![]).is_err());
        assert!(BistochasticBlocks::identity(1, 3).is_err());
    }

    #[test]
    fn qubit_params() {
        assert!(QubitSwapParams::new(vec![0.5, 1.2]).is_err());
        assert!(QubitSwapParams::new(vec![-0.1]).is_err());
        let p = QubitSwapParams::from_fn(5, |n| 1.0 / n as f64).unwrap();
        assert_eq!(p.last_shell(), 5);
        assert_eq!(p.alpha(4), 0.25);
        let b = p.to_blocks();
        assert_eq!(b.shells(), 5);
        assert!(BistochasticBlocks::new(2, b.blocks.clone()).is_ok());
    }
}
