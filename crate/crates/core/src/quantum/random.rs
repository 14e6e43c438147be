//! Random states and measurements for property checks and benchmarks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr_free::standard_normal;

use crate::error::Result;

use super::linalg::{hermitian_eigen, CMatrix};
use super::state::{DensityMatrix, Povm};

mod rand_distr_free {
    use rand::Rng;

    /// Box-Muller standard normal.
    pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(standard_normal(rng), standard_normal(rng)))
}

/// `G G† / tr(G G†)` for a complex Gaussian `d × rank` matrix; full rank
/// with probability one when `rank ≥ d`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Result<DensityMatrix> {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    let m = m / Complex64::new(tr, 0.0);
    let h = CMatrix::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    DensityMatrix::new(h)
}

/// Normalized Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<DensityMatrix> {
    random_density(rng, d, 1)
}

/// A `k`-outcome POVM `S^{-1/2} A_i S^{-1/2}` with random PSD `A_i` and
/// `S = Σ A_i`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, outcomes: usize) -> Result<Povm> {
    let parts: Vec<CMatrix> = (0..outcomes.max(1))
        .map(|_| {
            let g = ginibre(rng, d, d);
            &g * g.adjoint()
        })
        .collect();
    let sum = parts.iter().fold(CMatrix::zeros(d, d), |acc, a| acc + a);
    let inv_sqrt = hermitian_eigen(&sum)?.map(|l| 1.0 / l.sqrt());
    let effects = parts
        .iter()
        .map(|a| {
            let e = &inv_sqrt * a * &inv_sqrt;
            CMatrix::from_fn(d, d, |i, j| (e[(i, j)] + e[(j, i)].conj()) * 0.5)
        })
        .collect();
    Povm::new(effects)
}

/// Projective measurement in a Haar-like random orthonormal basis.
pub fn random_basis_povm<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Povm> {
    let h = ginibre(rng, d, d);
    let e = hermitian_eigen(&(&h + h.adjoint()))?;
    Povm::from_basis(&(0..d).map(|k| e.vector(k)).collect::<Vec<_>>())
}
