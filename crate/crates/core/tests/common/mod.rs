//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls the solvers under test: divergences are plain sums,
//! minima are dense grid scans, and matrix functions go through nalgebra's
//! own Hermitian eigensolver.

#![allow(dead_code)]

use std::sync::Arc;

use advhyp_core::quantum::{CMatrix, DensityMatrix, Povm};
use advhyp_core::{Alphabet, ConvexClass, Distribution};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

pub fn coin_p() -> ConvexClass {
    ConvexClass::new(vec![
        Distribution::bernoulli(0.0).unwrap(),
        Distribution::bernoulli(1.0 / 3.0).unwrap(),
    ])
    .unwrap()
}

pub fn coin_q() -> ConvexClass {
    ConvexClass::new(vec![
        Distribution::bernoulli(2.0 / 3.0).unwrap(),
        Distribution::bernoulli(1.0).unwrap(),
    ])
    .unwrap()
}

/// `Σ p ln(p/q)` with the usual conventions; `f64::INFINITY` when `p` charges a zero of `q`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total
}

pub fn mix(vertices: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; vertices[0].len()];
    for (v, &wi) in vertices.iter().zip(w) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += wi * x;
        }
    }
    out
}

/// All weight vectors on `k` vertices with entries in `{0, 1/res, …, 1}`.
pub fn simplex_grid(k: usize, res: u32) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: u32, res: u32, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left as f64 / res as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i as f64 / res as f64);
            rec(k - 1, left - i, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, res, res, &mut Vec::new(), &mut out);
    out
}

/// Grid upper bound on `min_{p∈P, q∈Q} D(p‖q)`.
pub fn grid_min_kl(p: &[Vec<f64>], q: &[Vec<f64>], res: u32) -> f64 {
    let gp = simplex_grid(p.len(), res);
    let gq = simplex_grid(q.len(), res);
    let mq: Vec<Vec<f64>> = gq.iter().map(|w| mix(q, w)).collect();
    gp.iter()
        .map(|w| {
            let a = mix(p, w);
            mq.iter().map(|b| kl(&a, b)).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn vertex_weights(class: &ConvexClass) -> Vec<Vec<f64>> {
    class.vertices().iter().map(|v| v.weights().to_vec()).collect()
}

pub fn random_simplex_point<R: Rng>(rng: &mut R, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// A class with `vertices` random full-support vertices on `alphabet`.
pub fn random_class<R: Rng>(rng: &mut R, alphabet: &Arc<Alphabet>, vertices: usize) -> ConvexClass {
    let vs = (0..vertices)
        .map(|_| Distribution::new(alphabet.clone(), random_simplex_point(rng, alphabet.size(), 0.02)).unwrap())
        .collect();
    ConvexClass::new(vs).unwrap()
}

/// `ln C(n, k) + k ln p + (n−k) ln(1−p)`.
pub fn log_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    let lg = |m: u64| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    let mut v = lg(n) - lg(k) - lg(n - k);
    if k > 0 {
        v += k as f64 * p.ln();
    }
    if n > k {
        v += (n - k) as f64 * (1.0 - p).ln();
    }
    v
}

// ---------------------------------------------------------------------------
// Quantum references

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Spectral function of a Hermitian matrix via nalgebra's eigensolver.
pub fn spectral(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let e = SymmetricEigen::new(m.clone());
    let d = CMatrix::from_diagonal(&e.eigenvalues.map(|l| c(f(l), 0.0)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `tr ρ(ln ρ − ln σ)` for full-rank states.
pub fn quantum_kl_full_rank(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let ln = |x: f64| x.ln();
    trace_re(&(rho * (spectral(rho, |x| if x > 0.0 { ln(x) } else { 0.0 }) - spectral(sigma, ln))))
}

pub fn born(m: &Povm, rho: &CMatrix) -> Vec<f64> {
    m.effects().iter().map(|e| trace_re(&(e * rho))).collect()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Real-parameter qubit state `(I + x X + y Y + z Z)/2`.
pub fn bloch(x: f64, y: f64, z: f64) -> DensityMatrix {
    let m = CMatrix::from_row_slice(2, 2, &[c(0.5 * (1.0 + z), 0.0), c(0.5 * x, -0.5 * y), c(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z), 0.0)]);
    DensityMatrix::new(m).unwrap()
}

/// Projective qubit measurement along the Bloch direction `(θ, φ)`.
pub fn qubit_projective(theta: f64, phi: f64) -> Povm {
    let (s, co) = (theta.sin(), theta.cos());
    let n = [s * phi.cos(), s * phi.sin(), co];
    let proj = |sign: f64| {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + sign * n[2]), 0.0),
                c(0.5 * sign * n[0], -0.5 * sign * n[1]),
                c(0.5 * sign * n[0], 0.5 * sign * n[1]),
                c(0.5 * (1.0 - sign * n[2]), 0.0),
            ],
        )
    };
    Povm::new(vec![proj(1.0), proj(-1.0)]).unwrap()
}

/// The shipped noncommuting qubit pair: `ρ` close to `|0⟩`, `σ` tilted toward `|+⟩`.
pub fn noncommuting_witness() -> (DensityMatrix, DensityMatrix) {
    (bloch(0.0, 0.0, 0.8), bloch(0.6, 0.0, 0.2))
}
