use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::prob::{shannon_entropy, Alphabet, Distribution, ExtReal};

use super::linalg::{hermitian_eigen, trace_product, CMatrix};
use super::state::{BipartiteStructure, DensityMatrix, Povm, EIGEN_TOL, TRACE_TOL};

/// Eigenvalues of `σ` at or below this are outside its support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// `ρ` mass on `ker σ` above this makes `D(ρ‖σ)` infinite.
pub const KERNEL_MASS_TOL: f64 = 1e-9;
/// Eigenvalues of `θρ − σ` at or above `−NP_TOL` count as nonnegative.
pub const NP_TOL: f64 = 1e-12;

fn same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: dimension {a} vs {b}")));
    }
    Ok(())
}

/// Born-rule outcome probabilities `Re tr(M_i ρ)`, clipped at zero.
pub fn apply_measurement(m: &Povm, rho: &DensityMatrix) -> Result<Distribution> {
    same_dim(m.dim(), rho.dim(), "measurement and state")?;
    let mut w: Vec<f64> = m
        .effects()
        .iter()
        .map(|e| trace_product(e, rho.matrix()).re.max(0.0))
        .collect();
    let total: f64 = w.iter().sum();
    if !((total - 1.0).abs() <= TRACE_TOL) {
        return Err(Error::InvalidMeasurement(format!(
            "outcome probabilities sum to {total}, expected 1"
        )));
    }
    if total != 1.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    Distribution::new(Arc::new(Alphabet::new(m.len())?), w)
}

/// Von Neumann entropy `−tr ρ ln ρ` (nats).
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(rho.eigenvalues())
}

/// `D(ρ‖σ) = tr ρ (ln ρ − ln σ)`, infinite when `ρ` has weight outside the
/// support of `σ`.
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    same_dim(rho.dim(), sigma.dim(), "relative entropy")?;
    let er = rho.eigen();
    let es = sigma.eigen();
    let d = rho.dim();
    let neg_entropy: f64 = er.values.iter().filter(|&&a| a > 0.0).map(|&a| a * a.ln()).sum();
    let mut cross = 0.0;
    for j in 0..d {
        let b = es.values[j];
        // ⟨v_j|ρ|v_j⟩ = Σ_i a_i |⟨u_i|v_j⟩|².
        let mut mass = 0.0;
        for i in 0..d {
            let a = er.values[i];
            if a <= 0.0 {
                continue;
            }
            let overlap: Complex64 = (0..d).map(|k| er.vectors[(k, i)].conj() * es.vectors[(k, j)]).sum();
            mass += a * overlap.norm_sqr();
        }
        if b <= SUPPORT_TOL {
            if mass > KERNEL_MASS_TOL {
                return Ok(ExtReal::PosInf);
            }
            continue;
        }
        cross += mass * b.ln();
    }
    Ok(ExtReal::Finite((neg_entropy - cross).max(0.0)))
}

/// Projector onto the nonnegative eigenspace of `θρ − σ`.
pub fn neyman_pearson_effect(theta: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<CMatrix> {
    same_dim(rho.dim(), sigma.dim(), "Neyman-Pearson effect")?;
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("theta must be finite and nonnegative, got {theta}")));
    }
    let x = rho.matrix() * Complex64::new(theta, 0.0) - sigma.matrix();
    let e = hermitian_eigen(&x)?;
    Ok(e.map(|l| if l >= -NP_TOL { 1.0 } else { 0.0 }))
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim(), "trace distance")?;
    let e = hermitian_eigen(&(rho.matrix() - sigma.matrix()))?;
    Ok((0.5 * e.values.iter().map(|l| l.abs()).sum::<f64>()).min(1.0))
}

/// Splits a flat index into per-factor digits (first factor most significant).
fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn flat(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Partial trace of a matrix over every factor not in `keep`.
pub(crate) fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidStructure(format!(
            "subsystem index out of range in {keep:?} for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kd: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let td: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let nk: usize = kd.iter().product();
    let nt: usize = td.iter().product();
    let compose = |a: &[usize], t: &[usize]| {
        let mut full = vec![0; dims.len()];
        for (slot, &k) in keep.iter().enumerate() {
            full[k] = a[slot];
        }
        for (slot, &k) in traced.iter().enumerate() {
            full[k] = t[slot];
        }
        flat(&full, dims)
    };
    let mut out = CMatrix::zeros(nk, nk);
    for r in 0..nk {
        let rd = digits(r, &kd);
        for c in 0..nk {
            let cd = digits(c, &kd);
            let mut s = Complex64::new(0.0, 0.0);
            for t in 0..nt {
                let tdg = digits(t, &td);
                s += m[(compose(&rd, &tdg), compose(&cd, &tdg))];
            }
            out[(r, c)] = s;
        }
    }
    Ok(out)
}

/// Marginal on the factors listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, structure: &BipartiteStructure, keep: &[usize]) -> Result<DensityMatrix> {
    structure.check(rho.dim())?;
    DensityMatrix::new(partial_trace_matrix(rho.matrix(), structure.dims(), keep)?)
}

/// Transposes factor `subsystem` of a matrix on a composite space.
pub fn partial_transpose(m: &CMatrix, structure: &BipartiteStructure, subsystem: usize) -> Result<CMatrix> {
    structure.check(m.nrows())?;
    let dims = structure.dims();
    if subsystem >= dims.len() {
        return Err(Error::InvalidStructure(format!("no factor {subsystem} in {dims:?}")));
    }
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut rd = digits(r, dims);
            let mut cd = digits(c, dims);
            std::mem::swap(&mut rd[subsystem], &mut cd[subsystem]);
            out[(flat(&rd, dims), flat(&cd, dims))] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of the partial transpose on the second factor.
pub fn min_partial_transpose_eigenvalue(rho: &DensityMatrix, structure: &BipartiteStructure) -> Result<f64> {
    if structure.dims().len() != 2 {
        return Err(Error::InvalidStructure("the PPT test needs a bipartite structure".into()));
    }
    let pt = partial_transpose(rho.matrix(), structure, 1)?;
    Ok(hermitian_eigen(&pt)?.values[0])
}

/// Positive-partial-transpose test; decides separability when
/// `d_A · d_B ≤ 6`.
pub fn ppt_check(rho: &DensityMatrix, structure: &BipartiteStructure) -> Result<bool> {
    Ok(min_partial_transpose_eigenvalue(rho, structure)? >= -EIGEN_TOL)
}
