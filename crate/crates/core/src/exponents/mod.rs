//! Optimal adversarial error exponents over pairs of convex classes.
//!
//! The Stein exponent is `min_{p∈P, q∈Q} D(p‖q)` and the Chernoff exponent
//! is `min_{p∈P, q∈Q} Γ*(p, q)`. Both objectives are jointly convex, so a
//! first-order method over the vertex weights reaches the global minimum and
//! the Frank-Wolfe gaps double as optimality certificates: at the optimum
//! every `Q` vertex satisfies `Σ q · p*/q* ≤ 1` and every `P` vertex has
//! `E_p[L] ≥ D(p*‖q*)`, which is exactly what makes the likelihood-ratio
//! test robust against adaptive adversaries.

mod chernoff;
mod frank_wolfe;
mod oracle;
mod stein;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexClass, MixWeights};
use crate::error::Result;
use crate::lp::polytope_linf_distance;
use crate::prob::{ensure_same_alphabet, Distribution, ExtReal, LogLikelihoodTable};

pub use chernoff::{certify_chernoff, solve_chernoff};
pub use oracle::{brute_force_stein, BRUTE_FORCE_PAIR_LIMIT};
pub use stein::{certify_stein, kl_partials, solve_stein};

/// Residual bound a certificate must meet.
pub const CERTIFICATE_TOL: f64 = 1e-7;
/// Classes closer than this in ℓ∞ are treated as intersecting.
pub const INTERSECTION_TOL: f64 = 1e-10;

/// First-order optimality residuals of a Stein solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinCertificate {
    /// `max_{q ∈ vert Q} Σ_x q(x) p*(x)/q*(x)`; must not exceed 1.
    pub max_q_ratio: f64,
    /// `min_{p ∈ vert P} Σ_x p(x) L(x) − D(p*‖q*)`; must not be negative.
    pub min_p_drift: f64,
    /// Set when the exponent is infinite and no test is built.
    pub vacuous: bool,
}

impl SteinCertificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.vacuous || (self.max_q_ratio <= 1.0 + tol && self.min_p_drift >= -tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinSolution {
    pub p_star: Distribution,
    pub q_star: Distribution,
    pub exponent: ExtReal,
    /// Log-likelihood table of `(p*, q*)` with class-aware conventions.
    pub table: LogLikelihoodTable,
    pub weights_p: MixWeights,
    pub weights_q: MixWeights,
    pub certificate: SteinCertificate,
    pub iterations: usize,
    pub gap: f64,
    /// `P` vertices dropped because their support leaves every `Q` support.
    pub excluded_p_vertices: Vec<usize>,
    /// The classes intersect and the exponent is zero.
    pub intersecting: bool,
    pub diagnostic: Option<String>,
}

/// Tilted-ratio residuals of a Chernoff solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffCertificate {
    /// `max_{q ∈ vert Q} Σ q (p*/q*)^λ* − Σ q* (p*/q*)^λ*`.
    pub max_q_tilted_ratio: f64,
    /// `max_{p ∈ vert P} Σ p (q*/p*)^(1−λ*) − Σ p* (q*/p*)^(1−λ*)`.
    pub max_p_tilted_ratio: f64,
    /// `λ*` sits on the boundary of `[0, 1]`.
    pub degenerate: bool,
    /// Set when the exponent is infinite and no test is built.
    pub vacuous: bool,
}

impl ChernoffCertificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.vacuous || (self.max_q_tilted_ratio <= tol && self.max_p_tilted_ratio <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffSolution {
    pub p_star: Distribution,
    pub q_star: Distribution,
    pub lambda_star: f64,
    pub exponent: ExtReal,
    /// Log-likelihood table of `(p*, q*)` with class-aware conventions.
    pub table: LogLikelihoodTable,
    pub weights_p: MixWeights,
    pub weights_q: MixWeights,
    pub certificate: ChernoffCertificate,
    pub iterations: usize,
    pub gap: f64,
    pub intersecting: bool,
    pub diagnostic: Option<String>,
}

/// Closest pair of points of two classes in ℓ∞, if they (numerically) meet.
pub(crate) fn intersection_point(p: &ConvexClass, q: &ConvexClass) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    ensure_same_alphabet(p.alphabet(), q.alphabet())?;
    let pv: Vec<&[f64]> = p.vertices().iter().map(|v| v.weights()).collect();
    let qv: Vec<&[f64]> = q.vertices().iter().map(|v| v.weights()).collect();
    let (d, a, b) = polytope_linf_distance(&pv, &qv)?;
    Ok((d <= INTERSECTION_TOL).then_some((a, b)))
}

/// Exponentiated, tilted log-likelihood `e^{s L}` with the limiting
/// conventions at infinite `L` (the `s = 0` cases follow the one-sided limit
/// that matches the gradient of `Γ^λ` at a boundary `λ`).
pub(crate) fn tilt(l: ExtReal, s: f64) -> f64 {
    match l {
        ExtReal::Finite(v) => (s * v).exp(),
        ExtReal::PosInf => {
            if s > 0.0 {
                f64::INFINITY
            } else {
                1.0
            }
        }
        ExtReal::NegInf => 0.0,
    }
}

pub(crate) fn weighted_sum(w: &[f64], f: &[f64]) -> f64 {
    w.iter()
        .zip(f)
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, b)| a * b)
        .sum()
}

/// `ln(p*/q*)` with symbols outside both supports resolved by class support.
pub fn class_table(
    p_class: &ConvexClass,
    q_class: &ConvexClass,
    p_star: &Distribution,
    q_star: &Distribution,
) -> Result<LogLikelihoodTable> {
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    ensure_same_alphabet(p_class.alphabet(), p_star.alphabet())?;
    ensure_same_alphabet(p_class.alphabet(), q_star.alphabet())?;
    Ok(LogLikelihoodTable::with_class_supports(
        p_class.alphabet().clone(),
        p_star.weights(),
        q_star.weights(),
        &p_class.support_mask(),
        &q_class.support_mask(),
    ))
}
