use crate::convex::{ConvexClass, MixWeights};
use crate::error::{Error, Result};
use std::sync::Arc;

use crate::prob::{
    affinity_raw, chernoff_raw, ensure_same_alphabet, Alphabet, Distribution, ExtReal, LogLikelihoodTable,
};

use super::frank_wolfe::{minimize, Gaps, Objective, MAX_ITERATIONS};
use super::{class_table, intersection_point, tilt, weighted_sum, ChernoffCertificate, ChernoffSolution};

/// `Γ*(p, q)`, differentiated through the inner maximizer (Danskin).
struct ChernoffObjective<'a> {
    p_verts: &'a [&'a [f64]],
    q_verts: &'a [&'a [f64]],
    p_mask: Vec<bool>,
    q_mask: Vec<bool>,
    alphabet: Arc<Alphabet>,
}

fn gamma_partials(p: &[f64], q: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let f = affinity_raw(p, q, lambda);
    if f <= 0.0 {
        let inf = vec![f64::INFINITY; p.len()];
        return (inf.clone(), inf);
    }
    let mut gp = vec![0.0; p.len()];
    let mut gq = vec![0.0; p.len()];
    for x in 0..p.len() {
        let (a, b) = (p[x], q[x]);
        if a > 0.0 && b > 0.0 {
            let t = (lambda * a.ln() + (1.0 - lambda) * b.ln()).exp();
            gp[x] = -lambda * t / (a * f);
            gq[x] = -(1.0 - lambda) * t / (b * f);
        } else if a <= 0.0 && b > 0.0 {
            // Moving mass onto x raises the affinity: infinitely fast for
            // interior λ, linearly at λ = 1, not at all at λ = 0.
            gp[x] = if lambda >= 1.0 {
                -1.0 / f
            } else if lambda <= 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
        } else if b <= 0.0 && a > 0.0 {
            gq[x] = if lambda <= 0.0 {
                -1.0 / f
            } else if lambda >= 1.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    (gp, gq)
}

struct Residuals {
    q_side: f64,
    p_side: f64,
}

fn residuals(
    p_verts: &[&[f64]],
    q_verts: &[&[f64]],
    p: &[f64],
    q: &[f64],
    table: &LogLikelihoodTable,
    lambda: f64,
) -> Residuals {
    let rq: Vec<f64> = table.values().iter().map(|&l| tilt(l, lambda)).collect();
    let rp: Vec<f64> = table
        .values()
        .iter()
        .map(|&l| tilt(negate(l), 1.0 - lambda))
        .collect();
    let base_q = weighted_sum(q, &rq);
    let base_p = weighted_sum(p, &rp);
    let q_side = q_verts
        .iter()
        .map(|w| weighted_sum(w, &rq) - base_q)
        .fold(f64::NEG_INFINITY, f64::max);
    let p_side = p_verts
        .iter()
        .map(|v| weighted_sum(v, &rp) - base_p)
        .fold(f64::NEG_INFINITY, f64::max);
    Residuals { q_side, p_side }
}

fn negate(l: ExtReal) -> ExtReal {
    match l {
        ExtReal::Finite(v) => ExtReal::Finite(-v),
        ExtReal::PosInf => ExtReal::NegInf,
        ExtReal::NegInf => ExtReal::PosInf,
    }
}

impl Objective for ChernoffObjective<'_> {
    fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        chernoff_raw(p, q).value.to_f64()
    }

    fn partials(&self, p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = chernoff_raw(p, q);
        gamma_partials(p, q, c.lambda)
    }

    /// The tilted residuals differ from the Frank-Wolfe gaps by the factors
    /// `f/λ` and `f/(1−λ)`; require them too on non-degenerate sides.
    fn accept(&self, p: &[f64], q: &[f64], _gaps: Gaps, tol: f64) -> bool {
        let lambda = chernoff_raw(p, q).lambda;
        let table = LogLikelihoodTable::with_class_supports(
            self.alphabet.clone(),
            p,
            q,
            &self.p_mask,
            &self.q_mask,
        );
        let r = residuals(self.p_verts, self.q_verts, p, q, &table, lambda);
        (lambda >= 1.0 || r.q_side <= tol) && (lambda <= 0.0 || r.p_side <= tol)
    }
}

/// Minimizes `Γ*(p, q)` over `P × Q` to Frank-Wolfe gap `tol`.
pub fn solve_chernoff(p_class: &ConvexClass, q_class: &ConvexClass, tol: f64) -> Result<ChernoffSolution> {
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let alphabet = p_class.alphabet().clone();
    let placeholder = ChernoffCertificate {
        max_q_tilted_ratio: 0.0,
        max_p_tilted_ratio: 0.0,
        degenerate: false,
        vacuous: false,
    };

    if let Some((a, b)) = intersection_point(p_class, q_class)? {
        let p_star = p_class.mix(&MixWeights::from_raw(a.clone()))?;
        let mut sol = ChernoffSolution {
            table: class_table(p_class, q_class, &p_star, &p_star)?,
            q_star: p_star.clone(),
            p_star,
            lambda_star: 0.5,
            exponent: ExtReal::ZERO,
            weights_p: MixWeights::from_raw(a),
            weights_q: MixWeights::from_raw(b),
            certificate: placeholder,
            iterations: 0,
            gap: 0.0,
            intersecting: true,
            diagnostic: Some("classes intersect; the exponent is zero".into()),
        };
        sol.certificate = certify_chernoff(p_class, q_class, &sol)?;
        return Ok(sol);
    }

    let overlap = p_class
        .support_mask()
        .iter()
        .zip(q_class.support_mask())
        .any(|(a, b)| *a && b);
    if !overlap {
        let p_star = p_class.mix(&MixWeights::uniform(p_class.len()))?;
        let q_star = q_class.mix(&MixWeights::uniform(q_class.len()))?;
        return Ok(ChernoffSolution {
            table: class_table(p_class, q_class, &p_star, &q_star)?,
            p_star,
            q_star,
            lambda_star: 0.5,
            exponent: ExtReal::PosInf,
            weights_p: MixWeights::uniform(p_class.len()),
            weights_q: MixWeights::uniform(q_class.len()),
            certificate: ChernoffCertificate {
                vacuous: true,
                ..placeholder
            },
            iterations: 0,
            gap: 0.0,
            intersecting: false,
            diagnostic: Some("the supports of P and Q are disjoint; Γ* = +∞ everywhere".into()),
        });
    }

    let p_verts: Vec<&[f64]> = p_class.vertices().iter().map(|v| v.weights()).collect();
    let q_verts: Vec<&[f64]> = q_class.vertices().iter().map(|v| v.weights()).collect();
    let a0 = vec![1.0 / p_class.len() as f64; p_class.len()];
    let b0 = vec![1.0 / q_class.len() as f64; q_class.len()];
    let objective = ChernoffObjective {
        p_verts: &p_verts,
        q_verts: &q_verts,
        p_mask: p_class.support_mask(),
        q_mask: q_class.support_mask(),
        alphabet: alphabet.clone(),
    };
    let out = minimize(&objective, &p_verts, &q_verts, a0, b0, tol, MAX_ITERATIONS);
    if !out.converged {
        return Err(Error::NonConvergence {
            what: "Chernoff Frank-Wolfe".into(),
            iterations: out.iterations,
            best_value: out.value,
            gap: out.gaps.p + out.gaps.q,
            best_weights_p: out.a,
            best_weights_q: out.b,
        });
    }
    let p_star = Distribution::new(alphabet.clone(), out.p)?;
    let q_star = Distribution::new(alphabet, out.q)?;
    let point = chernoff_raw(p_star.weights(), q_star.weights());
    let diagnostic = point.is_degenerate().then(|| {
        format!(
            "λ* = {} lies on the boundary; subgradients are one-sided",
            point.lambda
        )
    });
    let mut sol = ChernoffSolution {
        table: class_table(p_class, q_class, &p_star, &q_star)?,
        p_star,
        q_star,
        lambda_star: point.lambda,
        exponent: point.value,
        weights_p: MixWeights::from_raw(out.a),
        weights_q: MixWeights::from_raw(out.b),
        certificate: placeholder,
        iterations: out.iterations,
        gap: out.gaps.p + out.gaps.q,
        intersecting: false,
        diagnostic,
    };
    sol.certificate = certify_chernoff(p_class, q_class, &sol)?;
    Ok(sol)
}

/// Evaluates the tilted likelihood-ratio residuals at every class vertex.
pub fn certify_chernoff(
    p_class: &ConvexClass,
    q_class: &ConvexClass,
    sol: &ChernoffSolution,
) -> Result<ChernoffCertificate> {
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    ensure_same_alphabet(p_class.alphabet(), sol.p_star.alphabet())?;
    let lambda = sol.lambda_star;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    if !sol.exponent.is_finite() {
        return Ok(ChernoffCertificate {
            max_q_tilted_ratio: 0.0,
            max_p_tilted_ratio: 0.0,
            degenerate: false,
            vacuous: true,
        });
    }
    let p_verts: Vec<&[f64]> = p_class.vertices().iter().map(|v| v.weights()).collect();
    let q_verts: Vec<&[f64]> = q_class.vertices().iter().map(|v| v.weights()).collect();
    let table = class_table(p_class, q_class, &sol.p_star, &sol.q_star)?;
    let r = residuals(
        &p_verts,
        &q_verts,
        sol.p_star.weights(),
        sol.q_star.weights(),
        &table,
        lambda,
    );
    Ok(ChernoffCertificate {
        max_q_tilted_ratio: r.q_side,
        max_p_tilted_ratio: r.p_side,
        degenerate: lambda <= 0.0 || lambda >= 1.0,
        vacuous: false,
    })
}
