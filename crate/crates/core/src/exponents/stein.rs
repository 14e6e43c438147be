use crate::convex::{ConvexClass, MixWeights};
use crate::error::{Error, Result};
use crate::prob::{ensure_same_alphabet, kl_raw, Distribution, ExtReal};

use super::frank_wolfe::{minimize, Objective, MAX_ITERATIONS};
use super::{class_table, intersection_point, tilt, weighted_sum, SteinCertificate, SteinSolution};

struct Kl;

fn kl_partials_raw(p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gp = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            if b <= 0.0 {
                f64::INFINITY
            } else if a <= 0.0 {
                f64::NEG_INFINITY
            } else {
                (a / b).ln() + 1.0
            }
        })
        .collect();
    let gq = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::NEG_INFINITY
            } else {
                -a / b
            }
        })
        .collect();
    (gp, gq)
}

impl Objective for Kl {
    fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        kl_raw(p, q).to_f64()
    }

    fn partials(&self, p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        kl_partials_raw(p, q)
    }
}

/// Partial derivatives of `D(p‖q)` in the coordinates of `p` and `q`:
/// `ln(p/q) + 1` and `−p/q`.
pub fn kl_partials(p: &Distribution, q: &Distribution) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_same_alphabet(p.alphabet(), q.alphabet())?;
    Ok(kl_partials_raw(p.weights(), q.weights()))
}

fn embed(weights: &[f64], positions: &[usize], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (w, &i) in weights.iter().zip(positions) {
        out[i] = *w;
    }
    out
}

/// Minimizes `D(p‖q)` over `P × Q` to Frank-Wolfe gap `tol`.
pub fn solve_stein(p_class: &ConvexClass, q_class: &ConvexClass, tol: f64) -> Result<SteinSolution> {
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let alphabet = p_class.alphabet().clone();

    if let Some((a, b)) = intersection_point(p_class, q_class)? {
        let p_star = p_class.mix(&MixWeights::from_raw(a.clone()))?;
        let mut sol = SteinSolution {
            table: class_table(p_class, q_class, &p_star, &p_star)?,
            q_star: p_star.clone(),
            p_star,
            exponent: ExtReal::ZERO,
            weights_p: MixWeights::from_raw(a),
            weights_q: MixWeights::from_raw(b),
            certificate: SteinCertificate {
                max_q_ratio: 0.0,
                min_p_drift: 0.0,
                vacuous: false,
            },
            iterations: 0,
            gap: 0.0,
            excluded_p_vertices: Vec::new(),
            intersecting: true,
            diagnostic: Some("classes intersect; the exponent is zero".into()),
        };
        sol.certificate = certify_stein(p_class, q_class, &sol)?;
        return Ok(sol);
    }

    let q_support = q_class.support_mask();
    let (feasible, excluded): (Vec<usize>, Vec<usize>) = (0..p_class.len()).partition(|&i| {
        p_class
            .vertex(i)
            .weights()
            .iter()
            .zip(&q_support)
            .all(|(&w, &s)| w == 0.0 || s)
    });

    if feasible.is_empty() {
        let p_star = p_class.mix(&MixWeights::uniform(p_class.len()))?;
        let q_star = q_class.mix(&MixWeights::uniform(q_class.len()))?;
        return Ok(SteinSolution {
            table: class_table(p_class, q_class, &p_star, &q_star)?,
            p_star,
            q_star,
            exponent: ExtReal::PosInf,
            weights_p: MixWeights::uniform(p_class.len()),
            weights_q: MixWeights::uniform(q_class.len()),
            certificate: SteinCertificate {
                max_q_ratio: 0.0,
                min_p_drift: f64::INFINITY,
                vacuous: true,
            },
            iterations: 0,
            gap: 0.0,
            excluded_p_vertices: excluded,
            intersecting: false,
            diagnostic: Some(
                "every P vertex charges a symbol outside the support of Q; D(p‖q) = +∞ on all of P × Q"
                    .into(),
            ),
        });
    }

    let p_verts: Vec<&[f64]> = feasible.iter().map(|&i| p_class.vertex(i).weights()).collect();
    let q_verts: Vec<&[f64]> = q_class.vertices().iter().map(|v| v.weights()).collect();
    let a0 = vec![1.0 / feasible.len() as f64; feasible.len()];
    let b0 = vec![1.0 / q_class.len() as f64; q_class.len()];
    let out = minimize(&Kl, &p_verts, &q_verts, a0, b0, tol, MAX_ITERATIONS);
    let weights_p = embed(&out.a, &feasible, p_class.len());
    if !out.converged {
        return Err(Error::NonConvergence {
            what: "Stein Frank-Wolfe".into(),
            iterations: out.iterations,
            best_value: out.value,
            gap: out.gaps.p + out.gaps.q,
            best_weights_p: weights_p,
            best_weights_q: out.b,
        });
    }
    let p_star = Distribution::new(alphabet.clone(), out.p)?;
    let q_star = Distribution::new(alphabet, out.q)?;
    let exponent = kl_raw(p_star.weights(), q_star.weights());
    let diagnostic = (!excluded.is_empty()).then(|| {
        format!(
            "P vertices {excluded:?} have infinite divergence from every Q element and were excluded"
        )
    });
    let mut sol = SteinSolution {
        table: class_table(p_class, q_class, &p_star, &q_star)?,
        p_star,
        q_star,
        exponent,
        weights_p: MixWeights::from_raw(weights_p),
        weights_q: MixWeights::from_raw(out.b),
        certificate: SteinCertificate {
            max_q_ratio: 0.0,
            min_p_drift: 0.0,
            vacuous: false,
        },
        iterations: out.iterations,
        gap: out.gaps.p + out.gaps.q,
        excluded_p_vertices: excluded,
        intersecting: false,
        diagnostic,
    };
    sol.certificate = certify_stein(p_class, q_class, &sol)?;
    Ok(sol)
}

/// Evaluates the likelihood-ratio and drift residuals at every class vertex.
pub fn certify_stein(p_class: &ConvexClass, q_class: &ConvexClass, sol: &SteinSolution) -> Result<SteinCertificate> {
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    ensure_same_alphabet(p_class.alphabet(), sol.p_star.alphabet())?;
    let d = match kl_raw(sol.p_star.weights(), sol.q_star.weights()) {
        ExtReal::Finite(d) => d,
        _ => {
            return Ok(SteinCertificate {
                max_q_ratio: 0.0,
                min_p_drift: f64::INFINITY,
                vacuous: true,
            })
        }
    };
    let table = class_table(p_class, q_class, &sol.p_star, &sol.q_star)?;
    let ratio: Vec<f64> = table.values().iter().map(|&l| tilt(l, 1.0)).collect();
    let max_q_ratio = q_class
        .vertices()
        .iter()
        .map(|w| weighted_sum(w.weights(), &ratio))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_p_drift = p_class
        .vertices()
        .iter()
        .map(|v| {
            let mut s = 0.0;
            let mut pos = false;
            for (&w, l) in v.weights().iter().zip(table.values()) {
                if w > 0.0 {
                    match l {
                        ExtReal::Finite(x) => s += w * x,
                        ExtReal::PosInf => pos = true,
                        ExtReal::NegInf => return f64::NEG_INFINITY,
                    }
                }
            }
            if pos {
                f64::INFINITY
            } else {
                s - d
            }
        })
        .fold(f64::INFINITY, f64::min);
    Ok(SteinCertificate {
        max_q_ratio,
        min_p_drift,
        vacuous: false,
    })
}
