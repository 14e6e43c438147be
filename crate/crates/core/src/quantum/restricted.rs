use std::sync::Arc;

use serde::Serialize;

use crate::convex::ConvexClass;
use crate::error::{Error, Result};
use crate::exponents::{solve_chernoff, solve_stein, ChernoffSolution, SteinSolution};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::prob::{kl_raw, Alphabet, Distribution, ExtReal};

use super::ops::apply_measurement;
use super::state::{MeasurementMenu, Povm, StateClass};

/// Image of a state class under one POVM: the deduplicated classical class
/// and, for each original vertex, the index of its image vertex.
pub fn measured_image(povm: &Povm, class: &StateClass) -> Result<(ConvexClass, Vec<usize>)> {
    let images = class
        .vertices()
        .iter()
        .map(|rho| apply_measurement(povm, rho))
        .collect::<Result<Vec<_>>>()?;
    ConvexClass::from_vertices_with_map(images)
}

fn check_dims(menu: &MeasurementMenu, r: &StateClass, s: &StateClass) -> Result<()> {
    if menu.dim() != r.dim() || menu.dim() != s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "menu acts on dimension {}, classes have dimensions {} and {}",
            menu.dim(),
            r.dim(),
            s.dim()
        )));
    }
    Ok(())
}

fn with_index<T>(index: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Menu {
        index,
        source: Box::new(e),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedDivergence {
    /// `max_M min_{ρ∈R, σ∈S} D(M(ρ)‖M(σ))` in nats.
    pub value: ExtReal,
    /// First menu element attaining the maximum.
    pub best_povm_index: usize,
    /// Classical solution on the images of the best element.
    pub solution: SteinSolution,
    /// The inner minimum for every menu element.
    pub per_povm: Vec<ExtReal>,
}

/// Measured relative entropy between two state classes, maximized over a
/// finite menu. Each element reduces the problem to the classical Stein
/// exponent of the image polytopes, since the Born rule is affine.
pub fn restricted_divergence(
    menu: &MeasurementMenu,
    r: &StateClass,
    s: &StateClass,
    tol: f64,
) -> Result<RestrictedDivergence> {
    check_dims(menu, r, s)?;
    let mut best: Option<(usize, SteinSolution)> = None;
    let mut per_povm = Vec::with_capacity(menu.len());
    for (i, m) in menu.povms().iter().enumerate() {
        let sol = with_index(i, (|| {
            let (p, _) = measured_image(m, r)?;
            let (q, _) = measured_image(m, s)?;
            solve_stein(&p, &q, tol)
        })())?;
        per_povm.push(sol.exponent);
        if best.as_ref().is_none_or(|(_, b)| sol.exponent > b.exponent) {
            best = Some((i, sol));
        }
    }
    let (best_povm_index, solution) = best.expect("menus are nonempty");
    Ok(RestrictedDivergence {
        value: solution.exponent,
        best_povm_index,
        solution,
        per_povm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedChernoff {
    pub value: ExtReal,
    pub best_povm_index: usize,
    pub solution: ChernoffSolution,
    pub per_povm: Vec<ExtReal>,
}

/// Chernoff counterpart of [`restricted_divergence`].
pub fn restricted_chernoff(
    menu: &MeasurementMenu,
    r: &StateClass,
    s: &StateClass,
    tol: f64,
) -> Result<RestrictedChernoff> {
    check_dims(menu, r, s)?;
    let mut best: Option<(usize, ChernoffSolution)> = None;
    let mut per_povm = Vec::with_capacity(menu.len());
    for (i, m) in menu.povms().iter().enumerate() {
        let sol = with_index(i, (|| {
            let (p, _) = measured_image(m, r)?;
            let (q, _) = measured_image(m, s)?;
            solve_chernoff(&p, &q, tol)
        })())?;
        per_povm.push(sol.exponent);
        if best.as_ref().is_none_or(|(_, b)| sol.exponent > b.exponent) {
            best = Some((i, sol));
        }
    }
    let (best_povm_index, solution) = best.expect("menus are nonempty");
    Ok(RestrictedChernoff {
        value: solution.exponent,
        best_povm_index,
        solution,
        per_povm,
    })
}

/// Both sides of the measured-divergence minimax identity.
#[derive(Debug, Clone, Serialize)]
pub struct MinimaxReport {
    /// `max_μ min_{ρ,σ} E_μ D(M(ρ)‖M(σ))`, certified from below.
    pub lhs: f64,
    /// `min_{ρ,σ} max_M D(M(ρ)‖M(σ))`, certified from above.
    pub rhs: f64,
    /// `rhs − lhs`; nonnegative up to solver tolerance.
    pub gap: f64,
    /// `max_M min_{ρ,σ} D(M(ρ)‖M(σ))` over single menu elements.
    pub lhs_pure: f64,
    /// Optimal mixture over the menu.
    pub mu: Vec<f64>,
    /// Optimal state weights on the min-max side.
    pub weights_r: Vec<f64>,
    pub weights_s: Vec<f64>,
    pub iterations_lhs: usize,
    pub iterations_rhs: usize,
}

const MINIMAX_MAX_ITERATIONS: usize = 5000;
/// Linearization points are pulled this far toward the barycenter so every
/// image distribution has full support and gradients stay finite.
const NUDGE: f64 = 1e-10;

/// Outcome distributions of every menu element on every vertex.
struct MenuImages {
    /// `r[i][v]` is the outcome distribution of POVM `i` on vertex `v` of `R`.
    r: Vec<Vec<Vec<f64>>>,
    s: Vec<Vec<Vec<f64>>>,
}

impl MenuImages {
    fn new(menu: &MeasurementMenu, r: &StateClass, s: &StateClass) -> Result<Self> {
        let img = |class: &StateClass| -> Result<Vec<Vec<Vec<f64>>>> {
            menu.povms()
                .iter()
                .map(|m| {
                    class
                        .vertices()
                        .iter()
                        .map(|rho| apply_measurement(m, rho).map(|d| d.weights().to_vec()))
                        .collect()
                })
                .collect()
        };
        Ok(MenuImages { r: img(r)?, s: img(s)? })
    }

    fn mix(vertices: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; vertices[0].len()];
        for (v, &wi) in vertices.iter().zip(w) {
            if wi != 0.0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += wi * x;
                }
            }
        }
        out
    }

    /// `f_i(a, b) = D(M_i(ρ_a)‖M_i(σ_b))` for every menu element.
    fn values(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.r.len())
            .map(|i| kl_raw(&Self::mix(&self.r[i], a), &Self::mix(&self.s[i], b)).to_f64())
            .collect()
    }

    /// Gradient of `f_i` in `(a, b)` at an interior point.
    fn gradient(&self, i: usize, a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
        let p = Self::mix(&self.r[i], a);
        let q = Self::mix(&self.s[i], b);
        let value = kl_raw(&p, &q).to_f64();
        let gp: Vec<f64> = p
            .iter()
            .zip(&q)
            .map(|(&x, &y)| if x > 0.0 { (x / y).ln() + 1.0 } else { 0.0 })
            .collect();
        let gq: Vec<f64> = p.iter().zip(&q).map(|(&x, &y)| if y > 0.0 { -x / y } else { 0.0 }).collect();
        let dot = |v: &Vec<f64>, g: &[f64]| v.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        let mut grad: Vec<f64> = self.r[i].iter().map(|v| dot(v, &gp)).collect();
        grad.extend(self.s[i].iter().map(|v| dot(v, &gq)));
        (value, grad)
    }

    /// Concatenated classes for the mixture `μ`: outcome `(i, x)` has
    /// probability `μ_i · M_i(ρ)(x)`, so `D` of the images is `E_μ D`.
    fn mixed_classes(&self, mu: &[f64]) -> Result<(ConvexClass, ConvexClass, Vec<usize>, Vec<usize>)> {
        let len: usize = self.r.iter().map(|m| m[0].len()).sum();
        let alphabet = Arc::new(Alphabet::new(len)?);
        let build = |img: &Vec<Vec<Vec<f64>>>| -> Result<(ConvexClass, Vec<usize>)> {
            let verts = (0..img[0].len())
                .map(|v| {
                    let w: Vec<f64> = img
                        .iter()
                        .zip(mu)
                        .flat_map(|(m, &u)| m[v].iter().map(move |x| u * x))
                        .collect();
                    Distribution::new(alphabet.clone(), w)
                })
                .collect::<Result<Vec<_>>>()?;
            ConvexClass::from_vertices_with_map(verts)
        };
        let (p, pm) = build(&self.r)?;
        let (q, qm) = build(&self.s)?;
        Ok((p, q, pm, qm))
    }
}

/// Spreads weights on deduplicated vertices back onto the first original
/// vertex mapped to each.
fn expand(weights: &[f64], map: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; map.len()];
    for (j, &w) in weights.iter().enumerate() {
        let rep = map.iter().position(|&m| m == j).expect("every class vertex has a preimage");
        out[rep] = w;
    }
    out
}

fn nudge(w: &[f64]) -> Vec<f64> {
    let u = 1.0 / w.len() as f64;
    w.iter().map(|&x| (1.0 - NUDGE) * x + NUDGE * u).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Verifies `max_M min_{ρ,σ} = min_{ρ,σ} max_M` for measured relative
/// entropy, where the max side ranges over mixtures of menu elements.
///
/// The max-min side is solved by column generation: an LP over `μ` against
/// the state pairs found so far proposes a mixture, and the classical Stein
/// solver on the mixed images returns its exact best response. The min-max
/// side is solved independently by Kelley cutting planes on the state
/// weights. Each side stops when its own upper and lower bounds meet within
/// `tol/2`, so `lhs` is a certified lower bound on the max-min value and
/// `rhs` a certified upper bound on the min-max value.
pub fn minimax_gap(menu: &MeasurementMenu, r: &StateClass, s: &StateClass, tol: f64) -> Result<MinimaxReport> {
    check_dims(menu, r, s)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let images = MenuImages::new(menu, r, s)?;
    let k = menu.len();
    let (nr, ns) = (r.len(), s.len());
    let bary_a = vec![1.0 / nr as f64; nr];
    let bary_b = vec![1.0 / ns as f64; ns];
    if images.values(&bary_a, &bary_b).iter().any(|v| v.is_infinite()) {
        return Err(Error::InvalidArgument(
            "a menu element has infinite divergence at the barycenter of R × S; the minimax check needs finite values"
                .into(),
        ));
    }
    let solver_tol = (tol * 1e-3).max(1e-12);

    // Max-min side.
    let mut cuts: Vec<Vec<f64>> = Vec::new();
    let mut lhs = f64::NEG_INFINITY;
    let mut lhs_pure = f64::NEG_INFINITY;
    let mut best_mu = vec![1.0 / k as f64; k];
    let evaluate = |mu: &[f64], cuts: &mut Vec<Vec<f64>>| -> Result<f64> {
        let (p, q, pm, qm) = images.mixed_classes(mu)?;
        let sol = solve_stein(&p, &q, solver_tol)?;
        let a = expand(sol.weights_p.as_slice(), &pm);
        let b = expand(sol.weights_q.as_slice(), &qm);
        cuts.push(images.values(&a, &b));
        Ok(sol.exponent.to_f64())
    };
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        let g = evaluate(&e, &mut cuts)?;
        lhs_pure = lhs_pure.max(g);
        if g > lhs {
            lhs = g;
            best_mu = e;
        }
    }
    let mut iterations_lhs = k;
    loop {
        // max s subject to s ≤ Σ μ_i f_i(z_c) for every cut, μ in the simplex.
        let mut lp = LinearProgram::minimize([vec![0.0; k], vec![-1.0]].concat());
        for f in &cuts {
            let mut row: Vec<f64> = f.iter().map(|x| -x).collect();
            row.push(1.0);
            lp.add_constraint(row, Relation::Le, 0.0);
        }
        lp.add_constraint([vec![1.0; k], vec![0.0]].concat(), Relation::Eq, 1.0);
        let (x, upper) = match lp.solve()? {
            LpOutcome::Optimal { x, value } => (x, -value),
            other => return Err(Error::Lp(format!("mixture master problem: {other:?}"))),
        };
        if upper - lhs <= 0.5 * tol {
            break;
        }
        if iterations_lhs >= MINIMAX_MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                what: "minimax max-min side".into(),
                iterations: iterations_lhs,
                best_value: lhs,
                gap: upper - lhs,
                best_weights_p: best_mu,
                best_weights_q: Vec::new(),
            });
        }
        let mu = crate::lp::normalize(&x[..k]);
        let g = evaluate(&mu, &mut cuts)?;
        iterations_lhs += 1;
        if g > lhs {
            lhs = g;
            best_mu = mu;
        }
    }

    // Min-max side.
    let n = nr + ns;
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut rhs = f64::INFINITY;
    let (mut best_a, mut best_b) = (bary_a.clone(), bary_b.clone());
    let (mut a, mut b) = (bary_a, bary_b);
    let mut iterations_rhs = 0;
    loop {
        let (za, zb) = (nudge(&a), nudge(&b));
        let z: Vec<f64> = za.iter().chain(&zb).copied().collect();
        let vals = images.values(&za, &zb);
        let top = max_of(&vals);
        if top < rhs {
            rhs = top;
            best_a = za.clone();
            best_b = zb.clone();
        }
        for i in 0..k {
            let (f, g) = images.gradient(i, &za, &zb);
            // f + g·(w − z) ≤ t  ⇔  g·w − t ≤ g·z − f
            let rhs_const = g.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() - f;
            planes.push((g, rhs_const));
        }
        iterations_rhs += 1;
        let mut lp = LinearProgram::minimize([vec![0.0; n], vec![1.0]].concat());
        for (g, c) in &planes {
            let mut row = g.clone();
            row.push(-1.0);
            lp.add_constraint(row, Relation::Le, *c);
        }
        lp.add_constraint(
            [vec![1.0; nr], vec![0.0; ns], vec![0.0]].concat(),
            Relation::Eq,
            1.0,
        );
        lp.add_constraint(
            [vec![0.0; nr], vec![1.0; ns], vec![0.0]].concat(),
            Relation::Eq,
            1.0,
        );
        let (x, lower) = match lp.solve()? {
            LpOutcome::Optimal { x, value } => (x, value),
            other => return Err(Error::Lp(format!("cutting-plane master problem: {other:?}"))),
        };
        if rhs - lower <= 0.5 * tol {
            break;
        }
        if iterations_rhs >= MINIMAX_MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                what: "minimax min-max side".into(),
                iterations: iterations_rhs,
                best_value: rhs,
                gap: rhs - lower,
                best_weights_p: best_a,
                best_weights_q: best_b,
            });
        }
        a = crate::lp::normalize(&x[..nr]);
        b = crate::lp::normalize(&x[nr..n]);
    }

    Ok(MinimaxReport {
        lhs,
        rhs,
        gap: rhs - lhs,
        lhs_pure,
        mu: best_mu,
        weights_r: best_a,
        weights_s: best_b,
        iterations_lhs,
        iterations_rhs,
    })
}
