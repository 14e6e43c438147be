use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::polytope_linf_distance;
use crate::prob::{kl_raw, ExtReal};

use super::linalg::{kron, trace, trace_product, CMatrix};
use super::ops::{apply_measurement, min_partial_transpose_eigenvalue, partial_trace, partial_trace_matrix, von_neumann_entropy};
use super::restricted::restricted_divergence;
use super::state::{BipartiteStructure, DensityMatrix, MeasurementMenu, OneWayLocc, Povm, StateClass, EIGEN_TOL};

/// Tolerance for the chain's equalities and inequalities.
pub const CHAIN_TOL: f64 = 1e-9;
/// Outcomes at or below this probability have no residual state.
pub const BRANCH_TOL: f64 = 1e-12;
/// Largest total dimension where the PPT test decides separability.
pub const PPT_EXACT_DIM: usize = 6;

fn ext_close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= tol,
        _ => a == b,
    }
}

fn ext_geq(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => x - y >= -tol,
        _ => a >= b,
    }
}

fn ext_add(a: ExtReal, b: ExtReal) -> ExtReal {
    ExtReal::from_f64(a.to_f64() + b.to_f64())
}

/// Every line of the chain bounding the joint measured divergence of a
/// bipartite pair by the divergences of its local measurements.
#[derive(Debug, Clone, Serialize)]
pub struct SuperadditivityReport {
    /// `D((M_X⊗M_Y)(ρ) ‖ (M_X⊗M_Y)(σ))`.
    pub joint: ExtReal,
    /// The same divergence written through branch probabilities and
    /// conditional outcome distributions.
    pub block: ExtReal,
    /// `D(p(ρ_X)‖p(σ_X)) + Σ_i p_i(ρ_X) D(M_Y(ρ_Y^i)‖M_Y(σ_Y^i))`.
    pub chain: ExtReal,
    /// `D(M_X ρ_X‖M_X σ_X) + D(Σ_i p_i(ρ_X) M_Y(ρ_Y^i) ‖ Σ_i p_i(ρ_X) M_Y(σ_Y^i))`.
    pub convexity_bound: ExtReal,
    /// `D(M_X ρ_X‖M_X σ_X) + D(M_Y ρ_Y ‖ M_Y(Σ_i p_i(ρ_X) σ_Y^i))`.
    pub marginal_bound: ExtReal,
    /// `D(M_X ρ_X‖M_X σ_X) + D(M_Y ρ_Y‖M_Y σ_Y)`: the last line with the
    /// `σ` conditionals reweighted by `p_i(σ_X)` instead of `p_i(ρ_X)`. It
    /// equals `marginal_bound` only when `p(ρ_X) = p(σ_X)` and is reported
    /// for comparison.
    pub local_sum: ExtReal,
    pub equalities_hold: bool,
    pub inequalities_hold: bool,
    /// Branches `i` with `p_i(ρ_X) ≤ 1e-12`, left out of the conditional average.
    pub dropped_branches: Vec<usize>,
}

/// Classical outcome probabilities `Re tr(M_j τ)` of an unnormalized operator.
fn born_unnormalized(m: &Povm, tau: &CMatrix) -> Vec<f64> {
    m.effects().iter().map(|e| trace_product(e, tau).re.max(0.0)).collect()
}

fn scale(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// `tr_A[(E ⊗ I) ρ]` and its trace, for `E` acting on the first factor.
pub fn residual_operator(effect: &CMatrix, rho: &CMatrix, structure: &BipartiteStructure) -> Result<(f64, CMatrix)> {
    let dims = structure.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidStructure("residuals need a (measured, rest) structure".into()));
    }
    structure.check(rho.nrows())?;
    if effect.nrows() != dims[0] {
        return Err(Error::DimensionMismatch(format!(
            "effect acts on dimension {}, measured factor has dimension {}",
            effect.nrows(),
            dims[0]
        )));
    }
    let lifted = kron(effect, &CMatrix::identity(dims[1], dims[1]));
    let tau = partial_trace_matrix(&(lifted * rho), dims, &[1])?;
    Ok((trace(&tau).re, tau))
}

/// Evaluates the superadditivity chain for local measurements `m_x ⊗ m_y`.
pub fn superadditivity_audit(
    rho_xy: &DensityMatrix,
    sigma_xy: &DensityMatrix,
    structure: &BipartiteStructure,
    m_x: &Povm,
    m_y: &Povm,
) -> Result<SuperadditivityReport> {
    structure.check(rho_xy.dim())?;
    structure.check(sigma_xy.dim())?;
    let dims = structure.dims();
    if dims.len() != 2 || m_x.dim() != dims[0] || m_y.dim() != dims[1] {
        return Err(Error::DimensionMismatch(
            "local measurements must act on the two factors of the structure".into(),
        ));
    }
    let joint_m = Povm::product(m_x, m_y)?;
    let joint = kl_raw(
        apply_measurement(&joint_m, rho_xy)?.weights(),
        apply_measurement(&joint_m, sigma_xy)?.weights(),
    );

    let rho_x = partial_trace(rho_xy, structure, &[0])?;
    let sigma_x = partial_trace(sigma_xy, structure, &[0])?;
    let rho_y = partial_trace(rho_xy, structure, &[1])?;
    let p_rho = apply_measurement(m_x, &rho_x)?;
    let p_sigma = apply_measurement(m_x, &sigma_x)?;
    let marginal_x = kl_raw(p_rho.weights(), p_sigma.weights());

    let k = m_x.len();
    let ny = m_y.len();
    let mut dropped = Vec::new();
    let mut block_p = Vec::with_capacity(k * ny);
    let mut block_q = Vec::with_capacity(k * ny);
    let mut conditional_sum = 0.0;
    let mut mix_rho = vec![0.0; ny];
    let mut mix_sigma = vec![0.0; ny];
    let mut reweighted_sigma = CMatrix::zeros(dims[1], dims[1]);
    for (i, e) in m_x.effects().iter().enumerate() {
        let (pr, tr) = residual_operator(e, rho_xy.matrix(), structure)?;
        let (ps, ts) = residual_operator(e, sigma_xy.matrix(), structure)?;
        let cr = if pr > BRANCH_TOL { scale(&born_unnormalized(m_y, &tr), 1.0 / pr) } else { vec![0.0; ny] };
        let cs = if ps > BRANCH_TOL { scale(&born_unnormalized(m_y, &ts), 1.0 / ps) } else { vec![0.0; ny] };
        let wr = p_rho.get(i);
        let ws = p_sigma.get(i);
        block_p.extend(scale(&cr, wr));
        block_q.extend(scale(&cs, ws));
        if pr <= BRANCH_TOL {
            dropped.push(i);
            continue;
        }
        if ps > BRANCH_TOL {
            conditional_sum += wr * kl_raw(&cr, &cs).to_f64();
            reweighted_sigma += &ts * num_complex::Complex64::new(wr / ps, 0.0);
        } else {
            // ρ reaches a branch σ never does; D(p(ρ_X)‖p(σ_X)) is already infinite.
            conditional_sum = f64::INFINITY;
        }
        for j in 0..ny {
            mix_rho[j] += wr * cr[j];
            mix_sigma[j] += wr * cs[j];
        }
    }
    let block = kl_raw(&block_p, &block_q);
    let chain = ext_add(marginal_x, ExtReal::from_f64(conditional_sum));
    let convexity_bound = ext_add(marginal_x, kl_raw(&mix_rho, &mix_sigma));
    let my_rho_y = apply_measurement(m_y, &rho_y)?;
    let reweighted = born_unnormalized(m_y, &reweighted_sigma);
    let total: f64 = reweighted.iter().sum();
    let reweighted = if total > 0.0 { scale(&reweighted, 1.0 / total) } else { reweighted };
    let marginal_bound = ext_add(marginal_x, kl_raw(my_rho_y.weights(), &reweighted));
    let sigma_y = partial_trace(sigma_xy, structure, &[1])?;
    let my_sigma_y = apply_measurement(m_y, &sigma_y)?;
    let local_y = kl_raw(my_rho_y.weights(), my_sigma_y.weights());
    let local_sum = ext_add(marginal_x, local_y);

    let equalities_hold = ext_close(joint, block, CHAIN_TOL)
        && ext_close(block, chain, CHAIN_TOL)
        && ext_close(convexity_bound, marginal_bound, CHAIN_TOL);
    let inequalities_hold = ext_geq(chain, convexity_bound, CHAIN_TOL);
    Ok(SuperadditivityReport {
        joint,
        block,
        chain,
        convexity_bound,
        marginal_bound,
        local_sum,
        equalities_hold,
        inequalities_hold,
        dropped_branches: dropped,
    })
}

/// How membership of a residual state in the smaller class is decided.
#[derive(Debug, Clone)]
pub enum Membership<'a> {
    /// Convex hull of explicit generators, tested by linear programming on
    /// the real and imaginary parts of the entries.
    Hull(&'a StateClass),
    /// Separable states across the given cut, via the PPT test (exact only
    /// up to total dimension 6).
    Separable(BipartiteStructure),
}

/// Tolerance on the ℓ∞ distance of a residual to a generator hull.
pub const HULL_TOL: f64 = 1e-9;

impl Membership<'_> {
    /// Returns membership and the deciding number (PPT eigenvalue or hull distance).
    fn test(&self, state: &DensityMatrix) -> Result<(bool, f64)> {
        match self {
            Membership::Hull(class) => {
                if class.dim() != state.dim() {
                    return Err(Error::DimensionMismatch("residual and target class dimensions differ".into()));
                }
                let vec = |m: &CMatrix| -> Vec<f64> { m.iter().flat_map(|z| [z.re, z.im]).collect() };
                let gens: Vec<Vec<f64>> = class.vertices().iter().map(|v| vec(v.matrix())).collect();
                let gens: Vec<&[f64]> = gens.iter().map(|g| g.as_slice()).collect();
                let point = vec(state.matrix());
                let (d, _, _) = polytope_linf_distance(&gens, &[point.as_slice()])?;
                Ok((d <= HULL_TOL, d))
            }
            Membership::Separable(s) => {
                if s.total() > PPT_EXACT_DIM {
                    return Err(Error::InvalidStructure(format!(
                        "PPT decides separability only up to dimension {PPT_EXACT_DIM}, got {}",
                        s.total()
                    )));
                }
                let m = min_partial_transpose_eigenvalue(state, s)?;
                Ok((m >= -EIGEN_TOL, m))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualCheck {
    pub povm: usize,
    pub effect: usize,
    pub vertex: usize,
    pub probability: f64,
    pub member: bool,
    /// Smallest partial-transpose eigenvalue, or distance to the hull.
    pub witness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub checks: Vec<ResidualCheck>,
    /// `(povm, effect, vertex)` triples whose outcome probability was at
    /// most 1e-12, so no residual state exists.
    pub skipped: Vec<(usize, usize, usize)>,
    pub compatible: bool,
}

impl CompatibilityReport {
    pub fn failures(&self) -> impl Iterator<Item = &ResidualCheck> {
        self.checks.iter().filter(|c| !c.member)
    }
}

/// Measures the first factor of every vertex of `big` with every effect of
/// `menu` and checks that each residual state on the second factor lies in
/// the smaller class.
pub fn compatibility_check(
    menu: &MeasurementMenu,
    big: &StateClass,
    small: &Membership<'_>,
    structure: &BipartiteStructure,
) -> Result<CompatibilityReport> {
    structure.check(big.dim())?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for (pi, povm) in menu.povms().iter().enumerate() {
        for (ei, e) in povm.effects().iter().enumerate() {
            for (vi, rho) in big.vertices().iter().enumerate() {
                let (prob, tau) = residual_operator(e, rho.matrix(), structure)?;
                if prob <= BRANCH_TOL {
                    skipped.push((pi, ei, vi));
                    continue;
                }
                let d = tau.nrows();
                let herm = CMatrix::from_fn(d, d, |i, j| (tau[(i, j)] + tau[(j, i)].conj()) * (0.5 / prob));
                let (member, witness) = match DensityMatrix::new(herm) {
                    Ok(state) => small.test(&state)?,
                    Err(_) => (false, f64::NAN),
                };
                checks.push(ResidualCheck {
                    povm: pi,
                    effect: ei,
                    vertex: vi,
                    probability: prob,
                    member,
                    witness,
                });
            }
        }
    }
    let compatible = checks.iter().all(|c| c.member);
    Ok(CompatibilityReport {
        checks,
        skipped,
        compatible,
    })
}

/// `I(A:B|C) = H(AC) + H(BC) − H(ABC) − H(C)` in nats.
pub fn cmi(rho_abc: &DensityMatrix, structure: &BipartiteStructure) -> Result<f64> {
    if structure.dims().len() != 3 {
        return Err(Error::InvalidStructure("conditional mutual information needs three factors".into()));
    }
    structure.check(rho_abc.dim())?;
    let h = |keep: &[usize]| partial_trace(rho_abc, structure, keep).map(|r| von_neumann_entropy(&r));
    let value = h(&[0, 2])? + h(&[1, 2])? - von_neumann_entropy(rho_abc) - h(&[2])?;
    if value < -CHAIN_TOL {
        return Err(Error::InvalidState(format!(
            "conditional mutual information evaluated to {value:e}, below the strong-subadditivity floor"
        )));
    }
    Ok(value)
}

#[derive(Debug, Clone, Serialize)]
pub struct SsaProbeReport {
    /// `I(A:B|C)`.
    pub cmi: f64,
    /// Best one-copy measured divergence of `ρ_AB` from the separable proxy.
    pub measured_divergence: ExtReal,
    pub best_povm_index: usize,
    pub holds: bool,
    /// The classical minimizer sits on a face of the proxy's image.
    pub minimizer_on_proxy_boundary: bool,
    /// The proxy is an inner approximation of the separable set, which can
    /// only raise the measured divergence; a passing check therefore also
    /// holds for the separable set itself. A failing one is inconclusive.
    pub certifying: bool,
}

/// Compares `I(A:B|C)` with the one-copy one-way-LOCC measured divergence of
/// `ρ_AB` from a list of separable generators.
pub fn stronger_ssa_probe(
    rho_abc: &DensityMatrix,
    structure: &BipartiteStructure,
    menu_ab: &[OneWayLocc],
    sep_proxy: &StateClass,
    tol: f64,
) -> Result<SsaProbeReport> {
    let lhs = cmi(rho_abc, structure)?;
    let dims = structure.dims();
    let ab = BipartiteStructure::bipartite(dims[0], dims[1])?;
    if menu_ab.is_empty() {
        return Err(Error::InvalidMeasurement("the one-way LOCC menu is empty".into()));
    }
    for (i, m) in menu_ab.iter().enumerate() {
        if m.alice().dim() != dims[0] || m.povm().dim() != ab.total() {
            return Err(Error::Menu {
                index: i,
                source: Box::new(Error::DimensionMismatch(
                    "one-way LOCC measurement does not match the A:B factors".into(),
                )),
            });
        }
    }
    if sep_proxy.dim() != ab.total() {
        return Err(Error::DimensionMismatch("separable proxy does not act on A⊗B".into()));
    }
    if ab.total() <= PPT_EXACT_DIM {
        for (i, v) in sep_proxy.vertices().iter().enumerate() {
            if min_partial_transpose_eigenvalue(v, &ab)? < -EIGEN_TOL {
                return Err(Error::InvalidState(format!("separable proxy vertex {i} is entangled")));
            }
        }
    }
    let rho_ab = partial_trace(rho_abc, structure, &[0, 1])?;
    let menu = MeasurementMenu::new(menu_ab.iter().map(|m| m.povm().clone()).collect())?;
    let rd = restricted_divergence(&menu, &StateClass::singleton(rho_ab), sep_proxy, tol)?;
    let w = rd.solution.weights_q.as_slice();
    let on_boundary = w.len() > 1 && w.iter().any(|&x| x <= 1e-12);
    let holds = ext_geq(ExtReal::Finite(lhs), rd.value, CHAIN_TOL);
    Ok(SsaProbeReport {
        cmi: lhs,
        measured_divergence: rd.value,
        best_povm_index: rd.best_povm_index,
        holds,
        minimizer_on_proxy_boundary: on_boundary,
        certifying: holds,
    })
}
