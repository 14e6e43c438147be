//! JSON report types. Values are computed in nats throughout; conversion to
//! the requested unit happens only when a report is assembled, and every
//! report carries its `unit`.

use advhyp_core::adversary_sim::ExperimentResult;
use advhyp_core::exponents::{ChernoffCertificate, SteinCertificate, CERTIFICATE_TOL};
use advhyp_core::quantum::{
    CompatibilityReport, MinimaxReport, MonotonicityCheck, ResidualCheck, SsaProbeReport, SuperadditivityReport,
};
use advhyp_core::{ChernoffSolution, ExtReal, SteinSolution};
use serde::Serialize;

use crate::config::LogBase;

/// Converts entropic values from nats to the report unit.
#[derive(Debug, Clone, Copy)]
pub struct Units(pub LogBase);

impl Units {
    pub fn unit(self) -> &'static str {
        self.0.unit()
    }

    pub fn val(self, nats: f64) -> f64 {
        nats * self.0.factor()
    }

    pub fn ext(self, nats: ExtReal) -> ExtReal {
        nats.scale(self.0.factor())
    }

    pub fn experiment(self, mut r: ExperimentResult) -> ExperimentResult {
        r.theoretical_exponent = self.ext(r.theoretical_exponent);
        if let Some(fit) = r.fit.as_mut() {
            fit.exponent = self.val(fit.exponent);
            fit.half_width = self.val(fit.half_width);
        }
        r.unit = self.unit().into();
        r
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum CertificateReport {
    Stein {
        passes: bool,
        tolerance: f64,
        max_q_ratio: f64,
        /// Entropic; in the report unit.
        min_p_drift: f64,
        vacuous: bool,
    },
    Chernoff {
        passes: bool,
        tolerance: f64,
        max_q_tilted_ratio: f64,
        max_p_tilted_ratio: f64,
        degenerate: bool,
        vacuous: bool,
    },
}

impl CertificateReport {
    pub fn stein(c: &SteinCertificate, u: Units) -> Self {
        CertificateReport::Stein {
            passes: c.passes(CERTIFICATE_TOL),
            tolerance: CERTIFICATE_TOL,
            max_q_ratio: c.max_q_ratio,
            min_p_drift: u.val(c.min_p_drift),
            vacuous: c.vacuous,
        }
    }

    pub fn chernoff(c: &ChernoffCertificate) -> Self {
        CertificateReport::Chernoff {
            passes: c.passes(CERTIFICATE_TOL),
            tolerance: CERTIFICATE_TOL,
            max_q_tilted_ratio: c.max_q_tilted_ratio,
            max_p_tilted_ratio: c.max_p_tilted_ratio,
            degenerate: c.degenerate,
            vacuous: c.vacuous,
        }
    }

    pub fn passes(&self) -> bool {
        match self {
            CertificateReport::Stein { passes, .. } | CertificateReport::Chernoff { passes, .. } => *passes,
        }
    }
}

/// How a quantum problem was reduced to a classical one.
#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub block_size: usize,
    pub povm_index: usize,
    /// `true` when the manifest fixed the menu element.
    pub povm_from_config: bool,
    /// Exponent of every menu element, per block.
    pub per_povm: Vec<ExtReal>,
    /// The chosen element's exponent divided by the block size.
    pub exponent_per_copy: ExtReal,
    /// Residual checks of the two-block families, one per class.
    pub compatible: [bool; 2],
}

/// Output of the `stein`, `chernoff` and `quantum-*` modes.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub mode: String,
    pub unit: &'static str,
    pub tol: f64,
    pub labels: Vec<String>,
    pub exponent: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    pub p_star: Vec<f64>,
    pub q_star: Vec<f64>,
    pub weights_p: Vec<f64>,
    pub weights_q: Vec<f64>,
    pub certificate: CertificateReport,
    pub iterations: usize,
    pub gap: f64,
    pub intersecting: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded_p_vertices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<ExperimentResult>,
}

fn labels_of(sol_p: &advhyp_core::Distribution) -> Vec<String> {
    let a = sol_p.alphabet();
    (0..a.size()).map(|i| a.label(i)).collect()
}

impl SolveReport {
    pub fn stein(mode: &str, sol: &SteinSolution, cert: &SteinCertificate, tol: f64, u: Units) -> Self {
        SolveReport {
            mode: mode.into(),
            unit: u.unit(),
            tol,
            labels: labels_of(&sol.p_star),
            exponent: u.ext(sol.exponent),
            lambda_star: None,
            p_star: sol.p_star.weights().to_vec(),
            q_star: sol.q_star.weights().to_vec(),
            weights_p: sol.weights_p.as_slice().to_vec(),
            weights_q: sol.weights_q.as_slice().to_vec(),
            certificate: CertificateReport::stein(cert, u),
            iterations: sol.iterations,
            gap: u.val(sol.gap),
            intersecting: sol.intersecting,
            excluded_p_vertices: sol.excluded_p_vertices.clone(),
            diagnostic: sol.diagnostic.clone(),
            block: None,
            simulation: None,
        }
    }

    pub fn chernoff(mode: &str, sol: &ChernoffSolution, cert: &ChernoffCertificate, tol: f64, u: Units) -> Self {
        SolveReport {
            mode: mode.into(),
            unit: u.unit(),
            tol,
            labels: labels_of(&sol.p_star),
            exponent: u.ext(sol.exponent),
            lambda_star: Some(sol.lambda_star),
            p_star: sol.p_star.weights().to_vec(),
            q_star: sol.q_star.weights().to_vec(),
            weights_p: sol.weights_p.as_slice().to_vec(),
            weights_q: sol.weights_q.as_slice().to_vec(),
            certificate: CertificateReport::chernoff(cert),
            iterations: sol.iterations,
            gap: u.val(sol.gap),
            intersecting: sol.intersecting,
            excluded_p_vertices: Vec::new(),
            diagnostic: sol.diagnostic.clone(),
            block: None,
            simulation: None,
        }
    }
}

/// Output of `simulate` mode: the experiment plus the solver certificate.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub mode: &'static str,
    pub certificate: CertificateReport,
    #[serde(flatten)]
    pub experiment: ExperimentResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityOut {
    pub name: String,
    pub compatible: bool,
    pub failures: usize,
    pub checks: Vec<ResidualCheck>,
    pub skipped: Vec<(usize, usize, usize)>,
}

impl CompatibilityOut {
    pub fn new(name: String, r: CompatibilityReport) -> Self {
        CompatibilityOut {
            name,
            compatible: r.compatible,
            failures: r.failures().count(),
            checks: r.checks,
            skipped: r.skipped,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperadditivityOut {
    pub name: String,
    pub joint: ExtReal,
    pub block: ExtReal,
    pub chain: ExtReal,
    pub convexity_bound: ExtReal,
    pub marginal_bound: ExtReal,
    pub local_sum: ExtReal,
    pub equalities_hold: bool,
    pub inequalities_hold: bool,
    pub dropped_branches: Vec<usize>,
}

impl SuperadditivityOut {
    pub fn new(name: String, r: SuperadditivityReport, u: Units) -> Self {
        SuperadditivityOut {
            name,
            joint: u.ext(r.joint),
            block: u.ext(r.block),
            chain: u.ext(r.chain),
            convexity_bound: u.ext(r.convexity_bound),
            marginal_bound: u.ext(r.marginal_bound),
            local_sum: u.ext(r.local_sum),
            equalities_hold: r.equalities_hold,
            inequalities_hold: r.inequalities_hold,
            dropped_branches: r.dropped_branches,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxOut {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub lhs_pure: f64,
    pub mu: Vec<f64>,
    pub weights_r: Vec<f64>,
    pub weights_s: Vec<f64>,
}

impl MinimaxOut {
    pub fn new(name: String, r: MinimaxReport, u: Units) -> Self {
        MinimaxOut {
            name,
            lhs: u.val(r.lhs),
            rhs: u.val(r.rhs),
            gap: u.val(r.gap),
            lhs_pure: u.val(r.lhs_pure),
            mu: r.mu,
            weights_r: r.weights_r,
            weights_s: r.weights_s,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SsaOut {
    pub name: String,
    pub cmi: f64,
    pub measured_divergence: ExtReal,
    pub best_povm_index: usize,
    pub holds: bool,
    pub minimizer_on_proxy_boundary: bool,
    pub certifying: bool,
}

impl SsaOut {
    pub fn new(name: String, r: SsaProbeReport, u: Units) -> Self {
        SsaOut {
            name,
            cmi: u.val(r.cmi),
            measured_divergence: u.ext(r.measured_divergence),
            best_povm_index: r.best_povm_index,
            holds: r.holds,
            minimizer_on_proxy_boundary: r.minimizer_on_proxy_boundary,
            certifying: r.certifying,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityOut {
    pub name: String,
    pub measured: ExtReal,
    pub quantum: ExtReal,
    pub holds: bool,
}

impl MonotonicityOut {
    pub fn new(name: String, r: MonotonicityCheck, u: Units) -> Self {
        MonotonicityOut {
            name,
            measured: u.ext(r.measured),
            quantum: u.ext(r.quantum),
            holds: r.holds,
        }
    }
}

/// Output of `audit` mode. Failed checks are findings, listed in `findings`.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub mode: &'static str,
    pub unit: &'static str,
    pub compatibility: Vec<CompatibilityOut>,
    pub superadditivity: Vec<SuperadditivityOut>,
    pub minimax: Vec<MinimaxOut>,
    pub ssa: Vec<SsaOut>,
    pub monotonicity: Vec<MonotonicityOut>,
    pub findings: Vec<String>,
}
