//! Quantum states, measurements and the restricted-measurement exponents.
//!
//! Density matrices are small (dimension ≤ 16) complex Hermitian matrices
//! with an eigendecomposition cached at construction. A finite menu of POVMs
//! induces classical image classes, on which the classical Stein and
//! Chernoff machinery runs unchanged. The audit functions check structural
//! identities (chain rules, compatibility of residual states, strong
//! subadditivity variants) numerically.

mod audit;
pub mod linalg;
mod ops;
pub mod random;
mod reduction;
mod restricted;
mod state;

pub use audit::{
    cmi, compatibility_check, residual_operator, stronger_ssa_probe, superadditivity_audit,
    CompatibilityReport, Membership, ResidualCheck, SsaProbeReport, SuperadditivityReport,
    BRANCH_TOL, CHAIN_TOL, HULL_TOL, PPT_EXACT_DIM,
};
pub use linalg::{hermitian_eigen, CMatrix, HermitianEigen};
pub use ops::{
    apply_measurement, min_partial_transpose_eigenvalue, neyman_pearson_effect, partial_trace,
    partial_transpose, ppt_check, quantum_relative_entropy, trace_distance, von_neumann_entropy,
};
pub use reduction::{block_reduction, monotonicity_check, BlockReduction, MeasuredStateClass, MonotonicityCheck};
pub use restricted::{
    measured_image, minimax_gap, restricted_chernoff, restricted_divergence, MinimaxReport,
    RestrictedChernoff, RestrictedDivergence,
};
pub use state::{BipartiteStructure, DensityMatrix, MeasurementMenu, OneWayLocc, Povm, StateClass};
