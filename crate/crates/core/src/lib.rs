//! Adversarial hypothesis testing on finite alphabets.
//!
//! The crate computes optimal Stein and Chernoff error exponents when both
//! hypotheses are convex classes of distributions controlled by an adaptive
//! adversary, builds the corresponding likelihood-ratio tests, evaluates
//! them exactly or by simulation, and lifts the machinery to small quantum
//! systems measured with a finite menu of POVMs.

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary_sim;
pub mod convex;
pub mod error;
pub mod exponents;
pub mod lp;
pub mod prob;
pub mod quantum;
pub mod testing;

pub use convex::{ConvexClass, MixWeights};
pub use error::{Error, Result};
pub use exponents::{
    brute_force_stein, certify_chernoff, certify_stein, solve_chernoff, solve_stein,
    ChernoffCertificate, ChernoffSolution, SteinCertificate, SteinSolution,
};
pub use prob::{
    chernoff_info, gamma_lambda, kl_divergence, log_likelihood_table, Alphabet, ChernoffPoint,
    Distribution, ExtReal, LogLikelihoodTable,
};
pub use testing::{
    evaluate, exact_adversary_error, exact_adversary_error_with, AcceptanceRegion, ChernoffTest,
    DpOptions, DpReport, Side, StatisticTracker, SteinTest, TestRegion, TestVerdict,
};
