use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{tilt, ChernoffSolution, SteinSolution};
use crate::prob::{ExtReal, LogLikelihoodTable};
use crate::testing::{AcceptanceRegion, Side};

use super::engine::simulate_statistics;
use super::strategy::AdaptiveStrategy;

/// Empirical mean of a per-episode product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    pub se: f64,
    /// Value the mean may not exceed (up to sampling error).
    pub bound: f64,
}

impl ProbeResult {
    /// `mean ≤ bound + k·SE`.
    pub fn within(&self, k: f64) -> bool {
        self.mean <= self.bound + k * self.se
    }
}

/// A region that is never used to decide, only to carry the table and length.
struct Horizon<'a> {
    table: &'a LogLikelihoodTable,
    n: usize,
}

impl AcceptanceRegion for Horizon<'_> {
    fn table(&self) -> &LogLikelihoodTable {
        self.table
    }
    fn n(&self) -> usize {
        self.n
    }
    fn threshold(&self) -> f64 {
        0.0
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, (var / m).sqrt())
}

#[allow(clippy::too_many_arguments)]
fn probe(
    strategy: &AdaptiveStrategy,
    table: &LogLikelihoodTable,
    side: Side,
    exponent: f64,
    n: usize,
    trials: u64,
    seed: u64,
    bound: f64,
) -> Result<ProbeResult> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidArgument("probe needs n ≥ 1 and at least one trial".into()));
    }
    let stats = simulate_statistics(
        strategy.class(),
        strategy,
        &Horizon { table, n },
        side,
        0,
        trials,
        seed,
    )?;
    // Summed in episode order so the result does not depend on scheduling.
    let values: Vec<f64> = stats
        .iter()
        .map(|&s| match side {
            Side::Q => tilt(s, exponent),
            Side::P => tilt(-s, exponent),
        })
        .collect();
    let (mean, se) = mean_and_se(&values);
    Ok(ProbeResult {
        n,
        trials,
        mean,
        se,
        bound,
    })
}

/// Mean of `∏ p*(x_i)/q*(x_i)` when `q_strategy` generates the sample.
///
/// Under any adversary confined to `Q` the product is a supermartingale
/// with initial value 1, so the mean must not exceed 1.
pub fn supermartingale_probe(
    q_strategy: &AdaptiveStrategy,
    solution: &SteinSolution,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<ProbeResult> {
    probe(q_strategy, &solution.table, Side::Q, 1.0, n, trials, seed, 1.0)
}

/// Mean of the tilted product `∏ (p*/q*)^λ*` under a `Q` strategy, or
/// `∏ (q*/p*)^(1−λ*)` under a `P` strategy; both are bounded by `e^{−nΓ*}`.
pub fn tilted_probe(
    strategy: &AdaptiveStrategy,
    solution: &ChernoffSolution,
    side: Side,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<ProbeResult> {
    let s = match side {
        Side::Q => solution.lambda_star,
        Side::P => 1.0 - solution.lambda_star,
    };
    let bound = match solution.exponent {
        ExtReal::Finite(g) => (-(n as f64) * g).exp(),
        ExtReal::PosInf => 0.0,
        ExtReal::NegInf => f64::INFINITY,
    };
    probe(strategy, &solution.table, side, s, n, trials, seed, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary_sim::{builtin_strategy, StrategyKind, Target};
    use crate::convex::ConvexClass;
    use crate::exponents::solve_stein;
    use crate::prob::Distribution;

    #[test]
    fn one_round_static_q_star_is_exactly_one() {
        // With q* = uniform on two symbols, p*/q* takes values 2/3·2 and 1/3·2,
        // and a single round averages to 1 exactly only in expectation; with
        // a point mass for q* the product is deterministic.
        let a = std::sync::Arc::new(crate::prob::Alphabet::new(2).unwrap());
        let p = ConvexClass::singleton(Distribution::new(a.clone(), vec![0.5, 0.5]).unwrap());
        let q = ConvexClass::singleton(Distribution::new(a, vec![0.5, 0.5]).unwrap());
        let sol = solve_stein(&p, &q, 1e-10).unwrap();
        let t = Target::stein(&sol, 0.05);
        let s = builtin_strategy(StrategyKind::StaticOptimal, &q, Side::Q, &t, 0).unwrap();
        let r = supermartingale_probe(&s, &sol, 1, 100, 3).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.se, 0.0);
    }
}
