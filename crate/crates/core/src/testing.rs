//! Likelihood-ratio acceptance regions and their exact evaluation.
//!
//! A [`SteinTest`] accepts a length-`n` sample iff `Σ L(x_i) ≥ n(D − ε)`;
//! a [`ChernoffTest`] accepts iff `Σ L(x_i) ≥ 0`. "Accept" means the sample
//! is attributed to `P`. The cumulative statistic is always computed from
//! per-value counts (`Σ_g count_g · value_g`), so simulation, exact
//! evaluation and strategies that react to the running statistic all see the
//! same floating-point number for the same multiset of observations.
//!
//! [`exact_adversary_error`] evaluates the error probability of a test
//! against a Markov adversary (one whose choice depends only on the round and
//! the running statistic) by forward dynamic programming over count vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adversary_sim::MarkovStrategy;
use crate::convex::grid_count;
use crate::error::{Error, Result};
use crate::exponents::{ChernoffSolution, SteinSolution, CERTIFICATE_TOL};
use crate::prob::{log_likelihood_table, Distribution, ExtReal, LogLikelihoodTable, SymbolClass};

/// Relative slack under which a statistic counts as tied with the threshold.
///
/// Symmetric tables such as `ln(1/2), ln 2` do not cancel exactly in floating
/// point; without the slack a balanced sample could land a few ulps below a
/// zero threshold and be rejected.
pub const TIE_SLACK: f64 = 1e-12;
/// Up to this many reachable count vectors the DP is exact.
pub const EXACT_STATE_LIMIT: u128 = 1_000_000;
/// Hard cap on DP states in any round.
pub const STATE_LIMIT: usize = 10_000_000;
/// Bucket width (nats) used once the exact state space is too large.
pub const DEFAULT_BUCKET_WIDTH: f64 = 1e-6;

/// Which hypothesis the adversary controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The adversary draws from `P`; its error is rejection.
    P,
    /// The adversary draws from `Q`; its error is acceptance.
    Q,
}

/// A region `{Σ L(x_i) ≥ threshold}` over samples of length `n`.
pub trait AcceptanceRegion: Sync {
    fn table(&self) -> &LogLikelihoodTable;
    fn n(&self) -> usize;
    fn threshold(&self) -> f64;

    /// Absolute tie slack for this region.
    fn slack(&self) -> f64 {
        let scale = self
            .table()
            .group_values()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        TIE_SLACK * (1.0 + self.n() as f64 * scale + self.threshold().abs())
    }

    fn accepts(&self, statistic: ExtReal) -> bool {
        match statistic {
            ExtReal::PosInf => true,
            ExtReal::NegInf => false,
            ExtReal::Finite(s) => s - self.threshold() >= -self.slack(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinTest {
    table: LogLikelihoodTable,
    epsilon: f64,
    n: usize,
    divergence: f64,
    threshold: f64,
}

impl SteinTest {
    /// Builds `A_{n,ε}` from a certified solution with a finite positive exponent.
    pub fn new(solution: &SteinSolution, epsilon: f64, n: usize) -> Result<Self> {
        let d = match solution.exponent {
            ExtReal::Finite(d) if d > 0.0 => d,
            other => {
                return Err(Error::TestRefused(format!(
                    "Stein exponent is {other}; a likelihood-ratio test needs a finite positive divergence"
                )))
            }
        };
        if !solution.certificate.passes(CERTIFICATE_TOL) {
            return Err(Error::CertificateFailed(format!(
                "max_q_ratio = {}, min_p_drift = {}",
                solution.certificate.max_q_ratio, solution.certificate.min_p_drift
            )));
        }
        Self::build(solution.table.clone(), d, epsilon, n)
    }

    /// Builds the region directly from a pair, without any certificate.
    pub fn from_pair(p_star: &Distribution, q_star: &Distribution, epsilon: f64, n: usize) -> Result<Self> {
        let table = log_likelihood_table(p_star, q_star)?;
        let d = crate::prob::kl_divergence(p_star, q_star)?;
        match d {
            ExtReal::Finite(d) if d > 0.0 => Self::build(table, d, epsilon, n),
            other => Err(Error::TestRefused(format!("divergence is {other}"))),
        }
    }

    fn build(table: LogLikelihoodTable, divergence: f64, epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("sample length must be positive".into()));
        }
        Ok(SteinTest {
            table,
            epsilon,
            n,
            divergence,
            threshold: n as f64 * (divergence - epsilon),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn divergence(&self) -> f64 {
        self.divergence
    }

    /// The same region at another sample length.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::build(self.table.clone(), self.divergence, self.epsilon, n)
    }
}

impl AcceptanceRegion for SteinTest {
    fn table(&self) -> &LogLikelihoodTable {
        &self.table
    }
    fn n(&self) -> usize {
        self.n
    }
    fn threshold(&self) -> f64 {
        self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffTest {
    table: LogLikelihoodTable,
    n: usize,
}

impl ChernoffTest {
    pub fn new(solution: &ChernoffSolution, n: usize) -> Result<Self> {
        if solution.exponent == ExtReal::ZERO {
            return Err(Error::TestRefused(
                "Chernoff exponent is zero; p* = q* admits no test".into(),
            ));
        }
        if !solution.certificate.passes(CERTIFICATE_TOL) {
            return Err(Error::CertificateFailed(format!(
                "tilted residuals q: {}, p: {}",
                solution.certificate.max_q_tilted_ratio, solution.certificate.max_p_tilted_ratio
            )));
        }
        Self::build(solution.table.clone(), n)
    }

    pub fn from_pair(p_star: &Distribution, q_star: &Distribution, n: usize) -> Result<Self> {
        Self::build(log_likelihood_table(p_star, q_star)?, n)
    }

    fn build(table: LogLikelihoodTable, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample length must be positive".into()));
        }
        Ok(ChernoffTest { table, n })
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::build(self.table.clone(), n)
    }
}

impl AcceptanceRegion for ChernoffTest {
    fn table(&self) -> &LogLikelihoodTable {
        &self.table
    }
    fn n(&self) -> usize {
        self.n
    }
    fn threshold(&self) -> f64 {
        0.0
    }
}

/// Either kind of region, for code that is generic over the test family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TestRegion {
    Stein(SteinTest),
    Chernoff(ChernoffTest),
}

impl TestRegion {
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Ok(match self {
            TestRegion::Stein(t) => TestRegion::Stein(t.with_n(n)?),
            TestRegion::Chernoff(t) => TestRegion::Chernoff(t.with_n(n)?),
        })
    }

    fn inner(&self) -> &dyn AcceptanceRegion {
        match self {
            TestRegion::Stein(t) => t,
            TestRegion::Chernoff(t) => t,
        }
    }
}

impl AcceptanceRegion for TestRegion {
    fn table(&self) -> &LogLikelihoodTable {
        self.inner().table()
    }
    fn n(&self) -> usize {
        self.inner().n()
    }
    fn threshold(&self) -> f64 {
        self.inner().threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestVerdict {
    pub accepted: bool,
    pub statistic: ExtReal,
    /// `statistic − threshold`, snapped to zero inside the tie slack.
    pub margin: ExtReal,
}

/// Running `Σ L(x_i)` kept as per-value counts; the first infinite term
/// observed decides the statistic for good.
#[derive(Debug, Clone)]
pub struct StatisticTracker<'a> {
    table: &'a LogLikelihoodTable,
    counts: Vec<u32>,
    absorbed: Option<ExtReal>,
}

impl<'a> StatisticTracker<'a> {
    pub fn new(table: &'a LogLikelihoodTable) -> Self {
        StatisticTracker {
            table,
            counts: vec![0; table.group_values().len()],
            absorbed: None,
        }
    }

    pub fn push(&mut self, symbol: usize) {
        if self.absorbed.is_some() {
            return;
        }
        match self.table.class_of(symbol) {
            SymbolClass::Finite(g) => self.counts[g] += 1,
            SymbolClass::PosInf => self.absorbed = Some(ExtReal::PosInf),
            SymbolClass::NegInf => self.absorbed = Some(ExtReal::NegInf),
        }
    }

    /// An infinite term has been observed, so further symbols are ignored.
    pub fn is_decided(&self) -> bool {
        self.absorbed.is_some()
    }

    pub fn statistic(&self) -> ExtReal {
        self.absorbed
            .unwrap_or_else(|| ExtReal::Finite(self.table.statistic_from_counts(&self.counts)))
    }

    pub fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.absorbed = None;
    }
}

/// Applies the region to a concrete sample.
pub fn evaluate<T: AcceptanceRegion + ?Sized>(test: &T, sample: &[usize]) -> Result<TestVerdict> {
    if sample.len() != test.n() {
        return Err(Error::LengthMismatch {
            expected: test.n(),
            got: sample.len(),
        });
    }
    let size = test.table().alphabet().size();
    let mut tracker = StatisticTracker::new(test.table());
    for &x in sample {
        if x >= size {
            return Err(Error::InvalidArgument(format!(
                "symbol {x} is outside an alphabet of size {size}"
            )));
        }
        tracker.push(x);
    }
    let statistic = tracker.statistic();
    let accepted = test.accepts(statistic);
    let margin = match statistic {
        ExtReal::Finite(s) => {
            let m = s - test.threshold();
            ExtReal::Finite(if m.abs() <= test.slack() { 0.0 } else { m })
        }
        inf => inf,
    };
    Ok(TestVerdict {
        accepted,
        statistic,
        margin,
    })
}

/// Outcome of the dynamic program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpReport {
    /// Probability of the adversary's error (acceptance for `Q`, rejection for `P`).
    pub probability: f64,
    /// Whether exact count vectors were used (otherwise a bucketed bound).
    pub exact: bool,
    /// Largest number of live states in any round.
    pub peak_states: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions {
    pub bucket_width: f64,
    pub exact_state_limit: u128,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            bucket_width: DEFAULT_BUCKET_WIDTH,
            exact_state_limit: EXACT_STATE_LIMIT,
        }
    }
}

/// Exact error probability of `test` against a Markov adversary.
pub fn exact_adversary_error<T: AcceptanceRegion + ?Sized>(
    test: &T,
    strategy: &MarkovStrategy,
    side: Side,
) -> Result<f64> {
    exact_adversary_error_with(test, strategy, side, DpOptions::default()).map(|r| r.probability)
}

/// [`exact_adversary_error`] with explicit discretization options.
///
/// When the number of reachable count vectors exceeds
/// `options.exact_state_limit`, the statistic is tracked in integer buckets
/// of width `options.bucket_width`, rounded so that the result is an upper
/// bound on the error: outward on the `Q` side (a state accepts if the
/// largest statistic compatible with it does) and inward on the `P` side (a
/// state rejects if the smallest compatible statistic does). The strategy
/// then sees the bucket midpoint rather than the exact statistic.
pub fn exact_adversary_error_with<T: AcceptanceRegion + ?Sized>(
    test: &T,
    strategy: &MarkovStrategy,
    side: Side,
    options: DpOptions,
) -> Result<DpReport> {
    let table = test.table();
    if strategy.class().alphabet_size() != table.alphabet().size() {
        return Err(Error::AlphabetMismatch(
            "strategy class and test table use different alphabets".into(),
        ));
    }
    let groups = table.group_values().len();
    let n = test.n();
    if grid_count(groups.max(1), n as u32) <= options.exact_state_limit {
        exact_dp(test, strategy, side)
    } else {
        bucketed_dp(test, strategy, side, options.bucket_width)
    }
}

fn mixed(strategy: &MarkovStrategy, round: usize, statistic: f64) -> Result<Vec<f64>> {
    let w = strategy.choose(round, statistic);
    if w.len() != strategy.class().len() {
        return Err(Error::LengthMismatch {
            expected: strategy.class().len(),
            got: w.len(),
        });
    }
    Ok(strategy.class().mix_raw(w.as_slice()))
}

fn exact_dp<T: AcceptanceRegion + ?Sized>(test: &T, strategy: &MarkovStrategy, side: Side) -> Result<DpReport> {
    let table = test.table();
    let groups = table.group_values().len();
    let mut states: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    states.insert(vec![0; groups], 1.0);
    let (mut accept_abs, mut reject_abs) = (0.0, 0.0);
    let mut peak = 1;
    for round in 0..test.n() {
        let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (counts, &prob) in &states {
            let stat = table.statistic_from_counts(counts);
            let r = mixed(strategy, round, stat)?;
            for (x, &rx) in r.iter().enumerate() {
                if rx <= 0.0 {
                    continue;
                }
                let mass = prob * rx;
                match table.class_of(x) {
                    SymbolClass::Finite(g) => {
                        let mut c = counts.clone();
                        c[g] += 1;
                        *next.entry(c).or_insert(0.0) += mass;
                    }
                    SymbolClass::PosInf => accept_abs += mass,
                    SymbolClass::NegInf => reject_abs += mass,
                }
            }
        }
        if next.len() > STATE_LIMIT {
            return Err(Error::StateExplosion {
                states: next.len(),
                limit: STATE_LIMIT,
            });
        }
        peak = peak.max(next.len());
        states = next;
    }
    let mut accept = accept_abs;
    let mut reject = reject_abs;
    for (counts, prob) in &states {
        if test.accepts(ExtReal::Finite(table.statistic_from_counts(counts))) {
            accept += prob;
        } else {
            reject += prob;
        }
    }
    Ok(DpReport {
        probability: match side {
            Side::Q => accept,
            Side::P => reject,
        },
        exact: true,
        peak_states: peak,
    })
}

fn bucketed_dp<T: AcceptanceRegion + ?Sized>(
    test: &T,
    strategy: &MarkovStrategy,
    side: Side,
    width: f64,
) -> Result<DpReport> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("bucket width must be positive, got {width}")));
    }
    let table = test.table();
    // Each finite value v is stored as floor(v / width); the true sum after
    // k steps lies in [M·width, (M + k)·width].
    let units: Vec<i64> = table
        .group_values()
        .iter()
        .map(|v| (v / width).floor() as i64)
        .collect();
    let mut states: BTreeMap<i64, f64> = BTreeMap::new();
    states.insert(0, 1.0);
    let (mut accept_abs, mut reject_abs) = (0.0, 0.0);
    let mut peak = 1;
    for round in 0..test.n() {
        let mut next: BTreeMap<i64, f64> = BTreeMap::new();
        for (&m, &prob) in &states {
            let stat = (m as f64 + 0.5 * round as f64) * width;
            let r = mixed(strategy, round, stat)?;
            for (x, &rx) in r.iter().enumerate() {
                if rx <= 0.0 {
                    continue;
                }
                let mass = prob * rx;
                match table.class_of(x) {
                    SymbolClass::Finite(g) => *next.entry(m + units[g]).or_insert(0.0) += mass,
                    SymbolClass::PosInf => accept_abs += mass,
                    SymbolClass::NegInf => reject_abs += mass,
                }
            }
        }
        if next.len() > STATE_LIMIT {
            return Err(Error::StateExplosion {
                states: next.len(),
                limit: STATE_LIMIT,
            });
        }
        peak = peak.max(next.len());
        states = next;
    }
    let n = test.n() as f64;
    let mut error = match side {
        Side::Q => accept_abs,
        Side::P => reject_abs,
    };
    for (&m, &prob) in &states {
        let lower = m as f64 * width;
        let upper = (m as f64 + n) * width;
        let counts = match side {
            Side::Q => test.accepts(ExtReal::Finite(upper)),
            Side::P => !test.accepts(ExtReal::Finite(lower)),
        };
        if counts {
            error += prob;
        }
    }
    Ok(DpReport {
        probability: error,
        exact: false,
        peak_states: peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary_sim::MarkovStrategy;
    use crate::convex::{ConvexClass, MixWeights};
    use std::f64::consts::LN_2;

    fn bern(h: f64) -> Distribution {
        Distribution::bernoulli(h).unwrap()
    }

    fn coin_test(n: usize) -> SteinTest {
        SteinTest::from_pair(&bern(1.0 / 3.0), &bern(2.0 / 3.0), 0.05, n).unwrap()
    }

    fn static_strategy(h: f64) -> MarkovStrategy {
        let class = ConvexClass::singleton(bern(h));
        MarkovStrategy::new("static", class, |_, _| MixWeights::vertex(1, 0))
    }

    #[test]
    fn stein_examples() {
        let t = coin_test(10);
        let v = evaluate(&t, &[1; 10]).unwrap();
        assert!(v.accepted);
        assert!((v.statistic.finite().unwrap() - 10.0 * LN_2).abs() < 1e-12);
        assert!((t.threshold() - 10.0 * (LN_2 / 3.0 - 0.05)).abs() < 1e-12);
        let v = evaluate(&t, &[0; 10]).unwrap();
        assert!(!v.accepted);
        assert!(matches!(evaluate(&t, &[0; 9]), Err(Error::LengthMismatch { .. })));
        assert!(evaluate(&t, &[2; 10]).is_err());
    }

    #[test]
    fn chernoff_tie_accepts() {
        let t = ChernoffTest::from_pair(&bern(1.0 / 3.0), &bern(2.0 / 3.0), 10).unwrap();
        let v = evaluate(&t, &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        assert!(v.accepted);
        assert_eq!(v.margin, ExtReal::ZERO);
    }

    #[test]
    fn first_infinite_term_decides() {
        // p* = Bern(1) never shows tails: L(T) = −∞.
        let t = SteinTest::from_pair(&bern(1.0), &bern(0.5), 0.05, 3).unwrap();
        let v = evaluate(&t, &[0, 1, 0]).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.statistic, ExtReal::NegInf);
        assert_eq!(v.margin, ExtReal::NegInf);
        assert!(evaluate(&t, &[0, 0, 0]).unwrap().accepted);
    }

    #[test]
    fn one_round_dp_is_direct_sum() {
        let t = coin_test(1);
        let q = exact_adversary_error(&t, &static_strategy(2.0 / 3.0), Side::Q).unwrap();
        // Only tails (L = ln 2 ≥ 0.181) is accepted.
        assert!((q - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn static_q_star_respects_markov_bound() {
        let t = coin_test(20);
        let q = exact_adversary_error(&t, &static_strategy(2.0 / 3.0), Side::Q).unwrap();
        assert!(q <= (-20.0 * (LN_2 / 3.0 - 0.05)).exp());
        // Binomial oracle: accept iff tails − heads ≥ 20(D − ε)/ln 2.
        let need = 20.0 * (LN_2 / 3.0 - 0.05) / LN_2;
        let mut direct = 0.0;
        for tails in 0..=20u32 {
            if tails as f64 - (20 - tails) as f64 >= need {
                let c = (1..=tails).fold(1.0, |acc, i| acc * (20 - tails + i) as f64 / i as f64);
                direct += c * (1.0f64 / 3.0).powi(tails as i32) * (2.0f64 / 3.0).powi(20 - tails as i32);
            }
        }
        assert!((q - direct).abs() < 1e-14);
    }

    fn binomial_acceptance(n: u32) -> f64 {
        let need = n as f64 * (LN_2 / 3.0 - 0.05) / LN_2;
        let mut log_c = 0.0; // ln C(n, tails), updated incrementally
        let mut total = 0.0;
        for tails in 0..=n {
            if tails > 0 {
                log_c += ((n - tails + 1) as f64).ln() - (tails as f64).ln();
            }
            if 2.0 * tails as f64 - n as f64 >= need - 1e-9 {
                total += (log_c + tails as f64 * (2.0f64 / 3.0).ln() + (n - tails) as f64 * (1.0f64 / 3.0).ln()).exp();
            }
        }
        total
    }

    #[test]
    fn static_p_star_acceptance_grows_to_one() {
        let mut last = 0.0;
        for n in [200usize, 500, 1000] {
            let reject = exact_adversary_error(&coin_test(n), &static_strategy(1.0 / 3.0), Side::P).unwrap();
            let accept = 1.0 - reject;
            assert!((accept - binomial_acceptance(n as u32)).abs() < 1e-9, "n = {n}");
            assert!(accept > last);
            last = accept;
        }
        assert!(last >= 0.99);
    }

    #[test]
    fn bucketed_bound_dominates_exact() {
        let t = coin_test(30);
        let s = static_strategy(2.0 / 3.0);
        let exact = exact_adversary_error(&t, &s, Side::Q).unwrap();
        let opts = DpOptions {
            bucket_width: 1e-3,
            exact_state_limit: 0,
        };
        let bucketed = exact_adversary_error_with(&t, &s, Side::Q, opts).unwrap();
        assert!(!bucketed.exact);
        assert!(bucketed.probability >= exact - 1e-15);
        let p = static_strategy(1.0 / 3.0);
        let exact = exact_adversary_error(&t, &p, Side::P).unwrap();
        let bucketed = exact_adversary_error_with(&t, &p, Side::P, opts).unwrap();
        assert!(bucketed.probability >= exact - 1e-15);
    }

    #[test]
    fn refuses_degenerate_solutions() {
        let c = ConvexClass::singleton(bern(0.4));
        let sol = crate::exponents::solve_stein(&c, &c, 1e-10).unwrap();
        assert!(matches!(SteinTest::new(&sol, 0.05, 10), Err(Error::TestRefused(_))));
    }
}
