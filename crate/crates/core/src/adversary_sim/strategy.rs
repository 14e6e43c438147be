use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexClass, MixWeights};
use crate::error::{Error, Result};
use crate::exponents::{tilt, weighted_sum, ChernoffSolution, SteinSolution};
use crate::prob::{ExtReal, LogLikelihoodTable};
use crate::testing::Side;

/// What an adaptive rule may look at before choosing the next distribution.
#[derive(Debug, Clone, Copy)]
pub struct HistoryView<'a> {
    /// Zero-based index of the round about to be played.
    pub round: usize,
    /// Symbols observed so far (empty for strategies that do not ask for them).
    pub symbols: &'a [usize],
    /// Running `Σ L(x_i)` under the target table.
    pub statistic: f64,
}

pub type MarkovRule = Arc<dyn Fn(usize, f64) -> MixWeights + Send + Sync>;
pub type HistoryRule = Arc<dyn Fn(&HistoryView<'_>) -> MixWeights + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Rule {
    Static(MixWeights),
    Markov(MarkovRule),
    History(HistoryRule),
}

/// An adversary choosing each round's distribution from a convex class.
#[derive(Clone)]
pub struct AdaptiveStrategy {
    name: String,
    class: ConvexClass,
    pub(crate) rule: Rule,
}

impl fmt::Debug for AdaptiveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.rule {
            Rule::Static(_) => "static",
            Rule::Markov(_) => "markov",
            Rule::History(_) => "history",
        };
        f.debug_struct("AdaptiveStrategy")
            .field("name", &self.name)
            .field("kind", &kind)
            .finish()
    }
}

impl AdaptiveStrategy {
    /// Plays the same mixture every round.
    pub fn fixed(name: impl Into<String>, class: ConvexClass, weights: MixWeights) -> Result<Self> {
        if weights.len() != class.len() {
            return Err(Error::LengthMismatch {
                expected: class.len(),
                got: weights.len(),
            });
        }
        Ok(AdaptiveStrategy {
            name: name.into(),
            class,
            rule: Rule::Static(weights),
        })
    }

    pub fn markov<F>(name: impl Into<String>, class: ConvexClass, rule: F) -> Self
    where
        F: Fn(usize, f64) -> MixWeights + Send + Sync + 'static,
    {
        AdaptiveStrategy {
            name: name.into(),
            class,
            rule: Rule::Markov(Arc::new(rule)),
        }
    }

    pub fn from_history<F>(name: impl Into<String>, class: ConvexClass, rule: F) -> Self
    where
        F: Fn(&HistoryView<'_>) -> MixWeights + Send + Sync + 'static,
    {
        AdaptiveStrategy {
            name: name.into(),
            class,
            rule: Rule::History(Arc::new(rule)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> &ConvexClass {
        &self.class
    }

    pub fn choose(&self, view: &HistoryView<'_>) -> MixWeights {
        match &self.rule {
            Rule::Static(w) => w.clone(),
            Rule::Markov(f) => f(view.round, view.statistic),
            Rule::History(f) => f(view),
        }
    }

    /// Whether the rule needs the observed symbols, not just the statistic.
    pub fn needs_history(&self) -> bool {
        matches!(self.rule, Rule::History(_))
    }

    /// The Markov restriction of this strategy, if it has one.
    pub fn to_markov(&self) -> Option<MarkovStrategy> {
        let rule: MarkovRule = match &self.rule {
            Rule::Static(w) => {
                let w = w.clone();
                Arc::new(move |_, _| w.clone())
            }
            Rule::Markov(f) => f.clone(),
            Rule::History(_) => return None,
        };
        Some(MarkovStrategy {
            name: self.name.clone(),
            class: self.class.clone(),
            rule,
        })
    }
}

/// A strategy whose choice depends only on the round and the running
/// statistic, which is what makes exact dynamic programming possible.
#[derive(Clone)]
pub struct MarkovStrategy {
    name: String,
    class: ConvexClass,
    rule: MarkovRule,
}

impl fmt::Debug for MarkovStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkovStrategy").field("name", &self.name).finish()
    }
}

impl MarkovStrategy {
    pub fn new<F>(name: impl Into<String>, class: ConvexClass, rule: F) -> Self
    where
        F: Fn(usize, f64) -> MixWeights + Send + Sync + 'static,
    {
        MarkovStrategy {
            name: name.into(),
            class,
            rule: Arc::new(rule),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> &ConvexClass {
        &self.class
    }

    pub fn choose(&self, round: usize, statistic: f64) -> MixWeights {
        (self.rule)(round, statistic)
    }

    pub fn into_adaptive(self) -> AdaptiveStrategy {
        AdaptiveStrategy {
            name: self.name,
            class: self.class,
            rule: Rule::Markov(self.rule),
        }
    }
}

/// The test a catalog strategy is playing against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TestFamily {
    Stein { epsilon: f64 },
    Chernoff,
}

/// Everything a catalog strategy needs to know about the optimal pair.
#[derive(Debug, Clone)]
pub struct Target {
    pub table: LogLikelihoodTable,
    pub weights_p: MixWeights,
    pub weights_q: MixWeights,
    pub family: TestFamily,
    /// Tilt applied to `L` on the `Q` side (1 for Stein, `λ*` for Chernoff).
    pub lambda: f64,
    /// Per-round threshold drift: `D − ε` for Stein, 0 for Chernoff.
    pub slope: f64,
}

impl Target {
    pub fn stein(solution: &SteinSolution, epsilon: f64) -> Self {
        Target {
            table: solution.table.clone(),
            weights_p: solution.weights_p.clone(),
            weights_q: solution.weights_q.clone(),
            family: TestFamily::Stein { epsilon },
            lambda: 1.0,
            slope: solution.exponent.finite().unwrap_or(0.0) - epsilon,
        }
    }

    pub fn chernoff(solution: &ChernoffSolution) -> Self {
        Target {
            table: solution.table.clone(),
            weights_p: solution.weights_p.clone(),
            weights_q: solution.weights_q.clone(),
            family: TestFamily::Chernoff,
            lambda: solution.lambda_star,
            slope: 0.0,
        }
    }
}

/// Names of the shipped strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "vertex")]
pub enum StrategyKind {
    /// Plays the optimal mixture (`p*` or `q*`) every round.
    StaticOptimal,
    StaticVertex(usize),
    UniformMixture,
    /// Greedily maximizes the one-step expected likelihood ratio against the test.
    GreedyRatio,
    /// Pushes the statistic up while below the threshold trajectory, down above it.
    ThresholdChaser,
    /// A vertex chosen by a seeded hash of the round and statistic.
    SeededRandomVertex,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::StaticOptimal => write!(f, "static-optimal"),
            StrategyKind::StaticVertex(i) => write!(f, "static-vertex:{i}"),
            StrategyKind::UniformMixture => write!(f, "uniform-mixture"),
            StrategyKind::GreedyRatio => write!(f, "greedy-ratio"),
            StrategyKind::ThresholdChaser => write!(f, "threshold-chaser"),
            StrategyKind::SeededRandomVertex => write!(f, "seeded-random-vertex"),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "static-optimal" => StrategyKind::StaticOptimal,
            "uniform-mixture" => StrategyKind::UniformMixture,
            "greedy-ratio" => StrategyKind::GreedyRatio,
            "threshold-chaser" => StrategyKind::ThresholdChaser,
            "seeded-random-vertex" => StrategyKind::SeededRandomVertex,
            other => match other.strip_prefix("static-vertex:") {
                Some(i) => StrategyKind::StaticVertex(
                    i.parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad vertex index in {other:?}")))?,
                ),
                None => return Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
            },
        })
    }
}

/// `E_v[f]` with infinite entries: any mass on `+∞` wins unless there is
/// also mass on `−∞`, in which case the comparison value is 0.
fn expected_ext(weights: &[f64], values: &[ExtReal]) -> f64 {
    let (mut pos, mut neg, mut sum) = (false, false, 0.0);
    for (&w, v) in weights.iter().zip(values) {
        if w > 0.0 {
            match v {
                ExtReal::Finite(x) => sum += w * x,
                ExtReal::PosInf => pos = true,
                ExtReal::NegInf => neg = true,
            }
        }
    }
    match (pos, neg) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => sum,
    }
}

/// Index of the largest score; ties go to the first.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.total_cmp(&scores[best]).is_gt() {
            best = i;
        }
    }
    best
}

fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.total_cmp(&scores[best]).is_lt() {
            best = i;
        }
    }
    best
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds one catalog strategy for the given side.
pub fn builtin_strategy(
    kind: StrategyKind,
    class: &ConvexClass,
    side: Side,
    target: &Target,
    seed: u64,
) -> Result<AdaptiveStrategy> {
    let k = class.len();
    if class.alphabet_size() != target.table.alphabet().size() {
        return Err(Error::AlphabetMismatch(
            "strategy class and target table use different alphabets".into(),
        ));
    }
    let name = format!("{kind}");
    let values = target.table.values();
    let vertex_scores = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
        class.vertices().iter().map(|v| f(v.weights())).collect()
    };
    match kind {
        StrategyKind::StaticOptimal => {
            let w = match side {
                Side::P => &target.weights_p,
                Side::Q => &target.weights_q,
            };
            AdaptiveStrategy::fixed(name, class.clone(), w.clone())
        }
        StrategyKind::StaticVertex(i) => {
            if i >= k {
                return Err(Error::InvalidArgument(format!(
                    "vertex {i} does not exist in a class with {k} vertices"
                )));
            }
            AdaptiveStrategy::fixed(name, class.clone(), MixWeights::vertex(k, i))
        }
        StrategyKind::UniformMixture => AdaptiveStrategy::fixed(name, class.clone(), MixWeights::uniform(k)),
        StrategyKind::GreedyRatio => {
            // The quantity the test's supermartingale argument bounds by one:
            // E_q[(p*/q*)^λ] on the Q side, E_p[(q*/p*)^(1−λ)] on the P side.
            let ratio: Vec<f64> = match side {
                Side::Q => values.iter().map(|&l| tilt(l, target.lambda)).collect(),
                Side::P => {
                    let s = match target.family {
                        TestFamily::Stein { .. } => 1.0,
                        TestFamily::Chernoff => 1.0 - target.lambda,
                    };
                    values.iter().map(|&l| tilt(-l, s)).collect()
                }
            };
            let scores = vertex_scores(&|w| weighted_sum(w, &ratio));
            AdaptiveStrategy::fixed(name, class.clone(), MixWeights::vertex(k, argmax(&scores)))
        }
        StrategyKind::ThresholdChaser => {
            let scores = vertex_scores(&|w| expected_ext(w, values));
            let up = argmax(&scores);
            let down = argmin(&scores);
            let slope = target.slope;
            Ok(AdaptiveStrategy::markov(name, class.clone(), move |round, stat| {
                let i = if stat <= round as f64 * slope { up } else { down };
                MixWeights::vertex(k, i)
            }))
        }
        StrategyKind::SeededRandomVertex => Ok(AdaptiveStrategy::markov(name, class.clone(), move |round, stat| {
            let h = splitmix64(seed ^ splitmix64(round as u64 ^ splitmix64(stat.to_bits())));
            MixWeights::vertex(k, (h % k as u64) as usize)
        })),
    }
}

/// The whole catalog for one side, in a fixed order.
pub fn builtin_strategies(class: &ConvexClass, side: Side, target: &Target, seed: u64) -> Result<Vec<AdaptiveStrategy>> {
    catalog_kinds(class.len())
        .into_iter()
        .map(|kind| builtin_strategy(kind, class, side, target, seed))
        .collect()
}

/// Catalog members for a class with `vertices` vertices.
pub fn catalog_kinds(vertices: usize) -> Vec<StrategyKind> {
    let mut kinds = vec![StrategyKind::StaticOptimal];
    kinds.extend((0..vertices).map(StrategyKind::StaticVertex));
    kinds.extend([
        StrategyKind::UniformMixture,
        StrategyKind::GreedyRatio,
        StrategyKind::ThresholdChaser,
        StrategyKind::SeededRandomVertex,
    ]);
    kinds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::solve_stein;
    use crate::prob::Distribution;

    fn class(hs: &[f64]) -> ConvexClass {
        ConvexClass::new(hs.iter().map(|&h| Distribution::bernoulli(h).unwrap()).collect()).unwrap()
    }

    fn coin() -> (ConvexClass, ConvexClass, Target) {
        let p = class(&[0.0, 1.0 / 3.0]);
        let q = class(&[2.0 / 3.0, 1.0]);
        let sol = solve_stein(&p, &q, 1e-12).unwrap();
        let t = Target::stein(&sol, 0.05);
        (p, q, t)
    }

    fn view(round: usize, statistic: f64) -> HistoryView<'static> {
        HistoryView {
            round,
            symbols: &[],
            statistic,
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in catalog_kinds(3) {
            assert_eq!(kind.to_string().parse::<StrategyKind>().unwrap(), kind);
        }
        assert!("static-vertex:x".parse::<StrategyKind>().is_err());
        assert!("bogus".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn singleton_class_collapses() {
        let p = class(&[0.3]);
        let q = class(&[0.6]);
        let sol = solve_stein(&p, &q, 1e-12).unwrap();
        let t = Target::stein(&sol, 0.05);
        for s in builtin_strategies(&q, Side::Q, &t, 7).unwrap() {
            for round in 0..5 {
                assert_eq!(s.choose(&view(round, round as f64 * 0.3 - 1.0)).as_slice(), &[1.0]);
            }
        }
    }

    #[test]
    fn greedy_ratio_respects_the_vertex_bound() {
        let (_, q, t) = coin();
        let s = builtin_strategy(StrategyKind::GreedyRatio, &q, Side::Q, &t, 0).unwrap();
        // E_{Bern(2/3)}[p*/q*] = 1 and E_{Bern(1)}[p*/q*] = 1/2.
        assert_eq!(s.choose(&view(0, 0.0)).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn threshold_chaser_starts_by_raising_the_statistic() {
        let (_, q, t) = coin();
        let s = builtin_strategy(StrategyKind::ThresholdChaser, &q, Side::Q, &t, 0).unwrap();
        // E[L] is −ln2/3 at Bern(2/3) and −ln2 at Bern(1).
        assert_eq!(s.choose(&view(0, 0.0)).as_slice(), &[1.0, 0.0]);
        assert_eq!(s.choose(&view(3, 10.0)).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn seeded_vertex_is_deterministic() {
        let (p, _, t) = coin();
        let a = builtin_strategy(StrategyKind::SeededRandomVertex, &p, Side::P, &t, 11).unwrap();
        let b = builtin_strategy(StrategyKind::SeededRandomVertex, &p, Side::P, &t, 11).unwrap();
        for r in 0..20 {
            assert_eq!(a.choose(&view(r, 0.5)), b.choose(&view(r, 0.5)));
        }
    }

    #[test]
    fn markov_restriction() {
        let (_, q, t) = coin();
        let s = builtin_strategy(StrategyKind::UniformMixture, &q, Side::Q, &t, 0).unwrap();
        let m = s.to_markov().unwrap();
        assert_eq!(m.choose(4, 1.0).as_slice(), &[0.5, 0.5]);
        let h = AdaptiveStrategy::from_history("h", q, |_| MixWeights::vertex(2, 0));
        assert!(h.to_markov().is_none());
        assert!(builtin_strategy(StrategyKind::StaticVertex(5), &class(&[0.1]), Side::Q, &t, 0).is_err());
    }
}
