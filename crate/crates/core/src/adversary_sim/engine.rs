use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::ConvexClass;
use crate::error::{Error, Result};
use crate::exponents::{solve_chernoff, solve_stein};
use crate::prob::{ensure_same_alphabet, ExtReal, LogLikelihoodTable, SymbolClass};
use crate::testing::{AcceptanceRegion, ChernoffTest, Side, StatisticTracker, SteinTest, TestRegion};

use super::rng::episode_rng;
use super::strategy::{builtin_strategy, AdaptiveStrategy, HistoryView, Rule, StrategyKind, Target, TestFamily};

/// Smallest batch of episodes handed to one worker.
const EPISODE_CHUNK: u64 = 4096;

/// Points with fewer error events than this are left out of the fit.
pub const MIN_FIT_COUNT: u64 = 50;

/// Anything that turns a strategy's mixture weights into an outcome
/// distribution for one round.
pub trait EpisodeSource: Sync {
    fn alphabet_size(&self) -> usize;
    /// Length of the weight vectors this source accepts.
    fn num_weights(&self) -> usize;
    fn outcome_distribution(&self, weights: &[f64]) -> Result<Vec<f64>>;
}

impl EpisodeSource for ConvexClass {
    fn alphabet_size(&self) -> usize {
        ConvexClass::alphabet_size(self)
    }

    fn num_weights(&self) -> usize {
        self.len()
    }

    fn outcome_distribution(&self, weights: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mix_raw(weights))
    }
}

/// Error probabilities measured at one sample length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    /// Fraction of `P` episodes rejected.
    pub alpha_hat: f64,
    pub alpha_se: f64,
    /// Fraction of `Q` episodes accepted.
    pub beta_hat: f64,
    pub beta_se: f64,
    pub alpha_count: u64,
    pub beta_count: u64,
}

/// Log-linear fit of the decay of the error probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Negative slope of `ln(error)` against `n`, in nats.
    pub exponent: f64,
    /// 95% half-width from the binomial standard errors (delta method).
    pub half_width: f64,
    /// Sample lengths that entered the fit.
    pub points: Vec<usize>,
    /// No error was observed; `exponent` is the rule-of-three lower bound
    /// `ln(trials/3)/n_min`.
    pub lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    #[serde(flatten)]
    pub family: TestFamily,
    pub p_strategy: String,
    pub q_strategy: String,
    pub n_values: Vec<usize>,
    pub trials_per_n: u64,
    pub seed: u64,
    pub rows: Vec<ErrorRow>,
    /// Exponent computed by the solver for the same classes.
    pub theoretical_exponent: ExtReal,
    /// `None` when fewer than two points carry any error events.
    pub fit: Option<ExponentFit>,
    /// Set when no test could be built (zero or infinite exponent).
    pub refused: Option<String>,
    pub unit: String,
}

impl ExperimentResult {
    pub fn fitted_exponent(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.exponent)
    }

    /// `n,alpha_hat,alpha_se,beta_hat,beta_se` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,alpha_hat,alpha_se,beta_hat,beta_se\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.n, r.alpha_hat, r.alpha_se, r.beta_hat, r.beta_se
            ));
        }
        out
    }
}

/// Parameters shared by every sample length of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub family: TestFamily,
    pub n_values: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Solver tolerance.
    pub tol: f64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::InvalidArgument("n_values must be a nonempty list of positive lengths".into()));
        }
        if let TestFamily::Stein { epsilon } = self.family {
            if !(epsilon > 0.0) {
                return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Stream index for one episode: sample-length slot, side and episode number
/// packed so that no two episodes of an experiment share a stream.
pub fn episode_stream(n_index: usize, side: Side, episode: u64) -> u64 {
    debug_assert!(episode < 1 << 40 && n_index < 1 << 22);
    let side_bit = match side {
        Side::P => 0,
        Side::Q => 1,
    };
    ((n_index as u64) << 41) | (side_bit << 40) | episode
}

fn sample(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (x, &r) in dist.iter().enumerate() {
        if r > 0.0 {
            acc += r;
            last = x;
            if u < acc {
                return x;
            }
        }
    }
    last
}

fn check_strategy<S: EpisodeSource + ?Sized>(source: &S, strategy: &AdaptiveStrategy) -> Result<()> {
    if strategy.class().len() != source.num_weights() {
        return Err(Error::LengthMismatch {
            expected: source.num_weights(),
            got: strategy.class().len(),
        });
    }
    if source.alphabet_size() != strategy.class().alphabet_size() {
        return Err(Error::AlphabetMismatch(
            "strategy class and episode source use different alphabets".into(),
        ));
    }
    Ok(())
}

/// Inverse-CDF sampler for a strategy that never changes its mixture, with
/// each symbol's class in the test table resolved up front.
///
/// The cumulative sums are accumulated in the same order as [`sample`], so
/// a draw `u` maps to exactly the symbol `sample` would pick.
pub(crate) struct StaticSampler {
    cumulative: Vec<f64>,
    classes: Vec<SymbolClass>,
}

impl StaticSampler {
    fn new(dist: &[f64], table: &LogLikelihoodTable) -> Self {
        let (mut cumulative, mut classes) = (Vec::new(), Vec::new());
        let mut acc = 0.0;
        for (x, &r) in dist.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                cumulative.push(acc);
                classes.push(table.class_of(x));
            }
        }
        if classes.is_empty() {
            cumulative.push(f64::INFINITY);
            classes.push(table.class_of(0));
        }
        StaticSampler { cumulative, classes }
    }

    fn draw(&self, u: f64) -> SymbolClass {
        match self.cumulative.iter().position(|&c| u < c) {
            Some(i) => self.classes[i],
            None => self.classes[self.classes.len() - 1],
        }
    }

    /// Final statistic of `n` i.i.d. rounds; the first infinite term decides.
    fn play(&self, table: &LogLikelihoodTable, n: usize, rng: &mut ChaCha8Rng) -> ExtReal {
        const INLINE: usize = 16;
        let groups = table.group_values().len();
        let mut inline = [0u32; INLINE];
        let mut heap = Vec::new();
        let counts: &mut [u32] = if groups <= INLINE {
            &mut inline[..groups]
        } else {
            heap.resize(groups, 0);
            &mut heap
        };
        for _ in 0..n {
            match self.draw(rng.random()) {
                SymbolClass::Finite(g) => counts[g] += 1,
                SymbolClass::PosInf => return ExtReal::PosInf,
                SymbolClass::NegInf => return ExtReal::NegInf,
            }
        }
        ExtReal::Finite(table.statistic_from_counts(counts))
    }
}

/// Plays one episode of `n` rounds and returns the final statistic.
///
/// Round `k` consumes the `k`-th `f64` of the stream, so an episode's draws
/// depend only on its stream, never on scheduling. The episode stops early
/// once an infinite term has decided the statistic.
pub(crate) fn play_episode<S: EpisodeSource + ?Sized>(
    source: &S,
    strategy: &AdaptiveStrategy,
    sampler: Option<&StaticSampler>,
    region: &dyn AcceptanceRegion,
    rng: &mut ChaCha8Rng,
) -> Result<ExtReal> {
    if let Some(sampler) = sampler {
        return Ok(sampler.play(region.table(), region.n(), rng));
    }
    let mut tracker = StatisticTracker::new(region.table());
    let mut symbols = Vec::new();
    let keep = strategy.needs_history();
    for round in 0..region.n() {
        let u: f64 = rng.random();
        let w = strategy.choose(&HistoryView {
            round,
            symbols: &symbols,
            statistic: tracker.statistic().to_f64(),
        });
        if w.len() != source.num_weights() {
            return Err(Error::LengthMismatch {
                expected: source.num_weights(),
                got: w.len(),
            });
        }
        let x = sample(&source.outcome_distribution(w.as_slice())?, u);
        tracker.push(x);
        if keep {
            symbols.push(x);
        }
        if tracker.is_decided() {
            break;
        }
    }
    Ok(tracker.statistic())
}

fn static_sampler<S: EpisodeSource + ?Sized>(
    source: &S,
    strategy: &AdaptiveStrategy,
    region: &dyn AcceptanceRegion,
) -> Result<Option<StaticSampler>> {
    match &strategy.rule {
        Rule::Static(w) => Ok(Some(StaticSampler::new(&source.outcome_distribution(w.as_slice())?, region.table()))),
        _ => Ok(None),
    }
}

/// Final statistics of `trials` episodes, in episode order.
#[allow(clippy::too_many_arguments)]
pub fn simulate_statistics<S: EpisodeSource + ?Sized>(
    source: &S,
    strategy: &AdaptiveStrategy,
    region: &dyn AcceptanceRegion,
    side: Side,
    n_index: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<ExtReal>> {
    check_strategy(source, strategy)?;
    let sampler = static_sampler(source, strategy, region)?;
    let play = |e: u64| {
        let mut rng = episode_rng(seed, episode_stream(n_index, side, e));
        play_episode(source, strategy, sampler.as_ref(), region, &mut rng)
    };
    let chunks: Vec<Vec<ExtReal>> = chunk_ranges(trials)
        .into_par_iter()
        .map(|(lo, hi)| (lo..hi).map(play).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

/// Splits `0..trials` into consecutive batches handed to the thread pool.
fn chunk_ranges(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(EPISODE_CHUNK))
        .map(|c| (c * EPISODE_CHUNK, ((c + 1) * EPISODE_CHUNK).min(trials)))
        .collect()
}

/// Number of episodes that end in the adversary's error.
fn count_errors<S: EpisodeSource + ?Sized>(
    source: &S,
    strategy: &AdaptiveStrategy,
    region: &dyn AcceptanceRegion,
    side: Side,
    n_index: usize,
    trials: u64,
    seed: u64,
) -> Result<u64> {
    check_strategy(source, strategy)?;
    let sampler = static_sampler(source, strategy, region)?;
    let error = |e: u64| -> Result<u64> {
        let mut rng = episode_rng(seed, episode_stream(n_index, side, e));
        let stat = play_episode(source, strategy, sampler.as_ref(), region, &mut rng)?;
        let accepted = region.accepts(stat);
        Ok(match side {
            Side::P => u64::from(!accepted),
            Side::Q => u64::from(accepted),
        })
    };
    chunk_ranges(trials)
        .into_par_iter()
        .map(|(lo, hi)| (lo..hi).map(error).sum::<Result<u64>>())
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn binomial_se(hat: f64, trials: u64) -> f64 {
    (hat * (1.0 - hat) / trials as f64).sqrt()
}

/// Runs the experiment on arbitrary episode sources (classical classes or
/// measured quantum classes) against a prebuilt region.
pub fn run_with_sources<P, Q>(
    p_source: &P,
    q_source: &Q,
    p_strategy: &AdaptiveStrategy,
    q_strategy: &AdaptiveStrategy,
    region: &TestRegion,
    plan: &ExperimentPlan,
    theoretical_exponent: ExtReal,
) -> Result<ExperimentResult>
where
    P: EpisodeSource + ?Sized,
    Q: EpisodeSource + ?Sized,
{
    plan.validate()?;
    let mut rows = Vec::with_capacity(plan.n_values.len());
    for (i, &n) in plan.n_values.iter().enumerate() {
        let region = region.with_n(n)?;
        let a = count_errors(p_source, p_strategy, &region, Side::P, i, plan.trials, plan.seed)?;
        let b = count_errors(q_source, q_strategy, &region, Side::Q, i, plan.trials, plan.seed)?;
        let alpha_hat = a as f64 / plan.trials as f64;
        let beta_hat = b as f64 / plan.trials as f64;
        rows.push(ErrorRow {
            n,
            alpha_hat,
            alpha_se: binomial_se(alpha_hat, plan.trials),
            beta_hat,
            beta_se: binomial_se(beta_hat, plan.trials),
            alpha_count: a,
            beta_count: b,
        });
    }
    let fit = fit_exponent(&rows, plan.family, plan.trials);
    Ok(ExperimentResult {
        family: plan.family,
        p_strategy: p_strategy.name().to_string(),
        q_strategy: q_strategy.name().to_string(),
        n_values: plan.n_values.clone(),
        trials_per_n: plan.trials,
        seed: plan.seed,
        rows,
        theoretical_exponent,
        fit,
        refused: None,
        unit: "nats".into(),
    })
}

/// Solves for the optimal pair, builds the test and plays the two catalog
/// strategies against it at every sample length.
pub fn run_experiment(
    p_class: &ConvexClass,
    q_class: &ConvexClass,
    plan: &ExperimentPlan,
    p_kind: StrategyKind,
    q_kind: StrategyKind,
) -> Result<ExperimentResult> {
    plan.validate()?;
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    let (target, region, exponent) = match plan.family {
        TestFamily::Stein { epsilon } => {
            let sol = solve_stein(p_class, q_class, plan.tol)?;
            match sol.exponent {
                ExtReal::Finite(d) if d > 0.0 => {}
                other => return Ok(refused(plan, p_kind, q_kind, other)),
            }
            let test = SteinTest::new(&sol, epsilon, plan.n_values[0])?;
            (Target::stein(&sol, epsilon), TestRegion::Stein(test), sol.exponent)
        }
        TestFamily::Chernoff => {
            let sol = solve_chernoff(p_class, q_class, plan.tol)?;
            match sol.exponent {
                ExtReal::Finite(g) if g > 0.0 => {}
                other => return Ok(refused(plan, p_kind, q_kind, other)),
            }
            let test = ChernoffTest::new(&sol, plan.n_values[0])?;
            (Target::chernoff(&sol), TestRegion::Chernoff(test), sol.exponent)
        }
    };
    let p_strategy = builtin_strategy(p_kind, p_class, Side::P, &target, plan.seed)?;
    let q_strategy = builtin_strategy(q_kind, q_class, Side::Q, &target, plan.seed)?;
    run_with_sources(p_class, q_class, &p_strategy, &q_strategy, &region, plan, exponent)
}

fn refused(plan: &ExperimentPlan, p_kind: StrategyKind, q_kind: StrategyKind, exponent: ExtReal) -> ExperimentResult {
    ExperimentResult {
        family: plan.family,
        p_strategy: p_kind.to_string(),
        q_strategy: q_kind.to_string(),
        n_values: plan.n_values.clone(),
        trials_per_n: plan.trials,
        seed: plan.seed,
        rows: Vec::new(),
        theoretical_exponent: exponent,
        fit: Some(ExponentFit {
            exponent: exponent.to_f64(),
            half_width: 0.0,
            points: Vec::new(),
            lower_bound: false,
        }),
        refused: Some(format!(
            "the optimal exponent is {exponent}; no likelihood-ratio test is constructed"
        )),
        unit: "nats".into(),
    }
}

/// Fits `ln(error_n) ≈ c − E·n` by least squares.
///
/// The error is `β̂` for Stein tests and `α̂ + β̂` for Chernoff tests. Points
/// with at least [`MIN_FIT_COUNT`] error events are used when there are two
/// or more of them; otherwise every point with a nonzero count is used.
pub fn fit_exponent(rows: &[ErrorRow], family: TestFamily, trials: u64) -> Option<ExponentFit> {
    let error = |r: &ErrorRow| -> (u64, f64, f64) {
        match family {
            TestFamily::Stein { .. } => (r.beta_count, r.beta_hat, r.beta_se),
            TestFamily::Chernoff => {
                let c = r.alpha_count + r.beta_count;
                let hat = r.alpha_hat + r.beta_hat;
                (c, hat, (r.alpha_se.powi(2) + r.beta_se.powi(2)).sqrt())
            }
        }
    };
    let mut used: Vec<&ErrorRow> = rows.iter().filter(|r| error(r).0 >= MIN_FIT_COUNT).collect();
    if used.len() < 2 {
        used = rows.iter().filter(|r| error(r).0 > 0).collect();
    }
    if used.len() < 2 {
        if rows.iter().all(|r| error(r).0 == 0) && !rows.is_empty() {
            let n_min = rows.iter().map(|r| r.n).min()? as f64;
            return Some(ExponentFit {
                exponent: (trials as f64 / 3.0).ln() / n_min,
                half_width: 0.0,
                points: Vec::new(),
                lower_bound: true,
            });
        }
        return None;
    }
    let xs: Vec<f64> = used.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = used.iter().map(|r| error(r).1.ln()).collect();
    let m = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    let var: f64 = used
        .iter()
        .zip(&xs)
        .map(|(r, x)| {
            let (_, hat, se) = error(r);
            (x - x_bar).powi(2) * (se / hat).powi(2)
        })
        .sum::<f64>()
        / (sxx * sxx);
    Some(ExponentFit {
        exponent: -slope,
        half_width: 1.96 * var.sqrt(),
        points: used.iter().map(|r| r.n).collect(),
        lower_bound: false,
    })
}
