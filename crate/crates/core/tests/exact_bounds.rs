//! Exact finite-n checks that no shipped Markov adversary beats the
//! exponential error bounds of the likelihood-ratio tests.

mod common;

use std::sync::Arc;

use advhyp_core::adversary_sim::{builtin_strategies, MarkovStrategy, Target};
use advhyp_core::{
    exact_adversary_error, solve_chernoff, solve_stein, Alphabet, ChernoffTest, ConvexClass, Distribution, MixWeights,
    Side, SteinTest,
};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPSILON: f64 = 0.05;
const MAX_N: usize = 40;

fn markov_catalog(class: &ConvexClass, side: Side, target: &Target) -> Vec<MarkovStrategy> {
    builtin_strategies(class, side, target, 7)
        .unwrap()
        .iter()
        .map(|s| s.to_markov().expect("catalog strategies are Markov"))
        .collect()
}

/// Extra adversary: flips between the extreme vertices depending on the
/// parity of the round and the sign of the statistic.
fn oscillating(class: &ConvexClass) -> MarkovStrategy {
    let k = class.len();
    MarkovStrategy::new("oscillating", class.clone(), move |round, stat| {
        let i = if (round % 2 == 0) == (stat >= 0.0) { 0 } else { k - 1 };
        MixWeights::vertex(k, i)
    })
}

fn check_stein(p: &ConvexClass, q: &ConvexClass) {
    let sol = solve_stein(p, q, 1e-12).unwrap();
    let d = sol.exponent.finite().unwrap();
    let target = Target::stein(&sol, EPSILON);
    let mut strategies = markov_catalog(q, Side::Q, &target);
    strategies.push(oscillating(q));
    let base = SteinTest::new(&sol, EPSILON, 1).unwrap();
    for n in 1..=MAX_N {
        let test = base.with_n(n).unwrap();
        let bound = (-(n as f64) * (d - EPSILON)).exp();
        for s in &strategies {
            let beta = exact_adversary_error(&test, s, Side::Q).unwrap();
            assert!(beta <= bound * (1.0 + 1e-9), "{} at n={n}: {beta:e} > {bound:e}", s.name());
        }
    }
}

fn check_chernoff(p: &ConvexClass, q: &ConvexClass) {
    let sol = solve_chernoff(p, q, 1e-12).unwrap();
    let g = sol.exponent.finite().unwrap();
    let target = Target::chernoff(&sol);
    let mut q_strats = markov_catalog(q, Side::Q, &target);
    q_strats.push(oscillating(q));
    let mut p_strats = markov_catalog(p, Side::P, &target);
    p_strats.push(oscillating(p));
    let base = ChernoffTest::new(&sol, 1).unwrap();
    for n in 1..=MAX_N {
        let test = base.with_n(n).unwrap();
        let bound = (-(n as f64) * g).exp();
        for s in &q_strats {
            let beta = exact_adversary_error(&test, s, Side::Q).unwrap();
            assert!(beta <= bound * (1.0 + 1e-9), "Q {} at n={n}: {beta:e} > {bound:e}", s.name());
        }
        for s in &p_strats {
            let alpha = exact_adversary_error(&test, s, Side::P).unwrap();
            assert!(alpha <= bound * (1.0 + 1e-9), "P {} at n={n}: {alpha:e} > {bound:e}", s.name());
        }
    }
}

#[test]
fn coin_interval_stein_bound_holds_exactly() {
    check_stein(&coin_p(), &coin_q());
}

#[test]
fn random_three_symbol_stein_bound_holds_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = Arc::new(Alphabet::new(3).unwrap());
    let mut checked = 0;
    while checked < 3 {
        let p = random_class(&mut rng, &a, 3);
        let q = random_class(&mut rng, &a, 2);
        if solve_stein(&p, &q, 1e-12).unwrap().exponent.finite().unwrap() > EPSILON {
            check_stein(&p, &q);
            checked += 1;
        }
    }
}

#[test]
fn chernoff_bounds_hold_on_both_sides() {
    let p = ConvexClass::singleton(Distribution::bernoulli(1.0 / 3.0).unwrap());
    let q = ConvexClass::singleton(Distribution::bernoulli(2.0 / 3.0).unwrap());
    check_chernoff(&p, &q);
    check_chernoff(&coin_p(), &coin_q());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = Arc::new(Alphabet::new(3).unwrap());
    let p = random_class(&mut rng, &a, 2);
    let q = random_class(&mut rng, &a, 3);
    check_chernoff(&p, &q);
}

#[test]
fn singleton_chernoff_error_matches_binomial_tail() {
    // With p* = Bern(1/3), q* = Bern(2/3) and λ* = 1/2 the test accepts iff
    // heads ≤ tails, so β_n = P[Bin(n, 2/3) ≤ n/2].
    let p = ConvexClass::singleton(Distribution::bernoulli(1.0 / 3.0).unwrap());
    let q = ConvexClass::singleton(Distribution::bernoulli(2.0 / 3.0).unwrap());
    let sol = solve_chernoff(&p, &q, 1e-12).unwrap();
    let q_star = MarkovStrategy::new("q*", q.clone(), |_, _| MixWeights::vertex(1, 0));
    for n in [1usize, 7, 20, 33] {
        let test = ChernoffTest::new(&sol, n).unwrap();
        let beta = exact_adversary_error(&test, &q_star, Side::Q).unwrap();
        let oracle: f64 = (0..=n as u64 / 2).map(|h| log_binomial_pmf(n as u64, h, 2.0 / 3.0).exp()).sum();
        assert!((beta - oracle).abs() < 1e-12, "n={n}: {beta} vs {oracle}");
    }
}
