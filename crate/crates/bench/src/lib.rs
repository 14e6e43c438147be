//! Fixed, seeded instances shared by the benchmarks in `benches/`.

use std::sync::Arc;

use advhyp_core::quantum::random::random_density;
use advhyp_core::quantum::CMatrix;
use advhyp_core::{Alphabet, ConvexClass, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `P = conv{Bern(0), Bern(1/3)}` and `Q = conv{Bern(2/3), Bern(1)}`.
pub fn coin_intervals() -> (ConvexClass, ConvexClass) {
    let b = |h: f64| Distribution::bernoulli(h).expect("valid coin");
    (
        ConvexClass::new(vec![b(0.0), b(1.0 / 3.0)]).expect("valid class"),
        ConvexClass::new(vec![b(2.0 / 3.0), b(1.0)]).expect("valid class"),
    )
}

fn random_distribution(rng: &mut ChaCha8Rng, alphabet: &Arc<Alphabet>) -> Distribution {
    let w: Vec<f64> = (0..alphabet.size()).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    Distribution::new(alphabet.clone(), w.iter().map(|x| x / total).collect()).expect("normalized")
}

/// Two random polytopes with `vertices` vertices each on `symbols` symbols.
pub fn random_classes(seed: u64, symbols: usize, vertices: usize) -> (ConvexClass, ConvexClass) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = Arc::new(Alphabet::new(symbols).expect("nonempty"));
    let mut class = || {
        ConvexClass::new((0..vertices).map(|_| random_distribution(&mut rng, &alphabet)).collect())
            .expect("valid class")
    };
    (class(), class())
}

/// A random full-rank density matrix of dimension `d`.
pub fn random_hermitian(seed: u64, d: usize) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density(&mut rng, d, d).expect("valid dimension").matrix().clone()
}
