use rayon::prelude::*;

use crate::convex::{grid_count, ConvexClass};
use crate::error::{Error, Result};
use crate::prob::{ensure_same_alphabet, kl_raw, ExtReal};

/// Largest number of `(p, q)` grid pairs the exhaustive oracle evaluates.
pub const BRUTE_FORCE_PAIR_LIMIT: u128 = 100_000_000;

/// Exhaustive minimum of `D(p‖q)` over the weight lattices of both classes.
///
/// Used as an independent check of the Frank-Wolfe solver; the answer is
/// exact on the lattice and converges to the true minimum as `resolution`
/// grows.
pub fn brute_force_stein(p_class: &ConvexClass, q_class: &ConvexClass, resolution: u32) -> Result<ExtReal> {
    ensure_same_alphabet(p_class.alphabet(), q_class.alphabet())?;
    let pairs = grid_count(p_class.len(), resolution).saturating_mul(grid_count(q_class.len(), resolution));
    if pairs > BRUTE_FORCE_PAIR_LIMIT {
        return Err(Error::GridOverflow {
            count: pairs,
            limit: BRUTE_FORCE_PAIR_LIMIT,
        });
    }
    let ps: Vec<Vec<f64>> = p_class
        .weight_grid(resolution)?
        .map(|w| p_class.mix_raw(w.as_slice()))
        .collect();
    let qs: Vec<Vec<f64>> = q_class
        .weight_grid(resolution)?
        .map(|w| q_class.mix_raw(w.as_slice()))
        .collect();

    let best = if qs.iter().all(|q| q.iter().all(|&x| x > 0.0)) {
        // D(p‖q) = Σ p ln p − Σ p ln q: one dot product per pair.
        let log_qs: Vec<Vec<f64>> = qs.iter().map(|q| q.iter().map(|x| x.ln()).collect()).collect();
        ps.par_iter()
            .map(|p| {
                let neg_entropy: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
                let cross = log_qs
                    .iter()
                    .map(|lq| p.iter().zip(lq).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                (neg_entropy - cross).max(0.0)
            })
            .reduce(|| f64::INFINITY, f64::min)
    } else {
        ps.par_iter()
            .map(|p| {
                qs.iter()
                    .map(|q| kl_raw(p, q).to_f64())
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    };
    Ok(ExtReal::from_f64(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Distribution;

    fn class(hs: &[f64]) -> ConvexClass {
        ConvexClass::new(hs.iter().map(|&h| Distribution::bernoulli(h).unwrap()).collect()).unwrap()
    }

    #[test]
    fn singletons_are_exact() {
        let v = brute_force_stein(&class(&[0.2]), &class(&[0.6]), 10).unwrap();
        let d = 0.2 * (0.2f64 / 0.6).ln() + 0.8 * (0.8f64 / 0.4).ln();
        assert!((v.finite().unwrap() - d).abs() < 1e-15);
    }

    #[test]
    fn overlapping_is_zero() {
        let v = brute_force_stein(&class(&[0.2, 0.6]), &class(&[0.4, 0.9]), 10).unwrap();
        assert!(v.finite().unwrap() < 1e-12);
    }

    #[test]
    fn guard() {
        let c = class(&[0.1, 0.2, 0.3]);
        assert!(matches!(
            brute_force_stein(&c, &c, 2000),
            Err(Error::GridOverflow { .. })
        ));
    }
}
