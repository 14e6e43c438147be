mod common;

use std::time::Instant;

use advhyp_core::quantum::random::{random_basis_povm, random_density, random_povm};
use advhyp_core::quantum::{
    apply_measurement, cmi, compatibility_check, hermitian_eigen, minimax_gap, monotonicity_check,
    neyman_pearson_effect, partial_trace, ppt_check, quantum_relative_entropy, residual_operator,
    restricted_chernoff, restricted_divergence, superadditivity_audit, BipartiteStructure, CMatrix, DensityMatrix,
    MeasurementMenu, Membership, Povm, StateClass,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&g + g.adjoint()) * c(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn jacobi_matches_reference_eigensolver(seed in any::<u64>(), d in 1usize..=16) {
        let h = random_hermitian(&mut rng(seed), d);
        let e = hermitian_eigen(&h).unwrap();
        let scale = max_abs(&h);
        prop_assert!(max_abs(&(e.reconstruct() - &h)) <= 1e-10 * scale);
        for (a, b) in e.values.iter().zip(eigenvalues(&h)) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
        let v = &e.vectors;
        prop_assert!(max_abs(&(v.adjoint() * v - CMatrix::identity(d, d))) <= 1e-12);
    }

    #[test]
    fn relative_entropy_matches_reference(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, d, d).unwrap();
        let sigma = random_density(&mut r, d, d).unwrap();
        let ours = quantum_relative_entropy(&rho, &sigma).unwrap().finite().unwrap();
        let reference = quantum_kl_full_rank(rho.matrix(), sigma.matrix());
        prop_assert!((ours - reference).abs() < 1e-9, "{ours} vs {reference}");
        prop_assert!(ours >= -1e-12);
    }

    #[test]
    fn born_rule_matches_trace_formula(seed in any::<u64>(), d in 2usize..=4, k in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, d, 1 + seed as usize % d).unwrap();
        let m = random_povm(&mut r, d, k).unwrap();
        let ours = apply_measurement(&m, &rho).unwrap();
        for (a, b) in ours.weights().iter().zip(born(&m, rho.matrix())) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn neyman_pearson_projector_dominates(seed in any::<u64>(), theta in 0.0f64..4.0) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, 3, 3).unwrap();
        let sigma = random_density(&mut r, 3, 3).unwrap();
        let p = neyman_pearson_effect(theta, &rho, &sigma).unwrap();
        prop_assert!(max_abs(&(&p * &p - &p)) < 1e-10);
        prop_assert!(max_abs(&(p.adjoint() - &p)) < 1e-10);
        let x = rho.matrix() * c(theta, 0.0) - sigma.matrix();
        let score = trace_re(&(&x * &p));
        let positive: f64 = eigenvalues(&x).iter().filter(|&&l| l > 0.0).sum();
        prop_assert!((score - positive).abs() < 1e-10);
        prop_assert!(score >= -1e-12 && score >= trace_re(&x) - 1e-12);
        // No random projector does better.
        let q = random_basis_povm(&mut r, 3).unwrap();
        let other = trace_re(&(&x * &q.effects()[0])) + trace_re(&(&x * &q.effects()[1]));
        prop_assert!(score >= other - 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = BipartiteStructure::bipartite(2, 3).unwrap();
        let rho = random_density(&mut r, 6, 3).unwrap();
        for keep in [[0usize], [1]] {
            let m = partial_trace(&rho, &s, &keep).unwrap();
            prop_assert!((trace_re(m.matrix()) - 1.0).abs() < 1e-10);
            prop_assert!(eigenvalues(m.matrix())[0] >= -1e-10);
        }
        let a = random_density(&mut r, 2, 2).unwrap();
        let b = random_density(&mut r, 3, 3).unwrap();
        let ab = a.tensor(&b).unwrap();
        prop_assert!(max_abs(&(partial_trace(&ab, &s, &[0]).unwrap().matrix() - a.matrix())) < 1e-12);
        prop_assert!(max_abs(&(partial_trace(&ab, &s, &[1]).unwrap().matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn conditional_mutual_information_is_nonnegative(seed in any::<u64>(), rank in 1usize..=8) {
        let mut r = rng(seed);
        let s = BipartiteStructure::tripartite(2, 2, 2).unwrap();
        let rho = random_density(&mut r, 8, rank).unwrap();
        prop_assert!(cmi(&rho, &s).unwrap() >= -1e-9);
        let prod = random_density(&mut r, 2, 2).unwrap()
            .tensor(&random_density(&mut r, 2, 2).unwrap()).unwrap()
            .tensor(&random_density(&mut r, 2, 2).unwrap()).unwrap();
        prop_assert!(cmi(&prod, &s).unwrap().abs() < 1e-9);
    }
}

#[test]
fn data_processing_on_random_triples() {
    let mut r = rng(2024);
    for i in 0..200 {
        let d = 2 + i % 3;
        let rank = if i % 5 == 0 { d - 1 } else { d };
        let rho = random_density(&mut r, d, rank).unwrap();
        let sigma = random_density(&mut r, d, d).unwrap();
        let m = random_povm(&mut r, d, 2 + i % 4).unwrap();
        let check = monotonicity_check(&m, &rho, &sigma).unwrap();
        assert!(check.holds, "triple {i}: {:?}", check);
        let measured = kl(&born(&m, rho.matrix()), &born(&m, sigma.matrix()));
        assert!((check.measured.finite().unwrap() - measured).abs() < 1e-10);
    }
}

#[test]
fn noncommuting_witness_is_strictly_superadditive() {
    let (rho, sigma) = noncommuting_witness();
    let commutator = rho.matrix() * sigma.matrix() - sigma.matrix() * rho.matrix();
    assert!(max_abs(&commutator) > 0.1);
    let full = quantum_relative_entropy(&rho, &sigma).unwrap().finite().unwrap();
    let mut best: f64 = 0.0;
    for i in 0..=180 {
        for j in 0..=72 {
            let m = qubit_projective(std::f64::consts::PI * i as f64 / 180.0, std::f64::consts::TAU * j as f64 / 72.0);
            best = best.max(kl(&born(&m, rho.matrix()), &born(&m, sigma.matrix())));
        }
    }
    let mut r = rng(5);
    for _ in 0..2000 {
        let outcomes = 2 + r.random_range(0..3);
        let m = random_povm(&mut r, 2, outcomes).unwrap();
        best = best.max(kl(&born(&m, rho.matrix()), &born(&m, sigma.matrix())));
    }
    assert!(best < full - 1e-6, "menu best {best} vs D = {full}");
}

#[test]
fn superadditivity_chain_on_random_instances() {
    let s = BipartiteStructure::bipartite(2, 2).unwrap();
    let mut r = rng(77);
    for i in 0..100 {
        let rho = random_density(&mut r, 4, 1 + i % 4).unwrap();
        let sigma = random_density(&mut r, 4, 4).unwrap();
        let mx = random_povm(&mut r, 2, 2 + i % 2).unwrap();
        let my = random_povm(&mut r, 2, 2 + (i / 2) % 2).unwrap();
        let rep = superadditivity_audit(&rho, &sigma, &s, &mx, &my).unwrap();
        assert!(rep.equalities_hold && rep.inequalities_hold, "instance {i}: {rep:?}");
        let effects: Vec<CMatrix> = mx
            .effects()
            .iter()
            .flat_map(|a| my.effects().iter().map(move |b| kron(a, b)))
            .collect();
        let joint_oracle = {
            let p: Vec<f64> = effects.iter().map(|e| trace_re(&(e * rho.matrix()))).collect();
            let q: Vec<f64> = effects.iter().map(|e| trace_re(&(e * sigma.matrix()))).collect();
            kl(&p, &q)
        };
        let joint = rep.joint.finite().unwrap();
        assert!((joint - joint_oracle).abs() < 1e-10);
        assert!(joint >= rep.marginal_bound.finite().unwrap() - 1e-9);
    }
}

#[test]
fn product_pairs_are_additive() {
    let s = BipartiteStructure::bipartite(2, 2).unwrap();
    let mut r = rng(8);
    let (ax, ay, bx, by) = (
        random_density(&mut r, 2, 2).unwrap(),
        random_density(&mut r, 2, 2).unwrap(),
        random_density(&mut r, 2, 2).unwrap(),
        random_density(&mut r, 2, 2).unwrap(),
    );
    let (mx, my) = (random_povm(&mut r, 2, 3).unwrap(), random_povm(&mut r, 2, 2).unwrap());
    let rep = superadditivity_audit(&ax.tensor(&ay).unwrap(), &bx.tensor(&by).unwrap(), &s, &mx, &my).unwrap();
    let sum = kl(&born(&mx, ax.matrix()), &born(&mx, bx.matrix())) + kl(&born(&my, ay.matrix()), &born(&my, by.matrix()));
    assert!((rep.joint.finite().unwrap() - sum).abs() < 1e-12);
    assert!((rep.local_sum.finite().unwrap() - sum).abs() < 1e-12);
}

/// The state `(1/d) Σ_{i,j} e_i ⊗ e_j ⊗ e_i ⊗ e_j` on four qudits.
fn swapping_state(d: usize) -> DensityMatrix {
    let n = d * d * d * d;
    let mut psi = vec![c(0.0, 0.0); n];
    for i in 0..d {
        for j in 0..d {
            psi[((i * d + j) * d + i) * d + j] = c(1.0 / d as f64, 0.0);
        }
    }
    DensityMatrix::pure(&psi).unwrap()
}

fn max_entangled_projector(d: usize) -> CMatrix {
    let mut v = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        v[i * d + i] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    let col = nalgebra::DVector::from_vec(v);
    &col * col.adjoint()
}

#[test]
fn entanglement_swapping_residual_is_transposed_effect() {
    let d = 2;
    let psi = swapping_state(d);
    let cut = BipartiteStructure::bipartite(d * d, d * d).unwrap();
    let mut r = rng(3);
    // Any effect on systems 1 and 2: the residual on 3 and 4 is Mᵀ / d².
    for effect in [max_entangled_projector(d), random_povm(&mut r, d * d, 3).unwrap().effects()[0].clone()] {
        let (prob, tau) = residual_operator(&effect, psi.matrix(), &cut).unwrap();
        let expected = effect.transpose() / c((d * d) as f64, 0.0);
        assert!(max_abs(&(&tau - &expected)) < 1e-12);
        assert!((prob - trace_re(&expected)).abs() < 1e-12);
    }
    let phi = max_entangled_projector(d);
    let menu = MeasurementMenu::new(vec![Povm::binary(phi.clone()).unwrap()]).unwrap();
    let report = compatibility_check(
        &menu,
        &StateClass::singleton(psi),
        &Membership::Separable(BipartiteStructure::bipartite(d, d).unwrap()),
        &cut,
    )
    .unwrap();
    assert!(!report.compatible);
    let failure = report.failures().next().unwrap();
    assert_eq!(failure.effect, 0);
    assert!((failure.witness + 0.5).abs() < 1e-12);
    assert!(!ppt_check(&DensityMatrix::new(phi.transpose()).unwrap(), &BipartiteStructure::bipartite(d, d).unwrap()).unwrap());
    // The complementary outcome leaves a separable residual.
    assert!(report.checks.iter().any(|c| c.effect == 1 && c.member));
}

#[test]
fn local_effects_keep_separable_vertices_separable() {
    let mut r = rng(4);
    // Fully product vertices on A1 B1 A2 B2; the menu measures A1 B1 locally.
    let cut = BipartiteStructure::bipartite(4, 4).unwrap();
    let mut vertices = Vec::new();
    for _ in 0..3 {
        let a = random_density(&mut r, 2, 2).unwrap();
        let b = random_density(&mut r, 2, 2).unwrap();
        let a2 = random_density(&mut r, 2, 2).unwrap();
        let b2 = random_density(&mut r, 2, 2).unwrap();
        vertices.push(a.tensor(&b).unwrap().tensor(&a2.tensor(&b2).unwrap()).unwrap());
    }
    let local = Povm::product(&random_povm(&mut r, 2, 2).unwrap(), &random_povm(&mut r, 2, 2).unwrap()).unwrap();
    let menu = MeasurementMenu::new(vec![local]).unwrap();
    let report = compatibility_check(
        &menu,
        &StateClass::new(vertices).unwrap(),
        &Membership::Separable(BipartiteStructure::bipartite(2, 2).unwrap()),
        &cut,
    )
    .unwrap();
    assert!(report.compatible);
}

#[test]
fn restricted_divergence_is_max_over_menu_of_classical_values() {
    let mut r = rng(9);
    for _ in 0..10 {
        let rho = random_density(&mut r, 3, 3).unwrap();
        let sigma = random_density(&mut r, 3, 3).unwrap();
        let povms: Vec<Povm> = (0..3).map(|_| random_povm(&mut r, 3, 3).unwrap()).collect();
        let oracle: Vec<f64> = povms.iter().map(|m| kl(&born(m, rho.matrix()), &born(m, sigma.matrix()))).collect();
        let menu = MeasurementMenu::new(povms).unwrap();
        let res = restricted_divergence(&menu, &StateClass::singleton(rho.clone()), &StateClass::singleton(sigma.clone()), 1e-12).unwrap();
        let best = oracle.iter().copied().fold(f64::MIN, f64::max);
        assert!((res.value.finite().unwrap() - best).abs() < 1e-10);
        assert!((oracle[res.best_povm_index] - best).abs() < 1e-12);

        let ch = restricted_chernoff(&menu, &StateClass::singleton(rho.clone()), &StateClass::singleton(sigma.clone()), 1e-12).unwrap();
        let chernoff_oracle = menu
            .povms()
            .iter()
            .map(|m| {
                let (p, q) = (born(m, rho.matrix()), born(m, sigma.matrix()));
                (0..=2000)
                    .map(|i| {
                        let l = i as f64 / 2000.0;
                        -p.iter().zip(&q).map(|(a, b)| a.powf(l) * b.powf(1.0 - l)).sum::<f64>().ln()
                    })
                    .fold(f64::MIN, f64::max)
            })
            .fold(f64::MIN, f64::max);
        let v = ch.value.finite().unwrap();
        assert!(v >= chernoff_oracle - 1e-12 && v - chernoff_oracle < 1e-6);
    }
}

/// Grid upper bounds on both sides of the minimax identity.
fn grid_check(menu: &MeasurementMenu, r: &StateClass, s: &StateClass, mu: &[f64], res: u32) -> (f64, f64) {
    let img = |m: &Povm, class: &StateClass| -> Vec<Vec<f64>> { class.vertices().iter().map(|v| born(m, v.matrix())).collect() };
    let ri: Vec<Vec<Vec<f64>>> = menu.povms().iter().map(|m| img(m, r)).collect();
    let si: Vec<Vec<Vec<f64>>> = menu.povms().iter().map(|m| img(m, s)).collect();
    let (ga, gb) = (simplex_grid(r.len(), res), simplex_grid(s.len(), res));
    let (mut minmax, mut min_mixed) = (f64::INFINITY, f64::INFINITY);
    for a in &ga {
        for b in &gb {
            let vals: Vec<f64> = (0..menu.len()).map(|i| kl(&mix(&ri[i], a), &mix(&si[i], b))).collect();
            minmax = minmax.min(vals.iter().copied().fold(f64::MIN, f64::max));
            min_mixed = min_mixed.min(vals.iter().zip(mu).map(|(v, u)| v * u).sum());
        }
    }
    (minmax, min_mixed)
}

#[test]
fn minimax_identity_on_random_instances() {
    let mut r = rng(31);
    let start = Instant::now();
    for i in 0..20 {
        let d = 2 + i % 3;
        let r_class = StateClass::new((0..1 + i % 3).map(|_| random_density(&mut r, d, d).unwrap()).collect()).unwrap();
        let s_class = StateClass::new((0..1 + (i / 3) % 3).map(|_| random_density(&mut r, d, d).unwrap()).collect()).unwrap();
        let menu = MeasurementMenu::new((0..1 + i % 4).map(|_| random_povm(&mut r, d, 2 + i % 3).unwrap()).collect()).unwrap();
        let rep = minimax_gap(&menu, &r_class, &s_class, 1e-6).unwrap();
        assert!(rep.gap.abs() <= 1e-4, "instance {i}: {rep:?}");
        assert!(rep.lhs >= rep.lhs_pure - 1e-9);
        let (minmax, min_mixed) = grid_check(&menu, &r_class, &s_class, &rep.mu, 24);
        assert!(rep.rhs <= minmax + 1e-9, "instance {i}: rhs {} above grid {minmax}", rep.rhs);
        assert!(rep.lhs <= min_mixed + 1e-9, "instance {i}: lhs {} above grid {min_mixed}", rep.lhs);
        assert!(minmax - rep.rhs < 0.05, "instance {i}: grid {minmax} far above rhs {}", rep.rhs);
    }
    eprintln!("minimax: 20 instances in {:?}", start.elapsed());
}

#[test]
fn minimax_single_element_and_singletons() {
    let mut r = rng(32);
    let rho = random_density(&mut r, 2, 2).unwrap();
    let sigma = random_density(&mut r, 2, 2).unwrap();
    let povms: Vec<Povm> = (0..3).map(|_| random_povm(&mut r, 2, 2).unwrap()).collect();
    let oracle = povms.iter().map(|m| kl(&born(m, rho.matrix()), &born(m, sigma.matrix()))).fold(f64::MIN, f64::max);
    let rep = minimax_gap(
        &MeasurementMenu::new(povms).unwrap(),
        &StateClass::singleton(rho),
        &StateClass::singleton(sigma),
        1e-9,
    )
    .unwrap();
    assert!((rep.lhs - oracle).abs() < 1e-8 && (rep.rhs - oracle).abs() < 1e-8);
}
