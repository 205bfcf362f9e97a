use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steinlab::composite::{composite_optimal_beta, regularized_divergence, chernoff_composite};
use steinlab::divergence::{chernoff, petz_renyi, rel_entropy, rel_entropy_of_coherence, sandwiched_renyi, spectrum_count};
use steinlab::neyman_pearson::optimal_beta;
use steinlab::optim::PgdOptions;
use steinlab::states::{random_density_with, universal_symmetric_state};
use steinlab::{Budget, DensityOperator};
use steinlab_oracles as oracle;

fn random_distribution(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.02).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn diag(p: &[f64]) -> DensityOperator {
    DensityOperator::diagonal(p).unwrap()
}

#[test]
fn qubit_np_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..8 {
        let rho = random_density_with(&mut rng, 2, 2).unwrap();
        let sigma = random_density_with(&mut rng, 2, 2).unwrap();
        for eps in [0.05, 0.3, 0.7] {
            let fast = optimal_beta(&rho, &sigma, eps).unwrap().beta;
            let slow = oracle::qubit_np_beta(oracle::bloch(rho.op().matrix()), oracle::bloch(sigma.op().matrix()), eps, 1e-3);
            assert!((fast - slow).abs() <= 1e-4, "eps {eps}: {fast} vs {slow}");
        }
    }
}

#[test]
fn commuting_np_matches_sorted_likelihood_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let budget = Budget::default();
    for trial in 0..12 {
        let d = 2 + trial % 3;
        let p = random_distribution(&mut rng, d);
        let q = random_distribution(&mut rng, d);
        let n = if d == 2 { 3 } else { 2 };
        let rho = diag(&p).tensor_power(n, &budget).unwrap();
        let sigma = diag(&q).tensor_power(n, &budget).unwrap();
        for eps in [0.01, 0.25, 0.5] {
            let fast = optimal_beta(&rho, &sigma, eps).unwrap().beta;
            let exact = oracle::classical_np_beta(&oracle::product_distribution(&p, n), &oracle::product_distribution(&q, n), eps);
            assert!((fast - exact).abs() <= 1e-9, "{fast} vs {exact}");
        }
    }
}

#[test]
fn classical_divergences_match_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..10 {
        let p = random_distribution(&mut rng, 4);
        let q = random_distribution(&mut rng, 4);
        let (r, s) = (diag(&p), diag(&q));
        assert!((rel_entropy(&r, &s).unwrap().value - oracle::kl(&p, &q)).abs() < 1e-12);
        for a in [0.3, 0.7, 2.0] {
            let e = oracle::renyi(&p, &q, a);
            assert!((petz_renyi(&r, &s, a).unwrap().value - e).abs() < 1e-10);
            assert!((sandwiched_renyi(&r, &s, a).unwrap().value - e).abs() < 1e-10);
        }
        let c = chernoff(&r, &s).unwrap().value.value;
        assert!((c - oracle::classical_chernoff(&p, &q, 1000)).abs() < 1e-6);
    }
}

#[test]
fn coherence_matches_simplex_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for d in 2..=4 {
        for _ in 0..3 {
            let rho = random_density_with(&mut rng, d, d).unwrap();
            let closed = rel_entropy_of_coherence(&rho).unwrap().value;
            let slow = oracle::coherence_by_simplex(rho.op().matrix());
            assert!((closed - slow).abs() < 1e-6, "{closed} vs {slow}");
        }
    }
}

#[test]
fn spectrum_count_matches_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let budget = Budget::default();
    for n in 1..=6 {
        let sigma = random_density_with(&mut rng, 2, 2).unwrap();
        let sn = sigma.tensor_power(n, &budget).unwrap();
        let eigs = oracle::eigenvalues(sigma.op().matrix());
        let expected = oracle::count_distinct(&oracle::tensor_power_spectrum(&eigs, n), 1e-10);
        assert_eq!(spectrum_count(sn.op()).unwrap(), expected);
        assert_eq!(expected, n + 1);
    }
}

#[test]
fn universal_state_matches_permutation_sum() {
    let budget = Budget::default();
    for (d, n) in [(2, 1), (2, 2), (2, 3), (3, 2)] {
        let fast = universal_symmetric_state(d, n, &budget).unwrap();
        let slow: Mat<c64> = oracle::to_mat(&oracle::universal_state(d, n));
        let diff = steinlab::operator::max_abs_diff(fast.op().matrix(), slow.as_ref());
        assert!(diff < 1e-12, "d={d} n={n}: {diff}");
    }
}

#[test]
fn regularized_commuting_matches_classical_mixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for n in 1..=3 {
        let p = random_distribution(&mut rng, 2);
        let q1 = random_distribution(&mut rng, 2);
        let q2 = random_distribution(&mut rng, 2);
        let r = regularized_divergence(&[diag(&p)], &[diag(&q1), diag(&q2)], n, &Budget::default(), &PgdOptions::default())
            .unwrap();
        let e = oracle::classical_mixture_divergence(&p, &q1, &q2, n);
        assert!((r.value - e).abs() < 1e-6, "n={n}: {} vs {e}", r.value);
    }
}

#[test]
fn composite_brackets_classical_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..6 {
        let nulls: Vec<[f64; 2]> = (0..2).map(|_| { let p = random_distribution(&mut rng, 2); [p[0], p[1]] }).collect();
        let alts: Vec<[f64; 2]> = (0..2).map(|_| { let p = random_distribution(&mut rng, 2); [p[0], p[1]] }).collect();
        let eps = 0.2;
        let sol = composite_optimal_beta(
            &nulls.iter().map(|p| diag(p)).collect::<Vec<_>>(),
            &alts.iter().map(|p| diag(p)).collect::<Vec<_>>(),
            eps,
        )
        .unwrap();
        let e = oracle::classical_composite_beta(&nulls, &alts, eps, 1000);
        assert!(sol.lower <= e + 1e-9 && e <= sol.upper + 1e-9, "[{}, {}] vs {e}", sol.lower, sol.upper);
        assert!(sol.upper - e <= 1e-4, "upper {} vs {e}", sol.upper);
    }
}

#[test]
fn chernoff_composite_singletons_commuting() {
    let p = [0.8, 0.2];
    let q = [0.3, 0.7];
    let c = chernoff_composite(&[diag(&p)], &[diag(&q)], 2, &Budget::default()).unwrap();
    assert!((c.value - oracle::classical_chernoff(&p, &q, 1000)).abs() < 1e-6);
}
