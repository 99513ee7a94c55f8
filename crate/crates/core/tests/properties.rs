use mubtomo::estimate::{linear_inversion, predict_mixed_infidelity};
use mubtomo::linalg::{
    eig_hermitian, kron, project_to_physical, sqrt_psd, trace_product, ComplexMatrix, C64,
};
use mubtomo::simulate::born_probabilities;
use mubtomo::states::{density_from_pure, haar_random_unitary, maximally_mixed, PureState};
use mubtomo::{
    fidelity, infidelity, mle_reconstruct, mub_scheme, purity, sample_counts, ssqst_scheme, CountModel,
    DensityMatrix, MleOptions, NamedState, RngStream,
};
use proptest::prelude::*;

fn hermitian(d: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |xs| {
        let m = ComplexMatrix::from_fn(d, d, |i, j| C64::new(xs[2 * (i * d + j)], xs[2 * (i * d + j) + 1]));
        (&m + &m.dagger()).scale_real(0.5)
    })
}

fn square(d: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |xs| {
        ComplexMatrix::from_fn(d, d, |i, j| C64::new(xs[2 * (i * d + j)], xs[2 * (i * d + j) + 1]))
    })
}

/// Random full-rank two-qubit density matrix: `A A† / Tr(A A†)`.
fn density() -> impl Strategy<Value = DensityMatrix> {
    square(4).prop_map(|a| {
        let m = &a * &a.dagger();
        let t = m.trace().re;
        DensityMatrix::new(m.scale_real(1.0 / t).hermitize()).unwrap()
    })
}

fn pure(seed: u64) -> PureState {
    let u = haar_random_unitary(4, &mut RngStream::new(seed, 0));
    PureState::new(u.column(0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn eig_reconstructs_and_orthonormal_2(m in hermitian(2)) {
        let e = eig_hermitian(&m).unwrap();
        prop_assert!(e.reconstruct_with(|l| l).max_abs_diff(&m) < 1e-12);
        let v = &e.vectors;
        prop_assert!((&v.dagger() * v).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eig_reconstructs_and_orthonormal_4(m in hermitian(4)) {
        let e = eig_hermitian(&m).unwrap();
        prop_assert!(e.reconstruct_with(|l| l).max_abs_diff(&m) < 1e-12);
        let v = &e.vectors;
        prop_assert!((&v.dagger() * v).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn psd_square_root_squares_back(a in square(4)) {
        let m = (&a * &a.dagger()).hermitize();
        let r = sqrt_psd(&m).unwrap();
        prop_assert!((&r * &r).max_abs_diff(&m) < 1e-10);
        prop_assert!(r.hermiticity_error() < 1e-12);
    }

    #[test]
    fn trace_product_is_symmetric_for_hermitian(a in hermitian(4), b in hermitian(4)) {
        let ab = trace_product(&a, &b).unwrap();
        let ba = trace_product(&b, &a).unwrap();
        prop_assert!((ab - ba).norm() < 1e-12);
        prop_assert!(ab.im.abs() < 1e-12);
    }

    #[test]
    fn kron_is_associative_and_mixed_product(a in square(2), b in square(2), c in square(2), d in square(2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn physical_projection_is_a_state(m in hermitian(4)) {
        let shifted = &m + &ComplexMatrix::identity(4).scale_real(0.25 - m.trace().re / 4.0);
        let p = project_to_physical(&shifted).unwrap();
        prop_assert!(DensityMatrix::new(p.clone()).is_ok());
        prop_assert!((p.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_symmetric_and_bounded(a in density(), b in density()) {
        let ab = fidelity(&a, &b).unwrap();
        let ba = fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!(purity(&a) <= 1.0 + 1e-12 && purity(&a) >= 0.25 - 1e-12);
    }

    #[test]
    fn fidelity_with_pure_state_is_expectation(seed in any::<u64>(), rho in density()) {
        let psi = pure(seed);
        let expect = trace_product(&psi.projector(), rho.matrix()).unwrap().re;
        let f = fidelity(&density_from_pure(&psi), &rho).unwrap();
        prop_assert!((f - expect).abs() < 1e-9);
    }

    #[test]
    fn born_probabilities_are_distributions(rho in density(), v in 0.5f64..=1.0) {
        for scheme in [mub_scheme(v).unwrap(), ssqst_scheme()] {
            for b in &scheme.bases {
                let p = born_probabilities(&rho, b).unwrap();
                prop_assert!(p.iter().all(|&x| x >= 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multinomial_counts_sum_to_n(seed in any::<u64>(), n in 0u64..50_000) {
        let rho = pure_density(seed);
        for scheme in [mub_scheme(0.93).unwrap(), ssqst_scheme()] {
            let c = sample_counts(&rho, &scheme, n, CountModel::MultinomialExact, &mut RngStream::new(seed, 1)).unwrap();
            prop_assert_eq!(c.total(), n);
            let totals = c.basis_totals();
            let spread = totals.iter().max().unwrap() - totals.iter().min().unwrap();
            prop_assert!(spread <= 1);
        }
    }

    #[test]
    fn mle_output_is_a_state_with_higher_likelihood_than_start(seed in any::<u64>()) {
        let rho = pure_density(seed);
        let scheme = mub_scheme(0.93).unwrap();
        let c = sample_counts(&rho, &scheme, 5_000, CountModel::MultinomialExact, &mut RngStream::new(seed, 2)).unwrap();
        let opts = MleOptions { record_trace: true, ..MleOptions::default() };
        let fit = mle_reconstruct(&c, &scheme, &opts).unwrap();
        prop_assert!(DensityMatrix::new(fit.rho_hat.matrix().clone()).is_ok());
        prop_assert!(fit.trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(fit.log_likelihood >= fit.trace[0]);
    }
}

fn pure_density(seed: u64) -> DensityMatrix {
    density_from_pure(&pure(seed))
}

#[test]
fn eig_round_trip_over_many_random_matrices() {
    let mut rng = RngStream::new(5, 5);
    for d in [2, 4] {
        for _ in 0..1000 {
            let u = haar_random_unitary(d, &mut rng);
            let diag: Vec<f64> = (0..d).map(|k| (k as f64 - 1.3) * 0.7).collect();
            let m = (&(&u * &ComplexMatrix::from_real_diag(&diag)) * &u.dagger()).hermitize();
            let e = eig_hermitian(&m).unwrap();
            assert!(e.reconstruct_with(|l| l).max_abs_diff(&m) < 1e-12);
            let mut want = diag.clone();
            want.sort_by(|a, b| b.total_cmp(a));
            for (g, w) in e.values.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sampled_frequencies_converge_to_born_rule() {
    let rho = pure_density(17);
    let n = 1_000_000;
    for scheme in [mub_scheme(0.93).unwrap(), ssqst_scheme()] {
        let c = sample_counts(&rho, &scheme, n, CountModel::MultinomialExact, &mut RngStream::new(3, 0)).unwrap();
        for (b, counts) in scheme.bases.iter().zip(&c.counts) {
            let p = born_probabilities(&rho, b).unwrap();
            let total: u64 = counts.iter().sum();
            for (&k, &pk) in counts.iter().zip(&p) {
                assert!((k as f64 / total as f64 - pk).abs() < 5e-3);
            }
        }
    }
}

#[test]
fn poisson_totals_average_to_n() {
    let rho = maximally_mixed(4).unwrap();
    let scheme = mub_scheme(1.0).unwrap();
    let n = 10_000u64;
    let runs = 400;
    let mean = (0..runs)
        .map(|s| {
            sample_counts(&rho, &scheme, n, CountModel::PoissonPerBasis, &mut RngStream::new(s, 0))
                .unwrap()
                .total() as f64
        })
        .sum::<f64>()
        / runs as f64;
    // standard error of the mean is sqrt(n / runs) = 5
    assert!((mean - n as f64).abs() < 25.0, "mean total {mean}");
}

#[test]
fn mle_infidelity_shrinks_with_more_copies() {
    let scheme = mub_scheme(0.93).unwrap();
    let mut rng = RngStream::new(9, 9);
    let truth = NamedState::HaarEntangled.prepare(&mut rng);
    let medians: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let mut xs: Vec<f64> = (0..30)
                .map(|t| {
                    let c = sample_counts(&truth, &scheme, n, CountModel::MultinomialExact, &mut RngStream::new(n, t))
                        .unwrap();
                    let fit = mle_reconstruct(&c, &scheme, &MleOptions::default()).unwrap();
                    infidelity(&truth, &fit.rho_hat).unwrap()
                })
                .collect();
            xs.sort_by(f64::total_cmp);
            0.5 * (xs[14] + xs[15])
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn mixed_state_predictor_matches_linear_inversion_monte_carlo() {
    let truth = maximally_mixed(4).unwrap();
    let n = 18_000;
    for scheme in [mub_scheme(1.0).unwrap(), ssqst_scheme(), mub_scheme(0.93).unwrap()] {
        let trials = 3000;
        let mean = (0..trials)
            .map(|t| {
                let c = sample_counts(&truth, &scheme, n, CountModel::MultinomialExact, &mut RngStream::new(77, t))
                    .unwrap();
                infidelity(&truth, &linear_inversion(&c, &scheme).unwrap().physical).unwrap()
            })
            .sum::<f64>()
            / trials as f64;
        let predicted = predict_mixed_infidelity(&scheme, n).unwrap();
        assert!(
            (predicted - mean).abs() / mean < 0.05,
            "{}: predicted {predicted}, simulated {mean}",
            scheme.kind
        );
    }
}
