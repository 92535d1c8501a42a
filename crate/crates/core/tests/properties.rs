//! Property-based invariants across the matrix kernel, channels,
//! measurements and concurrence.

use proptest::prelude::*;

use swapurify_core::channels::amplitude_damping;
use swapurify_core::entanglement::concurrence;
use swapurify_core::measure::{bell_measure, weak_measure};
use swapurify_core::qmat::{dagger, eigenvalues, kron, partial_trace, ComplexMatrix, C64};
use swapurify_core::states::{phi_pair, to_density};
use swapurify_core::{DensityMatrix, Numerics};

const TOL: Numerics = Numerics::DEFAULT;

fn int_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-3i8..=3, -3i8..=3), n * n).prop_map(move |vals| {
        ComplexMatrix::new(
            n,
            n,
            vals.into_iter()
                .map(|(re, im)| C64::new(re as f64, im as f64))
                .collect(),
        )
        .unwrap()
    })
}

fn small_complex_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |vals| {
        ComplexMatrix::new(
            n,
            n,
            vals.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
        )
        .unwrap()
    })
}

/// Random mixed two-qubit density matrix via G G^dag / tr.
fn random_density2() -> impl Strategy<Value = DensityMatrix> {
    small_complex_matrix(4).prop_filter_map("nonzero trace", |g| {
        let gg = g.matmul(&g.dagger());
        let tr = gg.trace().re;
        if tr < 1e-6 {
            return None;
        }
        DensityMatrix::new(2, gg.scale_re(1.0 / tr), &TOL).ok()
    })
}

proptest! {
    #[test]
    fn kron_is_associative_on_integer_matrices(
        a in int_matrix(2),
        b in int_matrix(2),
        c in int_matrix(2),
    ) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn dagger_is_an_involution(m in small_complex_matrix(4)) {
        prop_assert_eq!(dagger(&dagger(&m)), m);
    }

    #[test]
    fn partial_trace_composes_over_complements(m in small_complex_matrix(8)) {
        // Tracing out qubit 1 then qubit 2 equals tracing out {1, 2}.
        let direct = partial_trace(&m, 3, &[0]).unwrap();
        let step1 = partial_trace(&m, 3, &[0, 2]).unwrap();
        let two_step = partial_trace(&step1, 2, &[0]).unwrap();
        prop_assert!(direct.max_abs_diff(&two_step) < 1e-12);
        prop_assert!((direct.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn hermitian_spectra_are_real(m in small_complex_matrix(4)) {
        let h = m.add(&m.dagger()).scale_re(0.5);
        let spec = eigenvalues(&h, &TOL).unwrap();
        prop_assert!(spec.max_imag() <= 1e-10);
        // Eigenvalue sum equals the trace.
        let sum: f64 = spec.real_parts().iter().sum();
        prop_assert!((sum - h.trace().re).abs() < 1e-10);
    }

    #[test]
    fn spectra_satisfy_trace_moments(m in small_complex_matrix(6)) {
        // Newton-sum checks on a general complex matrix: the eigenvalue
        // sum equals tr(M) and the sum of squares equals tr(M^2).
        let spec = eigenvalues(&m, &TOL).unwrap();
        let sum: C64 = spec.eigenvalues.iter().sum();
        prop_assert!((sum - m.trace()).norm() < 1e-9);
        let sum_sq: C64 = spec.eigenvalues.iter().map(|l| l * l).sum();
        prop_assert!((sum_sq - m.matmul(&m).trace()).norm() < 1e-9);
    }

    #[test]
    fn similarity_transform_preserves_a_known_spectrum(
        re in prop::collection::vec(-2.0f64..2.0, 5),
        im in prop::collection::vec(-2.0f64..2.0, 5),
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
    ) {
        // M = U D U^dag with a Householder unitary U = I - 2 v v^dag must
        // have exactly the planted eigenvalues.
        let n = 5;
        let mut planted: Vec<C64> = re.iter().zip(&im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        let d = ComplexMatrix::diag(&planted);
        let norm: f64 = v.iter().map(|(r, i)| r * r + i * i).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let v: Vec<C64> = v.iter().map(|&(r, i)| C64::new(r / norm, i / norm)).collect();
        let mut u = ComplexMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                let val = u.get(i, j) - v[i] * v[j].conj() * 2.0;
                u.set(i, j, val);
            }
        }
        let m = u.matmul(&d).matmul(&u.dagger());
        let spec = eigenvalues(&m, &TOL).unwrap();
        // Greedy matching keeps the check stable when planted values are
        // nearly degenerate and the sort order differs.
        let mut remaining = spec.eigenvalues.clone();
        for want in planted.drain(..) {
            let (idx, dist) = remaining
                .iter()
                .enumerate()
                .map(|(k, got)| (k, (got - want).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(dist < 1e-8, "no computed eigenvalue near {want}");
            remaining.swap_remove(idx);
        }
    }

    #[test]
    fn density_spectra_are_probabilities(rho in random_density2()) {
        let spec = eigenvalues(rho.matrix(), &TOL).unwrap();
        prop_assert!(spec.max_imag() <= 1e-10);
        let re = spec.real_parts();
        let sum: f64 = re.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        for l in re {
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&l));
        }
    }

    #[test]
    fn damping_preserves_trace_and_positivity(
        rho in random_density2(),
        p in 0.0f64..=1.0,
        target in 0usize..2,
    ) {
        let ch = amplitude_damping(p, &TOL).unwrap();
        let out = ch.apply(&rho, target, &TOL).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() <= TOL.atol);
        // DensityMatrix::new already certified positivity within atol.
        let spec = eigenvalues(out.matrix(), &TOL).unwrap();
        prop_assert!(spec.real_parts().iter().all(|&l| l >= -TOL.atol));
    }

    #[test]
    fn bell_outcomes_form_a_distribution(
        rho_a in random_density2(),
        rho_b in random_density2(),
    ) {
        let joint = DensityMatrix::new(
            4,
            kron(rho_a.matrix(), rho_b.matrix()),
            &TOL,
        ).unwrap();
        let outcomes = bell_measure(&joint, (1, 2), &TOL).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() <= TOL.atol);
        for o in &outcomes {
            if o.probability > 1e-8 {
                // Post-states were validated on construction; spot-check
                // the trace.
                let post = o.post_state.as_ref().unwrap();
                prop_assert!((post.matrix().trace().re - 1.0).abs() <= TOL.atol);
            }
        }
    }

    #[test]
    fn weak_outcomes_form_a_distribution(
        rho in random_density2(),
        b in 0.01f64..=0.99,
        target in 0usize..2,
    ) {
        let outcomes = weak_measure(&rho, target, b, &TOL).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() <= TOL.atol);
    }

    #[test]
    fn concurrence_lies_in_the_unit_interval(rho in random_density2()) {
        let report = concurrence(&rho, &TOL).unwrap();
        prop_assert!((0.0..=1.0).contains(&report.value));
        // The value is recomputable from the reported lambdas.
        let r: Vec<f64> = report.lambdas.iter().map(|l| l.sqrt()).collect();
        let again = (r[0] - r[1] - r[2] - r[3]).clamp(0.0, 1.0);
        prop_assert!((report.value - again).abs() < 1e-14);
    }

    #[test]
    fn damped_pure_pair_concurrence_matches_formula(
        a in 0.02f64..=0.98,
        p in 0.0f64..=0.95,
    ) {
        let rho = amplitude_damping(p, &TOL).unwrap()
            .apply_local_pair(&to_density(&phi_pair(a, &TOL).unwrap(), &TOL).unwrap(), &TOL)
            .unwrap();
        let c = concurrence(&rho, &TOL).unwrap().value;
        prop_assert!((c - 2.0 * (1.0 - p) * (a * (1.0 - a)).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn product_state_flip_spectrum_vanishes(
        t1 in 0.0f64..std::f64::consts::PI,
        ph1 in 0.0f64..std::f64::consts::TAU,
        t2 in 0.0f64..std::f64::consts::PI,
        ph2 in 0.0f64..std::f64::consts::TAU,
    ) {
        // rho * rho_tilde of a pure product state is identically zero.
        let qubit = |t: f64, ph: f64| {
            [
                C64::new((t / 2.0).cos(), 0.0),
                C64::new(0.0, ph).exp() * (t / 2.0).sin(),
            ]
        };
        let (q1, q2) = (qubit(t1, ph1), qubit(t2, ph2));
        let amps: Vec<C64> =
            (0..4).map(|k| q1[(k >> 1) & 1] * q2[k & 1]).collect();
        let rho = to_density(
            &swapurify_core::PureState::new(2, amps, &TOL).unwrap(),
            &TOL,
        ).unwrap();
        let report = concurrence(&rho, &TOL).unwrap();
        prop_assert!(report.value < 1e-10);
        for l in report.lambdas {
            prop_assert!(l <= 1e-10);
        }
    }
}
