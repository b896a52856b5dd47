mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qdyn::linalg::{random_state, random_unitary};
use qdyn::measure::{
    aux_overlap, correlation, fft_spectrum, measure_pauli, spectroscopy, AuxMode, FftOptions,
    SpectroscopyPlan,
};
use qdyn::{Circuit, Gate, GateKind, PauliSum, PauliTerm, QuantumState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn as_circuit(n: usize, m: &M) -> Circuit {
    let mut c = Circuit::new(n);
    c.push(Gate::new(GateKind::Unitary(m.clone()), (0..n).collect()))
        .unwrap();
    c
}

fn random_sum(n: usize, n_terms: usize, rng: &mut ChaCha8Rng) -> PauliSum {
    let letters = ['I', 'X', 'Y', 'Z'];
    let labels: Vec<String> = (0..n_terms)
        .map(|_| (0..n).map(|_| letters[rng.random_range(0..4)]).collect())
        .collect();
    let pairs: Vec<(f64, &str)> = labels
        .iter()
        .map(|l| (rng.random_range(-1.0..1.0), l.as_str()))
        .collect();
    PauliSum::from_labels(&pairs).unwrap()
}

#[test]
fn correlation_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let h = random_sum(2, 4, &mut rng);
        let a = random_unitary(4, &mut rng);
        let b = random_unitary(4, &mut rng);
        let psi = random_state(4, &mut rng);
        let t = rng.random_range(-2.0..2.0);
        let u = propagator(&h.dense_matrix().unwrap(), t);
        let op = u.adjoint() * a.adjoint() * &u * &b;
        let want = inner(&psi, &mat_vec(&op, &psi));
        let state = QuantumState::from_amplitudes(psi).unwrap();
        let got = correlation(
            &as_circuit(2, &a),
            &as_circuit(2, &b),
            &h,
            t,
            &state,
            AuxMode::Exact,
        )
        .unwrap();
        assert!((got.value - want).norm() < 1e-10);
    }
}

#[test]
fn correlation_of_conserved_observables_is_constant() {
    let h = PauliSum::from_labels(&[(0.8, "ZI"), (-0.3, "IZ"), (0.5, "ZZ")]).unwrap();
    let mut z = Circuit::new(2);
    z.add(GateKind::Z, &[0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let psi = QuantumState::from_amplitudes(random_state(4, &mut rng)).unwrap();
    let c0 = correlation(&z, &z, &h, 0.0, &psi, AuxMode::Exact)
        .unwrap()
        .value;
    assert!((c0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    for t in [0.4, 1.7, 3.3] {
        let ct = correlation(&z, &z, &h, t, &psi, AuxMode::Exact)
            .unwrap()
            .value;
        assert!((ct - c0).norm() < 1e-10);
    }
}

#[test]
fn mixed_input_overlap_is_a_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = random_unitary(2, &mut rng);
    let v = random_unitary(2, &mut rng);
    let a = random_state(2, &mut rng);
    let b = random_state(2, &mut rng);
    let rho = M::from_fn(2, 2, |i, j| {
        0.3 * a[i] * a[j].conj() + 0.7 * b[i] * b[j].conj()
    });
    let want = (u.adjoint() * &v * &rho).trace();
    let state = QuantumState::from_density(&rho).unwrap();
    let got = aux_overlap(
        &as_circuit(1, &u),
        &as_circuit(1, &v),
        &state,
        AuxMode::Exact,
    )
    .unwrap();
    assert!((got.value - want).norm() < 1e-10);
}

#[test]
fn spectrum_peaks_sit_on_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (t_max, n_samples) = (40.0, 128);
    let bin = 2.0 * std::f64::consts::PI / t_max;
    for _ in 0..5 {
        let h = random_sum(3, 4, &mut rng);
        let psi = random_state(8, &mut rng);
        let eig = h.dense_matrix().unwrap().symmetric_eigen();
        let weights: Vec<f64> = (0..8)
            .map(|i| {
                inner(
                    &eig.eigenvectors
                        .column(i)
                        .iter()
                        .copied()
                        .collect::<Vec<_>>(),
                    &psi,
                )
                .norm_sqr()
            })
            .collect();
        let res = fft_spectrum(
            &h,
            &QuantumState::from_amplitudes(psi).unwrap(),
            t_max,
            n_samples,
            &FftOptions::default(),
        )
        .unwrap();
        for i in 0..8 {
            let e = eig.eigenvalues[i];
            let cluster: f64 = (0..8)
                .filter(|&j| (eig.eigenvalues[j] - e).abs() < 1e-9)
                .map(|j| weights[j])
                .sum();
            if cluster >= 0.05 {
                assert!(
                    res.peaks.iter().any(|p| (p.location - e).abs() <= bin),
                    "eigenvalue {e} missing from {:?}",
                    res.peaks
                );
            }
        }
        assert!(res.total_weight() <= 1.0 + 0.02);
    }
}

#[test]
fn two_site_chain_dips_match_transitions() {
    // system |01>: one particle on site 0 of a 2-site chain
    let tau = 1.0;
    let h = PauliSum::from_labels(&[(-tau / 2.0, "XX"), (-tau / 2.0, "YY")]).unwrap();
    let dense = h.dense_matrix().unwrap();
    let eig = dense.clone().symmetric_eigen();
    let psi0 = QuantumState::basis(2, 1).unwrap();
    let x0 = pauli_label("IX");
    let mut allowed = Vec::new();
    for a in 0..4 {
        let va: Vec<Complex64> = eig.eigenvectors.column(a).iter().copied().collect();
        let pop = inner(&va, psi0.amplitudes().unwrap()).norm_sqr();
        for b in 0..4 {
            let vb: Vec<Complex64> = eig.eigenvectors.column(b).iter().copied().collect();
            if pop > 1e-6 && inner(&vb, &mat_vec(&x0, &va)).norm_sqr() > 1e-6 {
                allowed.push(eig.eigenvalues[b] - eig.eigenvalues[a]);
            }
        }
    }
    let step = 0.05;
    let plan = SpectroscopyPlan {
        omega_grid: (0..=80).map(|k| -2.0 + k as f64 * step).collect(),
        dt: 0.2,
        coupling: 0.05,
        n_steps: 150,
        probe_target: 0,
    };
    let curve = spectroscopy(&h, &plan, &psi0).unwrap();
    let dips = curve.dips(0.3);
    assert!(!dips.is_empty());
    for d in dips {
        assert!(
            allowed.iter().any(|w| (w - d).abs() <= 2.0 * step + 1e-9),
            "dip {d} vs {allowed:?}"
        );
    }
}

#[test]
fn standard_error_on_balanced_outcome() {
    let x = PauliTerm::parse_label("X").unwrap();
    let e = measure_pauli(&QuantumState::zero(1), &x, 10_000, None, 5).unwrap();
    assert!((e.stderr - 0.01).abs() < 2e-4);
    assert!(e.value.abs() < 4.0 * e.stderr);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn overlap_matches_dense_and_is_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(4, &mut rng);
        let v = random_unitary(4, &mut rng);
        let psi = random_state(4, &mut rng);
        let want = inner(&mat_vec(&u, &psi), &mat_vec(&v, &psi));
        let state = QuantumState::from_amplitudes(psi).unwrap();
        let got = aux_overlap(&as_circuit(2, &u), &as_circuit(2, &v), &state, AuxMode::Exact).unwrap();
        prop_assert!((got.value - want).norm() < 1e-10);
        prop_assert!(got.value.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn identity_correlation_is_one(seed in any::<u64>(), t in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_sum(2, 3, &mut rng);
        let id = Circuit::new(2);
        let psi = QuantumState::from_amplitudes(random_state(4, &mut rng)).unwrap();
        let got = correlation(&id, &id, &h, t, &psi, AuxMode::Exact).unwrap();
        prop_assert!((got.value - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn probe_expectation_is_bounded(gap in 0.2f64..2.5, coupling in 0.0f64..0.3) {
        let h = PauliSum::from_labels(&[(gap / 2.0, "Z"), (0.3, "X")]).unwrap();
        let plan = SpectroscopyPlan {
            omega_grid: vec![-1.0, 0.0, 0.5, 1.0, 2.0],
            dt: 0.2,
            coupling,
            n_steps: 30,
            probe_target: 0,
        };
        let curve = spectroscopy(&h, &plan, &QuantumState::basis(1, 1).unwrap()).unwrap();
        prop_assert!(curve.probe_z.iter().all(|z| (-1.0 - 1e-12..=1.0 + 1e-12).contains(z)));
    }
}
