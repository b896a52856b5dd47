use std::f64::consts::PI;

use proptest::prelude::*;
use qdyn::device::{
    compile, enumerate_chain_layouts, estimate_duration, estimate_fidelity, merge_1q, rank_layouts,
    rewrite_to_rzx, score_layout, DeviceModel, Pipeline,
};
use qdyn::evolution::{trotter_circuit, TrotterPlan};
use qdyn::fermion::{tight_binding_pauli, TightBindingSpec};
use qdyn::linalg::equal_up_to_phase;
use qdyn::{Circuit, GateKind};

fn build(n: usize, spec: &[(u8, usize, usize, f64)]) -> Circuit {
    let mut c = Circuit::new(n);
    for &(kind, a, b, t) in spec {
        let b = if a == b { (a + 1) % n } else { b };
        match kind {
            0 => c.h(a),
            1 => c.rx(t, a),
            2 => c.ry(t, a),
            3 => c.rz(t, a),
            4 => c.cx(a, b),
            5 => c.rxx(t, a, b),
            6 => c.ryy(t, a, b),
            _ => c.rzz(t, a, b),
        };
    }
    c
}

fn gates(n: usize) -> impl Strategy<Value = Vec<(u8, usize, usize, f64)>> {
    prop::collection::vec((0u8..8, 0..n, 0..n, -2.0 * PI..2.0 * PI), 0..20)
}

fn chain_circuit(m: usize) -> Circuit {
    chain_circuit_over(m, 1.0)
}

fn chain_circuit_over(m: usize, time: f64) -> Circuit {
    let h = tight_binding_pauli(&TightBindingSpec::default()).unwrap();
    trotter_circuit(&h, &TrotterPlan::new(1, m, time).unwrap()).unwrap()
}

#[test]
fn every_chain_layout_follows_edges() {
    let dev = DeviceModel::bundled_h7();
    for k in 1..=7 {
        for layout in enumerate_chain_layouts(&dev, k).unwrap() {
            assert_eq!(layout.len(), k);
            assert!(layout.windows(2).all(|w| dev.edge(w[0], w[1]).is_some()));
            assert!(layout[0] <= layout[k - 1]);
        }
    }
    assert!(enumerate_chain_layouts(&dev, 8).is_err());
}

#[test]
fn degraded_edge_worsens_layouts_using_it() {
    let mut circ = compile(&chain_circuit(4), Pipeline::Rzx).unwrap();
    circ.measure_all();
    let dev = DeviceModel::bundled_h7();
    let layouts = enumerate_chain_layouts(&dev, 5).unwrap();
    let before = rank_layouts(&dev, &layouts, &circ).unwrap();
    for (a, b) in [(0, 1), (1, 2), (4, 5), (5, 6), (3, 5)] {
        let mut worse = dev.clone();
        worse.edge_mut(a, b).unwrap().f2q -= 0.01;
        for layout in &layouts {
            let uses = layout
                .windows(2)
                .any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a));
            let old = before.iter().find(|s| &s.layout == layout).unwrap().score;
            let new = score_layout(&worse, layout, &circ).unwrap().score;
            if uses {
                assert!(new > old);
            } else {
                assert_eq!(new, old);
            }
        }
    }
}

#[test]
fn uniform_calibration_ties() {
    let mut dev = DeviceModel::bundled_h7();
    for q in &mut dev.qubits {
        q.f1q = 0.9998;
        q.p1_given_0 = 0.01;
        q.p0_given_1 = 0.02;
    }
    for e in &mut dev.edges {
        e.f2q = 0.994;
    }
    let circ = compile(&chain_circuit(3), Pipeline::Transpiled).unwrap();
    let scores: Vec<f64> = enumerate_chain_layouts(&dev, 5)
        .unwrap()
        .iter()
        .map(|l| score_layout(&dev, l, &circ).unwrap().score)
        .collect();
    assert!(scores.iter().all(|s| (s - scores[0]).abs() < 1e-15));
}

#[test]
fn doubling_steps_doubles_duration() {
    // fixed step size so RZX angles do not shrink with m
    let dt = 0.25;
    let dev = DeviceModel::bundled_h7();
    let layout = [2, 1, 3, 5, 4];
    for pipeline in Pipeline::ALL {
        for m in [5, 8, 10] {
            let short = compile(&chain_circuit_over(m, m as f64 * dt), pipeline).unwrap();
            let long = compile(&chain_circuit_over(2 * m, 2.0 * m as f64 * dt), pipeline).unwrap();
            let ratio = estimate_duration(&long, &dev, &layout).unwrap()
                / estimate_duration(&short, &dev, &layout).unwrap();
            assert!((1.8..=2.2).contains(&ratio), "{pipeline:?} m={m}: {ratio}");
        }
    }
}

#[test]
fn fidelity_product_spot_value() {
    let mut c = Circuit::new(2);
    for _ in 0..40 {
        c.h(0);
    }
    for _ in 0..16 {
        c.cx(0, 1);
    }
    let f = estimate_fidelity(&c, 0.9998, 0.994);
    assert!((f - 0.9998f64.powi(40) * 0.994f64.powi(16)).abs() < 1e-15);
    assert!((f - 0.901).abs() < 5e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rzx_rewrite_preserves_unitary(spec in gates(4)) {
        let c = build(4, &spec);
        let r = rewrite_to_rzx(&c).unwrap();
        prop_assert!(equal_up_to_phase(&c.unitary().unwrap(), &r.unitary().unwrap(), 1e-10));
        let rotations = c.ops().iter().filter(|g| matches!(g.kind, GateKind::Rxx(_) | GateKind::Ryy(_) | GateKind::Rzz(_))).count();
        prop_assert_eq!(r.count_named("rzx"), rotations);
        prop_assert_eq!(r.count_named("rxx") + r.count_named("ryy") + r.count_named("rzz"), 0);
    }

    #[test]
    fn pipelines_preserve_unitary(spec in gates(3)) {
        let c = build(3, &spec);
        let u = c.unitary().unwrap();
        for p in Pipeline::ALL {
            prop_assert!(equal_up_to_phase(&u, &compile(&c, p).unwrap().unitary().unwrap(), 1e-10));
        }
    }

    #[test]
    fn merging_never_adds_single_qubit_gates(spec in gates(3)) {
        let c = build(3, &spec);
        let m = merge_1q(&c).unwrap();
        prop_assert!(m.count_1q() <= c.count_1q());
        prop_assert_eq!(m.count_2q(), c.count_2q());
        prop_assert!(equal_up_to_phase(&c.unitary().unwrap(), &m.unitary().unwrap(), 1e-10));
    }
}
