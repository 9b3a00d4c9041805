use lgt_core::gateset::{circuit_unitary, gate_matrix, lower_to_native, two_qubit_count, Circuit, Gate, GateKind};
use lgt_core::linalg::{phase_insensitive_overlap, unitarity_defect};
use lgt_core::qstate::{
    haar_random_state, rng_from_seed, sample_shots, total_variation, von_neumann_entropy, StateVector,
};
use proptest::prelude::*;

fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
    let kinds = prop::sample::select(GateKind::ALL.to_vec());
    (kinds, prop::collection::vec(0..n, 2), prop::collection::vec(-7.0f64..7.0, 3)).prop_filter_map(
        "distinct targets",
        move |(k, t, p)| {
            let targets: Vec<usize> = if k.target_arity() == 1 { vec![t[0]] } else { t.clone() };
            if targets.len() == 2 && targets[0] == targets[1] {
                return None;
            }
            Gate::new(k, &targets, &p[..k.param_arity()]).ok()
        },
    )
}

fn arb_circuit(n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(arb_gate(n), 1..max_len).prop_map(move |gates| {
        let mut c = Circuit::new(n);
        for g in gates {
            c.push(g);
        }
        c
    })
}

fn run(c: &Circuit, s: &StateVector) -> StateVector {
    let mut s = s.clone();
    c.apply_to(&mut s).unwrap();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lowering_preserves_the_unitary(c in (1usize..=3).prop_flat_map(|n| arb_circuit(n.max(2), 8))) {
        let native = lower_to_native(&c).unwrap();
        prop_assert!(native.gates.iter().all(|g| g.kind.is_native()));
        let f = phase_insensitive_overlap(&circuit_unitary(&c, &[]).unwrap(), &circuit_unitary(&native, &[]).unwrap());
        prop_assert!((f - 1.0).abs() < 1e-8, "overlap {f}");
        prop_assert!(two_qubit_count(&native) <= two_qubit_count(&c));
    }

    #[test]
    fn every_gate_is_unitary(g in arb_gate(3)) {
        prop_assert!(unitarity_defect(&gate_matrix(&g).unwrap()) <= 1e-12);
    }

    #[test]
    fn norm_is_preserved(c in arb_circuit(4, 20), seed in any::<u64>()) {
        let s = haar_random_state(4, &mut rng_from_seed(seed)).unwrap();
        prop_assert!((run(&c, &s).norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn gates_on_disjoint_qubits_commute(a in -4.0f64..4.0, b in -4.0f64..4.0, seed in any::<u64>()) {
        let s = haar_random_state(3, &mut rng_from_seed(seed)).unwrap();
        let mut ab = Circuit::new(3);
        ab.push(Gate::rx(0, a)).push(Gate::ry(2, b));
        let mut ba = Circuit::new(3);
        ba.push(Gate::ry(2, b)).push(Gate::rx(0, a));
        let (x, y) = (run(&ab, &s), run(&ba, &s));
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            prop_assert!((p - q).norm() <= 1e-12);
        }
    }

    #[test]
    fn entropy_of_subset_equals_complement(seed in any::<u64>(), mask in 1u32..31) {
        let n = 5;
        let s = haar_random_state(n, &mut rng_from_seed(seed)).unwrap();
        let a: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        let b: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 0).collect();
        let sa = von_neumann_entropy(&s.reduced_density(&a).unwrap()).unwrap();
        let sb = von_neumann_entropy(&s.reduced_density(&b).unwrap()).unwrap();
        prop_assert!((sa - sb).abs() <= 1e-9, "{sa} vs {sb}");
        prop_assert!(sa <= a.len().min(b.len()) as f64 + 1e-9);
    }
}

#[test]
fn sampling_matches_born_probabilities() {
    for seed in 0..5 {
        let s = haar_random_state(2, &mut rng_from_seed(seed)).unwrap();
        let h = sample_shots(&s, 100_000, &mut rng_from_seed(seed + 100)).unwrap();
        let exact = s.probabilities().iter().enumerate().map(|(k, &p)| (k as u64, p)).collect();
        assert!(total_variation(&h.frequencies(), &exact) <= 0.01);
    }
}
