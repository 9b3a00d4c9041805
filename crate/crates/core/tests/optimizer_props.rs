use lgt_core::ansatz::hopping_ansatz;
use lgt_core::gateset::circuit_unitary;
use lgt_core::lgtmodel::target_unitary_c;
use lgt_core::objective::{Objective, ObjectiveHandle};
use lgt_core::optimizers::{
    ipg_step, run_trials, uniform_start, IpgSchedule, IpgState, OptimizerSpec, Quadratic,
};
use lgt_core::qstate::rng_from_seed;
use lgt_core::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn spd(d: usize, seed: u64) -> Quadratic {
    use rand::Rng;
    let mut rng = rng_from_seed(seed);
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let a = &m * m.transpose() + DMatrix::identity(d, d) * 0.5;
    let b = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    Quadratic { a, b }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ipg_descends_on_spd_quadratics(d in 1usize..=10, seed in any::<u64>()) {
        let q = spd(d, seed);
        let schedule = IpgSchedule::default();
        let mut st = IpgState::new(vec![1.0; d]);
        let mut costs = vec![q.value(&st.x).unwrap()];
        let mut residuals = Vec::new();
        for _ in 0..40 {
            st = ipg_step(&st, &q, &schedule).unwrap();
            costs.push(q.value(&st.x).unwrap());
            residuals.push(st.residual);
        }
        for w in costs[5..].windows(2) {
            prop_assert!(w[1] < w[0] || (w[0] - w[1]).abs() <= 1e-12 * w[0].abs().max(1.0));
        }
        for w in residuals.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!(q.residual(&st.x) < 1e-3 * (1.0 + q.b.norm()));
    }
}

struct Poisoned;

impl Objective for Poisoned {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> lgt_core::Result<f64> {
        Ok(x[0] * x[0] + x[1])
    }
    fn gradient(&self, x: &[f64]) -> lgt_core::Result<Vec<f64>> {
        Ok(vec![if x[0] > 0.5 { f64::NAN } else { 2.0 * x[0] }, 1.0])
    }
    fn hessian(&self, _x: &[f64]) -> lgt_core::Result<DMatrix<f64>> {
        Ok(DMatrix::from_diagonal_element(2, 2, 2.0))
    }
}

#[test]
fn non_finite_steps_raise_divergence() {
    for name in ["ipg", "adam", "gd", "lbfgs"] {
        let spec: OptimizerSpec = name.parse().unwrap();
        match spec.run(&Poisoned, &[1.0, 0.0], 10) {
            Err(Error::Divergence { last_good, .. }) => assert!(last_good.iter().all(|v| v.is_finite())),
            other => panic!("{name}: expected divergence, got {other:?}"),
        }
    }
}

#[test]
fn same_seed_same_histories_for_every_optimizer() {
    let h = ObjectiveHandle::new(target_unitary_c(1.0, 0.4), hopping_ansatz()).unwrap();
    for name in ["ipg", "adam", "lbfgs"] {
        let spec: OptimizerSpec = name.parse().unwrap();
        let a = run_trials(&spec, &h, 2, 8, 99).unwrap();
        let b = run_trials(&spec, &h, 2, 8, 99).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.history.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), y.history.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}

fn template_handle(target_x: &[f64], phase: f64) -> ObjectiveHandle {
    let t = hopping_ansatz();
    let u = circuit_unitary(&t, target_x).unwrap() * Complex64::from_polar(1.0, phase);
    ObjectiveHandle::new(u, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fidelity_is_one_exactly_at_phase_equivalent_points(seed in any::<u64>(), phase in -3.0f64..3.0) {
        let x = uniform_start(30, &mut rng_from_seed(seed));
        let h = template_handle(&x, phase);
        prop_assert!(h.cost(&x).unwrap().abs() <= 1e-12);
        let mut y = x.clone();
        y[7] += 0.3;
        let f = h.fidelity(&y).unwrap();
        prop_assert!((0.0..1.0 - 1e-6).contains(&f));
    }

    #[test]
    fn fidelity_is_bounded_and_two_pi_periodic(seed in any::<u64>(), k in 0usize..30) {
        let h = ObjectiveHandle::new(target_unitary_c(1.0, 0.4), hopping_ansatz()).unwrap();
        let x = uniform_start(30, &mut rng_from_seed(seed));
        let f = h.fidelity(&x).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        let mut y = x.clone();
        y[k] += std::f64::consts::TAU;
        prop_assert!((h.fidelity(&y).unwrap() - f).abs() <= 1e-12);
    }
}

#[test]
fn identity_target_is_kept_and_approached() {
    use lgt_core::ansatz::{bond_family, full_family};
    use rand::Rng;
    for t in [hopping_ansatz(), full_family(2), bond_family(1)] {
        let d = t.n_params();
        let h = ObjectiveHandle::new(circuit_unitary(&t, &vec![0.0; d]).unwrap(), t).unwrap();
        for name in ["ipg", "adam", "lbfgs"] {
            let spec: OptimizerSpec = name.parse().unwrap();
            let rec = spec.run(&h, &vec![0.0; d], 10).unwrap();
            assert!(rec.final_cost() <= 1e-10, "{name} drifted: {}", rec.final_cost());
        }
        let mut rng = rng_from_seed(21);
        let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-0.1..0.1)).collect();
        let rec = OptimizerSpec::Ipg(IpgSchedule::default()).run(&h, &x0, 10).unwrap();
        assert!(rec.final_cost() <= 1e-2 * h.cost(&x0).unwrap(), "{:?}", rec.history);
    }
}
