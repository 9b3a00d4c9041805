//! Unitary-matching objective: fidelity, cost, shift-rule gradients and
//! Hessians for a parameterized circuit against a target unitary.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gateset::{circuit_unitary, gate_matrix, Circuit, Gate};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::qstate::{haar_random_state, Rng};

/// Largest register the objective accepts (dense `2^q × 2^q` products).
pub const MAX_OBJECTIVE_QUBITS: usize = 6;

/// A differentiable scalar cost over `R^d`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    /// Value, gradient and Hessian in one pass.
    fn second_order(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?, self.hessian(x)?))
    }
}

/// Target unitary plus an ansatz with free parameters.
#[derive(Debug, Clone)]
pub struct ObjectiveHandle {
    target: CMatrix,
    target_dagger: CMatrix,
    ansatz: Circuit,
    n_qubits: usize,
    d: usize,
}

impl ObjectiveHandle {
    pub fn new(target: CMatrix, ansatz: Circuit) -> Result<Self> {
        ansatz.validate()?;
        let q = ansatz.n_qubits;
        if q > MAX_OBJECTIVE_QUBITS {
            return Err(Error::Capacity(format!("objective limited to {MAX_OBJECTIVE_QUBITS} qubits")));
        }
        let dim = 1usize << q;
        if target.nrows() != dim || target.ncols() != dim {
            return Err(Error::Validation(format!(
                "target is {}x{}, ansatz acts on {q} qubits",
                target.nrows(),
                target.ncols()
            )));
        }
        let d = ansatz.n_params();
        Ok(ObjectiveHandle { target_dagger: target.adjoint(), target, ansatz, n_qubits: q, d })
    }

    pub fn target(&self) -> &CMatrix {
        &self.target
    }

    pub fn ansatz(&self) -> &Circuit {
        &self.ansatz
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Validation(format!("expected {} parameters, got {}", self.d, x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("parameter vector has non-finite entries".into()));
        }
        Ok(())
    }

    fn embedded(&self, gate: &Gate) -> Result<CMatrix> {
        Ok(linalg::embed(&gate_matrix(gate)?, &gate.targets, self.n_qubits))
    }

    fn bound_gates(&self, x: &[f64]) -> Vec<Gate> {
        self.ansatz
            .gates
            .iter()
            .enumerate()
            .map(|(pos, g)| match self.ansatz.param_slots.get(&pos) {
                Some(&p) => g.with_angle(x[p]),
                None => g.clone(),
            })
            .collect()
    }

    fn dim_f(&self) -> f64 {
        (1usize << self.n_qubits) as f64
    }

    /// Linear overlap `Tr(C† C_A(x)) / 2^q`.
    pub fn overlap(&self, x: &[f64]) -> Result<C64> {
        self.check_x(x)?;
        let u = circuit_unitary(&self.ansatz, x)?;
        Ok(linalg::trace_product(&self.target_dagger, &u) / self.dim_f())
    }

    /// `|Tr(C† C_A(x))|² / 4^q`.
    pub fn fidelity(&self, x: &[f64]) -> Result<f64> {
        Ok(self.overlap(x)?.norm_sqr().min(1.0))
    }

    pub fn cost(&self, x: &[f64]) -> Result<f64> {
        Ok((1.0 - self.fidelity(x)?).max(0.0))
    }

    /// Overlap and its first (and optionally second) derivatives per
    /// parameter, all from two-point shift rules on the linear overlap.
    fn overlap_derivatives(&self, x: &[f64], second: bool) -> Result<(C64, Vec<C64>, Vec<Vec<C64>>)> {
        self.check_x(x)?;
        let gates = self.bound_gates(x);
        let n = gates.len();
        let dim = 1usize << self.n_qubits;
        let norm = self.dim_f();
        let shift = std::f64::consts::PI;

        let mut slotted: Vec<(usize, usize)> = Vec::new(); // (gate position, parameter)
        for (&pos, &p) in &self.ansatz.param_slots {
            gates[pos].generator()?;
            slotted.push((pos, p));
        }

        let mats: Vec<CMatrix> = gates.iter().map(|g| self.embedded(g)).collect::<Result<_>>()?;
        // shifted[pos] = (G(θ+π), G(θ−π)) for slotted gates
        let mut shifted: Vec<Option<(CMatrix, CMatrix)>> = vec![None; n];
        for &(pos, _) in &slotted {
            let g = &gates[pos];
            let th = g.angle().unwrap();
            shifted[pos] = Some((self.embedded(&g.with_angle(th + shift))?, self.embedded(&g.with_angle(th - shift))?));
        }

        // prefix[k] = G_{k-1}…G_0, suffix[k] = C†·G_{n-1}…G_{k+1}
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(linalg::identity(dim));
        for m in &mats {
            let next = m * prefix.last().unwrap();
            prefix.push(next);
        }
        let mut suffix = vec![CMatrix::zeros(dim, dim); n];
        let mut acc = self.target_dagger.clone();
        for k in (0..n).rev() {
            suffix[k] = acc.clone();
            acc = &acc * &mats[k];
        }
        let t = linalg::trace_product(&self.target_dagger, &prefix[n]) / norm;

        let mut grad = vec![ZERO; self.d];
        let mut gate_grad = vec![ZERO; n];
        for &(pos, p) in &slotted {
            let r = &prefix[pos] * &suffix[pos];
            let (plus, minus) = shifted[pos].as_ref().unwrap();
            let tp = linalg::trace_product(plus, &r) / norm;
            let tm = linalg::trace_product(minus, &r) / norm;
            gate_grad[pos] = (tp - tm) / 4.0;
            grad[p] += gate_grad[pos];
        }

        let mut hess = Vec::new();
        if second {
            hess = vec![vec![ZERO; self.d]; self.d];
            let slot_of: Vec<Option<usize>> =
                (0..n).map(|pos| self.ansatz.param_slots.get(&pos).copied()).collect();
            for &(j, pj) in &slotted {
                // same-gate term by nested shifts: G(θ±2π) = −G(θ)
                let r = &prefix[j] * &suffix[j];
                let tpp = -linalg::trace_product(&mats[j], &r) / norm;
                hess[pj][pj] += (tpp - 2.0 * t + tpp) / 16.0;

                let (jp, jm) = shifted[j].as_ref().unwrap();
                let mut w_plus = jp * &prefix[j];
                let mut w_minus = jm * &prefix[j];
                for k in (j + 1)..n {
                    if let Some(pk) = slot_of[k] {
                        let (kp, km) = shifted[k].as_ref().unwrap();
                        let a = &w_plus * &suffix[k];
                        let b = &w_minus * &suffix[k];
                        let tpp = linalg::trace_product(kp, &a);
                        let tpm = linalg::trace_product(km, &a);
                        let tmp = linalg::trace_product(kp, &b);
                        let tmm = linalg::trace_product(km, &b);
                        let mixed = (tpp - tpm - tmp + tmm) / (16.0 * norm);
                        hess[pj][pk] += mixed;
                        hess[pk][pj] += mixed;
                    }
                    if k + 1 < n {
                        w_plus = &mats[k] * &w_plus;
                        w_minus = &mats[k] * &w_minus;
                    }
                }
            }
        }
        Ok((t, grad, hess))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (t, dt, _) = self.overlap_derivatives(x, false)?;
        Ok(dt.iter().map(|d| -2.0 * (t.conj() * d).re).collect())
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.second_order(x)?.2)
    }

    pub fn second_order(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let (t, dt, ddt) = self.overlap_derivatives(x, true)?;
        let d = self.d;
        let grad = dt.iter().map(|g| -2.0 * (t.conj() * g).re).collect();
        let mut h = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                h[(a, b)] = -2.0 * (dt[a].conj() * dt[b] + t.conj() * ddt[a][b]).re;
            }
        }
        let sym = (&h + h.transpose()) * 0.5;
        Ok(((1.0 - t.norm_sqr()).max(0.0), grad, sym))
    }
}

impl Objective for ObjectiveHandle {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.cost(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ObjectiveHandle::gradient(self, x)
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        ObjectiveHandle::hessian(self, x)
    }

    fn second_order(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        ObjectiveHandle::second_order(self, x)
    }
}

/// `F = |Tr(A† B)|² / 4^q` for two equally sized unitaries.
pub fn unitary_fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Validation("fidelity of differently sized unitaries".into()));
    }
    let d = a.nrows() as f64;
    Ok((linalg::trace_product(&a.adjoint(), b).norm_sqr() / (d * d)).min(1.0))
}

/// Mean of `1 − |⟨ψ_A|ψ_B⟩|²` over Haar-random inputs.
pub fn state_infidelity_check(a: &Circuit, b: &Circuit, n_samples: usize, rng: &mut Rng) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::Validation("circuits act on different qubit counts".into()));
    }
    if n_samples == 0 {
        return Err(Error::Validation("n_samples must be at least 1".into()));
    }
    let ka = crate::noiselab::CompiledCircuit::noiseless(a)?;
    let kb = crate::noiselab::CompiledCircuit::noiseless(b)?;
    let mut total = 0.0;
    for _ in 0..n_samples {
        let psi = haar_random_state(a.n_qubits, rng)?;
        let mut sa = psi.clone();
        let mut sb = psi;
        ka.run(&mut sa);
        kb.run(&mut sb);
        total += 1.0 - sa.fidelity(&sb)?;
    }
    Ok((total / n_samples as f64).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::{Gate, GateKind};
    use crate::linalg::max_abs;
    use crate::qstate::rng_from_seed;
    use rand::Rng as _;

    fn small_ansatz() -> Circuit {
        let mut c = Circuit::new(2);
        let mut p = 0;
        for _ in 0..2 {
            for q in 0..2 {
                c.push_param(Gate::rx(q, 0.0), p);
                c.push_param(Gate::ry(q, 0.0), p + 1);
                p += 2;
            }
            c.push_param(Gate::xx(0, 1, 0.0), p);
            p += 1;
        }
        c.push(Gate::fixed(GateKind::H, 1));
        c.push_param(Gate::rz(1, 0.0), p);
        c
    }

    fn finite_difference_gradient(h: &ObjectiveHandle, x: &[f64], step: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += step;
                b[i] -= step;
                (h.cost(&a).unwrap() - h.cost(&b).unwrap()) / (2.0 * step)
            })
            .collect()
    }

    #[test]
    fn fidelity_identities() {
        let mut c = Circuit::new(3);
        c.push(Gate::fixed(GateKind::X, 0));
        let x_on_0 = circuit_unitary(&c, &[]).unwrap();
        let h = ObjectiveHandle::new(x_on_0.clone(), c.clone()).unwrap();
        assert!((h.fidelity(&[]).unwrap() - 1.0).abs() < 1e-14);
        let h = ObjectiveHandle::new(x_on_0 * C64::from_polar(1.0, 0.4), c.clone()).unwrap();
        assert!((h.fidelity(&[]).unwrap() - 1.0).abs() < 1e-14);
        let h = ObjectiveHandle::new(linalg::identity(8), c).unwrap();
        assert!(h.fidelity(&[]).unwrap() < 1e-28);
        assert!((h.cost(&[]).unwrap() - 1.0).abs() < 1e-14);
        assert!(ObjectiveHandle::new(linalg::identity(4), Circuit::new(3)).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(9);
        let ans = small_ansatz();
        let target = circuit_unitary(&ans, &(0..ans.n_params()).map(|_| rng.random::<f64>() * 6.0).collect::<Vec<_>>()).unwrap();
        let h = ObjectiveHandle::new(target, ans).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = (0..h.dim()).map(|_| rng.random::<f64>() * 6.28).collect();
            let g = h.gradient(&x).unwrap();
            let fd = finite_difference_gradient(&h, &x, 1e-5);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences_and_is_symmetric() {
        let mut rng = rng_from_seed(10);
        let ans = small_ansatz();
        let target = circuit_unitary(&ans, &(0..ans.n_params()).map(|_| rng.random::<f64>() * 6.0).collect::<Vec<_>>()).unwrap();
        let h = ObjectiveHandle::new(target, ans).unwrap();
        let x: Vec<f64> = (0..h.dim()).map(|_| rng.random::<f64>() * 6.28).collect();
        let hess = h.hessian(&x).unwrap();
        assert!((&hess - hess.transpose()).abs().max() <= 1e-10);
        let step = 1e-4;
        for i in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += step;
            b[i] -= step;
            let ga = h.gradient(&a).unwrap();
            let gb = h.gradient(&b).unwrap();
            for j in 0..x.len() {
                let fd = (ga[j] - gb[j]) / (2.0 * step);
                assert!((hess[(i, j)] - fd).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn stationary_at_global_minimum() {
        let ans = small_ansatz();
        let x: Vec<f64> = (0..ans.n_params()).map(|i| 0.3 * i as f64).collect();
        let target = circuit_unitary(&ans, &x).unwrap();
        let h = ObjectiveHandle::new(target, ans).unwrap();
        assert!(h.cost(&x).unwrap() < 1e-14);
        let g = h.gradient(&x).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn non_involutory_slot_is_rejected() {
        let mut c = Circuit::new(1);
        c.push_param(Gate::gpi(0, 0.0), 0);
        let h = ObjectiveHandle::new(linalg::identity(2), c).unwrap();
        assert!(matches!(h.gradient(&[0.1]), Err(Error::UnsupportedGate(_))));
    }

    #[test]
    fn parameter_free_ansatz_has_empty_derivatives() {
        let mut c = Circuit::new(1);
        c.push(Gate::fixed(GateKind::X, 0));
        let h = ObjectiveHandle::new(linalg::identity(2), c).unwrap();
        assert_eq!(h.hessian(&[]).unwrap().len(), 0);
        assert!(h.gradient(&[]).unwrap().is_empty());
    }

    #[test]
    fn fidelity_is_two_pi_periodic() {
        let ans = small_ansatz();
        let h = ObjectiveHandle::new(linalg::identity(4), ans).unwrap();
        let x: Vec<f64> = (0..h.dim()).map(|i| 0.17 * i as f64 + 0.1).collect();
        let f0 = h.fidelity(&x).unwrap();
        for k in 0..h.dim() {
            let mut y = x.clone();
            y[k] += 2.0 * std::f64::consts::PI;
            assert!((h.fidelity(&y).unwrap() - f0).abs() < 1e-12);
        }
    }

    #[test]
    fn state_check_identical_and_phase() {
        let mut a = Circuit::new(3);
        a.push(Gate::fixed(GateKind::H, 0)).push(Gate::cnot(0, 2));
        let mut rng = rng_from_seed(4);
        assert!(state_infidelity_check(&a, &a, 20, &mut rng).unwrap() < 1e-12);
        let mut b = a.clone();
        b.push(Gate::rz(1, 0.0)).push(Gate::fixed(GateKind::X, 1)).push(Gate::fixed(GateKind::X, 1));
        // RZ(2π) = −I: a pure global phase
        b.push(Gate::rz(2, 2.0 * std::f64::consts::PI));
        assert!(state_infidelity_check(&a, &b, 20, &mut rng).unwrap() < 1e-12);
        assert!(state_infidelity_check(&a, &b, 0, &mut rng).is_err());
        let _ = max_abs(&linalg::identity(1));
    }
}
