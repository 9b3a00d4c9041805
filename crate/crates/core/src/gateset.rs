//! Gate definitions for the standard and trapped-ion native gatesets, the
//! circuit IR, native lowering and two-qubit cost accounting.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};
use crate::qstate::{GateKernel, StateVector};

/// Largest register for which a dense circuit unitary is built.
pub const MAX_UNITARY_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    S,
    X,
    Y,
    Z,
    CNOT,
    XX,
    GPI,
    GPI2,
    MS,
}

impl GateKind {
    pub const ALL: [GateKind; 13] = [
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::H,
        GateKind::S,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::CNOT,
        GateKind::XX,
        GateKind::GPI,
        GateKind::GPI2,
        GateKind::MS,
    ];

    pub fn param_arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::XX | GateKind::GPI | GateKind::GPI2 => 1,
            GateKind::MS => 3,
            _ => 0,
        }
    }

    pub fn target_arity(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::XX | GateKind::MS => 2,
            _ => 1,
        }
    }

    pub fn is_native(self) -> bool {
        matches!(self, GateKind::GPI | GateKind::GPI2 | GateKind::MS)
    }

    /// Position of the rotation angle that a free parameter binds to.
    pub fn angle_slot(self) -> Option<usize> {
        match self {
            GateKind::MS => Some(2),
            k if k.param_arity() == 1 => Some(0),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::CNOT => "CNOT",
            GateKind::XX => "XX",
            GateKind::GPI => "GPI",
            GateKind::GPI2 => "GPI2",
            GateKind::MS => "MS",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown gate kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: &[usize], params: &[f64]) -> Result<Self> {
        let g = Gate { kind, params: params.to_vec(), targets: targets.to_vec() };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.kind.param_arity() {
            return Err(Error::Validation(format!(
                "{} takes {} parameters, got {}",
                self.kind,
                self.kind.param_arity(),
                self.params.len()
            )));
        }
        if self.targets.len() != self.kind.target_arity() {
            return Err(Error::Validation(format!(
                "{} acts on {} qubits, got {}",
                self.kind,
                self.kind.target_arity(),
                self.targets.len()
            )));
        }
        if self.targets.len() == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::Index(format!("{} with duplicate target {}", self.kind, self.targets[0])));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("{} has a non-finite angle", self.kind)));
        }
        Ok(())
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::RX, params: vec![theta], targets: vec![q] }
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::RY, params: vec![theta], targets: vec![q] }
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::RZ, params: vec![theta], targets: vec![q] }
    }
    pub fn fixed(kind: GateKind, q: usize) -> Self {
        Gate { kind, params: vec![], targets: vec![q] }
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::CNOT, params: vec![], targets: vec![control, target] }
    }
    pub fn xx(a: usize, b: usize, theta: f64) -> Self {
        Gate { kind: GateKind::XX, params: vec![theta], targets: vec![a, b] }
    }
    pub fn gpi(q: usize, phi: f64) -> Self {
        Gate { kind: GateKind::GPI, params: vec![phi], targets: vec![q] }
    }
    pub fn gpi2(q: usize, phi: f64) -> Self {
        Gate { kind: GateKind::GPI2, params: vec![phi], targets: vec![q] }
    }
    pub fn ms(a: usize, b: usize, phi0: f64, phi1: f64, theta: f64) -> Self {
        Gate { kind: GateKind::MS, params: vec![phi0, phi1, theta], targets: vec![a, b] }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.targets.len() == 2
    }

    pub fn angle(&self) -> Option<f64> {
        self.kind.angle_slot().map(|i| self.params[i])
    }

    pub fn with_angle(&self, theta: f64) -> Self {
        let mut g = self.clone();
        if let Some(i) = g.kind.angle_slot() {
            g.params[i] = theta;
        }
        g
    }

    /// Involutory generator `P` with `G(θ) = exp(−iθP/2)`, when the gate is a
    /// rotation in its angle slot.
    pub fn generator(&self) -> Result<CMatrix> {
        match self.kind {
            GateKind::RX => Ok(linalg::pauli_x()),
            GateKind::RY => Ok(linalg::pauli_y()),
            GateKind::RZ => Ok(linalg::pauli_z()),
            GateKind::XX => Ok(linalg::kron(&linalg::pauli_x(), &linalg::pauli_x())),
            GateKind::MS => Ok(linalg::kron(&sigma_phi(self.params[1]), &sigma_phi(self.params[0]))),
            k => Err(Error::UnsupportedGate(k.name().into())),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.targets.iter().map(|q| q.to_string()).collect();
        write!(f, "{} {}", self.kind, qs.join(","))?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| format!("{p:.15e}")).collect();
            write!(f, " {}", ps.join(","))?;
        }
        Ok(())
    }
}

/// `cos φ X + sin φ Y`.
fn sigma_phi(phi: f64) -> CMatrix {
    linalg::from_rows(&[&[ZERO, C64::from_polar(1.0, -phi)], &[C64::from_polar(1.0, phi), ZERO]])
}

fn rotation(generator: &CMatrix, theta: f64) -> CMatrix {
    let dim = generator.nrows();
    linalg::identity(dim) * C64::new((theta / 2.0).cos(), 0.0) - generator * (I * (theta / 2.0).sin())
}

/// Unitary matrix of a gate (local index bit `m` ↔ `targets[m]`).
pub fn gate_matrix(gate: &Gate) -> Result<CMatrix> {
    gate.validate()?;
    let r = FRAC_1_SQRT_2;
    let m = match gate.kind {
        GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::XX | GateKind::MS => {
            rotation(&gate.generator()?, gate.angle().unwrap())
        }
        GateKind::H => linalg::from_rows(&[&[C64::new(r, 0.0), C64::new(r, 0.0)], &[C64::new(r, 0.0), C64::new(-r, 0.0)]]),
        GateKind::S => linalg::from_rows(&[&[ONE, ZERO], &[ZERO, I]]),
        GateKind::X => linalg::pauli_x(),
        GateKind::Y => linalg::pauli_y(),
        GateKind::Z => linalg::pauli_z(),
        GateKind::CNOT => {
            // control = local bit 0, target = local bit 1
            let mut m = CMatrix::zeros(4, 4);
            m[(0, 0)] = ONE;
            m[(2, 2)] = ONE;
            m[(3, 1)] = ONE;
            m[(1, 3)] = ONE;
            m
        }
        GateKind::GPI => sigma_phi(gate.params[0]),
        GateKind::GPI2 => {
            let phi = gate.params[0];
            linalg::from_rows(&[
                &[C64::new(r, 0.0), -I * C64::from_polar(r, -phi)],
                &[-I * C64::from_polar(r, phi), C64::new(r, 0.0)],
            ])
        }
    };
    Ok(m)
}

/// Ordered gate list with optional free-parameter bindings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    /// gate position → free-parameter index
    pub param_slots: BTreeMap<usize, usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new(), param_slots: BTreeMap::new() }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    /// Appends a gate whose angle is bound to free parameter `index`.
    pub fn push_param(&mut self, gate: Gate, index: usize) -> &mut Self {
        self.param_slots.insert(self.gates.len(), index);
        self.gates.push(gate);
        self
    }

    /// Appends `other`, relabelling its qubit `i` to `qubit_map[i]` and
    /// offsetting its parameter indices by `param_offset`.
    pub fn append_mapped(&mut self, other: &Circuit, qubit_map: &[usize], param_offset: usize) {
        for (pos, g) in other.gates.iter().enumerate() {
            let mut g = g.clone();
            g.targets.iter_mut().for_each(|t| *t = qubit_map[*t]);
            match other.param_slots.get(&pos) {
                Some(&p) => self.push_param(g, p + param_offset),
                None => self.push(g),
            };
        }
    }

    /// Number of free parameters (one past the largest bound index).
    pub fn n_params(&self) -> usize {
        self.param_slots.values().max().map_or(0, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Validation("circuit needs at least one qubit".into()));
        }
        for g in &self.gates {
            g.validate()?;
            if let Some(&t) = g.targets.iter().find(|&&t| t >= self.n_qubits) {
                return Err(Error::Index(format!("{} target {t} outside {} qubits", g.kind, self.n_qubits)));
            }
        }
        for (&pos, _) in &self.param_slots {
            match self.gates.get(pos) {
                Some(g) if g.kind.angle_slot().is_some() => {}
                _ => return Err(Error::Validation(format!("parameter slot on gate {pos} has no angle"))),
            }
        }
        Ok(())
    }

    /// Concrete gate list with free parameters substituted.
    pub fn bind(&self, params: &[f64]) -> Result<Circuit> {
        let d = self.n_params();
        if params.len() != d {
            return Err(Error::Validation(format!("expected {d} parameters, got {}", params.len())));
        }
        let gates = self
            .gates
            .iter()
            .enumerate()
            .map(|(pos, g)| match self.param_slots.get(&pos) {
                Some(&p) => g.with_angle(params[p]),
                None => g.clone(),
            })
            .collect();
        Ok(Circuit { n_qubits: self.n_qubits, gates, param_slots: BTreeMap::new() })
    }

    pub fn two_qubit_count(&self) -> usize {
        two_qubit_count(self)
    }

    /// Runs the circuit (with bound angles) on a state.
    pub fn apply_to(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Validation("state and circuit qubit counts differ".into()));
        }
        self.validate()?;
        for g in &self.gates {
            let k = GateKernel::new_unchecked(&gate_matrix(g)?, &g.targets, self.n_qubits)?;
            state.apply_kernel(&k);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.n_qubits);
        for (pos, g) in self.gates.iter().enumerate() {
            out.push_str(&g.to_string());
            if let Some(p) = self.param_slots.get(&pos) {
                out.push_str(&format!(" @{p}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the one-gate-per-line text format. `#` starts a comment, an
    /// optional `QUBITS n` line fixes the register size, and a trailing `@k`
    /// binds the gate angle to free parameter `k`.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut n_qubits = None;
        let mut circuit = Circuit::new(0);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: lineno + 1, msg };
            let mut tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens[0].eq_ignore_ascii_case("QUBITS") {
                let n = tokens.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| perr("bad QUBITS line".into()))?;
                n_qubits = Some(n);
                continue;
            }
            let slot = match tokens.last() {
                Some(t) if t.starts_with('@') => {
                    let s = t[1..].parse::<usize>().map_err(|_| perr(format!("bad slot {t}")))?;
                    tokens.pop();
                    Some(s)
                }
                _ => None,
            };
            if tokens.len() < 2 || tokens.len() > 3 {
                return Err(perr(format!("expected `KIND qubits [angles]`, got {line:?}")));
            }
            let kind: GateKind = tokens[0].parse().map_err(|e: Error| perr(e.to_string()))?;
            let targets = tokens[1]
                .split(',')
                .map(|t| t.parse::<usize>().map_err(|_| perr(format!("bad qubit {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let params = match tokens.get(2) {
                Some(t) => t
                    .split(',')
                    .map(|a| a.parse::<f64>().map_err(|_| perr(format!("bad angle {a:?}"))))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![],
            };
            let gate = Gate::new(kind, &targets, &params).map_err(|e| perr(e.to_string()))?;
            match slot {
                Some(s) => circuit.push_param(gate, s),
                None => circuit.push(gate),
            };
        }
        let max_target = circuit.gates.iter().flat_map(|g| g.targets.iter()).max().map_or(0, |m| m + 1);
        circuit.n_qubits = n_qubits.unwrap_or(max_target.max(1));
        circuit.validate()?;
        Ok(circuit)
    }
}

/// Dense unitary of the circuit with `params` bound; later gates multiply on
/// the left.
pub fn circuit_unitary(circuit: &Circuit, params: &[f64]) -> Result<CMatrix> {
    if circuit.n_qubits > MAX_UNITARY_QUBITS {
        return Err(Error::Capacity(format!(
            "dense unitary limited to {MAX_UNITARY_QUBITS} qubits, circuit has {}",
            circuit.n_qubits
        )));
    }
    circuit.validate()?;
    let bound = circuit.bind(params)?;
    let dim = 1usize << circuit.n_qubits;
    let mut u = linalg::identity(dim);
    for g in &bound.gates {
        let k = GateKernel::new_unchecked(&gate_matrix(g)?, &g.targets, circuit.n_qubits)?;
        // column-major storage: each chunk is one column
        for col in u.as_mut_slice().chunks_mut(dim) {
            k.apply_slice(col);
        }
    }
    Ok(u)
}

pub fn two_qubit_count(circuit: &Circuit) -> usize {
    circuit.gates.iter().filter(|g| g.is_two_qubit()).count()
}

/// `RZ(θ)` as a pair of `GPI` pulses: `GPI(a)·GPI(b) = RZ(2(a−b))`.
fn native_rz(q: usize, theta: f64, out: &mut Vec<Gate>) {
    out.push(Gate::gpi(q, 0.0));
    out.push(Gate::gpi(q, theta / 2.0));
}

fn native_single(gate: &Gate, out: &mut Vec<Gate>) -> Result<()> {
    let q = gate.targets[0];
    match gate.kind {
        GateKind::RZ => native_rz(q, gate.params[0], out),
        GateKind::RX => {
            // RX(θ) = RY(π/2)·RZ(θ)·RY(−π/2); GPI2(±π/2) = RY(±π/2)
            out.push(Gate::gpi2(q, -FRAC_PI_2));
            native_rz(q, gate.params[0], out);
            out.push(Gate::gpi2(q, FRAC_PI_2));
        }
        GateKind::RY => {
            // RY(θ) = RX(−π/2)·RZ(θ)·RX(π/2); GPI2(0) = RX(π/2), GPI2(π) = RX(−π/2)
            out.push(Gate::gpi2(q, 0.0));
            native_rz(q, gate.params[0], out);
            out.push(Gate::gpi2(q, PI));
        }
        GateKind::H => {
            native_rz(q, PI, out);
            out.push(Gate::gpi2(q, FRAC_PI_2));
        }
        GateKind::S => native_rz(q, FRAC_PI_2, out),
        GateKind::Z => native_rz(q, PI, out),
        GateKind::X => out.push(Gate::gpi(q, 0.0)),
        GateKind::Y => out.push(Gate::gpi(q, FRAC_PI_2)),
        GateKind::GPI | GateKind::GPI2 => out.push(gate.clone()),
        k => return Err(Error::Lowering(k.name().into())),
    }
    Ok(())
}

/// Rewrites a circuit into `{GPI, GPI2, MS}` with bound angles. Each `XX(θ)`
/// becomes one `MS(0,0,θ)`; each `CNOT` becomes one `MS` with single-qubit
/// dressings. Agreement is up to global phase.
pub fn lower_to_native(circuit: &Circuit) -> Result<Circuit> {
    circuit.validate()?;
    let mut out = Vec::with_capacity(circuit.gates.len() * 4);
    for g in &circuit.gates {
        match g.kind {
            GateKind::XX => out.push(Gate::ms(g.targets[0], g.targets[1], 0.0, 0.0, g.params[0])),
            GateKind::MS => out.push(g.clone()),
            GateKind::CNOT => {
                let (c, t) = (g.targets[0], g.targets[1]);
                // CNOT ∝ RZ_c(π/2)·RX_t(π/2)·RY_c(−π/2)·XX(−π/2)·RY_c(π/2)
                native_single(&Gate::ry(c, FRAC_PI_2), &mut out)?;
                out.push(Gate::ms(c, t, 0.0, 0.0, -FRAC_PI_2));
                native_single(&Gate::ry(c, -FRAC_PI_2), &mut out)?;
                native_single(&Gate::rx(t, FRAC_PI_2), &mut out)?;
                native_single(&Gate::rz(c, FRAC_PI_2), &mut out)?;
            }
            _ => native_single(g, &mut out)?,
        }
    }
    Ok(Circuit { n_qubits: circuit.n_qubits, gates: out, param_slots: BTreeMap::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, phase_insensitive_overlap};

    fn m(g: Gate) -> CMatrix {
        gate_matrix(&g).unwrap()
    }

    #[test]
    fn gpi_zero_is_pauli_x() {
        assert!(max_abs(&(m(Gate::gpi(0, 0.0)) - linalg::pauli_x())) < 1e-15);
    }

    #[test]
    fn gpi2_diagonal() {
        let g = m(Gate::gpi2(0, 0.77));
        assert!((g[(0, 0)].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g[(1, 1)].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn xx_zero_is_identity_and_matches_ms() {
        assert!(max_abs(&(m(Gate::xx(0, 1, 0.0)) - linalg::identity(4))) < 1e-15);
        let a = m(Gate::xx(0, 1, 0.7));
        let b = m(Gate::ms(0, 1, 0.0, 0.0, 0.7));
        assert_eq!(a, b);
    }

    #[test]
    fn all_gates_unitary() {
        for kind in GateKind::ALL {
            let targets: Vec<usize> = (0..kind.target_arity()).collect();
            let params: Vec<f64> = (0..kind.param_arity()).map(|i| 0.3 + 0.9 * i as f64).collect();
            let u = m(Gate::new(kind, &targets, &params).unwrap());
            assert!(linalg::unitarity_defect(&u) <= 1e-12, "{kind}");
        }
    }

    #[test]
    fn arity_checks() {
        assert!(Gate::new(GateKind::MS, &[0, 1], &[0.1]).is_err());
        assert!(Gate::new(GateKind::CNOT, &[0], &[]).is_err());
        assert!(Gate::new(GateKind::XX, &[1, 1], &[0.2]).is_err());
        assert!("FOO".parse::<GateKind>().is_err());
    }

    #[test]
    fn circuit_unitary_basics() {
        let c = Circuit::new(2);
        assert!(max_abs(&(circuit_unitary(&c, &[]).unwrap() - linalg::identity(4))) < 1e-15);
        let mut c = Circuit::new(1);
        c.push(Gate::rx(0, PI));
        let u = circuit_unitary(&c, &[]).unwrap();
        assert!(max_abs(&(u + linalg::pauli_x() * I)) < 1e-15);
        assert!(matches!(circuit_unitary(&Circuit::new(13), &[]), Err(Error::Capacity(_))));
    }

    #[test]
    fn later_gates_multiply_on_the_left() {
        let mut c = Circuit::new(1);
        c.push(Gate::fixed(GateKind::H, 0)).push(Gate::fixed(GateKind::S, 0));
        let u = circuit_unitary(&c, &[]).unwrap();
        let expect = m(Gate::fixed(GateKind::S, 0)) * m(Gate::fixed(GateKind::H, 0));
        assert!(max_abs(&(u - expect)) < 1e-15);
    }

    #[test]
    fn param_slots_bind() {
        let mut c = Circuit::new(2);
        c.push_param(Gate::rx(0, 0.0), 1).push_param(Gate::xx(0, 1, 0.0), 0);
        assert_eq!(c.n_params(), 2);
        let b = c.bind(&[0.4, 0.9]).unwrap();
        assert_eq!(b.gates[0].params[0], 0.9);
        assert_eq!(b.gates[1].params[0], 0.4);
        assert!(c.bind(&[0.1]).is_err());
    }

    fn assert_lowering_exact(c: &Circuit) {
        let low = lower_to_native(c).unwrap();
        assert!(low.gates.iter().all(|g| g.kind.is_native()));
        let a = circuit_unitary(c, &[]).unwrap();
        let b = circuit_unitary(&low, &[]).unwrap();
        let ov = phase_insensitive_overlap(&a, &b);
        assert!((ov - 1.0).abs() < 1e-8, "overlap {ov} for {:?}", c.gates);
    }

    #[test]
    fn lowering_each_standard_gate() {
        for kind in [GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::H, GateKind::S, GateKind::X, GateKind::Y, GateKind::Z] {
            let params: Vec<f64> = (0..kind.param_arity()).map(|_| 0.731).collect();
            let mut c = Circuit::new(1);
            c.push(Gate::new(kind, &[0], &params).unwrap());
            assert_lowering_exact(&c);
        }
        let mut c = Circuit::new(2);
        c.push(Gate::cnot(0, 1));
        assert_lowering_exact(&c);
        let mut c = Circuit::new(2);
        c.push(Gate::cnot(1, 0));
        assert_lowering_exact(&c);
    }

    #[test]
    fn xx_lowers_to_single_ms() {
        let mut c = Circuit::new(2);
        c.push(Gate::xx(0, 1, 0.7));
        let low = lower_to_native(&c).unwrap();
        assert_eq!(low.gates, vec![Gate::ms(0, 1, 0.0, 0.0, 0.7)]);
        assert_eq!(lower_to_native(&Circuit::new(3)).unwrap().two_qubit_count(), 0);
    }

    #[test]
    fn text_round_trip() {
        let mut c = Circuit::new(3);
        c.push(Gate::cnot(0, 2)).push_param(Gate::ry(1, 0.123456789012345), 0).push(Gate::ms(1, 2, 0.1, 0.2, 0.3));
        let text = c.to_text();
        let back = Circuit::from_text(&format!("# comment\n{text}")).unwrap();
        assert_eq!(back, c);
        assert!(matches!(Circuit::from_text("RX 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Circuit::from_text("QUBITS 1\nCNOT 0,1"), Err(Error::Index(_))));
    }
}
