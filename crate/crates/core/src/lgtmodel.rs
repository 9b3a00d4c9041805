//! Lattice layout, hopping and bond targets, Trotter-step assembly, the
//! domain-wall initial state and the magnetization correlator.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateset::{circuit_unitary, Circuit, Gate, GateKind};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::objective::unitary_fidelity;
use crate::qstate::{GateKernel, ShotHistogram, StateVector};

/// Minimum fidelity a compiled subcircuit needs before it is spliced.
pub const COMPILED_FIDELITY_FLOOR: f64 = 1.0 - 1e-6;

/// Largest lattice the dense oracle handles (3N qubits).
pub const MAX_ORACLE_SITES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

/// Sector-grouped layout: up sites `0..N`, down sites `N..2N`, bonds `2N..3N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeLayout {
    n_sites: usize,
}

impl LatticeLayout {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites < 2 || n_sites % 2 != 0 {
            return Err(Error::Validation(format!("lattice needs an even number of sites >= 2, got {n_sites}")));
        }
        Ok(LatticeLayout { n_sites })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_qubits(&self) -> usize {
        3 * self.n_sites
    }

    pub fn up_site(&self, i: usize) -> usize {
        i % self.n_sites
    }

    pub fn down_site(&self, i: usize) -> usize {
        self.n_sites + i % self.n_sites
    }

    pub fn site(&self, i: usize, spin: Spin) -> usize {
        match spin {
            Spin::Up => self.up_site(i),
            Spin::Down => self.down_site(i),
        }
    }

    /// Qubit of the bond between sites `i` and `i + 1 (mod N)`.
    pub fn bond(&self, i: usize) -> usize {
        2 * self.n_sites + i % self.n_sites
    }

    /// Bond to the left of site `j`, i.e. bond `(j − 1, j)`.
    pub fn left_bond(&self, j: usize) -> usize {
        self.bond(j + self.n_sites - 1)
    }

    /// 0-indexed left site of the central pair across the domain wall.
    pub fn domain_wall_site(&self) -> usize {
        self.n_sites / 2 - 1
    }

    pub fn up_mask(&self) -> u64 {
        (1u64 << self.n_sites) - 1
    }

    pub fn down_mask(&self) -> u64 {
        self.up_mask() << self.n_sites
    }

    /// Occupied-site counts of the domain-wall state: `(up, down)`.
    pub fn expected_counts(&self) -> (usize, usize) {
        (self.n_sites / 2, self.n_sites / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Direct,
    Gbo,
    Vne,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Direct, Variant::Gbo, Variant::Vne];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Direct => "direct",
            Variant::Gbo => "gbo",
            Variant::Vne => "vne",
        }
    }

    /// Table I accounting: two-qubit gates per Ĉ and per B̂.
    pub fn gates_per_block(self) -> (usize, usize) {
        match self {
            Variant::Direct => (6, 2),
            Variant::Gbo => (5, 2),
            Variant::Vne => (4, 1),
        }
    }

    /// Two-qubit gates per Trotter step: `2N` hopping blocks plus `N` bond blocks.
    pub fn two_qubit_cost(self, n_sites: usize) -> usize {
        let (c, b) = self.gates_per_block();
        2 * n_sites * c + n_sites * b
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Variant::Direct),
            "gbo" => Ok(Variant::Gbo),
            "vne" => Ok(Variant::Vne),
            other => Err(Error::Validation(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterConfig {
    pub j: f64,
    pub u: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub variant: Variant,
}

impl TrotterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Validation(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.j.is_finite() || !self.u.is_finite() {
            return Err(Error::Validation("J and U must be finite".into()));
        }
        Ok(())
    }
}

/// `exp(i·J·dt · Z_b (X_a X_c + Y_a Y_c))` with local qubits `a = 0, b = 1, c = 2`.
pub fn target_unitary_c(j: f64, dt: f64) -> CMatrix {
    let x = linalg::pauli_x();
    let y = linalg::pauli_y();
    let z = linalg::pauli_z();
    let xx = linalg::kron_lsb(&[x.clone(), z.clone(), x]);
    let yy = linalg::kron_lsb(&[y.clone(), z, y]);
    linalg::expm_i_hermitian(&(xx + yy), j * dt)
}

/// `XX(U·dt) = exp(−i (U·dt/2) X⊗X)`.
pub fn target_unitary_b(u: f64, dt: f64) -> CMatrix {
    let x = linalg::pauli_x();
    linalg::expm_i_hermitian(&linalg::kron(&x, &x), -u * dt / 2.0)
}

/// Six-CNOT circuit for Ĉ on local qubits `a = 0, b = 1, c = 2`.
pub fn direct_c_circuit(j: f64, dt: f64) -> Circuit {
    let theta = j * dt;
    let (a, b, c) = (0, 1, 2);
    let mut circ = Circuit::new(3);
    circ.push(Gate::cnot(a, c))
        .push(Gate::fixed(GateKind::H, a))
        .push(Gate::cnot(b, a))
        .push(Gate::rz(a, -2.0 * theta))
        .push(Gate::cnot(c, a))
        .push(Gate::rz(a, 2.0 * theta))
        .push(Gate::cnot(c, a))
        .push(Gate::cnot(b, a))
        .push(Gate::fixed(GateKind::H, a))
        .push(Gate::cnot(a, c));
    circ
}

/// Two-CNOT circuit for B̂ on two bond qubits.
pub fn direct_b_circuit(u: f64, dt: f64) -> Circuit {
    let mut circ = Circuit::new(2);
    circ.push(Gate::fixed(GateKind::H, 0))
        .push(Gate::fixed(GateKind::H, 1))
        .push(Gate::cnot(0, 1))
        .push(Gate::rz(1, u * dt))
        .push(Gate::cnot(0, 1))
        .push(Gate::fixed(GateKind::H, 0))
        .push(Gate::fixed(GateKind::H, 1));
    circ
}

/// Optimized subcircuits for the gbo/vne variants, with bound angles.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSubcircuits {
    pub c: Circuit,
    /// Absent for gbo, which keeps the two-CNOT bond block.
    pub b: Option<Circuit>,
}

impl CompiledSubcircuits {
    pub fn verify(&self, config: &TrotterConfig) -> Result<()> {
        check_block("hopping", &self.c, &target_unitary_c(config.j, config.dt))?;
        match (&self.b, config.variant) {
            (Some(b), _) => check_block("bond", b, &target_unitary_b(config.u, config.dt)),
            (None, Variant::Vne) => Err(Error::Validation("vne variant needs a compiled bond block".into())),
            (None, _) => Ok(()),
        }
    }
}

fn check_block(label: &str, circ: &Circuit, target: &CMatrix) -> Result<()> {
    if !circ.param_slots.is_empty() {
        return Err(Error::Validation(format!("compiled {label} block still has free parameters")));
    }
    let f = unitary_fidelity(target, &circuit_unitary(circ, &[])?)?;
    if f < COMPILED_FIDELITY_FLOOR {
        return Err(Error::Validation(format!("compiled {label} block fidelity {f:.3e} below 1 - 1e-6")));
    }
    Ok(())
}

/// Hopping triples `(a, b, c)` in step order: even then odd bonds for ↑, then for ↓.
pub fn hopping_order(layout: &LatticeLayout) -> Vec<[usize; 3]> {
    let n = layout.n_sites();
    let mut out = Vec::with_capacity(2 * n);
    for spin in [Spin::Up, Spin::Down] {
        for parity in [0, 1] {
            for j in (parity..n).step_by(2) {
                out.push([layout.site(j, spin), layout.bond(j), layout.site(j + 1, spin)]);
            }
        }
    }
    out
}

/// Bond pairs `(bond(j−1), bond(j))` for every site `j`.
pub fn bond_order(layout: &LatticeLayout) -> Vec<[usize; 2]> {
    (0..layout.n_sites()).map(|j| [layout.left_bond(j), layout.bond(j)]).collect()
}

/// One Trotter step as a gate circuit.
pub fn build_trotter_step(
    layout: &LatticeLayout,
    config: &TrotterConfig,
    compiled: Option<&CompiledSubcircuits>,
) -> Result<Circuit> {
    config.validate()?;
    let (c_block, b_block) = match config.variant {
        Variant::Direct => (direct_c_circuit(config.j, config.dt), direct_b_circuit(config.u, config.dt)),
        Variant::Gbo | Variant::Vne => {
            let comp = compiled.ok_or_else(|| {
                Error::Validation(format!("{} variant requires compiled subcircuits", config.variant))
            })?;
            comp.verify(config)?;
            let b = comp.b.clone().unwrap_or_else(|| direct_b_circuit(config.u, config.dt));
            (comp.c.clone(), b)
        }
    };
    let mut step = Circuit::new(layout.n_qubits());
    for triple in hopping_order(layout) {
        step.append_mapped(&c_block, &triple, 0);
    }
    for pair in bond_order(layout) {
        step.append_mapped(&b_block, &pair, 0);
    }
    Ok(step)
}

/// Exact-target kernels of one Trotter step, in step order.
pub fn exact_step_kernels(layout: &LatticeLayout, config: &TrotterConfig) -> Result<Vec<GateKernel>> {
    let c = target_unitary_c(config.j, config.dt);
    let b = target_unitary_b(config.u, config.dt);
    let n = layout.n_qubits();
    let mut out = Vec::new();
    for triple in hopping_order(layout) {
        out.push(GateKernel::new(&c, &triple, n)?);
    }
    for pair in bond_order(layout) {
        out.push(GateKernel::new(&b, &pair, n)?);
    }
    Ok(out)
}

/// Domain-wall state: ↑ on the left half, ↓ on the right half, bonds in
/// `(|+−+−…⟩ + |−+−+…⟩)/√2`. Occupied sites read `|0⟩`.
pub fn initial_state(layout: &LatticeLayout) -> Result<StateVector> {
    let n = layout.n_sites();
    let mut site_bits = 0usize;
    for i in 0..n {
        if i >= n / 2 {
            site_bits |= 1 << layout.up_site(i);
        } else {
            site_bits |= 1 << layout.down_site(i);
        }
    }
    let mut amps = vec![ZERO; 1usize << layout.n_qubits()];
    let scale = 1.0 / (2f64.powi(n as i32) * 2.0).sqrt();
    for bonds in 0..(1usize << n) {
        let even_ones = (0..n).step_by(2).filter(|&k| bonds >> k & 1 == 1).count();
        let odd_ones = (1..n).step_by(2).filter(|&k| bonds >> k & 1 == 1).count();
        // |+−+−…⟩ picks up a sign per 1 on an odd bond, |−+−+…⟩ per 1 on an even bond
        let a = if odd_ones % 2 == 0 { 1.0 } else { -1.0 };
        let b = if even_ones % 2 == 0 { 1.0 } else { -1.0 };
        let v = (a + b) * scale;
        if v != 0.0 {
            amps[site_bits | (bonds << (2 * n))] = C64::new(v, 0.0);
        }
    }
    StateVector::from_amplitudes(amps)
}

/// `s_i = n_{i↑} − n_{i↓}` for one basis outcome.
pub fn site_spin(outcome: u64, layout: &LatticeLayout, i: usize) -> i32 {
    let occ = |q: usize| i32::from(outcome >> q & 1 == 0);
    occ(layout.up_site(i)) - occ(layout.down_site(i))
}

/// Connected correlator `E[s_i s_{i+1}] − E[s_i] E[s_{i+1}]` from shots.
/// `i` is 0-indexed; the partner is `i + 1 (mod N)`.
pub fn magnetization_correlator(hist: &ShotHistogram, layout: &LatticeLayout, i: usize) -> Result<f64> {
    if hist.n_qubits != layout.n_qubits() {
        return Err(Error::Validation("histogram does not match the lattice".into()));
    }
    let total = hist.total();
    if total == 0 {
        return Err(Error::NoData("no shots left to estimate the correlator".into()));
    }
    let (mut ss, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for (&outcome, &count) in &hist.counts {
        let a = site_spin(outcome, layout, i) as f64;
        let b = site_spin(outcome, layout, i + 1) as f64;
        let w = count as f64;
        ss += w * a * b;
        sa += w * a;
        sb += w * b;
    }
    let t = total as f64;
    Ok(ss / t - (sa / t) * (sb / t))
}

/// Same correlator under an exact outcome distribution.
pub fn correlator_from_probabilities(probs: &[f64], layout: &LatticeLayout, i: usize) -> f64 {
    let (mut ss, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for (outcome, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let a = site_spin(outcome as u64, layout, i) as f64;
        let b = site_spin(outcome as u64, layout, i + 1) as f64;
        ss += p * a * b;
        sa += p * a;
        sb += p * b;
    }
    ss - sa * sb
}

/// Exact χ at the domain wall after each of `0..=n_steps` Trotter steps,
/// evolving with the exact Ĉ/B̂ matrices.
pub fn exact_evolution_oracle(layout: &LatticeLayout, config: &TrotterConfig) -> Result<Vec<f64>> {
    Ok(exact_trajectory(layout, config)?
        .iter()
        .map(|s| correlator_from_probabilities(&s.probabilities(), layout, layout.domain_wall_site()))
        .collect())
}

/// Exact states after each of `0..=n_steps` steps.
pub fn exact_trajectory(layout: &LatticeLayout, config: &TrotterConfig) -> Result<Vec<StateVector>> {
    if layout.n_sites() > MAX_ORACLE_SITES {
        return Err(Error::Capacity(format!("oracle limited to N <= {MAX_ORACLE_SITES}")));
    }
    config.validate()?;
    let kernels = exact_step_kernels(layout, config)?;
    let mut state = initial_state(layout)?;
    let mut out = vec![state.clone()];
    for _ in 0..config.n_steps {
        for k in &kernels {
            state.apply_kernel(k);
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// Probability weight outside the sector with `n_up` occupied ↑ sites and
/// `n_down` occupied ↓ sites.
pub fn spin_leakage(state: &StateVector, layout: &LatticeLayout, n_up: usize, n_down: usize) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(idx, _)| !in_spin_sector(*idx as u64, layout, n_up, n_down))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

pub fn in_spin_sector(outcome: u64, layout: &LatticeLayout, n_up: usize, n_down: usize) -> bool {
    let n = layout.n_sites() as u32;
    let up_empty = (outcome & layout.up_mask()).count_ones();
    let down_empty = (outcome & layout.down_mask()).count_ones();
    (n - up_empty) as usize == n_up && (n - down_empty) as usize == n_down
}

/// `⟨Q_j⟩` for every site, with `Q_j = Z_{j↑} Z_{j↓} X_{b(j−1)} X_{b(j)}`.
pub fn charge_expectations(state: &StateVector, layout: &LatticeLayout) -> Vec<f64> {
    let amps = state.amplitudes();
    (0..layout.n_sites())
        .map(|j| {
            let zmask = (1usize << layout.up_site(j)) | (1usize << layout.down_site(j));
            let flip = (1usize << layout.left_bond(j)) ^ (1usize << layout.bond(j));
            let mut acc = ZERO;
            for (idx, a) in amps.iter().enumerate() {
                let sign = if (idx & zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += a.conj() * amps[idx ^ flip] * sign;
            }
            acc.re
        })
        .collect()
}

/// One row of a χ trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiRow {
    pub step: usize,
    pub t: f64,
    pub chi: f64,
    /// Exact-evolution value; NaN when the lattice is too large for the oracle.
    pub oracle: f64,
    pub variant: Variant,
    pub gamma: f64,
    pub seed: u64,
    pub shots: u64,
    pub discarded_frac: f64,
}

pub const CHI_CSV_HEADER: &str = "step,t,chi,oracle,variant,gamma,seed,shots,discarded_frac";

pub fn write_chi_csv<W: Write>(out: &mut W, rows: &[ChiRow]) -> Result<()> {
    writeln!(out, "{CHI_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.6},{:.12},{:.12},{},{},{},{},{:.6}",
            r.step, r.t, r.chi, r.oracle, r.variant, r.gamma, r.seed, r.shots, r.discarded_frac
        )?;
    }
    Ok(())
}
