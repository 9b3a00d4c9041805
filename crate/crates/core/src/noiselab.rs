//! Noisy execution by Pauli trajectories, symmetry post-selection, and
//! variant compilation with histogram aggregation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateset::{gate_matrix, Circuit, Gate, GateKind};
use crate::lgtmodel::{in_spin_sector, LatticeLayout};
use crate::linalg::{self, CMatrix};
use crate::qstate::{sample_from_probabilities, Basis, GateKernel, Rng, ShotHistogram, StateVector};

/// Default multiple of the noise-floor estimate an outcome must exceed to
/// survive sharpening.
pub const DEFAULT_SHARPEN_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub gamma: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Validation(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationPlan {
    pub spin_filter: bool,
    pub charge_filter: bool,
    pub variants: usize,
    pub sharpen: bool,
    pub sharpen_factor: f64,
}

impl Default for MitigationPlan {
    fn default() -> Self {
        MitigationPlan {
            spin_filter: true,
            charge_filter: false,
            variants: 1,
            sharpen: false,
            sharpen_factor: DEFAULT_SHARPEN_FACTOR,
        }
    }
}

impl MitigationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.variants == 0 {
            return Err(Error::Validation("at least one compilation variant is required".into()));
        }
        if self.sharpen && self.variants < 3 {
            return Err(Error::Validation("sharpening needs at least 3 variants".into()));
        }
        if !(self.sharpen_factor > 0.0) {
            return Err(Error::Validation("sharpen factor must be positive".into()));
        }
        Ok(())
    }
}

fn pauli(idx: usize) -> CMatrix {
    match idx {
        0 => linalg::identity(2),
        1 => linalg::pauli_x(),
        2 => linalg::pauli_y(),
        _ => linalg::pauli_z(),
    }
}

/// Two-qubit Pauli `idx ∈ 0..16`: low two bits on the first target.
fn pauli_pair(idx: usize) -> CMatrix {
    linalg::kron(&pauli(idx >> 2), &pauli(idx & 3))
}

#[derive(Debug, Clone)]
struct NoiseSite {
    /// gate index inside the block after which the error strikes
    after: usize,
    local: [usize; 2],
    physical: [usize; 2],
}

#[derive(Debug, Clone)]
struct Block {
    qubits: Vec<usize>,
    gates: Vec<CMatrix>,
    sites: Vec<NoiseSite>,
    first_site: usize,
    fused: GateKernel,
}

impl Block {
    fn matrix_with(&self, errors: &[(usize, usize)]) -> CMatrix {
        let dim = 1usize << self.qubits.len();
        let mut u = linalg::identity(dim);
        let mut e = errors.iter().peekable();
        for (gi, g) in self.gates.iter().enumerate() {
            u = g * u;
            while let Some(&&(site, p)) = e.peek() {
                let s = &self.sites[site - self.first_site];
                if s.after != gi {
                    break;
                }
                u = linalg::embed(&pauli_pair(p), &s.local, self.qubits.len()) * u;
                e.next();
            }
        }
        u
    }
}

/// A bound circuit fused into blocks on at most three qubits, with a noise
/// site after every two-qubit gate.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    n_qubits: usize,
    blocks: Vec<Block>,
    n_sites: usize,
}

impl CompiledCircuit {
    pub fn new(circuit: &Circuit) -> Result<Self> {
        circuit.validate()?;
        if !circuit.param_slots.is_empty() {
            return Err(Error::Validation("bind circuit parameters before execution".into()));
        }
        let n = circuit.n_qubits;
        let mut groups: Vec<Vec<&Gate>> = Vec::new();
        let mut current: Vec<&Gate> = Vec::new();
        let mut qubits: Vec<usize> = Vec::new();
        for g in &circuit.gates {
            let mut merged = qubits.clone();
            for &t in &g.targets {
                if !merged.contains(&t) {
                    merged.push(t);
                }
            }
            if merged.len() > 3 {
                groups.push(std::mem::take(&mut current));
                merged = g.targets.clone();
            }
            qubits = merged;
            current.push(g);
        }
        if !current.is_empty() {
            groups.push(current);
        }

        let mut blocks = Vec::with_capacity(groups.len());
        let mut n_sites = 0;
        for group in groups {
            let mut qs: Vec<usize> = Vec::new();
            for g in &group {
                for &t in &g.targets {
                    if !qs.contains(&t) {
                        qs.push(t);
                    }
                }
            }
            let local_of = |q: usize| qs.iter().position(|&x| x == q).unwrap();
            let mut gates = Vec::with_capacity(group.len());
            let mut sites = Vec::new();
            for (gi, g) in group.iter().enumerate() {
                let local: Vec<usize> = g.targets.iter().map(|&t| local_of(t)).collect();
                gates.push(linalg::embed(&gate_matrix(g)?, &local, qs.len()));
                if g.is_two_qubit() {
                    sites.push(NoiseSite { after: gi, local: [local[0], local[1]], physical: [g.targets[0], g.targets[1]] });
                }
            }
            let mut block = Block {
                fused: GateKernel::new_unchecked(&linalg::identity(1 << qs.len()), &qs, n)?,
                qubits: qs,
                gates,
                first_site: n_sites,
                sites,
            };
            n_sites += block.sites.len();
            block.fused = GateKernel::new_unchecked(&block.matrix_with(&[]), &block.qubits, n)?;
            blocks.push(block);
        }
        Ok(CompiledCircuit { n_qubits: n, blocks, n_sites })
    }

    /// Same as [`CompiledCircuit::new`]; named for call sites that never inject noise.
    pub fn noiseless(circuit: &Circuit) -> Result<Self> {
        Self::new(circuit)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_noise_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Physical qubit pair of every noise site, in execution order.
    pub fn noise_site_qubits(&self) -> Vec<[usize; 2]> {
        self.blocks.iter().flat_map(|b| b.sites.iter().map(|s| s.physical)).collect()
    }

    pub fn run(&self, state: &mut StateVector) {
        for b in &self.blocks {
            state.apply_kernel(&b.fused);
        }
    }

    /// Runs with Pauli errors `(site, pauli index)` sorted by site.
    pub fn run_with_errors(&self, state: &mut StateVector, errors: &[(usize, usize)]) -> Result<()> {
        let mut rest = errors;
        for b in &self.blocks {
            let end = b.first_site + b.sites.len();
            let split = rest.iter().position(|&(s, _)| s >= end).unwrap_or(rest.len());
            let (mine, tail) = rest.split_at(split);
            rest = tail;
            if mine.is_empty() {
                state.apply_kernel(&b.fused);
            } else {
                let k = GateKernel::new_unchecked(&b.matrix_with(mine), &b.qubits, self.n_qubits)?;
                state.apply_kernel(&k);
            }
        }
        Ok(())
    }

    /// Draws nontrivial Pauli errors for one pass, with a per-site rate.
    fn sample_errors(&self, gammas: &[f64], rng: &mut Rng) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (site, &g) in gammas.iter().enumerate() {
            if g > 0.0 && rng.random::<f64>() < g {
                let p = rng.random_range(0..16usize);
                if p != 0 {
                    out.push((site, p));
                }
            }
        }
        out
    }
}

/// Outcome probabilities when qubits marked `X` are read in the X basis.
pub fn measurement_probabilities(state: &StateVector, basis: &[Basis]) -> Result<Vec<f64>> {
    if basis.len() != state.n_qubits() {
        return Err(Error::Validation("basis list length differs from qubit count".into()));
    }
    if basis.iter().all(|b| *b == Basis::Z) {
        return Ok(state.probabilities());
    }
    let h = gate_matrix(&Gate::fixed(GateKind::H, 0))?;
    let mut rotated = state.clone();
    for (q, b) in basis.iter().enumerate() {
        if *b == Basis::X {
            rotated.apply_kernel(&GateKernel::new_unchecked(&h, &[q], state.n_qubits())?);
        }
    }
    Ok(rotated.probabilities())
}

fn add_samples(hist: &mut ShotHistogram, probs: &[f64], shots: u64, rng: &mut Rng) -> Result<()> {
    if shots == 0 {
        return Ok(());
    }
    for (k, c) in sample_from_probabilities(probs, shots, rng)? {
        hist.add(k, c);
    }
    Ok(())
}

/// Per-site error rates for a circuit, from either a uniform `gamma` or
/// per-qubit rates (a site's rate is the mean of its two qubits' rates).
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseRates {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

impl NoiseRates {
    fn site_rates(&self, circuit: &CompiledCircuit) -> Result<Vec<f64>> {
        let pairs = circuit.noise_site_qubits();
        match self {
            NoiseRates::Uniform(g) => {
                NoiseConfig { gamma: *g, seed: 0 }.validate()?;
                Ok(vec![*g; pairs.len()])
            }
            NoiseRates::PerQubit(v) => {
                if v.len() != circuit.n_qubits() {
                    return Err(Error::Validation("one error rate per qubit is required".into()));
                }
                for &g in v {
                    NoiseConfig { gamma: g, seed: 0 }.validate()?;
                }
                Ok(pairs.iter().map(|[a, b]| 0.5 * (v[*a] + v[*b])).collect())
            }
        }
    }
}

/// Repeats `step` `n_steps` times under depolarizing noise and returns the
/// histogram after each step, each with `shots` counts.
///
/// Every trajectory runs through all steps and contributes
/// `shots_per_trajectory` shots at each boundary. Trajectories share the
/// noiseless prefix up to their first error.
#[allow(clippy::too_many_arguments)]
pub fn run_noisy_steps(
    step: &Circuit,
    initial: &StateVector,
    n_steps: usize,
    rates: &NoiseRates,
    shots: u64,
    shots_per_trajectory: u64,
    basis: &[Basis],
    rng: &mut Rng,
) -> Result<Vec<ShotHistogram>> {
    if step.n_qubits != initial.n_qubits() {
        return Err(Error::Validation("circuit and state qubit counts differ".into()));
    }
    if shots == 0 || shots_per_trajectory == 0 {
        return Err(Error::Validation("shots and shots per trajectory must be positive".into()));
    }
    let compiled = CompiledCircuit::new(step)?;
    let gammas = rates.site_rates(&compiled)?;
    let n_traj = shots.div_ceil(shots_per_trajectory) as usize;
    let share = |t: usize| -> u64 {
        if t + 1 < n_traj {
            shots_per_trajectory
        } else {
            shots - shots_per_trajectory * (n_traj as u64 - 1)
        }
    };

    // errors[t][k] = errors of trajectory t during step k + 1
    let mut errors: Vec<Vec<Vec<(usize, usize)>>> = Vec::with_capacity(n_traj);
    for _ in 0..n_traj {
        errors.push((0..n_steps).map(|_| compiled.sample_errors(&gammas, rng)).collect());
    }
    let first_error: Vec<Option<usize>> = errors.iter().map(|e| e.iter().position(|s| !s.is_empty())).collect();

    let mut hists: Vec<ShotHistogram> = (0..n_steps).map(|_| ShotHistogram::new(step.n_qubits, basis.to_vec())).collect();
    let mut checkpoints = vec![initial.clone()];
    for k in 0..n_steps {
        let mut s = checkpoints[k].clone();
        compiled.run(&mut s);
        checkpoints.push(s);
    }
    for k in 1..=n_steps {
        let clean: u64 = (0..n_traj).filter(|&t| first_error[t].is_none_or(|f| f >= k)).map(share).sum();
        if clean > 0 {
            let probs = measurement_probabilities(&checkpoints[k], basis)?;
            add_samples(&mut hists[k - 1], &probs, clean, rng)?;
        }
    }
    for t in 0..n_traj {
        let Some(f) = first_error[t] else { continue };
        let mut s = checkpoints[f].clone();
        for k in f..n_steps {
            compiled.run_with_errors(&mut s, &errors[t][k])?;
            let probs = measurement_probabilities(&s, basis)?;
            add_samples(&mut hists[k], &probs, share(t), rng)?;
        }
    }
    Ok(hists)
}

/// Runs `circuit` once per shot under two-qubit depolarizing noise.
pub fn run_noisy(
    circuit: &Circuit,
    initial: &StateVector,
    noise: &NoiseConfig,
    shots: u64,
    basis: &[Basis],
    rng: &mut Rng,
) -> Result<ShotHistogram> {
    noise.validate()?;
    let mut h = run_noisy_steps(circuit, initial, 1, &NoiseRates::Uniform(noise.gamma), shots, 1, basis, rng)?;
    Ok(h.pop().unwrap())
}

/// Z on every site qubit and X on every bond qubit.
pub fn bond_x_basis(layout: &LatticeLayout) -> Vec<Basis> {
    (0..layout.n_qubits()).map(|q| if q >= 2 * layout.n_sites() { Basis::X } else { Basis::Z }).collect()
}

fn filter(hist: &ShotHistogram, keep: impl Fn(u64) -> bool) -> Result<(ShotHistogram, f64)> {
    let total = hist.total();
    if total == 0 {
        return Err(Error::NoData("histogram is empty".into()));
    }
    let mut out = ShotHistogram::new(hist.n_qubits, hist.basis.clone());
    for (&k, &c) in &hist.counts {
        if keep(k) {
            out.add(k, c);
        }
    }
    let kept = out.total();
    if kept == 0 {
        return Err(Error::NoData("post-selection discarded every shot".into()));
    }
    Ok((out, (total - kept) as f64 / total as f64))
}

/// Keeps shots with the expected number of occupied (`0`) sites per sector.
pub fn postselect_spin(
    hist: &ShotHistogram,
    layout: &LatticeLayout,
    n_up_expected: usize,
    n_down_expected: usize,
) -> Result<(ShotHistogram, f64)> {
    if hist.n_qubits != layout.n_qubits() {
        return Err(Error::Validation("histogram does not match the lattice".into()));
    }
    if (0..2 * layout.n_sites()).any(|q| hist.basis[q] != Basis::Z) {
        return Err(Error::Validation("site qubits must be read in the Z basis".into()));
    }
    filter(hist, |k| in_spin_sector(k, layout, n_up_expected, n_down_expected))
}

/// Charge signs `q_j` of one outcome read with bonds in X.
pub fn charge_pattern(outcome: u64, layout: &LatticeLayout) -> Vec<i8> {
    let bit = |q: usize| (outcome >> q & 1) as i32;
    (0..layout.n_sites())
        .map(|j| {
            let parity = (1 - bit(layout.up_site(j))) + (1 - bit(layout.down_site(j))) + bit(layout.left_bond(j)) + bit(layout.bond(j));
            if parity % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Charge pattern of the domain-wall state (every `Q_j = +1`).
pub fn initial_charge_pattern(layout: &LatticeLayout) -> Vec<i8> {
    vec![1; layout.n_sites()]
}

/// Keeps shots whose local charges all match `expected`.
pub fn postselect_charge(hist: &ShotHistogram, layout: &LatticeLayout, expected: &[i8]) -> Result<(ShotHistogram, f64)> {
    if hist.n_qubits != layout.n_qubits() || hist.basis != bond_x_basis(layout) {
        return Err(Error::Validation("charge post-selection needs bonds read in the X basis".into()));
    }
    if expected.len() != layout.n_sites() {
        return Err(Error::Validation("one expected charge per site is required".into()));
    }
    filter(hist, |k| charge_pattern(k, layout) == expected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebiasOptions {
    pub twirl: bool,
    pub relabel: bool,
}

impl Default for DebiasOptions {
    fn default() -> Self {
        DebiasOptions { twirl: true, relabel: true }
    }
}

/// An equivalent compilation: `circuit` acts on physical qubits, logical
/// qubit `l` sits on physical qubit `placement[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasVariant {
    pub circuit: Circuit,
    pub placement: Vec<usize>,
}

impl DebiasVariant {
    pub fn identity(circuit: Circuit) -> Self {
        let placement = (0..circuit.n_qubits).collect();
        DebiasVariant { circuit, placement }
    }

    /// Maps a logical basis index to the physical register.
    pub fn to_physical(&self, logical: u64) -> u64 {
        self.placement.iter().enumerate().fold(0, |acc, (l, &p)| acc | ((logical >> l & 1) << p))
    }

    pub fn to_logical(&self, physical: u64) -> u64 {
        self.placement.iter().enumerate().fold(0, |acc, (l, &p)| acc | ((physical >> p & 1) << l))
    }

    pub fn place_state(&self, logical: &StateVector) -> Result<StateVector> {
        let mut amps = vec![linalg::ZERO; logical.dim()];
        for (i, a) in logical.amplitudes().iter().enumerate() {
            amps[self.to_physical(i as u64) as usize] = *a;
        }
        StateVector::from_amplitudes(amps)
    }

    pub fn logical_histogram(&self, physical: &ShotHistogram) -> ShotHistogram {
        let mut basis = vec![Basis::Z; physical.n_qubits];
        for (l, &p) in self.placement.iter().enumerate() {
            basis[l] = physical.basis[p];
        }
        let mut out = ShotHistogram::new(physical.n_qubits, basis);
        for (&k, &c) in &physical.counts {
            out.add(self.to_logical(k), c);
        }
        out
    }

    /// Physical basis list for a logical one.
    pub fn physical_basis(&self, logical: &[Basis]) -> Vec<Basis> {
        let mut out = vec![Basis::Z; logical.len()];
        for (l, &p) in self.placement.iter().enumerate() {
            out[p] = logical[l];
        }
        out
    }
}

const PAULI_GATES: [Option<GateKind>; 4] = [None, Some(GateKind::X), Some(GateKind::Y), Some(GateKind::Z)];

/// Pauli pair `(p0, p1)` that commutes with `X⊗X` (and with every MS(0,0,θ)).
fn xx_commuting_pair(rng: &mut Rng) -> (usize, usize) {
    const SET: [(usize, usize); 8] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)];
    SET[rng.random_range(0..SET.len())]
}

/// Image of `P_c ⊗ P_t` under CNOT conjugation, up to sign.
fn cnot_conjugate(pc: usize, pt: usize) -> (usize, usize) {
    // symplectic form: (x_c, z_c, x_t, z_t) → (x_c, z_c ^ z_t, x_t ^ x_c, z_t)
    let xz = |p: usize| -> (u8, u8) {
        match p {
            0 => (0, 0),
            1 => (1, 0),
            2 => (1, 1),
            _ => (0, 1),
        }
    };
    let from = |x: u8, z: u8| -> usize {
        match (x, z) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        }
    };
    let (xc, zc) = xz(pc);
    let (xt, zt) = xz(pt);
    (from(xc, zc ^ zt), from(xt ^ xc, zt))
}

fn push_pauli(c: &mut Circuit, p: usize, q: usize) {
    if let Some(kind) = PAULI_GATES[p] {
        c.push(Gate::fixed(kind, q));
    }
}

/// Random equivalent compilations of a bound circuit.
pub fn debias_variants(circuit: &Circuit, m: usize, options: DebiasOptions, rng: &mut Rng) -> Result<Vec<DebiasVariant>> {
    if m == 0 {
        return Err(Error::Validation("at least one variant is required".into()));
    }
    circuit.validate()?;
    if !circuit.param_slots.is_empty() {
        return Err(Error::Validation("bind circuit parameters before compiling variants".into()));
    }
    let n = circuit.n_qubits;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let mut placement: Vec<usize> = (0..n).collect();
        if options.relabel {
            placement.shuffle(rng);
        }
        let mut c = Circuit::new(n);
        for g in &circuit.gates {
            let mut pg = g.clone();
            pg.targets.iter_mut().for_each(|t| *t = placement[*t]);
            if !options.twirl || !g.is_two_qubit() {
                c.push(pg);
                continue;
            }
            let (a, b) = (pg.targets[0], pg.targets[1]);
            match g.kind {
                GateKind::CNOT => {
                    let (pa, pb) = (rng.random_range(0..4usize), rng.random_range(0..4usize));
                    let (qa, qb) = cnot_conjugate(pa, pb);
                    push_pauli(&mut c, pa, a);
                    push_pauli(&mut c, pb, b);
                    c.push(pg);
                    push_pauli(&mut c, qa, a);
                    push_pauli(&mut c, qb, b);
                }
                GateKind::XX => {
                    let (pa, pb) = xx_commuting_pair(rng);
                    push_pauli(&mut c, pa, a);
                    push_pauli(&mut c, pb, b);
                    c.push(pg);
                    push_pauli(&mut c, pa, a);
                    push_pauli(&mut c, pb, b);
                }
                _ => {
                    c.push(pg);
                }
            }
        }
        out.push(DebiasVariant { circuit: c, placement });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateMode {
    Average,
    Sharpen,
}

/// Combines per-variant histograms by summing counts, or by noise-floor
/// thresholding followed by a majority vote across variants.
pub fn aggregate(hists: &[ShotHistogram], mode: AggregateMode, sharpen_factor: f64) -> Result<ShotHistogram> {
    let first = hists.first().ok_or_else(|| Error::NoData("no histograms to aggregate".into()))?;
    for h in hists {
        if h.n_qubits != first.n_qubits || h.basis != first.basis {
            return Err(Error::Validation("histograms differ in layout".into()));
        }
    }
    let mut sum = ShotHistogram::new(first.n_qubits, first.basis.clone());
    for h in hists {
        sum.merge(h)?;
    }
    if mode == AggregateMode::Average {
        return Ok(sum);
    }
    if hists.len() < 3 {
        return Err(Error::Validation("sharpening needs at least 3 variants".into()));
    }
    let floor_slots = ((1u128 << first.n_qubits) - 1) as f64;
    let mut votes: BTreeMap<u64, usize> = BTreeMap::new();
    for h in hists {
        let freqs = h.frequencies();
        let top = freqs.values().cloned().fold(0.0, f64::max);
        let floor = (1.0 - top) / floor_slots;
        for (&k, &f) in &freqs {
            if f > sharpen_factor * floor {
                *votes.entry(k).or_insert(0) += 1;
            }
        }
    }
    let needed = hists.len().div_ceil(2);
    let mut out = ShotHistogram::new(first.n_qubits, first.basis.clone());
    for (&k, &c) in &sum.counts {
        if votes.get(&k).copied().unwrap_or(0) >= needed {
            out.add(k, c);
        }
    }
    if out.is_empty() {
        return Err(Error::NoData("sharpening removed every outcome".into()));
    }
    Ok(out)
}

/// Provenance record written next to every noisy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub gamma: f64,
    pub shots: u64,
    pub seed: u64,
    pub variants: usize,
    pub mitigation: MitigationPlan,
    pub discard_fraction: Vec<f64>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::circuit_unitary;
    use crate::objective::unitary_fidelity;
    use crate::qstate::{rng_from_seed, sample_shots};

    fn bell_circuit() -> Circuit {
        let mut c = Circuit::new(2);
        c.push(Gate::fixed(GateKind::H, 0)).push(Gate::cnot(0, 1)).push(Gate::xx(0, 1, 0.7));
        c
    }

    #[test]
    fn fusion_preserves_the_unitary() {
        let mut c = Circuit::new(4);
        c.push(Gate::fixed(GateKind::H, 0))
            .push(Gate::cnot(0, 1))
            .push(Gate::xx(1, 2, 0.3))
            .push(Gate::ry(3, 0.2))
            .push(Gate::cnot(2, 3))
            .push(Gate::rx(0, 1.1));
        let compiled = CompiledCircuit::new(&c).unwrap();
        assert_eq!(compiled.n_noise_sites(), 3);
        assert!(compiled.n_blocks() >= 2);
        let mut rng = rng_from_seed(1);
        let psi = crate::qstate::haar_random_state(4, &mut rng).unwrap();
        let mut a = psi.clone();
        let mut b = psi;
        compiled.run(&mut a);
        c.apply_to(&mut b).unwrap();
        assert!(a.fidelity(&b).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn injected_error_matches_manual_insertion() {
        let c = bell_circuit();
        let compiled = CompiledCircuit::new(&c).unwrap();
        let mut manual = Circuit::new(2);
        manual.push(Gate::fixed(GateKind::H, 0)).push(Gate::cnot(0, 1));
        manual.push(Gate::fixed(GateKind::Y, 0)).push(Gate::fixed(GateKind::Z, 1));
        manual.push(Gate::xx(0, 1, 0.7));
        let mut a = StateVector::zero(2).unwrap();
        compiled.run_with_errors(&mut a, &[(0, 2 | (3 << 2))]).unwrap();
        let mut b = StateVector::zero(2).unwrap();
        manual.apply_to(&mut b).unwrap();
        assert!(a.fidelity(&b).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn zero_gamma_equals_noiseless_sampling() {
        let c = bell_circuit();
        let psi = StateVector::zero(2).unwrap();
        let basis = vec![Basis::Z; 2];
        let h = run_noisy(&c, &psi, &NoiseConfig { gamma: 0.0, seed: 0 }, 500, &basis, &mut rng_from_seed(3)).unwrap();
        let mut s = psi.clone();
        c.apply_to(&mut s).unwrap();
        let reference = sample_shots(&s, 500, &mut rng_from_seed(3)).unwrap();
        assert_eq!(h.counts, reference.counts);
    }

    #[test]
    fn full_depolarizing_randomizes_marginals() {
        let mut c = Circuit::new(2);
        c.push(Gate::xx(0, 1, 0.4));
        let psi = StateVector::zero(2).unwrap();
        let h = run_noisy(&c, &psi, &NoiseConfig { gamma: 1.0, seed: 0 }, 100_000, &[Basis::Z; 2], &mut rng_from_seed(8))
            .unwrap();
        let f = h.frequencies();
        for q in 0..2 {
            let z: f64 = f.iter().map(|(&k, &p)| if k >> q & 1 == 0 { p } else { -p }).sum();
            assert!(z.abs() < 0.02, "qubit {q}: {z}");
        }
        assert!(NoiseConfig { gamma: 1.5, seed: 0 }.validate().is_err());
    }

    #[test]
    fn step_histograms_have_requested_shots() {
        let c = bell_circuit();
        let psi = StateVector::zero(2).unwrap();
        let hs = run_noisy_steps(&c, &psi, 3, &NoiseRates::Uniform(0.2), 1001, 10, &[Basis::Z; 2], &mut rng_from_seed(2))
            .unwrap();
        assert_eq!(hs.len(), 3);
        assert!(hs.iter().all(|h| h.total() == 1001));
    }

    #[test]
    fn spin_filter_drops_flipped_shots() {
        let l = LatticeLayout::new(2).unwrap();
        let mut h = ShotHistogram::z_basis(6);
        h.add(0b000110, 30);
        h.add(0b000111, 10);
        let (kept, frac) = postselect_spin(&h, &l, 1, 1).unwrap();
        assert_eq!(kept.total(), 30);
        assert!((frac - 0.25).abs() < 1e-15);
        let mut bad = ShotHistogram::z_basis(6);
        bad.add(0b000111, 3);
        assert!(matches!(postselect_spin(&bad, &l, 1, 1), Err(Error::NoData(_))));
    }

    #[test]
    fn charge_filter_rejects_single_bond_flip() {
        let l = LatticeLayout::new(4).unwrap();
        // sites: ↑ = 0b1100, ↓ = 0b0011; bonds in X read +−+− as 0,1,0,1
        let good: u64 = 0b1100 | (0b0011 << 4) | (0b1010 << 8);
        assert_eq!(charge_pattern(good, &l), vec![1; 4]);
        let flipped = good ^ (1 << l.bond(1));
        let pattern = charge_pattern(flipped, &l);
        assert_eq!(pattern.iter().filter(|&&q| q == -1).count(), 2);
        assert_eq!(pattern[1], -1);
        assert_eq!(pattern[2], -1);
        let mut h = ShotHistogram::new(12, bond_x_basis(&l));
        h.add(good, 5);
        h.add(flipped, 5);
        let (kept, frac) = postselect_charge(&h, &l, &initial_charge_pattern(&l)).unwrap();
        assert_eq!(kept.total(), 5);
        assert_eq!(frac, 0.5);
        assert!(postselect_charge(&ShotHistogram::z_basis(12), &l, &[1; 4]).is_err());
    }

    #[test]
    fn variants_are_equivalent_up_to_phase_and_placement() {
        let mut c = Circuit::new(3);
        c.push(Gate::fixed(GateKind::H, 0))
            .push(Gate::cnot(0, 2))
            .push(Gate::xx(1, 2, 0.9))
            .push(Gate::ry(1, 0.3))
            .push(Gate::cnot(2, 1));
        let mut rng = rng_from_seed(12);
        let u = circuit_unitary(&c, &[]).unwrap();
        for v in debias_variants(&c, 8, DebiasOptions { twirl: true, relabel: false }, &mut rng).unwrap() {
            let w = circuit_unitary(&v.circuit, &[]).unwrap();
            assert!((unitary_fidelity(&u, &w).unwrap() - 1.0).abs() < 1e-12);
        }
        let psi = crate::qstate::haar_random_state(3, &mut rng).unwrap();
        let mut reference = psi.clone();
        c.apply_to(&mut reference).unwrap();
        for v in debias_variants(&c, 8, DebiasOptions::default(), &mut rng).unwrap() {
            let mut s = v.place_state(&psi).unwrap();
            v.circuit.apply_to(&mut s).unwrap();
            let back: Vec<_> = (0..8u64).map(|i| s.amplitudes()[v.to_physical(i) as usize]).collect();
            let back = StateVector::from_amplitudes(back).unwrap();
            assert!(back.fidelity(&reference).unwrap() > 1.0 - 1e-12);
        }
        let plain = debias_variants(&c, 1, DebiasOptions { twirl: false, relabel: false }, &mut rng).unwrap();
        assert_eq!(plain[0].circuit, c);
    }

    fn one_hot_with_floor(n: usize, k: u64, eps: f64, scale: f64) -> ShotHistogram {
        let mut h = ShotHistogram::z_basis(n);
        let slots = ((1u64 << n) - 1) as f64;
        for x in 0..(1u64 << n) {
            let p = if x == k { 1.0 - eps } else { eps / slots };
            h.add(x, (p * scale).round() as u64);
        }
        h
    }

    #[test]
    fn sharpen_recovers_one_hot() {
        for &eps in &[0.0, 0.1, 0.3] {
            let hs: Vec<_> = (0..4).map(|_| one_hot_with_floor(3, 5, eps, 7000.0)).collect();
            let out = aggregate(&hs, AggregateMode::Sharpen, DEFAULT_SHARPEN_FACTOR).unwrap();
            assert_eq!(out.counts.keys().copied().collect::<Vec<_>>(), vec![5]);
        }
        let two = vec![one_hot_with_floor(3, 5, 0.1, 700.0); 2];
        assert!(aggregate(&two, AggregateMode::Sharpen, 3.0).is_err());
    }

    #[test]
    fn average_of_distinct_one_hots_is_uniform() {
        let hs: Vec<_> = (0..4u64)
            .map(|k| {
                let mut h = ShotHistogram::z_basis(2);
                h.add(k, 100);
                h
            })
            .collect();
        let out = aggregate(&hs, AggregateMode::Average, 3.0).unwrap();
        assert!(out.frequencies().values().all(|&p| (p - 0.25).abs() < 1e-15));
        let same = aggregate(&hs[..1], AggregateMode::Average, 3.0).unwrap();
        assert_eq!(same, hs[0]);
        assert!(aggregate(&[], AggregateMode::Average, 3.0).is_err());
    }

    #[test]
    fn mitigation_plan_validation() {
        assert!(MitigationPlan::default().validate().is_ok());
        let bad = MitigationPlan { sharpen: true, variants: 2, ..MitigationPlan::default() };
        assert!(bad.validate().is_err());
    }
}
