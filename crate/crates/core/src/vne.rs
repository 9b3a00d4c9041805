//! Entanglement-entropy expressibility test, minimal-depth search, and
//! identity-gate pruning.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gateset::{circuit_unitary, gate_matrix, Circuit, Gate};
use crate::linalg::CMatrix;
use crate::objective::unitary_fidelity;
use crate::qstate::{
    haar_random_state, random_product_state, rng_from_seed, von_neumann_entropy, Rng, StateVector,
};
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_SLACK: f64 = 0.02;
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-4;
pub const PRUNE_FIDELITY_FLOOR: f64 = 1.0 - 1e-5;

/// Distribution of the input states fed to the unitary under test.
///
/// A Haar-random input is invariant under any fixed unitary, so its output
/// entropies are the same for every circuit; products of random single-qubit
/// states make the comparison sensitive to the entanglement a circuit adds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputEnsemble {
    #[default]
    Product,
    Haar,
}

impl fmt::Display for InputEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputEnsemble::Product => "product",
            InputEnsemble::Haar => "haar",
        })
    }
}

impl FromStr for InputEnsemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "product" => Ok(InputEnsemble::Product),
            "haar" => Ok(InputEnsemble::Haar),
            other => Err(Error::Validation(format!("unknown input ensemble {other:?}"))),
        }
    }
}

impl InputEnsemble {
    fn draw(self, n: usize, rng: &mut Rng) -> Result<StateVector> {
        match self {
            InputEnsemble::Product => random_product_state(n, rng),
            InputEnsemble::Haar => haar_random_state(n, rng),
        }
    }
}

/// Nonempty proper subsets in canonical order: by size, then lexicographic.
pub fn canonical_subsets(n_qubits: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1..(1usize << n_qubits) - 1)
        .map(|mask| (0..n_qubits).filter(|q| mask >> q & 1 == 1).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Mean subsystem entropies (bits) per canonical subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub n_qubits: usize,
    pub subsets: Vec<Vec<usize>>,
    pub means: Vec<f64>,
    pub n_samples: usize,
}

impl EntropyProfile {
    pub fn get(&self, subset: &[usize]) -> Option<f64> {
        self.subsets.iter().position(|s| s == subset).map(|i| self.means[i])
    }

    pub fn subset_label(subset: &[usize]) -> String {
        let names: Vec<String> = subset.iter().map(|q| q.to_string()).collect();
        format!("{{{}}}", names.join(","))
    }
}

fn state_entropies(state: &StateVector, subsets: &[Vec<usize>]) -> Result<Vec<f64>> {
    subsets.iter().map(|s| von_neumann_entropy(&state.reduced_density(s)?)).collect()
}

fn profile_from<F>(n_qubits: usize, n_samples: usize, rng: &mut Rng, sample: F) -> Result<EntropyProfile>
where
    F: Fn(&mut Rng) -> Result<StateVector> + Sync,
{
    if n_samples == 0 {
        return Err(Error::Validation("entropy profile needs at least one sample".into()));
    }
    let subsets = canonical_subsets(n_qubits);
    let seeds: Vec<u64> = (0..n_samples).map(|_| rng.random()).collect();
    let rows: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| {
            let mut r = rng_from_seed(s);
            state_entropies(&sample(&mut r)?, &subsets)
        })
        .collect::<Result<_>>()?;
    let mut means = vec![0.0; subsets.len()];
    for row in &rows {
        means.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    means.iter_mut().for_each(|m| *m /= n_samples as f64);
    Ok(EntropyProfile { n_qubits, subsets, means, n_samples })
}

fn qubits_of(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::Validation(format!("matrix dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Profile of `u|φ⟩` over random inputs `|φ⟩`.
pub fn entropy_profile_target(
    u: &CMatrix,
    n_samples: usize,
    inputs: InputEnsemble,
    rng: &mut Rng,
) -> Result<EntropyProfile> {
    if u.nrows() != u.ncols() {
        return Err(Error::Validation("target must be square".into()));
    }
    let n = qubits_of(u.nrows())?;
    profile_from(n, n_samples, rng, |r| {
        let phi = inputs.draw(n, r)?;
        let amps = u * crate::linalg::CMatrix::from_column_slice(phi.dim(), 1, phi.amplitudes());
        StateVector::normalized(amps.as_slice().to_vec())
    })
}

/// Profile of the template over random inputs and parameters uniform in
/// `[0, 2π)`, both redrawn per sample.
pub fn entropy_profile_ansatz(
    ansatz: &Circuit,
    n_samples: usize,
    inputs: InputEnsemble,
    rng: &mut Rng,
) -> Result<EntropyProfile> {
    ansatz.validate()?;
    let n = ansatz.n_qubits;
    let d = ansatz.n_params();
    profile_from(n, n_samples, rng, |r| {
        let mut phi = inputs.draw(n, r)?;
        let x: Vec<f64> = (0..d).map(|_| r.random::<f64>() * std::f64::consts::TAU).collect();
        ansatz.bind(&x)?.apply_to(&mut phi)?;
        Ok(phi)
    })
}

/// True iff the ansatz mean is at least the target mean minus `slack` on
/// every subset.
pub fn expressibility_pass(ansatz: &EntropyProfile, target: &EntropyProfile, slack: f64) -> Result<bool> {
    if ansatz.subsets != target.subsets {
        return Err(Error::Validation("entropy profiles enumerate different subsets".into()));
    }
    Ok(ansatz.means.iter().zip(&target.means).all(|(a, t)| *a >= t - slack))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub layers: usize,
    pub n_params: usize,
    pub two_qubit_gates: usize,
    pub pass: bool,
    pub profile: EntropyProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    pub target: EntropyProfile,
    pub rows: Vec<DepthRow>,
    pub slack: f64,
}

impl DepthScan {
    pub fn min_depth(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.pass).map(|r| r.layers)
    }
}

/// Profiles `family(l)` for `l = 1..=l_max` and tabulates the verdicts.
pub fn depth_scan<F>(
    family: F,
    target: &EntropyProfile,
    l_max: usize,
    slack: f64,
    inputs: InputEnsemble,
    rng: &mut Rng,
) -> Result<DepthScan>
where
    F: Fn(usize) -> Circuit,
{
    if l_max == 0 {
        return Err(Error::Validation("l_max must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let c = family(l);
        let profile = entropy_profile_ansatz(&c, target.n_samples, inputs, rng)?;
        let pass = expressibility_pass(&profile, target, slack)?;
        rows.push(DepthRow { layers: l, n_params: c.n_params(), two_qubit_gates: c.two_qubit_count(), pass, profile });
    }
    Ok(DepthScan { target: target.clone(), rows, slack })
}

/// Smallest passing depth; `Exhausted` when none up to `l_max` passes. The
/// full table comes back alongside.
pub fn min_depth_search<F>(
    family: F,
    target: &EntropyProfile,
    l_max: usize,
    slack: f64,
    inputs: InputEnsemble,
    rng: &mut Rng,
) -> Result<(usize, DepthScan)>
where
    F: Fn(usize) -> Circuit,
{
    let scan = depth_scan(family, target, l_max, slack, inputs, rng)?;
    match scan.min_depth() {
        Some(l) => Ok((l, scan)),
        None => Err(Error::Exhausted { l_max }),
    }
}

pub const DEPTH_CSV_HEADER: &str = "layers,n_params,two_qubit_gates,subset,ansatz_mean,target_mean,pass";

pub fn write_depth_csv<W: Write>(out: &mut W, scan: &DepthScan) -> Result<()> {
    writeln!(out, "{DEPTH_CSV_HEADER}")?;
    for r in &scan.rows {
        for (i, s) in r.profile.subsets.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},\"{}\",{:.6},{:.6},{}",
                r.layers,
                r.n_params,
                r.two_qubit_gates,
                EntropyProfile::subset_label(s),
                r.profile.means[i],
                scan.target.means[i],
                r.pass
            )?;
        }
    }
    Ok(())
}

/// `1 − |Tr G| / 2^k` for a gate on `k` qubits.
pub fn identity_defect(gate: &Gate) -> Result<f64> {
    let m = gate_matrix(gate)?;
    Ok(1.0 - m.trace().norm() / m.nrows() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedGate {
    /// Position in the input circuit.
    pub position: usize,
    pub kind: String,
    pub targets: Vec<usize>,
    pub angle: Option<f64>,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport {
    pub circuit: Circuit,
    pub params: Vec<f64>,
    pub removed: Vec<RemovedGate>,
    /// Candidates put back because dropping them broke the fidelity floor.
    pub restored: Vec<usize>,
    pub fidelity: f64,
}

/// Copy of `circuit` without the gates in `drop`; free parameters are
/// renumbered densely in order of first use.
fn without(circuit: &Circuit, params: &[f64], drop: &[usize]) -> (Circuit, Vec<f64>) {
    let mut out = Circuit::new(circuit.n_qubits);
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    for (pos, g) in circuit.gates.iter().enumerate() {
        if drop.contains(&pos) {
            continue;
        }
        match circuit.param_slots.get(&pos) {
            Some(&p) => {
                let next = remap.len();
                let idx = *remap.entry(p).or_insert_with(|| {
                    kept.push(params[p]);
                    next
                });
                out.push_param(g.clone(), idx);
            }
            None => {
                out.push(g.clone());
            }
        }
    }
    (out, kept)
}

/// Removes every gate within `tol` of identity up to phase, checking after
/// each removal that the fidelity with `target` stays at or above
/// [`PRUNE_FIDELITY_FLOOR`]; a removal that breaks it is undone.
pub fn prune_identity_gates(circuit: &Circuit, params: &[f64], target: &CMatrix, tol: f64) -> Result<PruneReport> {
    circuit.validate()?;
    let bound = circuit.bind(params)?;
    let fid = |c: &Circuit, x: &[f64]| -> Result<f64> { unitary_fidelity(target, &circuit_unitary(c, x)?) };
    let start = fid(circuit, params)?;
    if start < PRUNE_FIDELITY_FLOOR {
        return Err(Error::Validation(format!(
            "circuit fidelity {start:.3e} below the pruning floor before any removal"
        )));
    }
    let mut dropped: Vec<usize> = Vec::new();
    let mut removed = Vec::new();
    let mut restored = Vec::new();
    let mut fidelity = start;
    for (pos, g) in bound.gates.iter().enumerate() {
        let defect = identity_defect(g)?;
        if defect > tol {
            continue;
        }
        dropped.push(pos);
        let (c, x) = without(circuit, params, &dropped);
        let f = fid(&c, &x)?;
        if f >= PRUNE_FIDELITY_FLOOR {
            fidelity = f;
            removed.push(RemovedGate {
                position: pos,
                kind: g.kind.name().to_string(),
                targets: g.targets.clone(),
                angle: g.angle(),
                defect,
            });
        } else {
            dropped.pop();
            restored.push(pos);
        }
    }
    let (circuit, params) = without(circuit, params, &dropped);
    Ok(PruneReport { circuit, params, removed, restored, fidelity })
}

pub const PRUNE_CSV_HEADER: &str = "position,kind,targets,angle,defect";

pub fn write_prune_csv<W: Write>(out: &mut W, removed: &[RemovedGate]) -> Result<()> {
    writeln!(out, "{PRUNE_CSV_HEADER}")?;
    for r in removed {
        let targets: Vec<String> = r.targets.iter().map(|t| t.to_string()).collect();
        let angle = r.angle.map_or(String::new(), |a| format!("{a:.12}"));
        writeln!(out, "{},{},{},{},{:.3e}", r.position, r.kind, targets.join(" "), angle, r.defect)?;
    }
    Ok(())
}

/// Settings for [`compress_by_pinning`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinOptions {
    /// Cost a reduced template must reach to accept a pin.
    pub cost_tol: f64,
    /// Random restarts tried after the warm start fails, for two-qubit and
    /// single-qubit pins.
    pub restarts_two_qubit: usize,
    pub restarts_single: usize,
    pub max_iters: usize,
    /// Upper bound on accepted two-qubit pins.
    pub max_two_qubit_pins: usize,
    pub pin_single_qubit: bool,
    pub seed: u64,
}

impl Default for PinOptions {
    fn default() -> Self {
        PinOptions { cost_tol: 1e-9, restarts_two_qubit: 32, restarts_single: 0, max_iters: 300, max_two_qubit_pins: usize::MAX, pin_single_qubit: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinStep {
    pub position: usize,
    pub kind: String,
    pub two_qubit: bool,
    pub restarts_used: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinReport {
    /// Input template with the pinned angles set to zero.
    pub params: Vec<f64>,
    pub pinned: Vec<usize>,
    pub steps: Vec<PinStep>,
    pub cost: f64,
}

fn fold_angle(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::TAU);
    r.min(std::f64::consts::TAU - r)
}

/// Greedy compression: repeatedly pins one free angle to zero (turning its
/// gate into identity) and re-optimizes the rest, keeping the pin whenever
/// the reduced template still reaches `cost_tol`. Two-qubit gates go first;
/// within a pass, angles closest to identity are tried first.
pub fn compress_by_pinning(target: &CMatrix, circuit: &Circuit, params: &[f64], opts: &PinOptions) -> Result<PinReport> {
    use crate::objective::ObjectiveHandle;
    use crate::optimizers::{lbfgs_minimize, uniform_start, LbfgsParams};

    circuit.validate()?;
    let d = circuit.n_params();
    if params.len() != d {
        return Err(Error::Validation(format!("expected {d} parameters, got {}", params.len())));
    }
    let slot_users = |p: usize| circuit.param_slots.values().filter(|&&q| q == p).count();
    let mut full = params.to_vec();
    let mut pinned: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut cost = ObjectiveHandle::new(target.clone(), circuit.clone())?.cost(&full)?;

    // reduced parameter index → full index
    let reduced_map = |c: &Circuit, drop: &[usize]| -> Vec<usize> {
        let mut seen = Vec::new();
        for (pos, _) in c.gates.iter().enumerate() {
            if drop.contains(&pos) {
                continue;
            }
            if let Some(&p) = c.param_slots.get(&pos) {
                if !seen.contains(&p) {
                    seen.push(p);
                }
            }
        }
        seen
    };

    for two in [true, false] {
        if !two && !opts.pin_single_qubit {
            continue;
        }
        loop {
            if two && steps.len() >= opts.max_two_qubit_pins {
                break;
            }
            let mut cands: Vec<(f64, usize)> = circuit
                .param_slots
                .iter()
                .filter(|(pos, p)| {
                    !pinned.contains(pos) && circuit.gates[**pos].is_two_qubit() == two && slot_users(**p) == 1
                })
                .map(|(&pos, &p)| (fold_angle(full[p]), pos))
                .collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut accepted = false;
            for &(_, pos) in &cands {
                let mut drop = pinned.clone();
                drop.push(pos);
                let (reduced, x0) = without(circuit, &full, &drop);
                let map = reduced_map(circuit, &drop);
                let h = ObjectiveHandle::new(target.clone(), reduced)?;
                let mut best = lbfgs_minimize(&h, &x0, opts.max_iters, &LbfgsParams::tight(20))?;
                let mut used = 0;
                let restarts = if two { opts.restarts_two_qubit } else { opts.restarts_single };
                if best.final_cost() > opts.cost_tol && restarts > 0 {
                    let base = opts.seed ^ ((pos as u64 + 1) << 32) ^ ((pinned.len() as u64) << 48);
                    let runs: Vec<(usize, Result<crate::optimizers::TrialRecord>)> = (0..restarts)
                        .into_par_iter()
                        .map(|k| {
                            let mut rng = rng_from_seed(base.wrapping_add(k as u64));
                            let x = uniform_start(x0.len(), &mut rng);
                            (k, lbfgs_minimize(&h, &x, opts.max_iters, &LbfgsParams::tight(20)))
                        })
                        .collect();
                    for (k, r) in runs {
                        let r = r?;
                        if r.final_cost() <= opts.cost_tol {
                            best = r;
                            used = k + 1;
                            break;
                        }
                    }
                }
                if best.final_cost() <= opts.cost_tol {
                    for (ri, &fi) in map.iter().enumerate() {
                        full[fi] = best.x[ri];
                    }
                    let p = circuit.param_slots[&pos];
                    full[p] = 0.0;
                    pinned.push(pos);
                    cost = best.final_cost();
                    steps.push(PinStep {
                        position: pos,
                        kind: circuit.gates[pos].kind.name().to_string(),
                        two_qubit: two,
                        restarts_used: used,
                        cost,
                    });
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                break;
            }
        }
    }
    pinned.sort_unstable();
    Ok(PinReport { params: full, pinned, steps, cost })
}
