//! Dense statevector engine: gate application, partial traces, entropies and
//! measurement sampling.
//!
//! Qubit 0 is the least significant bit of a basis index. A gate matrix of
//! dimension `2^k` acting on `targets` uses local index bit `m` for
//! `targets[m]`.

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 26;

const NORM_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!("basis index {index} outside dimension {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the vector must already be normalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Validation(format!("amplitude length {dim} is not 2^n with n >= 1")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_register(n_qubits)?;
        let state = StateVector { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state norm {norm} differs from 1")));
        }
        Ok(state)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize a zero or non-finite vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Validation("inner product of states with different qubit counts".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Validated gate application.
    pub fn apply_gate(&mut self, matrix: &CMatrix, targets: &[usize]) -> Result<()> {
        let kernel = GateKernel::new(matrix, targets, self.n_qubits)?;
        self.apply_kernel(&kernel);
        Ok(())
    }

    /// Applies a prepared kernel. The kernel must have been built for this
    /// register size.
    pub fn apply_kernel(&mut self, kernel: &GateKernel) {
        debug_assert!(kernel.max_target < self.n_qubits);
        kernel.apply_slice(&mut self.amps);
    }

    /// Applies a diagonal phase `phase(index)` to every amplitude.
    pub fn apply_diagonal(&mut self, phase: impl Fn(usize) -> C64) {
        for (idx, a) in self.amps.iter_mut().enumerate() {
            *a *= phase(idx);
        }
    }

    /// Partial trace keeping the listed qubits (in ascending order).
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() || keep.len() >= self.n_qubits {
            return Err(Error::Validation(format!(
                "kept subsystem must be a nonempty proper subset of {} qubits",
                self.n_qubits
            )));
        }
        if let Some(&q) = keep.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Index(format!("qubit {q} out of range")));
        }
        let k = keep.len();
        let env: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let kdim = 1usize << k;
        let edim = 1usize << env.len();
        let scatter = |bits: usize, qubits: &[usize]| -> usize {
            qubits.iter().enumerate().fold(0, |acc, (m, &q)| acc | (((bits >> m) & 1) << q))
        };
        let keep_off: Vec<usize> = (0..kdim).map(|l| scatter(l, &keep)).collect();
        let mut rho = CMatrix::zeros(kdim, kdim);
        for e in 0..edim {
            let base = scatter(e, &env);
            for i in 0..kdim {
                let ai = self.amps[base | keep_off[i]];
                if ai == ZERO {
                    continue;
                }
                for j in 0..kdim {
                    rho[(i, j)] += ai * self.amps[base | keep_off[j]].conj();
                }
            }
        }
        DensityMatrix::new(rho)
    }

    /// `⟨ψ|O|ψ⟩` for an operator on `targets`.
    pub fn expectation(&self, op: &CMatrix, targets: &[usize]) -> Result<C64> {
        let mut tmp = self.clone();
        let kernel = GateKernel::new_unchecked(op, targets, self.n_qubits)?;
        tmp.apply_kernel(&kernel);
        self.inner(&tmp)
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::Validation("a register needs at least one qubit".into()));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::Capacity(format!("{n_qubits} qubits exceeds the dense limit {MAX_QUBITS}")));
    }
    Ok(())
}

/// A gate matrix prepared for repeated application to one register size.
#[derive(Debug, Clone)]
pub struct GateKernel {
    sorted_targets: Vec<usize>,
    offsets: Vec<usize>,
    k: usize,
    max_target: usize,
    n_qubits: usize,
    // (row, col, value) of every entry whose magnitude is above rounding level
    entries: Vec<(usize, usize, C64)>,
    dense: Vec<C64>,
    sparse: bool,
}

impl GateKernel {
    pub fn new(matrix: &CMatrix, targets: &[usize], n_qubits: usize) -> Result<Self> {
        let kernel = Self::new_unchecked(matrix, targets, n_qubits)?;
        let defect = linalg::unitarity_defect(matrix);
        if defect > UNITARY_TOL {
            return Err(Error::Validation(format!("gate matrix is not unitary (defect {defect:.3e})")));
        }
        Ok(kernel)
    }

    /// Builds a kernel without the unitarity check (used for observables and
    /// for matrices that are unitary by construction).
    pub fn new_unchecked(matrix: &CMatrix, targets: &[usize], n_qubits: usize) -> Result<Self> {
        let k = targets.len();
        if k == 0 || k > 3 {
            return Err(Error::Validation(format!("gates act on 1 to 3 qubits, got {k}")));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= n_qubits {
                return Err(Error::Index(format!("target {t} out of range for {n_qubits} qubits")));
            }
            if targets[..i].contains(&t) {
                return Err(Error::Index(format!("duplicate target {t}")));
            }
        }
        let dim = 1usize << k;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let offsets = (0..dim)
            .map(|l| targets.iter().enumerate().fold(0, |acc, (m, &t)| acc | (((l >> m) & 1) << t)))
            .collect();
        let mut sorted_targets = targets.to_vec();
        sorted_targets.sort_unstable();
        let mut entries = Vec::new();
        let mut dense = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = matrix[(r, c)];
                dense.push(v);
                if v.norm() > 1e-15 {
                    entries.push((r, c, v));
                }
            }
        }
        let sparse = entries.len() * 2 <= dim * dim;
        Ok(GateKernel {
            max_target: *sorted_targets.last().unwrap(),
            sorted_targets,
            offsets,
            k,
            n_qubits,
            entries,
            dense,
            sparse,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub(crate) fn apply_slice(&self, amps: &mut [C64]) {
        match self.k {
            1 => self.apply_fixed::<2>(amps),
            2 => self.apply_fixed::<4>(amps),
            _ => self.apply_fixed::<8>(amps),
        }
    }

    fn apply_fixed<const D: usize>(&self, amps: &mut [C64]) {
        let mut offs = [0usize; D];
        offs.copy_from_slice(&self.offsets);
        let mut nnz = [0usize; D];
        let mut cols = [[0usize; D]; D];
        let mut vals = [[ZERO; D]; D];
        // column-major real and imaginary parts for the dense path
        let mut mre = [[0.0f64; D]; D];
        let mut mim = [[0.0f64; D]; D];
        for r in 0..D {
            for c in 0..D {
                mre[c][r] = self.dense[r * D + c].re;
                mim[c][r] = self.dense[r * D + c].im;
            }
        }
        for &(r, c, v) in &self.entries {
            cols[r][nnz[r]] = c;
            vals[r][nnz[r]] = v;
            nnz[r] += 1;
        }
        let t0 = self.sorted_targets[0];
        let low = 1usize << t0;
        let outer = (amps.len() >> self.k) >> t0;
        for go in 0..outer {
            let mut base = go << t0;
            for &t in &self.sorted_targets {
                base = (base & ((1 << t) - 1)) | ((base >> t) << (t + 1));
            }
            for b in base..base + low {
                let mut v = [ZERO; D];
                for l in 0..D {
                    v[l] = amps[b + offs[l]];
                }
                if self.sparse {
                    for r in 0..D {
                        let mut acc = ZERO;
                        for e in 0..nnz[r] {
                            acc += vals[r][e] * v[cols[r][e]];
                        }
                        amps[b + offs[r]] = acc;
                    }
                } else {
                    let mut acc_re = [0.0f64; D];
                    let mut acc_im = [0.0f64; D];
                    for c in 0..D {
                        let (vr, vi) = (v[c].re, v[c].im);
                        for r in 0..D {
                            acc_re[r] += mre[c][r] * vr - mim[c][r] * vi;
                            acc_im[r] += mre[c][r] * vi + mim[c][r] * vr;
                        }
                    }
                    for r in 0..D {
                        amps[b + offs[r]] = C64::new(acc_re[r], acc_im[r]);
                    }
                }
            }
        }
    }
}

/// Haar-random pure state: i.i.d. complex-normal amplitudes, normalized.
pub fn haar_random_state(n_qubits: usize, rng: &mut Rng) -> Result<StateVector> {
    check_register(n_qubits)?;
    let dim = 1usize << n_qubits;
    let amps = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    StateVector::normalized(amps)
}

/// Product of independent Haar-random single-qubit states.
pub fn random_product_state(n_qubits: usize, rng: &mut Rng) -> Result<StateVector> {
    check_register(n_qubits)?;
    let mut amps = vec![C64::new(1.0, 0.0)];
    for _ in 0..n_qubits {
        let q = haar_random_state(1, rng)?;
        let (a0, a1) = (q.amps[0], q.amps[1]);
        let mut next = Vec::with_capacity(amps.len() * 2);
        next.extend(amps.iter().map(|a| a * a0));
        next.extend(amps.iter().map(|a| a * a1));
        amps = next;
    }
    StateVector::normalized(amps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(Error::Validation("density matrix must be square and nonempty".into()));
        }
        let herm = linalg::hermiticity_defect(&entries);
        if herm > NORM_TOL {
            return Err(Error::Validation(format!("density matrix not Hermitian (defect {herm:.3e})")));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::Validation(format!("density matrix trace {tr} differs from 1")));
        }
        let rho = DensityMatrix { entries };
        if let Some(&min) = rho.eigenvalues().first() {
            if min < -NORM_TOL {
                return Err(Error::Validation(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.entries).0
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.entries, &self.entries).re
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let herm = linalg::hermiticity_defect(rho.entries());
    if herm > NORM_TOL {
        return Err(Error::Validation(format!("density matrix not Hermitian (defect {herm:.3e})")));
    }
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l >= 1e-12)
        .map(|l| -l * l.log2())
        .sum();
    Ok(s.max(0.0))
}

/// Measurement basis recorded per qubit in a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// Outcome counts keyed by basis index (qubit 0 = least significant bit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotHistogram {
    pub n_qubits: usize,
    pub basis: Vec<Basis>,
    pub counts: BTreeMap<u64, u64>,
}

impl ShotHistogram {
    pub fn new(n_qubits: usize, basis: Vec<Basis>) -> Self {
        ShotHistogram { n_qubits, basis, counts: BTreeMap::new() }
    }

    pub fn z_basis(n_qubits: usize) -> Self {
        Self::new(n_qubits, vec![Basis::Z; n_qubits])
    }

    pub fn add(&mut self, outcome: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(outcome).or_insert(0) += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Empirical probabilities.
    pub fn frequencies(&self) -> BTreeMap<u64, f64> {
        let total = self.total() as f64;
        self.counts.iter().map(|(&k, &c)| (k, c as f64 / total)).collect()
    }

    /// Bitstring with qubit `n-1` leftmost.
    pub fn bitstring(&self, outcome: u64) -> String {
        (0..self.n_qubits).rev().map(|q| if (outcome >> q) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn parse_bitstring(s: &str) -> Result<u64> {
        if s.is_empty() || s.len() > 64 {
            return Err(Error::Validation(format!("bad bitstring length {}", s.len())));
        }
        s.chars().try_fold(0u64, |acc, ch| match ch {
            '0' => Ok(acc << 1),
            '1' => Ok((acc << 1) | 1),
            _ => Err(Error::Validation(format!("bad bitstring character {ch:?}"))),
        })
    }

    /// Merges counts from a histogram with the same layout.
    pub fn merge(&mut self, other: &ShotHistogram) -> Result<()> {
        if other.n_qubits != self.n_qubits || other.basis != self.basis {
            return Err(Error::Validation("cannot merge histograms with different layouts".into()));
        }
        for (&k, &c) in &other.counts {
            self.add(k, c);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&HistogramJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: HistogramJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// Total-variation distance between two probability maps.
pub fn total_variation(p: &BTreeMap<u64, f64>, q: &BTreeMap<u64, f64>) -> f64 {
    let mut keys: Vec<&u64> = p.keys().chain(q.keys()).collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    n_qubits: usize,
    basis: Vec<Basis>,
    counts: BTreeMap<String, u64>,
}

impl From<&ShotHistogram> for HistogramJson {
    fn from(h: &ShotHistogram) -> Self {
        HistogramJson {
            n_qubits: h.n_qubits,
            basis: h.basis.clone(),
            counts: h.counts.iter().map(|(&k, &c)| (h.bitstring(k), c)).collect(),
        }
    }
}

impl TryFrom<HistogramJson> for ShotHistogram {
    type Error = Error;

    fn try_from(raw: HistogramJson) -> Result<Self> {
        if raw.basis.len() != raw.n_qubits {
            return Err(Error::Validation("basis list length differs from n_qubits".into()));
        }
        let mut h = ShotHistogram::new(raw.n_qubits, raw.basis);
        for (bits, c) in raw.counts {
            if bits.len() != raw.n_qubits {
                return Err(Error::Validation(format!("bitstring {bits} has wrong length")));
            }
            h.add(ShotHistogram::parse_bitstring(&bits)?, c);
        }
        Ok(h)
    }
}

/// Draws `shots` outcomes from a probability vector (indices are outcomes).
pub fn sample_from_probabilities(probs: &[f64], shots: u64, rng: &mut Rng) -> Result<BTreeMap<u64, u64>> {
    if shots == 0 {
        return Err(Error::Validation("shots must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let r = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= r).min(probs.len() - 1);
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Computational-basis measurement of every qubit.
pub fn sample_shots(state: &StateVector, shots: u64, rng: &mut Rng) -> Result<ShotHistogram> {
    let counts = sample_from_probabilities(&state.probabilities(), shots, rng)?;
    let mut h = ShotHistogram::z_basis(state.n_qubits());
    h.counts = counts;
    Ok(h)
}
