//! Compilation pipelines for the gbo and vne subcircuits, and the JSON
//! artifacts they leave behind.

use serde::{Deserialize, Serialize};

use crate::ansatz::{bond_family, full_family, hopping_ansatz, single_xx_family, spread_full_family};
use crate::gateset::Circuit;
use crate::lgtmodel::{
    build_trotter_step, direct_b_circuit, direct_c_circuit, initial_state, magnetization_correlator, target_unitary_b,
    target_unitary_c, CompiledSubcircuits, LatticeLayout, TrotterConfig, Variant,
};
use crate::noiselab::{
    aggregate, bond_x_basis, debias_variants, initial_charge_pattern, postselect_charge, postselect_spin,
    run_noisy_steps, AggregateMode, DebiasOptions, DebiasVariant, MitigationPlan, NoiseRates,
};
use crate::linalg::CMatrix;
use crate::objective::{state_infidelity_check, ObjectiveHandle};
use crate::optimizers::{run_trials, IpgSchedule, OptimizerSpec, TrialRecord, TrialSet};
use crate::qstate::{rng_from_seed, Basis, ShotHistogram};
use crate::vne::{
    compress_by_pinning, depth_scan, entropy_profile_target, prune_identity_gates, DepthScan, InputEnsemble, PinOptions,
    PinStep, RemovedGate, DEFAULT_IDENTITY_TOL,
};
use crate::{Error, Result};

pub const CONVERGENCE_THRESHOLD: f64 = 1e-6;

/// A reduced template, its converged angles, and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCompilation {
    pub template: Circuit,
    pub params: Vec<f64>,
    pub cost: f64,
    pub pins: Vec<PinStep>,
    pub removed: Vec<RemovedGate>,
}

impl BlockCompilation {
    pub fn bound(&self) -> Result<Circuit> {
        self.template.bind(&self.params)
    }

    pub fn two_qubit_gates(&self) -> usize {
        self.template.two_qubit_count()
    }
}

fn ipg() -> OptimizerSpec {
    OptimizerSpec::Ipg(IpgSchedule::default())
}

fn converged(set: &TrialSet, threshold: f64) -> Vec<&TrialRecord> {
    let mut ok: Vec<&TrialRecord> = set.records.iter().filter(|r| r.final_cost() <= threshold).collect();
    ok.sort_by(|a, b| a.final_cost().total_cmp(&b.final_cost()).then(a.trial.cmp(&b.trial)));
    ok
}

fn smaller(a: &BlockCompilation, b: &BlockCompilation) -> bool {
    (a.two_qubit_gates(), a.params.len()) < (b.two_qubit_gates(), b.params.len())
}

/// Pins, then prunes, starting from converged angles of `template`.
pub fn compress_block(target: &CMatrix, template: &Circuit, x: &[f64], pin: &PinOptions) -> Result<BlockCompilation> {
    let rep = compress_by_pinning(target, template, x, pin)?;
    let pruned = prune_identity_gates(template, &rep.params, target, DEFAULT_IDENTITY_TOL)?;
    let h = ObjectiveHandle::new(target.clone(), pruned.circuit.clone())?;
    let cost = h.cost(&pruned.params)?;
    Ok(BlockCompilation { template: pruned.circuit, params: pruned.params, cost, pins: rep.steps, removed: pruned.removed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GboSettings {
    pub trials: usize,
    pub iterations: usize,
    pub threshold: f64,
    /// Two-qubit gates driven to identity after convergence.
    pub two_qubit_pins: usize,
    pub seed: u64,
}

impl Default for GboSettings {
    fn default() -> Self {
        GboSettings { trials: 3, iterations: 128, threshold: CONVERGENCE_THRESHOLD, two_qubit_pins: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GboCompilation {
    pub trials: TrialSet,
    pub c: BlockCompilation,
}

/// Optimizes the 30-parameter hopping template with IPG and removes
/// `two_qubit_pins` entanglers; the bond block stays direct.
pub fn compile_gbo(j: f64, dt: f64, s: &GboSettings) -> Result<GboCompilation> {
    let target = target_unitary_c(j, dt);
    let template = hopping_ansatz();
    let h = ObjectiveHandle::new(target.clone(), template.clone())?;
    let trials = run_trials(&ipg(), &h, s.trials, s.iterations, s.seed)?;
    let best = trials.best_record();
    if best.final_cost() > s.threshold {
        return Err(Error::Convergence(format!(
            "best of {} IPG trials reached cost {:.3e}, above {:.1e}",
            s.trials,
            best.final_cost(),
            s.threshold
        )));
    }
    let pin = PinOptions { max_two_qubit_pins: s.two_qubit_pins, pin_single_qubit: false, seed: s.seed, ..PinOptions::default() };
    let c = compress_block(&target, &template, &best.x, &pin)?;
    Ok(GboCompilation { trials, c })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VneSettings {
    pub l_max: usize,
    pub samples: usize,
    pub slack: f64,
    pub inputs: InputEnsemble,
    /// IPG trials per depth.
    pub trials: usize,
    pub iterations: usize,
    pub threshold: f64,
    /// Converged solutions per depth fed to compression; the smallest
    /// result wins.
    pub compress_starts: usize,
    /// Depths beyond the first converging one that are also compressed.
    pub depth_margin: usize,
    pub bond_layers: usize,
    pub pin: PinOptions,
    pub seed: u64,
}

impl Default for VneSettings {
    fn default() -> Self {
        VneSettings {
            l_max: 5,
            samples: crate::vne::DEFAULT_SAMPLES,
            slack: crate::vne::DEFAULT_SLACK,
            inputs: InputEnsemble::Product,
            trials: 16,
            iterations: 128,
            threshold: CONVERGENCE_THRESHOLD,
            compress_starts: 6,
            depth_margin: 1,
            bond_layers: 1,
            pin: PinOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VneCompilation {
    pub scan: DepthScan,
    pub entropy_depth: usize,
    pub gbo_depth: usize,
    pub c: BlockCompilation,
    pub b: BlockCompilation,
    /// `(layers, two-qubit gates, parameters)` of every compression attempt.
    pub attempts: Vec<(usize, usize, usize)>,
}

/// Entropy scan of the hopping family against `Ĉ`, without optimization.
pub fn vne_scan(j: f64, dt: f64, s: &VneSettings) -> Result<DepthScan> {
    let mut rng = rng_from_seed(s.seed);
    let target = entropy_profile_target(&target_unitary_c(j, dt), s.samples, s.inputs, &mut rng)?;
    depth_scan(full_family, &target, s.l_max, s.slack, s.inputs, &mut rng)
}

/// Entropy scan, optimization from the predicted depth upward, then
/// compression of both blocks.
pub fn compile_vne(j: f64, u: f64, dt: f64, s: &VneSettings) -> Result<VneCompilation> {
    let scan = vne_scan(j, dt, s)?;
    let entropy_depth = scan.min_depth().ok_or(Error::Exhausted { l_max: s.l_max })?;
    let target = target_unitary_c(j, dt);

    // Compression runs on the first converging depth and `depth_margin`
    // deeper ones, each solution rewritten with a rotation layer between
    // every pair of entanglers.
    let mut gbo_depth: Option<usize> = None;
    let mut best: Option<BlockCompilation> = None;
    let mut attempts = Vec::new();
    for l in entropy_depth..=s.l_max {
        if gbo_depth.is_some_and(|g| l > g + s.depth_margin) {
            break;
        }
        let template = full_family(l);
        let h = ObjectiveHandle::new(target.clone(), template.clone())?;
        let set = run_trials(&ipg(), &h, s.trials, s.iterations, s.seed.wrapping_add(l as u64))?;
        let ok = converged(&set, s.threshold);
        if ok.is_empty() {
            continue;
        }
        gbo_depth.get_or_insert(l);
        let spread = single_xx_family(3 * l);
        for (i, rec) in ok.into_iter().take(s.compress_starts).enumerate() {
            let pin = PinOptions { seed: s.seed.wrapping_add((l * 1000 + i) as u64), ..s.pin };
            let c = compress_block(&target, &spread, &spread_full_family(l, &rec.x), &pin)?;
            attempts.push((l, c.two_qubit_gates(), c.params.len()));
            if best.as_ref().is_none_or(|b| smaller(&c, b)) {
                best = Some(c);
            }
        }
    }
    let gbo_depth = gbo_depth.ok_or_else(|| {
        Error::Convergence(format!("no depth in {entropy_depth}..={} converged below {:.1e}", s.l_max, s.threshold))
    })?;
    let c = best.expect("a converged depth was compressed");

    let b_target = target_unitary_b(u, dt);
    let b_template = bond_family(s.bond_layers);
    let hb = ObjectiveHandle::new(b_target.clone(), b_template.clone())?;
    let b_set = run_trials(&ipg(), &hb, s.trials, s.iterations, s.seed)?;
    let b_best = b_set.best_record();
    if b_best.final_cost() > s.threshold {
        return Err(Error::Convergence(format!("bond block reached cost {:.3e}", b_best.final_cost())));
    }
    let b_pin = PinOptions { restarts_single: s.pin.restarts_two_qubit, ..s.pin };
    let b = compress_block(&b_target, &b_template, &b_best.x, &b_pin)?;
    Ok(VneCompilation { scan, entropy_depth, gbo_depth, c, b, attempts })
}

/// A compiled block as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockArtifact {
    /// Template in circuit text form, `@k` marking free parameter `k`.
    pub template: String,
    pub params: Vec<f64>,
    pub cost: f64,
    pub two_qubit_gates: usize,
    /// Mean state infidelity against the direct block over random inputs.
    pub state_infidelity: f64,
    pub removed: Vec<RemovedGate>,
}

impl BlockArtifact {
    pub fn from_block(block: &BlockCompilation, reference: &Circuit, samples: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let state_infidelity = state_infidelity_check(&block.bound()?, reference, samples, &mut rng)?;
        Ok(BlockArtifact {
            template: block.template.to_text(),
            params: block.params.clone(),
            cost: block.cost,
            two_qubit_gates: block.two_qubit_gates(),
            state_infidelity,
            removed: block.removed.clone(),
        })
    }

    pub fn bound(&self) -> Result<Circuit> {
        Circuit::from_text(&self.template)?.bind(&self.params)
    }
}

/// Compiled subcircuits for one variant at fixed `J`, `U`, `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledArtifact {
    pub variant: Variant,
    pub j: f64,
    pub u: f64,
    pub dt: f64,
    pub seed: u64,
    pub c: BlockArtifact,
    pub b: Option<BlockArtifact>,
}

impl CompiledArtifact {
    pub fn file_name(variant: Variant) -> String {
        format!("compiled_{variant}.json")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Bound subcircuits, checked against the targets of `config`.
    pub fn subcircuits(&self, config: &TrotterConfig) -> Result<CompiledSubcircuits> {
        let tol = 1e-12;
        if (self.j - config.j).abs() > tol || (self.dt - config.dt).abs() > tol {
            return Err(Error::Validation(format!(
                "artifact compiled for J = {}, dt = {}, config has J = {}, dt = {}",
                self.j, self.dt, config.j, config.dt
            )));
        }
        if self.b.is_some() && (self.u - config.u).abs() > tol {
            return Err(Error::Validation(format!("artifact compiled for U = {}, config has U = {}", self.u, config.u)));
        }
        let comp = CompiledSubcircuits { c: self.c.bound()?, b: self.b.as_ref().map(|b| b.bound()).transpose()? };
        comp.verify(config)?;
        Ok(comp)
    }
}

pub fn gbo_artifact(j: f64, u: f64, dt: f64, comp: &GboCompilation, samples: usize, seed: u64) -> Result<CompiledArtifact> {
    Ok(CompiledArtifact {
        variant: Variant::Gbo,
        j,
        u,
        dt,
        seed,
        c: BlockArtifact::from_block(&comp.c, &direct_c_circuit(j, dt), samples, seed)?,
        b: None,
    })
}

pub fn vne_artifact(j: f64, u: f64, dt: f64, comp: &VneCompilation, samples: usize, seed: u64) -> Result<CompiledArtifact> {
    Ok(CompiledArtifact {
        variant: Variant::Vne,
        j,
        u,
        dt,
        seed,
        c: BlockArtifact::from_block(&comp.c, &direct_c_circuit(j, dt), samples, seed)?,
        b: Some(BlockArtifact::from_block(&comp.b, &direct_b_circuit(u, dt), samples, seed)?),
    })
}

/// Per-step outcome of one noisy run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEstimate {
    /// NaN when post-selection left no shots.
    pub chi: f64,
    pub discarded_frac: f64,
}

/// Noisy run settings shared by every (variant, γ, seed) job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyRun {
    pub shots: u64,
    pub shots_per_trajectory: u64,
    pub plan: MitigationPlan,
    pub debias: DebiasOptions,
}

/// Evolves the domain-wall state for `config.n_steps` noisy steps and returns
/// the mitigated correlator across the wall after each step.
pub fn simulate_chi(
    layout: &LatticeLayout,
    config: &TrotterConfig,
    compiled: Option<&CompiledSubcircuits>,
    rates: &NoiseRates,
    run: &NoisyRun,
    seed: u64,
) -> Result<Vec<StepEstimate>> {
    run.plan.validate()?;
    let step = build_trotter_step(layout, config, compiled)?;
    let initial = initial_state(layout)?;
    let logical_basis = if run.plan.charge_filter { bond_x_basis(layout) } else { vec![Basis::Z; layout.n_qubits()] };
    let mut rng = rng_from_seed(seed);
    let m = run.plan.variants;
    let variants =
        if m == 1 { vec![DebiasVariant::identity(step)] } else { debias_variants(&step, m, run.debias, &mut rng)? };
    if run.shots < m as u64 {
        return Err(Error::Validation(format!("{} shots cannot be split over {m} variants", run.shots)));
    }
    let n = config.n_steps;
    let mut per_step: Vec<Vec<ShotHistogram>> = vec![Vec::with_capacity(m); n];
    for (i, v) in variants.iter().enumerate() {
        let shots = run.shots / m as u64 + u64::from((i as u64) < run.shots % m as u64);
        // per-qubit rates belong to physical qubits
        let hists = run_noisy_steps(
            &v.circuit,
            &v.place_state(&initial)?,
            n,
            rates,
            shots,
            run.shots_per_trajectory,
            &v.physical_basis(&logical_basis),
            &mut rng,
        )?;
        for (k, h) in hists.iter().enumerate() {
            per_step[k].push(v.logical_histogram(h));
        }
    }
    let mode = if run.plan.sharpen { AggregateMode::Sharpen } else { AggregateMode::Average };
    let (n_up, n_down) = layout.expected_counts();
    let expected_q = initial_charge_pattern(layout);
    let wall = layout.domain_wall_site();
    per_step
        .iter()
        .map(|hs| {
            let total = hs.iter().map(|h| h.total()).sum::<u64>() as f64;
            let mut h = match aggregate(hs, mode, run.plan.sharpen_factor) {
                Ok(h) => h,
                Err(Error::NoData(_)) => return Ok(StepEstimate { chi: f64::NAN, discarded_frac: 1.0 }),
                Err(e) => return Err(e),
            };
            let filtered = (|| -> Result<ShotHistogram> {
                if run.plan.spin_filter {
                    h = postselect_spin(&h, layout, n_up, n_down)?.0;
                }
                if run.plan.charge_filter {
                    h = postselect_charge(&h, layout, &expected_q)?.0;
                }
                Ok(h.clone())
            })();
            match filtered {
                Ok(h) => Ok(StepEstimate {
                    chi: magnetization_correlator(&h, layout, wall)?,
                    discarded_frac: 1.0 - h.total() as f64 / total,
                }),
                Err(Error::NoData(_)) => Ok(StepEstimate { chi: f64::NAN, discarded_frac: 1.0 }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
