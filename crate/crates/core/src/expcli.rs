//! Experiment driver behind the `lgt` binary: configuration files, the four
//! subcommands and their CSV/JSON outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::hopping_ansatz;
use crate::gateset::two_qubit_count;
use crate::lgtmodel::{
    build_trotter_step, correlator_from_probabilities, exact_evolution_oracle,
    initial_state, target_unitary_c, write_chi_csv, ChiRow, LatticeLayout, TrotterConfig, Variant, MAX_ORACLE_SITES,
};
use crate::noiselab::{measurement_probabilities, DebiasOptions, MitigationPlan, NoiseConfig, NoiseRates, RunManifest, DEFAULT_SHARPEN_FACTOR};
use crate::objective::ObjectiveHandle;
use crate::optimizers::{run_trials, write_cost_csv, write_matrix_csv, OptimizerSpec, TrialRecord};
use crate::pipeline::{
    compile_gbo, compile_vne, gbo_artifact, simulate_chi, vne_artifact, vne_scan, CompiledArtifact, GboSettings,
    NoisyRun, VneSettings, CONVERGENCE_THRESHOLD,
};
use crate::qstate::Basis;
use crate::vne::{write_depth_csv, write_prune_csv, InputEnsemble, PinOptions, DEFAULT_SAMPLES, DEFAULT_SLACK};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_sites")]
    pub sites: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
}

fn default_sites() -> usize {
    6
}
fn default_steps() -> usize {
    8
}
fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    pub optimizers: Vec<String>,
    pub trials: usize,
    /// Trials behind the stored gbo block; the comparison uses `trials`.
    pub compile_trials: usize,
    pub iterations: usize,
    pub threshold: f64,
    /// Entanglers removed from the 30-parameter solution for the gbo block.
    pub gbo_pins: usize,
    /// Random inputs for the stored state-infidelity check.
    pub verify_samples: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            optimizers: vec!["ipg".into(), "adam".into(), "lbfgs".into()],
            trials: 3,
            compile_trials: 64,
            iterations: 128,
            threshold: CONVERGENCE_THRESHOLD,
            gbo_pins: 1,
            verify_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VneSection {
    pub l_max: usize,
    pub samples: usize,
    pub slack: f64,
    pub inputs: InputEnsemble,
    pub trials: usize,
    pub compress_starts: usize,
    pub depth_margin: usize,
    pub restarts: usize,
}

impl Default for VneSection {
    fn default() -> Self {
        let s = VneSettings::default();
        VneSection {
            l_max: s.l_max,
            samples: DEFAULT_SAMPLES,
            slack: DEFAULT_SLACK,
            inputs: InputEnsemble::Product,
            trials: s.trials,
            compress_starts: s.compress_starts,
            depth_margin: s.depth_margin,
            restarts: s.pin.restarts_two_qubit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub gammas: Vec<f64>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_spt")]
    pub shots_per_trajectory: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_shots() -> u64 {
    1000
}
fn default_spt() -> u64 {
    10
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationSection {
    pub spin_filter: bool,
    pub charge_filter: bool,
    pub variants: usize,
    pub sharpen: bool,
    pub sharpen_factor: f64,
    pub twirl: bool,
    pub relabel: bool,
}

impl Default for MitigationSection {
    fn default() -> Self {
        MitigationSection {
            spin_filter: true,
            charge_filter: false,
            variants: 1,
            sharpen: false,
            sharpen_factor: DEFAULT_SHARPEN_FACTOR,
            twirl: true,
            relabel: true,
        }
    }
}

impl MitigationSection {
    pub fn plan(&self) -> MitigationPlan {
        MitigationPlan {
            spin_filter: self.spin_filter,
            charge_filter: self.charge_filter,
            variants: self.variants,
            sharpen: self.sharpen,
            sharpen_factor: self.sharpen_factor,
        }
    }

    pub fn debias(&self) -> DebiasOptions {
        DebiasOptions { twirl: self.twirl, relabel: self.relabel }
    }
}

/// One experiment, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub vne: VneSection,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub mitigation: MitigationSection,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
            Error::Parse { line, msg: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn layout(&self) -> Result<LatticeLayout> {
        LatticeLayout::new(self.model.sites)
    }

    pub fn trotter(&self, variant: Variant) -> TrotterConfig {
        TrotterConfig { j: self.model.j, u: self.model.u, dt: self.model.dt, n_steps: self.model.steps, variant }
    }

    pub fn optimizers(&self) -> Result<Vec<OptimizerSpec>> {
        self.optimize.optimizers.iter().map(|s| s.parse()).collect()
    }

    pub fn gbo_settings(&self, seed: u64) -> GboSettings {
        GboSettings {
            trials: self.optimize.compile_trials,
            iterations: self.optimize.iterations,
            threshold: self.optimize.threshold,
            two_qubit_pins: self.optimize.gbo_pins,
            seed,
        }
    }

    pub fn vne_settings(&self, seed: u64) -> VneSettings {
        let v = &self.vne;
        VneSettings {
            l_max: v.l_max,
            samples: v.samples,
            slack: v.slack,
            inputs: v.inputs,
            trials: v.trials,
            iterations: self.optimize.iterations,
            threshold: self.optimize.threshold,
            compress_starts: v.compress_starts,
            depth_margin: v.depth_margin,
            bond_layers: 1,
            pin: PinOptions { restarts_two_qubit: v.restarts, ..PinOptions::default() },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.layout()?;
        for v in Variant::ALL {
            self.trotter(v).validate()?;
        }
        let m = &self.model;
        if m.variants.is_empty() {
            return Err(invalid("model.variants is empty"));
        }
        self.optimizers()?;
        let o = &self.optimize;
        if o.optimizers.is_empty() || o.trials == 0 || o.compile_trials == 0 || o.iterations == 0 || o.verify_samples == 0 {
            return Err(invalid("optimize needs optimizers, trials, compile_trials, iterations and verify_samples above zero"));
        }
        if !(o.threshold > 0.0) {
            return Err(invalid("optimize.threshold must be positive"));
        }
        let v = &self.vne;
        if v.l_max == 0 || v.samples == 0 || v.trials == 0 || v.compress_starts == 0 {
            return Err(invalid("vne needs l_max, samples, trials and compress_starts above zero"));
        }
        if !(v.slack >= 0.0) {
            return Err(invalid("vne.slack must be non-negative"));
        }
        if let Some(n) = &self.noise {
            if n.gammas.is_empty() || n.seeds.is_empty() {
                return Err(invalid("noise needs at least one gamma and one seed"));
            }
            for &g in &n.gammas {
                NoiseConfig { gamma: g, seed: 0 }.validate()?;
            }
            if n.shots == 0 || n.shots_per_trajectory == 0 {
                return Err(invalid("noise.shots and noise.shots_per_trajectory must be positive"));
            }
            if n.shots < self.mitigation.variants as u64 {
                return Err(invalid("fewer shots than mitigation variants"));
            }
        }
        self.mitigation.plan().validate()
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Parse { .. } | Error::Index(_) | Error::Capacity(_) => 2,
        Error::Convergence(_) | Error::Divergence { .. } | Error::Exhausted { .. } => 3,
        Error::MissingArtifact(_) => 4,
        _ => 1,
    }
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

/// Where a command writes, with the master seed already resolved.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub config_path: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunContext {
    pub fn new(config: ExperimentConfig, out: &Path, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(config.seed);
        RunContext { config, config_path: None, out: out.to_path_buf(), seed }
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest {
            command: command.into(),
            config_hash: self.config.hash(),
            seed: self.seed,
            outputs: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    fn write(&self, m: &mut Manifest, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.out.join(name), bytes)?;
        m.outputs.push(name.into());
        Ok(())
    }

    fn finish(&self, mut m: Manifest) -> Result<Manifest> {
        let name = format!("manifest_{}.json", m.command.replace('-', "_"));
        m.outputs.push(name.clone());
        write_atomic(&self.out.join(&name), serde_json::to_string_pretty(&m)?.as_bytes())?;
        Ok(m)
    }
}

/// Writes through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn best_ipg(records: &[TrialRecord]) -> Option<&TrialRecord> {
    records
        .iter()
        .filter(|r| r.optimizer == "ipg" && r.preconditioner.is_some())
        .min_by(|a, b| a.final_cost().total_cmp(&b.final_cost()))
}

fn best_costs(records: &[TrialRecord]) -> serde_json::Value {
    let mut out = BTreeMap::new();
    for r in records {
        let e = out.entry(r.optimizer.clone()).or_insert(f64::INFINITY);
        *e = e.min(r.final_cost());
    }
    serde_json::json!(out)
}

/// Runs every configured optimizer on `h` from shared starts and writes the
/// cost histories plus the best IPG preconditioner.
fn benchmark(ctx: &RunContext, m: &mut Manifest, tag: &str, h: &ObjectiveHandle) -> Result<()> {
    let o = &ctx.config.optimize;
    let mut records = Vec::new();
    for spec in ctx.config.optimizers()? {
        records.extend(run_trials(&spec, h, o.trials, o.iterations, ctx.seed)?.records);
    }
    ctx.write(m, &format!("cost_history_{tag}.csv"), &csv(|b| write_cost_csv(b, &records))?)?;
    if let Some(r) = best_ipg(&records) {
        let k = r.preconditioner.as_ref().expect("filtered on preconditioner");
        ctx.write(m, &format!("preconditioner_{tag}.csv"), &csv(|b| write_matrix_csv(b, k))?)?;
    }
    m.summary.insert(format!("best_cost_{tag}"), best_costs(&records));
    Ok(())
}

/// Optimizer comparison on the 30-parameter template, then gbo and vne
/// compilation for the configured variants.
pub fn cmd_optimize(ctx: &RunContext) -> Result<Manifest> {
    let cfg = &ctx.config;
    let (j, u, dt) = (cfg.model.j, cfg.model.u, cfg.model.dt);
    let mut m = ctx.manifest("optimize");
    let target = target_unitary_c(j, dt);
    benchmark(ctx, &mut m, "c30", &ObjectiveHandle::new(target.clone(), hopping_ansatz())?)?;

    let samples = cfg.optimize.verify_samples;
    if cfg.model.variants.contains(&Variant::Gbo) {
        let comp = compile_gbo(j, dt, &cfg.gbo_settings(ctx.seed))?;
        let art = gbo_artifact(j, u, dt, &comp, samples, ctx.seed)?;
        ctx.write(&mut m, "prune_gbo_c.csv", &csv(|b| write_prune_csv(b, &comp.c.removed))?)?;
        ctx.write(&mut m, &CompiledArtifact::file_name(Variant::Gbo), art.to_json()?.as_bytes())?;
        m.summary.insert("gbo_c_two_qubit".into(), art.c.two_qubit_gates.into());
        m.summary.insert("gbo_c_params".into(), art.c.params.len().into());
        m.summary.insert("gbo_c_state_infidelity".into(), art.c.state_infidelity.into());
    }
    if cfg.model.variants.contains(&Variant::Vne) {
        let comp = compile_vne(j, u, dt, &cfg.vne_settings(ctx.seed))?;
        let art = vne_artifact(j, u, dt, &comp, samples, ctx.seed)?;
        ctx.write(&mut m, "vne_depth.csv", &csv(|b| write_depth_csv(b, &comp.scan))?)?;
        ctx.write(&mut m, "prune_vne_c.csv", &csv(|b| write_prune_csv(b, &comp.c.removed))?)?;
        ctx.write(&mut m, "prune_vne_b.csv", &csv(|b| write_prune_csv(b, &comp.b.removed))?)?;
        ctx.write(&mut m, &CompiledArtifact::file_name(Variant::Vne), art.to_json()?.as_bytes())?;
        benchmark(ctx, &mut m, "vne_c", &ObjectiveHandle::new(target, comp.c.template.clone())?)?;
        let b = art.b.as_ref().expect("vne artifact carries a bond block");
        m.summary.insert("vne_entropy_depth".into(), comp.entropy_depth.into());
        m.summary.insert("vne_converged_depth".into(), comp.gbo_depth.into());
        m.summary.insert("vne_c_two_qubit".into(), art.c.two_qubit_gates.into());
        m.summary.insert("vne_c_params".into(), art.c.params.len().into());
        m.summary.insert("vne_c_state_infidelity".into(), art.c.state_infidelity.into());
        m.summary.insert("vne_b_two_qubit".into(), b.two_qubit_gates.into());
        m.summary.insert("vne_b_params".into(), b.params.len().into());
    }
    ctx.finish(m)
}

pub fn cmd_vne_scan(ctx: &RunContext) -> Result<Manifest> {
    let cfg = &ctx.config;
    let mut m = ctx.manifest("vne-scan");
    let scan = vne_scan(cfg.model.j, cfg.model.dt, &cfg.vne_settings(ctx.seed))?;
    ctx.write(&mut m, "vne_depth.csv", &csv(|b| write_depth_csv(b, &scan))?)?;
    let min = scan.min_depth();
    m.summary.insert("min_depth".into(), serde_json::json!(min));
    let m = ctx.finish(m)?;
    match min {
        Some(_) => Ok(m),
        None => Err(Error::Exhausted { l_max: cfg.vne.l_max }),
    }
}

fn load_artifact(ctx: &RunContext, variant: Variant) -> Result<CompiledArtifact> {
    let path = ctx.out.join(CompiledArtifact::file_name(variant));
    let text = fs::read_to_string(&path).map_err(|_| {
        let cfg = ctx.config_path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "CONFIG".into());
        Error::MissingArtifact(format!(
            "{} not found; run `lgt optimize --config {cfg} --out {}` first",
            path.display(),
            ctx.out.display()
        ))
    })?;
    CompiledArtifact::from_json(&text)
}

/// Seed of one noisy job, mixed from the master seed and the run seed.
pub fn job_seed(master: u64, run_seed: u64) -> u64 {
    let mut z = master ^ run_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fmt_gamma(g: f64) -> String {
    format!("{g}").replace('.', "p")
}

/// Noisy χ trajectories for every (variant, γ, seed).
pub fn cmd_simulate(ctx: &RunContext) -> Result<Manifest> {
    let cfg = &ctx.config;
    let noise = cfg.noise.as_ref().ok_or_else(|| invalid("simulate needs a [noise] section"))?;
    let layout = cfg.layout()?;
    let mut m = ctx.manifest("simulate");

    let mut compiled = BTreeMap::new();
    for &v in &cfg.model.variants {
        if v != Variant::Direct {
            let config = cfg.trotter(v);
            compiled.insert(v, load_artifact(ctx, v)?.subcircuits(&config)?);
        }
    }
    let oracle = if layout.n_sites() <= MAX_ORACLE_SITES {
        exact_evolution_oracle(&layout, &cfg.trotter(Variant::Direct))?
    } else {
        vec![f64::NAN; cfg.model.steps + 1]
    };
    let start = initial_state(&layout)?;
    let chi0 = correlator_from_probabilities(
        &measurement_probabilities(&start, &vec![Basis::Z; layout.n_qubits()])?,
        &layout,
        layout.domain_wall_site(),
    );

    let run = NoisyRun {
        shots: noise.shots,
        shots_per_trajectory: noise.shots_per_trajectory,
        plan: cfg.mitigation.plan(),
        debias: cfg.mitigation.debias(),
    };
    let jobs: Vec<(Variant, f64, u64)> = cfg
        .model
        .variants
        .iter()
        .flat_map(|&v| noise.gammas.iter().flat_map(move |&g| noise.seeds.iter().map(move |&s| (v, g, s))))
        .collect();
    let results: Vec<(String, Vec<ChiRow>)> = jobs
        .par_iter()
        .map(|&(v, g, s)| {
            let est = simulate_chi(&layout, &cfg.trotter(v), compiled.get(&v), &NoiseRates::Uniform(g), &run, job_seed(ctx.seed, s))?;
            let row = |step: usize, chi: f64, d: f64| ChiRow {
                step,
                t: step as f64 * cfg.model.dt,
                chi,
                oracle: oracle[step],
                variant: v,
                gamma: g,
                seed: s,
                shots: noise.shots,
                discarded_frac: d,
            };
            let mut rows = vec![row(0, chi0, 0.0)];
            rows.extend(est.iter().enumerate().map(|(k, e)| row(k + 1, e.chi, e.discarded_frac)));
            let name = format!("runs/{}_g{}_s{}", v, fmt_gamma(g), s);
            write_atomic(&ctx.out.join(format!("{name}.csv")), &csv(|b| write_chi_csv(b, &rows))?)?;
            let rm = RunManifest {
                gamma: g,
                shots: noise.shots,
                seed: s,
                variants: run.plan.variants,
                mitigation: run.plan,
                discard_fraction: est.iter().map(|e| e.discarded_frac).collect(),
            };
            write_atomic(&ctx.out.join(format!("{name}.json")), rm.to_json()?.as_bytes())?;
            Ok((name, rows))
        })
        .collect::<Result<_>>()?;

    let mut all = Vec::new();
    for (name, rows) in results {
        m.outputs.push(format!("{name}.csv"));
        m.outputs.push(format!("{name}.json"));
        all.extend(rows);
    }
    ctx.write(&mut m, "chi.csv", &csv(|b| write_chi_csv(b, &all))?)?;
    m.summary.insert("jobs".into(), jobs.len().into());
    ctx.finish(m)
}

pub const GATE_COST_CSV_HEADER: &str = "variant,n_sites,model_two_qubit,compiled_two_qubit";

/// Two-qubit gates per Trotter step: the accounting model, and the count
/// of the actual step circuit where one can be built.
pub fn cmd_report(ctx: &RunContext) -> Result<Manifest> {
    let cfg = &ctx.config;
    let layout = cfg.layout()?;
    let n = layout.n_sites();
    let mut m = ctx.manifest("report");
    let mut buf = Vec::new();
    writeln!(buf, "{GATE_COST_CSV_HEADER}")?;
    for v in Variant::ALL {
        let config = cfg.trotter(v);
        let compiled = match v {
            Variant::Direct => Some(two_qubit_count(&build_trotter_step(&layout, &config, None)?)),
            _ => match load_artifact(ctx, v) {
                Ok(art) => Some(two_qubit_count(&build_trotter_step(&layout, &config, Some(&art.subcircuits(&config)?))?)),
                Err(Error::MissingArtifact(_)) => None,
                Err(e) => return Err(e),
            },
        };
        let c = compiled.map(|c| c.to_string()).unwrap_or_default();
        writeln!(buf, "{v},{n},{},{c}", v.two_qubit_cost(n))?;
        m.summary.insert(format!("{v}_model"), v.two_qubit_cost(n).into());
        if let Some(c) = compiled {
            m.summary.insert(format!("{v}_compiled"), c.into());
        }
    }
    ctx.write(&mut m, "gate_costs.csv", &buf)?;
    ctx.finish(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nJ = 1.0\nU = 2.0\ndt = 0.4\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.model.sites, 6);
        assert_eq!(c.optimize.trials, 3);
        assert!(c.noise.is_none());
    }

    #[test]
    fn physics_parameters_are_required() {
        let e = ExperimentConfig::from_toml("[model]\nJ = 1.0\nU = 2.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::from_toml(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.model.dt = 0.3;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn job_seeds_differ() {
        assert_ne!(job_seed(0, 1), job_seed(0, 2));
        assert_ne!(job_seed(1, 1), job_seed(2, 1));
    }
}
