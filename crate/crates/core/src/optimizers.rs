//! Iteratively preconditioned gradient descent plus gradient-descent, Adam
//! and L-BFGS baselines, and a seeded multi-trial harness.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::objective::Objective;
use crate::qstate::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpgSchedule {
    pub beta_margin: f64,
    pub alpha_safety: f64,
    pub delta: f64,
}

impl Default for IpgSchedule {
    fn default() -> Self {
        IpgSchedule { beta_margin: 1e-3, alpha_safety: 0.9, delta: 1.0 }
    }
}

impl IpgSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_margin > 0.0) || !(self.alpha_safety > 0.0 && self.alpha_safety < 1.0) {
            return Err(Error::Validation("IPG needs beta_margin > 0 and alpha_safety in (0, 1)".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Validation("IPG step delta must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpgState {
    pub x: Vec<f64>,
    pub k: DMatrix<f64>,
    pub t: usize,
    /// Cost at `x` (before the step that produced the next state).
    pub cost: f64,
    pub beta: f64,
    pub alpha: f64,
    /// `‖(H + βI)K − I‖_F` measured with the K used in the last step.
    pub residual: f64,
}

impl IpgState {
    pub fn new(x0: Vec<f64>) -> Self {
        let d = x0.len();
        IpgState { x: x0, k: DMatrix::identity(d, d), t: 0, cost: f64::NAN, beta: 0.0, alpha: 0.0, residual: f64::NAN }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn divergence(iteration: usize, reason: &str, last_good: &[f64]) -> Error {
    Error::Divergence { iteration, reason: reason.into(), last_good: last_good.to_vec() }
}

/// One IPG iteration: `x ← x − δ K ∇f` and `K ← K − α((H + βI)K − I)`.
pub fn ipg_step(state: &IpgState, objective: &dyn Objective, schedule: &IpgSchedule) -> Result<IpgState> {
    let d = state.x.len();
    let (cost, grad, hess) = objective.second_order(&state.x)?;
    if !cost.is_finite() || !all_finite(&grad) || !hess.iter().all(|v| v.is_finite()) {
        return Err(divergence(state.t, "non-finite gradient or Hessian", &state.x));
    }
    let eig = sym_eigenvalues(&hess);
    let (lmin, lmax) = (eig.first().copied().unwrap_or(0.0), eig.last().copied().unwrap_or(0.0));
    let beta = (-lmin).max(0.0) + schedule.beta_margin;
    let alpha = schedule.alpha_safety / (lmax + beta);
    let g = DVector::from_column_slice(&grad);
    let step = &state.k * g * schedule.delta;
    let x: Vec<f64> = state.x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
    let shifted = &hess + DMatrix::identity(d, d) * beta;
    let resid = &shifted * &state.k - DMatrix::identity(d, d);
    let k = &state.k - &resid * alpha;
    if !all_finite(&x) || !k.iter().all(|v| v.is_finite()) {
        return Err(divergence(state.t, "non-finite IPG update", &state.x));
    }
    Ok(IpgState { x, k, t: state.t + 1, cost, beta, alpha, residual: resid.norm() })
}

/// Snapshot of the preconditioner for export.
pub fn export_preconditioner(state: &IpgState) -> DMatrix<f64> {
    state.k.clone()
}

/// Fraction of `Σ|K_ij|` that sits within one band of the diagonal.
pub fn diagonal_dominance_ratio(k: &DMatrix<f64>) -> f64 {
    let total: f64 = k.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut near = 0.0;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            if i.abs_diff(j) <= 1 {
                near += k[(i, j)].abs();
            }
        }
    }
    near / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 0.05, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: usize,
    pub cost: f64,
}

impl AdamState {
    pub fn new(x0: Vec<f64>) -> Self {
        let d = x0.len();
        AdamState { x: x0, m: vec![0.0; d], v: vec![0.0; d], t: 0, cost: f64::NAN }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &AdamState, objective: &dyn Objective, p: &AdamParams) -> Result<AdamState> {
    let cost = objective.value(&state.x)?;
    let g = objective.gradient(&state.x)?;
    if !cost.is_finite() || !all_finite(&g) {
        return Err(divergence(state.t, "non-finite gradient", &state.x));
    }
    let t = state.t + 1;
    let mut next = AdamState { x: state.x.clone(), m: state.m.clone(), v: state.v.clone(), t, cost };
    let c1 = 1.0 - p.beta1.powi(t as i32);
    let c2 = 1.0 - p.beta2.powi(t as i32);
    for i in 0..g.len() {
        next.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * g[i];
        next.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * g[i] * g[i];
        let mhat = next.m[i] / c1;
        let vhat = next.v[i] / c2;
        next.x[i] -= p.lr * mhat / (vhat.sqrt() + p.eps);
    }
    if !all_finite(&next.x) {
        return Err(divergence(state.t, "non-finite Adam update", &state.x));
    }
    Ok(next)
}

/// Plain gradient descent step with a fixed learning rate.
pub fn gd_step(x: &[f64], objective: &dyn Objective, lr: f64, iteration: usize) -> Result<(Vec<f64>, f64)> {
    let cost = objective.value(x)?;
    let g = objective.gradient(x)?;
    if !cost.is_finite() || !all_finite(&g) {
        return Err(divergence(iteration, "non-finite gradient", x));
    }
    Ok((x.iter().zip(&g).map(|(a, b)| a - lr * b).collect(), cost))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub optimizer: String,
    pub trial: usize,
    pub seed: u64,
    /// Cost after each iteration; padded with the last value to the budget.
    pub history: Vec<f64>,
    pub x: Vec<f64>,
    pub wall_time_s: f64,
    /// Set when L-BFGS stopped on a failed line search.
    pub stalled: bool,
    #[serde(skip)]
    pub preconditioner: Option<DMatrix<f64>>,
}

impl TrialRecord {
    pub fn final_cost(&self) -> f64 {
        self.history.last().copied().unwrap_or(f64::NAN)
    }
}

fn pad(history: &mut Vec<f64>, n: usize) {
    let last = history.last().copied().unwrap_or(f64::NAN);
    history.resize(n, last);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS settings. Stops when the relative decrease
/// `(f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)` falls to `ftol` or the largest
/// gradient component to `gtol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsParams {
    pub memory: usize,
    pub ftol: f64,
    pub gtol: f64,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams { memory: 10, ftol: 2.220446049250313e-9, gtol: 1e-5 }
    }
}

impl LbfgsParams {
    /// Runs until the iteration budget or a vanishing gradient.
    pub fn tight(memory: usize) -> Self {
        LbfgsParams { memory, ftol: 0.0, gtol: 1e-12 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || !(self.ftol >= 0.0) || !(self.gtol >= 0.0) {
            return Err(Error::Validation("L-BFGS needs memory >= 1 and nonnegative tolerances".into()));
        }
        Ok(())
    }
}

/// L-BFGS with two-loop recursion and Armijo backtracking. The history holds
/// the cost after each iteration, padded to `max_iters`.
pub fn lbfgs_minimize(objective: &dyn Objective, x0: &[f64], max_iters: usize, params: &LbfgsParams) -> Result<TrialRecord> {
    params.validate()?;
    let memory = params.memory;
    let start = Instant::now();
    let mut x = x0.to_vec();
    let mut f = objective.value(&x)?;
    let mut g = objective.gradient(&x)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut history = Vec::with_capacity(max_iters);
    let mut stalled = false;
    for it in 0..max_iters {
        if !f.is_finite() || !all_finite(&g) {
            return Err(divergence(it, "non-finite gradient", &x));
        }
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= params.gtol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let ft = objective.value(&trial)?;
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            stalled = true;
            break;
        };
        let gn = objective.gradient(&xn)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let decrease = (f - fn_) / f.abs().max(fn_.abs()).max(1.0);
        x = xn;
        f = fn_;
        g = gn;
        history.push(f);
        if decrease <= params.ftol {
            break;
        }
    }
    if history.is_empty() {
        history.push(f);
    }
    pad(&mut history, max_iters.max(1));
    Ok(TrialRecord {
        optimizer: "lbfgs".into(),
        trial: 0,
        seed: 0,
        history,
        x,
        wall_time_s: start.elapsed().as_secs_f64(),
        stalled,
        preconditioner: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerSpec {
    Ipg(IpgSchedule),
    Gd { lr: f64 },
    Adam(AdamParams),
    Lbfgs(LbfgsParams),
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Ipg(_) => "ipg",
            OptimizerSpec::Gd { .. } => "gd",
            OptimizerSpec::Adam(_) => "adam",
            OptimizerSpec::Lbfgs(_) => "lbfgs",
        }
    }

    /// Runs `n_iters` iterations from `x0`.
    pub fn run(&self, objective: &dyn Objective, x0: &[f64], n_iters: usize) -> Result<TrialRecord> {
        let start = Instant::now();
        let mut history = Vec::with_capacity(n_iters);
        let (x, precond) = match self {
            OptimizerSpec::Ipg(schedule) => {
                schedule.validate()?;
                let mut st = IpgState::new(x0.to_vec());
                for _ in 0..n_iters {
                    st = ipg_step(&st, objective, schedule)?;
                    history.push(objective.value(&st.x)?);
                }
                (st.x.clone(), Some(st.k))
            }
            OptimizerSpec::Gd { lr } => {
                let mut x = x0.to_vec();
                for it in 0..n_iters {
                    x = gd_step(&x, objective, *lr, it)?.0;
                    history.push(objective.value(&x)?);
                }
                (x, None)
            }
            OptimizerSpec::Adam(p) => {
                let mut st = AdamState::new(x0.to_vec());
                for _ in 0..n_iters {
                    st = adam_step(&st, objective, p)?;
                    history.push(objective.value(&st.x)?);
                }
                (st.x, None)
            }
            OptimizerSpec::Lbfgs(p) => {
                return lbfgs_minimize(objective, x0, n_iters, p);
            }
        };
        if history.is_empty() {
            history.push(objective.value(&x)?);
        }
        Ok(TrialRecord {
            optimizer: self.name().into(),
            trial: 0,
            seed: 0,
            history,
            x,
            wall_time_s: start.elapsed().as_secs_f64(),
            stalled: false,
            preconditioner: precond,
        })
    }
}

impl fmt::Display for OptimizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerSpec {
    type Err = Error;

    /// Parses a name with default settings: `ipg`, `gd`, `adam`, `lbfgs`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipg" => Ok(OptimizerSpec::Ipg(IpgSchedule::default())),
            "gd" => Ok(OptimizerSpec::Gd { lr: 0.1 }),
            "adam" => Ok(OptimizerSpec::Adam(AdamParams::default())),
            "lbfgs" | "l-bfgs" => Ok(OptimizerSpec::Lbfgs(LbfgsParams::default())),
            other => Err(Error::Validation(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// All trials of one optimizer plus the index of the lowest final cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub records: Vec<TrialRecord>,
    pub best: usize,
}

impl TrialSet {
    pub fn best_record(&self) -> &TrialRecord {
        &self.records[self.best]
    }
}

/// Per-trial seeds drawn from the master seed.
pub fn trial_seeds(master: u64, n_trials: usize) -> Vec<u64> {
    let mut rng = Rng::seed_from_u64(master);
    (0..n_trials).map(|_| rng.random::<u64>()).collect()
}

/// Uniform starting point in `[0, 2π)^d`.
pub fn uniform_start(d: usize, rng: &mut Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect()
}

/// Runs `n_trials` seeded trials in parallel; every optimizer given the same
/// master seed starts from the same points.
pub fn run_trials(
    spec: &OptimizerSpec,
    objective: &dyn Objective,
    n_trials: usize,
    n_iters: usize,
    seed: u64,
) -> Result<TrialSet> {
    if n_trials == 0 {
        return Err(Error::Validation("n_trials must be at least 1".into()));
    }
    let seeds = trial_seeds(seed, n_trials);
    let records: Vec<TrialRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &s)| {
            let x0 = uniform_start(objective.dim(), &mut rng_from_seed(s));
            let mut rec = spec.run(objective, &x0, n_iters)?;
            rec.trial = trial;
            rec.seed = s;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let best = records
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.final_cost().total_cmp(&b.1.final_cost()))
        .map(|(i, _)| i)
        .unwrap();
    Ok(TrialSet { records, best })
}

pub const COST_CSV_HEADER: &str = "optimizer,trial,iter,cost";

pub fn write_cost_csv<W: Write>(out: &mut W, records: &[TrialRecord]) -> Result<()> {
    writeln!(out, "{COST_CSV_HEADER}")?;
    for r in records {
        for (i, c) in r.history.iter().enumerate() {
            writeln!(out, "{},{},{},{:.17e}", r.optimizer, r.trial, i + 1, c)?;
        }
    }
    Ok(())
}

/// Plain comma-separated matrix dump, one row per line.
pub fn write_matrix_csv<W: Write>(out: &mut W, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// `½ xᵀ A x − bᵀ x`, a reference objective with a closed-form minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Quadratic {
    pub fn minimizer(&self) -> Option<DVector<f64>> {
        self.a.clone().cholesky().map(|c| c.solve(&self.b))
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        (&self.a * DVector::from_column_slice(x) - &self.b).norm()
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = DVector::from_column_slice(x);
        Ok(0.5 * v.dot(&(&self.a * &v)) - self.b.dot(&v))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((&self.a * DVector::from_column_slice(x) - &self.b).iter().copied().collect())
    }

    fn hessian(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.a.clone())
    }
}
