//! Acceptance criteria A1-A10, one line each. Seeds are fixed at 0 up front.

use std::collections::BTreeMap;
use std::time::Instant;

use lgt_core::ansatz::hopping_ansatz;
use lgt_core::gateset::{two_qubit_count, Circuit, Gate, GateKind};
use lgt_core::lgtmodel::{
    build_trotter_step, charge_expectations, exact_evolution_oracle, initial_state, spin_leakage, target_unitary_c,
    CompiledSubcircuits, LatticeLayout, TrotterConfig, Variant,
};
use lgt_core::noiselab::{
    aggregate, debias_variants, run_noisy, run_noisy_steps, AggregateMode, DebiasOptions, MitigationPlan,
    NoiseConfig, NoiseRates, DEFAULT_SHARPEN_FACTOR,
};
use lgt_core::objective::{state_infidelity_check, ObjectiveHandle};
use lgt_core::optimizers::{run_trials, uniform_start, OptimizerSpec};
use lgt_core::pipeline::{
    compile_gbo, compile_vne, simulate_chi, GboCompilation, GboSettings, NoisyRun, VneCompilation, VneSettings,
};
use lgt_core::qstate::{rng_from_seed, total_variation, Basis, ShotHistogram, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

const SEED: u64 = 0;
const J: f64 = 1.0;
const U: f64 = 2.0;
const DT: f64 = 0.4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Compiled {
    gbo: GboCompilation,
    vne: VneCompilation,
}

impl Compiled {
    fn build() -> Self {
        let t = Instant::now();
        let gbo = compile_gbo(J, DT, &GboSettings { trials: 64, seed: SEED, ..GboSettings::default() })
            .expect("gbo compilation");
        let vne = compile_vne(J, U, DT, &VneSettings { seed: SEED, ..VneSettings::default() }).expect("vne compilation");
        println!("   (compiled gbo and vne blocks in {:.0} s)", t.elapsed().as_secs_f64());
        Compiled { gbo, vne }
    }

    fn subcircuits(&self, v: Variant) -> Option<CompiledSubcircuits> {
        match v {
            Variant::Direct => None,
            Variant::Gbo => Some(CompiledSubcircuits { c: self.gbo.c.bound().unwrap(), b: None }),
            Variant::Vne => {
                Some(CompiledSubcircuits { c: self.vne.c.bound().unwrap(), b: Some(self.vne.b.bound().unwrap()) })
            }
        }
    }
}

fn trotter(v: Variant, n_steps: usize) -> TrotterConfig {
    TrotterConfig { j: J, u: U, dt: DT, n_steps, variant: v }
}

fn a1() -> Outcome {
    let t = Instant::now();
    let h = ObjectiveHandle::new(target_unitary_c(J, DT), hopping_ansatz()).unwrap();
    let mut best = BTreeMap::new();
    for name in ["ipg", "adam", "lbfgs"] {
        let spec: OptimizerSpec = name.parse().unwrap();
        let set = run_trials(&spec, &h, 3, 128, SEED).unwrap();
        best.insert(name, set.best_record().final_cost());
    }
    let secs = t.elapsed().as_secs_f64();
    let ipg = best["ipg"];
    let pass = ipg <= 1e-6 && best["adam"] > ipg && best["lbfgs"] > ipg && secs < 120.0;
    outcome(pass, format!("best-of-3 cost ipg {:.2e} adam {:.2e} lbfgs {:.2e}; {secs:.1} s", ipg, best["adam"], best["lbfgs"]))
}

fn a2(c: &Compiled) -> Outcome {
    let block = &c.vne.c;
    let h = ObjectiveHandle::new(target_unitary_c(J, DT), block.template.clone()).unwrap();
    let set = run_trials(&"ipg".parse().unwrap(), &h, 3, 128, SEED).unwrap();
    let cost = set.best_record().final_cost();
    let d = block.template.n_params();
    outcome(cost <= 1e-6, format!("compressed template has {d} parameters (13 expected); best-of-3 ipg cost {cost:.2e}"))
}

fn a3(c: &Compiled) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 4, 6, 8] {
        let model = Variant::ALL.map(|v| v.two_qubit_cost(n));
        ok &= model == [14 * n, 12 * n, 9 * n];
        if n == 6 {
            let layout = LatticeLayout::new(n).unwrap();
            let built = Variant::ALL.map(|v| {
                two_qubit_count(&build_trotter_step(&layout, &trotter(v, 1), c.subcircuits(v).as_ref()).unwrap())
            });
            ok &= model == [84, 72, 54] && built == model;
            parts.push(format!("N=6 model {model:?} built {built:?}"));
        }
    }
    outcome(ok, parts.join("; "))
}

fn a4(c: &Compiled) -> Outcome {
    let layout = LatticeLayout::new(4).unwrap();
    let direct = build_trotter_step(&layout, &trotter(Variant::Direct, 1), None).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for v in [Variant::Gbo, Variant::Vne] {
        let step = build_trotter_step(&layout, &trotter(v, 1), c.subcircuits(v).as_ref()).unwrap();
        let inf = state_infidelity_check(&step, &direct, 1000, &mut rng_from_seed(SEED)).unwrap();
        worst = worst.max(inf);
        parts.push(format!("{v} {inf:.2e}"));
    }
    outcome(worst <= 1e-3, format!("mean state infidelity over 1000 Haar inputs, N=4 step: {}", parts.join(", ")))
}

fn a5(c: &Compiled) -> Outcome {
    let depth = c.vne.entropy_depth;
    let c2q = c.vne.c.two_qubit_gates();
    let b = c.vne.b.bound().unwrap();
    let count = |k: GateKind| b.gates.iter().filter(|g| g.kind == k).count();
    let (b_xx, b_ry) = (count(GateKind::XX), count(GateKind::RY));
    let b_other = b.gates.len() - b_xx - b_ry;
    let pass = depth == 3 && c2q == 4 && b_xx == 1 && b_ry == 1 && b_other == 0;
    outcome(
        pass,
        format!(
            "entropy depth {depth} (3 expected), converged depth {}; C_A {c2q} XX; B_A {b_xx} XX + {b_ry} RY + {b_other} other",
            c.vne.gbo_depth
        ),
    )
}

fn a6(c: &Compiled) -> Outcome {
    let layout = LatticeLayout::new(6).unwrap();
    let (n_up, n_down) = layout.expected_counts();
    let mut leak: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for v in Variant::ALL {
        let step = build_trotter_step(&layout, &trotter(v, 1), c.subcircuits(v).as_ref()).unwrap();
        let mut s = initial_state(&layout).unwrap();
        let q0 = charge_expectations(&s, &layout);
        for _ in 0..8 {
            step.apply_to(&mut s).unwrap();
            leak = leak.max(spin_leakage(&s, &layout, n_up, n_down));
            for (a, b) in q0.iter().zip(charge_expectations(&s, &layout)) {
                drift = drift.max((a - b).abs());
            }
        }
    }
    let plan = MitigationPlan { spin_filter: true, charge_filter: true, ..MitigationPlan::default() };
    let run = NoisyRun { shots: 1000, shots_per_trajectory: 10, plan, debias: DebiasOptions::default() };
    let est = simulate_chi(&layout, &trotter(Variant::Direct, 4), None, &NoiseRates::Uniform(0.0), &run, SEED).unwrap();
    let discard = est.iter().map(|e| e.discarded_frac).fold(0.0, f64::max);
    outcome(
        leak <= 1e-9 && drift <= 1e-9 && discard == 0.0,
        format!("max leakage {leak:.1e}, max charge drift {drift:.1e} over 8 steps of all variants; noiseless discard {discard}"),
    )
}

// Dense 2-qubit channel oracle, independent of the simulator.
type M4 = DMatrix<C>;

fn single(kind: GateKind, theta: f64) -> [[C; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = C::new(0.0, 1.0);
    match kind {
        GateKind::RX => [[C::from(c), -i * s], [-i * s, C::from(c)]],
        GateKind::RY => [[C::from(c), C::from(-s)], [C::from(s), C::from(c)]],
        GateKind::RZ => [[C::from_polar(1.0, -theta / 2.0), C::from(0.0)], [C::from(0.0), C::from_polar(1.0, theta / 2.0)]],
        _ => unreachable!(),
    }
}

fn dense(g: &Gate) -> M4 {
    let mut m = M4::zeros(4, 4);
    match g.kind {
        GateKind::RX | GateKind::RY | GateKind::RZ => {
            let u = single(g.kind, g.params[0]);
            let q = g.targets[0];
            for r in 0..4usize {
                for col in 0..4usize {
                    if (r ^ col) >> (1 - q) & 1 == 0 {
                        m[(r, col)] = u[r >> q & 1][col >> q & 1];
                    }
                }
            }
        }
        GateKind::XX => {
            let (c, s) = ((g.params[0] / 2.0).cos(), (g.params[0] / 2.0).sin());
            for k in 0..4 {
                m[(k, k)] = C::from(c);
                m[(k, 3 - k)] = C::new(0.0, -s);
            }
        }
        GateKind::CNOT => {
            let (ctl, tgt) = (g.targets[0], g.targets[1]);
            for k in 0..4usize {
                let out = if k >> ctl & 1 == 1 { k ^ (1 << tgt) } else { k };
                m[(out, k)] = C::from(1.0);
            }
        }
        _ => unreachable!(),
    }
    m
}

fn channel_probs(circ: &Circuit, gamma: f64) -> BTreeMap<u64, f64> {
    let mut rho = M4::zeros(4, 4);
    rho[(0, 0)] = C::from(1.0);
    let mixed = M4::identity(4, 4) * C::from(0.25);
    for g in &circ.gates {
        let u = dense(g);
        rho = &u * rho * u.adjoint();
        if g.is_two_qubit() {
            rho = rho * C::from(1.0 - gamma) + &mixed * C::from(gamma);
        }
    }
    (0..4).map(|k| (k as u64, rho[(k, k)].re)).collect()
}

fn a7() -> Outcome {
    let mut worst: f64 = 0.0;
    for (i, gamma) in [0.001, 0.1, 1.0].into_iter().enumerate() {
        let mut c = Circuit::new(2);
        c.push(Gate::ry(0, 1.1))
            .push(Gate::rx(1, 0.4))
            .push(Gate::xx(0, 1, 0.9))
            .push(Gate::rz(0, -0.7))
            .push(Gate::ry(1, 2.2))
            .push(Gate::cnot(1, 0))
            .push(Gate::rx(0, 0.3));
        let exact = channel_probs(&c, gamma);
        let h = run_noisy(
            &c,
            &StateVector::zero(2).unwrap(),
            &NoiseConfig { gamma, seed: SEED },
            100_000,
            &[Basis::Z, Basis::Z],
            &mut rng_from_seed(SEED + i as u64),
        )
        .unwrap();
        worst = worst.max(total_variation(&h.frequencies(), &exact));
    }
    outcome(worst <= 0.01, format!("max TV vs dense channel at 1e5 shots, gamma in {{0.001, 0.1, 1}}: {worst:.4}"))
}

fn mean_errors(c: &Compiled, v: Variant, gamma: f64, oracle: &[f64]) -> Vec<f64> {
    let layout = LatticeLayout::new(6).unwrap();
    let run = NoisyRun { shots: 1000, shots_per_trajectory: 10, plan: MitigationPlan::default(), debias: DebiasOptions::default() };
    let sub = c.subcircuits(v);
    let mut err = vec![0.0; 8];
    for seed in 0..10u64 {
        let est = simulate_chi(&layout, &trotter(v, 8), sub.as_ref(), &NoiseRates::Uniform(gamma), &run, seed).unwrap();
        for (k, e) in est.iter().enumerate() {
            err[k] += (e.chi - oracle[k + 1]).abs() / 10.0;
        }
    }
    err
}

fn a8(c: &Compiled) -> Outcome {
    let layout = LatticeLayout::new(6).unwrap();
    let oracle = exact_evolution_oracle(&layout, &trotter(Variant::Direct, 8)).unwrap();
    let d1 = mean_errors(c, Variant::Direct, 0.001, &oracle);
    let v1 = mean_errors(c, Variant::Vne, 0.001, &oracle);
    let wins = d1.iter().zip(&v1).filter(|(d, v)| v <= d).count();
    let d5 = mean_errors(c, Variant::Direct, 0.005, &oracle);
    let v5 = mean_errors(c, Variant::Vne, 0.005, &oracle);
    let direct_lost = d5[..4].iter().any(|&e| e > 0.1);
    let vne_held = v5[..6].iter().all(|&e| e < 0.1);
    let fmt = |e: &[f64]| e.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    println!("   gamma 0.001 direct [{}] vne [{}]", fmt(&d1), fmt(&v1));
    println!("   gamma 0.005 direct [{}] vne [{}]", fmt(&d5), fmt(&v5));
    outcome(
        wins >= 6 && direct_lost && vne_held,
        format!("vne <= direct on {wins}/8 steps at 0.001; at 0.005 direct > 0.1 by step 4: {direct_lost}, vne < 0.1 through step 6: {vne_held}"),
    )
}

fn a9() -> Outcome {
    let h = ObjectiveHandle::new(target_unitary_c(J, DT), hopping_ansatz()).unwrap();
    let mut rng = rng_from_seed(SEED);
    let (mut gerr, mut herr): (f64, f64) = (0.0, 0.0);
    let f = |x: &[f64]| h.cost(x).unwrap();
    for _ in 0..50 {
        let x = uniform_start(30, &mut rng);
        let g = h.gradient(&x).unwrap();
        let hs = h.hessian(&x).unwrap();
        let eps = 1e-5;
        for i in 0..30 {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[i] += eps;
            m[i] -= eps;
            gerr = gerr.max((g[i] - (f(&p) - f(&m)) / (2.0 * eps)).abs());
        }
        let e = 1e-3;
        let f0 = f(&x);
        for i in 0..30 {
            for j in i..30 {
                let shifted = |di: f64, dj: f64| {
                    let mut y = x.clone();
                    y[i] += di;
                    y[j] += dj;
                    f(&y)
                };
                let fd = if i == j {
                    (shifted(e, 0.0) - 2.0 * f0 + shifted(-e, 0.0)) / (e * e)
                } else {
                    (shifted(e, e) - shifted(e, -e) - shifted(-e, e) + shifted(-e, -e)) / (4.0 * e * e)
                };
                herr = herr.max((hs[(i, j)] - fd).abs()).max((hs[(j, i)] - fd).abs());
            }
        }
    }
    outcome(gerr <= 1e-6 && herr <= 1e-4, format!("50 points: max gradient error {gerr:.1e}, max Hessian error {herr:.1e}"))
}

fn a10() -> Outcome {
    let layout = LatticeLayout::new(2).unwrap();
    let step = build_trotter_step(&layout, &trotter(Variant::Direct, 1), None).unwrap();
    let init = initial_state(&layout).unwrap();
    let n = layout.n_qubits();
    let basis = vec![Basis::Z; n];
    let mut ideal_state = init.clone();
    step.apply_to(&mut ideal_state).unwrap();
    let ideal: BTreeMap<u64, f64> = ideal_state.probabilities().iter().enumerate().map(|(k, &p)| (k as u64, p)).collect();
    // two miscalibrated physical qubits pick up a fixed phase after every
    // two-qubit gate, on top of a weak depolarizing floor
    let hot = [0usize, 1];
    let rates = NoiseRates::Uniform(0.002);
    let mut wins = 0;
    for run in 0..20u64 {
        let mut rng = rng_from_seed(SEED + 1000 + run);
        let variants = debias_variants(&step, 16, DebiasOptions::default(), &mut rng).unwrap();
        let mut hists = Vec::new();
        let mut single_tv = Vec::new();
        for v in &variants {
            let mut biased = Circuit::new(n);
            for g in &v.circuit.gates {
                biased.push(g.clone());
                if g.is_two_qubit() {
                    for &q in g.targets.iter().filter(|q| hot.contains(q)) {
                        biased.push(Gate::rz(q, 0.15));
                    }
                }
            }
            let h = run_noisy_steps(&biased, &v.place_state(&init).unwrap(), 1, &rates, 20_000, 1, &v.physical_basis(&basis), &mut rng)
                .unwrap()
                .pop()
                .unwrap();
            let h = v.logical_histogram(&h);
            single_tv.push(total_variation(&h.frequencies(), &ideal));
            hists.push(h);
        }
        single_tv.sort_by(f64::total_cmp);
        let median = 0.5 * (single_tv[7] + single_tv[8]);
        let avg = aggregate(&hists, AggregateMode::Average, DEFAULT_SHARPEN_FACTOR).unwrap();
        if total_variation(&avg.frequencies(), &ideal) < median {
            wins += 1;
        }
    }

    // noise-floor model: ideal one-hot, uniform floor, one variant-specific spurious outcome
    let nq = 4;
    let hot = 0b1011u64;
    let mut sharp_ok = true;
    for eps in [0.0, 0.05, 0.1, 0.2, 0.3] {
        let total = 1_000_000u64;
        let hists: Vec<ShotHistogram> = (0..16u64)
            .map(|v| {
                let mut h = ShotHistogram::z_basis(nq);
                let floor = (eps * total as f64 / 16.0).round() as u64;
                for k in 0..16u64 {
                    h.add(k, floor);
                }
                h.add(hot, ((1.0 - eps) * total as f64) as u64);
                let spurious = (v * 5 + 1) % 16;
                if spurious != hot {
                    h.add(spurious, total / 20);
                }
                h
            })
            .collect();
        let out = aggregate(&hists, AggregateMode::Sharpen, DEFAULT_SHARPEN_FACTOR).unwrap();
        sharp_ok &= out.counts.len() == 1 && out.counts.contains_key(&hot);
    }
    outcome(wins >= 18 && sharp_ok, format!("average beats median single variant in {wins}/20 runs; sharpen one-hot for eps <= 0.3: {sharp_ok}"))
}

fn main() {
    // optional filter, e.g. `cargo test --test acceptance -- A1 A7`
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| only.is_empty() || only.iter().any(|o| o == id);
    let mut failed = Vec::new();
    let mut report = |id: &str, run: &dyn Fn() -> Outcome| {
        if !wanted(id) {
            return;
        }
        let o = run();
        println!("{id} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(id.to_string());
        }
    };
    report("A1", &a1);
    report("A7", &a7);
    report("A9", &a9);
    report("A10", &a10);
    let needs_blocks = ["A2", "A3", "A4", "A5", "A6", "A8"].iter().any(|id| wanted(id));
    if needs_blocks {
        let compiled = Compiled::build();
        report("A2", &|| a2(&compiled));
        report("A3", &|| a3(&compiled));
        report("A4", &|| a4(&compiled));
        report("A5", &|| a5(&compiled));
        report("A6", &|| a6(&compiled));
        report("A8", &|| a8(&compiled));
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing {}", failed.join(", "));
        std::process::exit(1);
    }
}
