//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the expensive sweeps are built once and shared.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use uhlmann_core::basisenc::{build_core_circuit, insert_xy4, CircuitOptions, Method, PROBE};
use uhlmann_core::circuit::{simulate_statevector, unitary_of_circuit};
use uhlmann_core::experiment::{
    build_sweep_circuits, epsilon_sweep, simulate_sweep, spearman, state_prep_distance_sweep,
    verify_distance, EpsilonRow, ExperimentRecord, NoiseSource, SweepCircuits, SweepConfig,
};
use uhlmann_core::linalg::{self, wrap_angle};
use uhlmann_core::spinsys::{self, critical_temperatures, holonomy_amplitude, holonomy_oracle};
use uhlmann_core::synth::{
    approx_synthesize, count_report, hs_distance, kak_decompose, qsd_decompose_with, transpile,
    QsdOptions,
};
use uhlmann_core::{Block, GateSet, Spin, SpinParams, SynthesisConfig, ThermalSpinState};

const SHOTS: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Report {
    results: Vec<(u32, &'static str, bool)>,
}

impl Report {
    fn run(&mut self, id: u32, name: &'static str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{id:>2}] {name}: {} ({:.1} s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        self.results.push((id, name, o.pass));
    }
}

/// `θ` is within `tol` of the quantized value `q` (0 or π), modulo 2π.
fn near(theta: f64, q: f64, tol: f64) -> bool {
    wrap_angle(theta - q).abs() <= tol
}

fn quantized_pi(r: &ExperimentRecord) -> bool {
    r.theta_analytic.cos() < 0.0
}

/// Points whose analytic phase matches both neighbours, i.e. not adjacent to a transition.
fn plateau_mask(records: &[ExperimentRecord]) -> Vec<bool> {
    let n = records.len();
    (0..n)
        .map(|i| {
            let q = quantized_pi(&records[i]);
            (i == 0 || quantized_pi(&records[i - 1]) == q)
                && (i + 1 == n || quantized_pi(&records[i + 1]) == q)
        })
        .collect()
}

fn mean_abs_deviation(records: &[ExperimentRecord]) -> f64 {
    records.iter().map(|r| r.deviation().abs()).sum::<f64>() / records.len() as f64
}

fn all_ok(records: &[ExperimentRecord]) -> Result<(), String> {
    match records.iter().find(|r| !r.is_ok()) {
        Some(r) => Err(format!("T = {:.4}: {}", r.t, r.error)),
        None => Ok(()),
    }
}

fn isa_circuits(circuits: &SweepCircuits, gateset: GateSet) -> Vec<uhlmann_core::Circuit> {
    circuits
        .points
        .iter()
        .map(|p| transpile(&p.as_ref().expect("circuit built").x, gateset).expect("transpile"))
        .collect()
}

fn critical_half() -> f64 {
    1.0 / (2.0 * (2.0 + 3f64.sqrt()).ln())
}

fn criterion_1() -> Outcome {
    let mut cfg = SweepConfig::new(Spin::HALF);
    cfg.exact = true;
    let circuits = build_sweep_circuits(&cfg).expect("spin-1/2 circuits");
    let recs = simulate_sweep(&cfg, &circuits).expect("spin-1/2 sweep");
    if let Err(e) = all_ok(&recs) {
        return outcome(false, e);
    }
    let tc = critical_half();
    let roots = critical_temperatures(&cfg.params, (0.01, 1.0), 1e-12).expect("roots");
    let mut worst: f64 = 0.0;
    let mut wrong_plateau = 0;
    let mut checked = 0;
    for r in &recs {
        if r.abs_g < 1e-6 {
            continue;
        }
        checked += 1;
        worst = worst.max(r.deviation().abs());
        let expect = if r.t < tc { PI } else { 0.0 };
        if !near(r.theta_circuit, expect, 1e-8) {
            wrong_plateau += 1;
        }
    }
    let root_ok = roots.len() == 1 && (roots[0] - tc).abs() < 1e-9;
    outcome(
        worst <= 1e-8 && wrong_plateau == 0 && root_ok,
        format!(
            "{checked} points, max |θ_circuit − θ_analytic| = {worst:.2e}, {wrong_plateau} off-plateau, root {:?} vs Tc = {tc:.6}",
            roots
        ),
    )
}

fn criterion_2(cfg: &SweepConfig, circuits: &SweepCircuits) -> Outcome {
    let mut cfg = cfg.clone();
    cfg.exact = true;
    let recs = simulate_sweep(&cfg, circuits).expect("spin-1 sweep");
    if let Err(e) = all_ok(&recs) {
        return outcome(false, e);
    }
    let is_pi: Vec<bool> = recs.iter().map(|r| r.theta_circuit.cos() < 0.0).collect();
    let quantized = recs
        .iter()
        .all(|r| near(r.theta_circuit, 0.0, 1e-8) || near(r.theta_circuit, PI, 1e-8));
    let flips: Vec<usize> = (0..is_pi.len() - 1).filter(|&i| is_pi[i] != is_pi[i + 1]).collect();
    let step = cfg.grid[1] - cfg.grid[0];
    let roots = critical_temperatures(&cfg.params, (0.01, 1.0), 1e-12).expect("roots");
    let shape_ok = flips.len() == 2 && !is_pi[0] && is_pi[flips[0] + 1] && !is_pi[is_pi.len() - 1];
    let mut detail = format!("{} transitions", flips.len());
    if !(shape_ok && roots.len() == 2) {
        return outcome(false, format!("{detail}, roots {roots:?}"));
    }
    let located: Vec<f64> = flips
        .iter()
        .map(|&i| 0.5 * (cfg.grid[i] + cfg.grid[i + 1]))
        .collect();
    let within = located.iter().zip(&roots).all(|(l, r)| (l - r).abs() <= step);
    let tc = critical_half();
    let inside = roots[0] < tc && tc < roots[1];
    let nearest = recs
        .iter()
        .min_by(|a, b| (a.t - tc).abs().total_cmp(&(b.t - tc).abs()))
        .unwrap();
    let nearest_pi = near(nearest.theta_circuit, PI, 1e-8);
    detail = format!(
        "{detail} at T ≈ {:.4}, {:.4}; roots {:.4}, {:.4}; η = 1/2 point inside: {}",
        located[0],
        located[1],
        roots[0],
        roots[1],
        inside && nearest_pi
    );
    outcome(quantized && within && inside && nearest_pi, detail)
}

fn criterion_3() -> Outcome {
    let params = SpinParams::unit(Spin::ONE);
    let mut rng = common::rng(3);
    let opts = CircuitOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let t = rng.random_range(0.02..0.98);
        let (core, state) = build_core_circuit(&params, t, &opts).expect("core circuit");
        let rho = simulate_statevector(&core).expect("simulate").reduced_density(&[PROBE]);
        let g = spinsys::loschmidt_amplitude(&state, &spinsys::uhlmann_process(&state).unwrap())
            .unwrap();
        worst = worst.max((rho[(1, 0)] * 2.0 - g).norm());
    }
    outcome(
        worst <= 1e-10,
        format!("10 temperatures, max |2ρ_probe[1,0] − G| = {worst:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    const STEPS: usize = 10_000;
    let mut worst: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    let mut failures = Vec::new();
    for (spin, seed) in [(Spin::HALF, 41), (Spin::ONE, 42)] {
        let params = SpinParams::unit(spin);
        let mut rng = common::rng(seed);
        let mut taken = 0;
        while taken < 20 {
            let t = rng.random_range(0.1..1.0);
            let state = ThermalSpinState::at_temperature(&params, t).unwrap();
            let g = spinsys::loschmidt_amplitude(&state, &spinsys::uhlmann_process(&state).unwrap())
                .unwrap();
            if g.norm() < 1e-3 {
                continue;
            }
            taken += 1;
            match holonomy_oracle(&state, STEPS) {
                Ok(phase) => worst = worst.max(wrap_angle(phase - linalg::arg(g)).abs()),
                Err(e) => failures.push(format!("{spin} T = {t:.4}: {e}")),
            }
            let e1 = (holonomy_amplitude(&state, 500).unwrap() - g).norm();
            let e2 = (holonomy_amplitude(&state, 1000).unwrap() - g).norm();
            if e2 > 1e-12 {
                min_order = min_order.min((e1 / e2).log2());
            }
        }
    }
    outcome(
        failures.is_empty() && worst <= 1e-6 && min_order >= 0.9,
        format!(
            "40 temperatures, max phase gap {worst:.2e}, smallest observed order {min_order:.2}{}",
            if failures.is_empty() { String::new() } else { format!(", failures {failures:?}") }
        ),
    )
}

fn criterion_5(opt: &SweepCircuits, naive: &SweepCircuits) -> Outcome {
    let r_opt = count_report(&isa_circuits(opt, GateSet::Eagle), GateSet::Eagle);
    let r_naive = count_report(&isa_circuits(naive, GateSet::Eagle), GateSet::Eagle);
    let prep = (r_naive.block(Block::StatePrep).total, r_opt.block(Block::StatePrep).total);
    let process = (r_naive.block(Block::Process).total, r_opt.block(Block::Process).total);
    let meas = (r_naive.block(Block::Measurement).total, r_opt.block(Block::Measurement).total);
    let a = prep.0 >= 900.0 && prep.1 <= 200.0;
    let b = process.0 >= 250.0 && process.1 <= 100.0;
    let c = meas.0 == 4.0 && meas.1 == 4.0;
    outcome(
        a && b && c,
        format!(
            "prep naive {:.1} / shannon {:.1} ({}); process naive {:.1} / approx {:.1} ({}); trace block {} / {} ({})",
            prep.0,
            prep.1,
            pf(a),
            process.0,
            process.1,
            pf(b),
            meas.0,
            meas.1,
            pf(c)
        ),
    )
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fails"
    }
}

fn criterion_6() -> Outcome {
    let params = SpinParams::unit(Spin::ONE);
    let temps = [0.2, 0.4, 0.6];
    let coarse = [1e-3, 1e-5, 1e-8, 1e-10];
    // 1e-20 lies below the double-precision floor of the distance, so that search runs to max_depth.
    let fine = [1e-15, 1e-20];
    let all: Vec<f64> = coarse.iter().chain(&fine).copied().collect();
    let rows = epsilon_sweep(&params, &temps, &all, GateSet::Eagle, SynthesisConfig::default())
        .expect("epsilon sweep");
    let gates = |eps: f64| -> &EpsilonRow { rows.iter().find(|r| r.epsilon == eps).unwrap() };
    let band: Vec<f64> = coarse.iter().map(|&e| gates(e).process_gates).collect();
    let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = band.iter().copied().fold(0.0, f64::max);
    let band_ok = hi <= 1.5 * lo;
    let base = gates(1e-8).process_gates;
    let bound = gates(1e-20);
    let fine_ok = bound.process_gates > base;
    outcome(
        band_ok && fine_ok,
        format!(
            "coarse ε gates {band:.1?}; ε = 1e-15 → {:.1}; max_depth-bound → {:.1} ({} of {} unconverged) vs {base:.1} at 1e-8",
            gates(1e-15).process_gates,
            bound.process_gates,
            bound.unconverged,
            temps.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = common::rng(7);
    let mut exact_worst: f64 = 0.0;
    for _ in 0..10 {
        let u2 = common::random_unitary(4, &mut rng);
        let c = kak_decompose(&u2).unwrap();
        exact_worst = exact_worst.max(verify_distance(&c, &u2).unwrap());
        for dim in [8, 16] {
            let u = common::random_unitary(dim, &mut rng);
            for opts in [QsdOptions::naive(), QsdOptions::optimized()] {
                let c = qsd_decompose_with(&u, opts).unwrap();
                exact_worst = exact_worst.max(verify_distance(&c, &u).unwrap());
            }
        }
    }
    let mut approx_ok = true;
    let mut approx_worst: f64 = 0.0;
    let mut approx_runs = 0;
    let params = SpinParams::unit(Spin::ONE);
    let cfg = SynthesisConfig::default();
    for t in [0.25, 0.55] {
        let state = ThermalSpinState::at_temperature(&params, t).unwrap();
        let p = spinsys::uhlmann_process(&state).unwrap();
        for op in [&p.us, &p.ua] {
            let target = uhlmann_core::basisenc::controlled(
                &uhlmann_core::basisenc::embed_triplet(op).unwrap().full,
            )
            .unwrap();
            if let Ok(r) = approx_synthesize(&target, &cfg) {
                approx_runs += 1;
                let d = verify_distance(&r.circuit, &target).unwrap();
                approx_worst = approx_worst.max(d / cfg.epsilon);
                approx_ok &= d <= cfg.epsilon;
            }
        }
    }
    for eps in [1e-3, 1e-8] {
        let cfg = SynthesisConfig::with_epsilon(eps);
        for _ in 0..3 {
            let u = common::random_unitary(4, &mut rng);
            if let Ok(r) = approx_synthesize(&u, &cfg) {
                approx_runs += 1;
                let d = verify_distance(&r.circuit, &u).unwrap();
                approx_worst = approx_worst.max(d / eps);
                approx_ok &= d <= eps;
            }
        }
    }
    let mut fid_worst: f64 = 1.0;
    for k in 0..50 {
        let n = 2 + k % 3;
        let c = common::random_circuit(&mut rng, n, 40);
        let u = unitary_of_circuit(&c).unwrap();
        for gs in [GateSet::Eagle, GateSet::Heron, GateSet::Generic] {
            let v = unitary_of_circuit(&transpile(&c, gs).unwrap()).unwrap();
            fid_worst = fid_worst.min(common::unitary_fidelity(&u, &v));
        }
    }
    outcome(
        exact_worst <= 1e-9 && approx_ok && approx_runs > 0 && fid_worst >= 1.0 - 1e-9,
        format!(
            "exact max HS {exact_worst:.2e}; {approx_runs} approximate runs, worst distance / ε = {approx_worst:.2e}; transpiled min fidelity 1 − {:.1e}",
            1.0 - fid_worst
        ),
    )
}

fn noisy(cfg: &SweepConfig, circuits: &SweepCircuits, source: NoiseSource) -> Vec<ExperimentRecord> {
    let mut c = cfg.clone();
    c.noise = Some(source);
    let recs = simulate_sweep(&c, circuits).expect("noisy sweep");
    all_ok(&recs).expect("every noisy point simulates");
    recs
}

fn criterion_8(cfg: &SweepConfig, opt: &SweepCircuits, naive: &SweepCircuits) -> Outcome {
    let mut naive_cfg = cfg.clone();
    naive_cfg.method = Method::Naive;
    let opt_eagle = noisy(cfg, opt, NoiseSource::eagle_like());
    let opt_heron = noisy(cfg, opt, NoiseSource::heron_like());
    let naive_eagle = noisy(&naive_cfg, naive, NoiseSource::eagle_like());
    let naive_heron = noisy(&naive_cfg, naive, NoiseSource::heron_like());

    let mask = plateau_mask(&opt_eagle);
    let plateau_dev: Vec<f64> = opt_eagle
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(r, _)| r.deviation().abs())
        .collect();
    let max_plateau = plateau_dev.iter().copied().fold(0.0, f64::max);
    let outside = plateau_dev.iter().filter(|d| **d > 0.5).count();
    let a = outside == 0;

    let (me, mh) = (mean_abs_deviation(&opt_eagle), mean_abs_deviation(&opt_heron));
    let b = mh < me;
    let (ne, nh) = (mean_abs_deviation(&naive_eagle), mean_abs_deviation(&naive_heron));
    let c = ne > me && nh > mh;
    outcome(
        a && b && c,
        format!(
            "(a) {outside}/{} plateau points beyond 0.5 rad, max {max_plateau:.3} ({}); (b) mean |Δθ| heron {mh:.4} vs eagle {me:.4} ({}); (c) naive {ne:.4} / {nh:.4} vs optimized {me:.4} / {mh:.4} ({})",
            plateau_dev.len(),
            pf(a),
            pf(b),
            pf(c)
        ),
    )
}

fn criterion_9(cfg: &SweepConfig) -> Outcome {
    let mut cfg = cfg.clone();
    cfg.noise = Some(NoiseSource::eagle_like());
    let rows = state_prep_distance_sweep(&cfg).expect("prep distance sweep");
    let below = rows.iter().filter(|r| r.shannon < r.arbitrary).count();
    let frac = below as f64 / rows.len() as f64;
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let arb: Vec<f64> = rows.iter().map(|r| r.arbitrary).collect();
    let sha: Vec<f64> = rows.iter().map(|r| r.shannon).collect();
    let (ra, rs) = (spearman(&t, &arb).unwrap(), spearman(&t, &sha).unwrap());
    outcome(
        frac >= 0.9 && ra < 0.0 && rs < 0.0,
        format!(
            "shannon below arbitrary at {:.1}% of points; spearman arbitrary {ra:.3}, shannon {rs:.3}",
            100.0 * frac
        ),
    )
}

fn criterion_10(sets: &[&SweepCircuits]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut inserted = 0;
    let mut compared = 0;
    for circuits in sets {
        for p in &circuits.points {
            let p = p.as_ref().expect("circuit built");
            for c in [&p.x, &p.y] {
                let dd = insert_xy4(c).expect("xy4");
                inserted += dd.gate_count() - c.gate_count();
                let u = unitary_of_circuit(&c.lower_measurements().without_measurements()).unwrap();
                let v = unitary_of_circuit(&dd.lower_measurements().without_measurements()).unwrap();
                worst = worst.max(hs_distance(&u, &v).unwrap());
                compared += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12 && inserted > 0,
        format!("{compared} circuits, {inserted} DD gates inserted, max HS distance {worst:.2e}"),
    )
}

fn criterion_11(sets: &[(&SweepConfig, &SweepCircuits)]) -> Outcome {
    let bound = 5.0 / (SHOTS as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (cfg, circuits) in sets {
        let mut exact = (*cfg).clone();
        exact.exact = true;
        let mut sampled = (*cfg).clone();
        sampled.exact = false;
        sampled.shots = SHOTS;
        let e = simulate_sweep(&exact, circuits).expect("exact sweep");
        let s = simulate_sweep(&sampled, circuits).expect("sampled sweep");
        for (a, b) in e.iter().zip(&s) {
            worst = worst.max((a.sx - b.sx).abs()).max((a.sy - b.sy).abs());
            points += 1;
        }
    }
    outcome(
        worst <= bound,
        format!("{points} points, max |sampled − exact| = {worst:.4} (bound {bound:.4})"),
    )
}

fn main() {
    let start = Instant::now();
    let mut report = Report { results: Vec::new() };

    let one = SweepConfig::new(Spin::ONE);
    let mut one_naive = one.clone();
    one_naive.method = Method::Naive;
    let half = SweepConfig::new(Spin::HALF);
    let build = Instant::now();
    let opt = build_sweep_circuits(&one).expect("optimized spin-1 circuits");
    let naive = build_sweep_circuits(&one_naive).expect("naive spin-1 circuits");
    let half_circuits = build_sweep_circuits(&half).expect("spin-1/2 circuits");
    println!(
        "built {} + {} + {} sweep circuits in {:.1} s",
        opt.points.len(),
        naive.points.len(),
        half_circuits.points.len(),
        build.elapsed().as_secs_f64()
    );

    report.run(1, "spin-1/2 phase curve", criterion_1);
    report.run(2, "spin-1 intermediate window", || criterion_2(&one, &opt));
    report.run(3, "probe coherence equals Loschmidt amplitude", criterion_3);
    report.run(4, "holonomy oracle", criterion_4);
    report.run(5, "gate-count reductions", || criterion_5(&opt, &naive));
    report.run(6, "epsilon sweep trend", criterion_6);
    report.run(7, "synthesis contracts", criterion_7);
    report.run(8, "noise qualitative reproduction", || {
        criterion_8(&one, &opt, &naive)
    });
    report.run(9, "state-preparation distance", || criterion_9(&one));
    report.run(10, "XY4 null property", || {
        criterion_10(&[&opt, &naive, &half_circuits])
    });
    report.run(11, "shot-noise statistics", || {
        criterion_11(&[(&one, &opt), (&half, &half_circuits)])
    });

    let failed: Vec<u32> = report.results.iter().filter(|r| !r.2).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{} in {:.1} s",
        report.results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" {failed:?}") },
        start.elapsed().as_secs_f64()
    );
}
