//! Temperature sweeps over circuit variants, phase extraction, state-preparation diagnostics and
//! plain-text reports.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basisenc::{
    self, build_state_prep, build_uhlmann_circuit, controlled, embed_triplet, CircuitOptions,
    Method, PrepMethod, StatePrepSpec, UhlmannCircuits,
};
use crate::circuit::{
    measured_distribution, sample_counts, simulate_density, simulate_statevector, Basis, Block,
    Circuit, Measurement, QuantumState,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::{self, build_noise_model, CalibrationData, NoiseModel};
use crate::spinsys::{self, Spin, SpinParams, ThermalSpinState, AMPLITUDE_FLOOR};
use crate::synth::{
    approx_synthesize, count_report, hs_distance, transpile, GateCountReport, GateSet,
    SynthesisConfig,
};

/// Lowest temperature of the default grid.
pub const T_MIN: f64 = 0.01;
/// Upper (excluded) end of the default grid.
pub const T_MAX: f64 = 1.0;

/// `points` uniformly spaced temperatures in `[0.01, 1)`.
pub fn uniform_grid(points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    let step = (T_MAX - T_MIN) / points as f64;
    Ok((0..points).map(|i| T_MIN + step * i as f64).collect())
}

/// A named calibration used to build noise models.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    pub label: String,
    pub calibration: CalibrationData,
}

impl NoiseSource {
    pub fn eagle_like() -> NoiseSource {
        NoiseSource {
            label: "eagle-like".into(),
            calibration: noise::eagle_like(),
        }
    }

    pub fn heron_like() -> NoiseSource {
        NoiseSource {
            label: "heron-like".into(),
            calibration: noise::heron_like(),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<NoiseSource> {
        let path = path.as_ref();
        Ok(NoiseSource {
            label: path.display().to_string(),
            calibration: noise::load_calibration(path)?,
        })
    }

    /// `none` gives no noise; `eagle-like` and `heron-like` name the bundled calibrations;
    /// anything else is read as a calibration file.
    pub fn parse(spec: &str) -> Result<Option<NoiseSource>> {
        match spec.trim().to_ascii_lowercase().as_str() {
            "" | "none" => Ok(None),
            "eagle" | "eagle-like" | "eagle_like" => Ok(Some(NoiseSource::eagle_like())),
            "heron" | "heron-like" | "heron_like" => Ok(Some(NoiseSource::heron_like())),
            _ => NoiseSource::from_path(spec).map(Some),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub params: SpinParams,
    pub grid: Vec<f64>,
    pub shots: u64,
    /// Use exact outcome probabilities instead of sampled counts.
    pub exact: bool,
    pub method: Method,
    pub dd: bool,
    pub synthesis: SynthesisConfig,
    pub gateset: GateSet,
    pub noise: Option<NoiseSource>,
    pub seed: u64,
}

impl SweepConfig {
    /// Defaults: 60-point grid, 2024 shots, optimized circuits on the Eagle gate set, no noise.
    pub fn new(spin: Spin) -> SweepConfig {
        SweepConfig {
            params: SpinParams::unit(spin),
            grid: uniform_grid(60).expect("non-empty grid"),
            shots: 2024,
            exact: false,
            method: Method::Optimized,
            dd: false,
            synthesis: SynthesisConfig::default(),
            gateset: GateSet::Eagle,
            noise: None,
            seed: 2024,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("empty temperature grid".into()));
        }
        for w in self.grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(format!(
                    "grid must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if lo < T_MIN || hi >= T_MAX {
            return Err(Error::InvalidParameter(format!(
                "grid [{lo}, {hi}] must lie within [{T_MIN}, {T_MAX})"
            )));
        }
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        self.synthesis.validate()
    }

    pub fn circuit_options(&self) -> CircuitOptions {
        CircuitOptions {
            method: self.method,
            dd: self.dd,
            synthesis: self.synthesis,
        }
    }

    fn noise_model(&self) -> Result<Option<NoiseModel>> {
        self.noise
            .as_ref()
            .map(|n| build_noise_model(&n.calibration, self.gateset))
            .transpose()
    }

    fn noise_label(&self) -> String {
        self.noise
            .as_ref()
            .map_or_else(|| "none".to_string(), |n| n.label.clone())
    }
}

/// One grid point of a sweep. Failed points keep NaN numbers and a non-empty `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    #[serde(rename = "T")]
    pub t: f64,
    pub sx: f64,
    pub sy: f64,
    pub theta_circuit: f64,
    pub theta_analytic: f64,
    #[serde(rename = "abs_G")]
    pub abs_g: f64,
    pub gates_prep: usize,
    pub gates_uhlmann: usize,
    pub gates_meas: usize,
    pub delta_s: f64,
    pub indeterminate: bool,
    pub seed: u64,
    pub spin: String,
    pub method: String,
    pub gateset: String,
    pub dd: bool,
    pub noise: String,
    pub error: String,
}

impl ExperimentRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }

    /// Circuit phase minus analytic phase, wrapped to (−π, π].
    pub fn deviation(&self) -> f64 {
        linalg::wrap_angle(self.theta_circuit - self.theta_analytic)
    }
}

/// Logical circuits of every grid point, reusable across gate sets and noise models.
pub struct SweepCircuits {
    pub grid: Vec<f64>,
    pub points: Vec<std::result::Result<UhlmannCircuits, String>>,
}

pub fn build_sweep_circuits(cfg: &SweepConfig) -> Result<SweepCircuits> {
    cfg.validate()?;
    let opts = cfg.circuit_options();
    let points = cfg
        .grid
        .par_iter()
        .map(|&t| build_uhlmann_circuit(&cfg.params, t, &opts).map_err(|e| e.to_string()))
        .collect();
    Ok(SweepCircuits {
        grid: cfg.grid.clone(),
        points,
    })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    let circuits = build_sweep_circuits(cfg)?;
    simulate_sweep(cfg, &circuits)
}

/// Simulate prebuilt circuits under `cfg`'s gate set, noise and shot settings.
pub fn simulate_sweep(cfg: &SweepConfig, circuits: &SweepCircuits) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    if circuits.grid != cfg.grid {
        return Err(Error::InvalidParameter(
            "circuits were built for a different grid".into(),
        ));
    }
    let model = cfg.noise_model()?;
    Ok(circuits
        .points
        .par_iter()
        .enumerate()
        .map(|(i, built)| {
            let t = cfg.grid[i];
            let seed = point_seed(cfg.seed, i);
            let mut rec = blank_record(cfg, t, seed);
            let outcome = built
                .as_ref()
                .map_err(|e| e.clone())
                .and_then(|c| simulate_point(cfg, model.as_ref(), i, c).map_err(|e| e.to_string()));
            match outcome {
                Ok(p) => {
                    rec.sx = p.sx;
                    rec.sy = p.sy;
                    rec.theta_circuit = p.theta;
                    rec.indeterminate = p.indeterminate;
                    rec.gates_prep = p.counts[0];
                    rec.gates_uhlmann = p.counts[1];
                    rec.gates_meas = p.counts[2];
                    rec.delta_s = p.delta_s;
                }
                Err(e) => rec.error = e,
            }
            if let Ok(g) = analytic_amplitude(&cfg.params, t) {
                rec.theta_analytic = linalg::arg(g);
                rec.abs_g = g.norm();
            }
            rec
        })
        .collect())
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ ((index as u64) << 1)
}

fn blank_record(cfg: &SweepConfig, t: f64, seed: u64) -> ExperimentRecord {
    ExperimentRecord {
        t,
        sx: f64::NAN,
        sy: f64::NAN,
        theta_circuit: f64::NAN,
        theta_analytic: f64::NAN,
        abs_g: f64::NAN,
        gates_prep: 0,
        gates_uhlmann: 0,
        gates_meas: 0,
        delta_s: f64::NAN,
        indeterminate: false,
        seed,
        spin: cfg.params.spin.to_string(),
        method: cfg.method.name().to_string(),
        gateset: cfg.gateset.to_string(),
        dd: cfg.dd,
        noise: cfg.noise_label(),
        error: String::new(),
    }
}

/// Loschmidt amplitude at temperature `t`.
pub fn analytic_amplitude(params: &SpinParams, t: f64) -> Result<num_complex::Complex64> {
    let state = ThermalSpinState::at_temperature(params, t)?;
    spinsys::loschmidt_amplitude(&state, &spinsys::uhlmann_process(&state)?)
}

struct PointResult {
    sx: f64,
    sy: f64,
    theta: f64,
    indeterminate: bool,
    counts: [usize; 3],
    delta_s: f64,
}

/// Outcome distribution of a transpiled circuit, simulated with or without noise.
fn distribution(circ: &Circuit, model: Option<&NoiseModel>) -> Result<(Box<dyn Sampler>, Vec<f64>)> {
    let bare = circ.without_measurements();
    match model {
        None => {
            let psi = simulate_statevector(&bare)?;
            let dist = measured_distribution(&psi, circ.measurements(), None)?;
            Ok((Box::new(psi), dist))
        }
        Some(m) => {
            let rho = simulate_density(&bare, Some(m))?;
            let dist = measured_distribution(&rho, circ.measurements(), Some(m.readout()))?;
            Ok((Box::new(rho), dist))
        }
    }
}

trait Sampler {
    fn sample(&self, meas: &[Measurement], shots: u64, seed: u64, model: Option<&NoiseModel>) -> Result<Vec<u64>>;
}

impl<S: QuantumState> Sampler for S {
    fn sample(&self, meas: &[Measurement], shots: u64, seed: u64, model: Option<&NoiseModel>) -> Result<Vec<u64>> {
        let counts = sample_counts(self, meas, shots, seed, model.map(|m| m.readout()))?;
        let (n0, n1) = counts.marginal(0);
        Ok(vec![n0, n1])
    }
}

fn simulate_point(cfg: &SweepConfig, model: Option<&NoiseModel>, index: usize, c: &UhlmannCircuits) -> Result<PointResult> {
    let seed = point_seed(cfg.seed, index);
    let mut expectations = [0.0; 2];
    let mut counts = [0; 3];
    for (b, circ) in [&c.x, &c.y].into_iter().enumerate() {
        let isa = transpile(circ, cfg.gateset)?;
        if b == 0 {
            counts = [
                isa.block_count(Block::StatePrep),
                isa.block_count(Block::Process),
                isa.block_count(Block::Measurement) + isa.measurements().len(),
            ];
        }
        let (state, dist) = distribution(&isa, model)?;
        expectations[b] = if cfg.exact {
            dist[0] - dist[1]
        } else {
            let n = state.sample(isa.measurements(), cfg.shots, seed ^ b as u64, model)?;
            (n[0] as f64 - n[1] as f64) / cfg.shots as f64
        };
    }
    let [sx, sy] = expectations;
    let mut phase = basisenc::phase_from_expectations(sx, sy, if cfg.exact { 0 } else { cfg.shots });
    if cfg.exact {
        phase.indeterminate = sx.hypot(sy) < AMPLITUDE_FLOOR;
    }
    let prep = prepared_distribution(&c.state, cfg.method.prep_method(), cfg.gateset, model)?;
    Ok(PointResult {
        sx,
        sy,
        theta: phase.theta,
        indeterminate: phase.indeterminate,
        counts,
        delta_s: statistical_distance(&prep.0, &prep.1)?,
    })
}

/// `(measured, target)` computational-basis distributions of the prepared purified register.
fn prepared_distribution(
    state: &ThermalSpinState,
    method: PrepMethod,
    gateset: GateSet,
    model: Option<&NoiseModel>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = StatePrepSpec::from_state(state, method)?;
    let local = build_state_prep(&spec)?;
    let k = local.n_qubits();
    // Same physical qubits as in the full circuit (qubit 0 is the probe).
    let map: Vec<usize> = (1..=k).collect();
    let mut circ = Circuit::new(k + 1);
    circ.append_mapped(&local, &map)?;
    for (b, &q) in map.iter().enumerate() {
        circ.measure(q, b, Basis::Z)?;
    }
    let isa = transpile(&circ, gateset)?;
    let (_, measured) = distribution(&isa, model)?;
    let target = spec.amplitudes.iter().map(|a| a * a).collect();
    Ok((measured, target))
}

/// `ΔS = ½ Σ |p(x) − q(x)|`.
pub fn statistical_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    for (name, d) in [("p", p), ("q", q)] {
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-9 || d.iter().any(|x| *x < -1e-12 || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} is not a probability distribution (sum {total})"
            )));
        }
    }
    let d = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepDistance {
    #[serde(rename = "T")]
    pub t: f64,
    pub arbitrary: f64,
    pub shannon: f64,
}

/// ΔS of both preparation methods against the exact purified distribution at every grid point.
pub fn state_prep_distance_sweep(cfg: &SweepConfig) -> Result<Vec<PrepDistance>> {
    cfg.validate()?;
    let model = cfg.noise_model()?;
    cfg.grid
        .par_iter()
        .map(|&t| {
            let state = ThermalSpinState::at_temperature(&cfg.params, t)?;
            let ds = |m: PrepMethod| -> Result<f64> {
                let (p, q) = prepared_distribution(&state, m, cfg.gateset, model.as_ref())?;
                statistical_distance(&p, &q)
            };
            Ok(PrepDistance {
                t,
                arbitrary: ds(PrepMethod::Arbitrary)?,
                shannon: ds(PrepMethod::Shannon)?,
            })
        })
        .collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (ties get average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidParameter("constant series has no rank correlation".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Average ISA counts of the X-basis circuits over the grid.
pub fn count_sweep(cfg: &SweepConfig) -> Result<GateCountReport> {
    let circuits = build_sweep_circuits(cfg)?;
    let isa = circuits
        .points
        .iter()
        .zip(&cfg.grid)
        .map(|(c, t)| {
            let c = c
                .as_ref()
                .map_err(|e| Error::InvalidParameter(format!("T = {t}: {e}")))?;
            transpile(&c.x, cfg.gateset)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(count_report(&isa, cfg.gateset))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    /// Mean ISA gates of the Uhlmann-process block over the temperatures.
    pub process_gates: f64,
    /// Mean CNOT-equivalent entanglers of the same block.
    pub two_qubit_gates: f64,
    /// Largest verified distance over the temperatures (both controlled blocks).
    pub max_distance: f64,
    /// Temperatures where the search stopped at `max_depth` without reaching `epsilon`.
    pub unconverged: usize,
}

/// Approximate synthesis of the spin-1 controlled pair at each `epsilon`, averaged over `temps`.
///
/// A search that stops at `max_depth` still contributes its best circuit.
pub fn epsilon_sweep(
    params: &SpinParams,
    temps: &[f64],
    epsilons: &[f64],
    gateset: GateSet,
    base: SynthesisConfig,
) -> Result<Vec<EpsilonRow>> {
    if params.spin != Spin::ONE {
        return Err(Error::UnsupportedSpin(params.spin.j()));
    }
    if temps.is_empty() {
        return Err(Error::InvalidParameter("no temperatures given".into()));
    }
    let targets = temps
        .iter()
        .map(|&t| {
            let state = ThermalSpinState::at_temperature(params, t)?;
            let p = spinsys::uhlmann_process(&state)?;
            Ok([
                controlled(&embed_triplet(&p.us)?.full)?,
                controlled(&embed_triplet(&p.ua)?.full)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    epsilons
        .iter()
        .map(|&epsilon| {
            let cfg = SynthesisConfig { epsilon, ..base };
            cfg.validate()?;
            let per_t = targets
                .par_iter()
                .map(|pair| {
                    let mut gates = 0;
                    let mut two = 0;
                    let mut worst: f64 = 0.0;
                    let mut stuck = false;
                    for u in pair {
                        let (circ, d) = match approx_synthesize(u, &cfg) {
                            Ok(r) => (r.circuit, r.distance),
                            Err(Error::SynthesisFailed { best, best_distance, .. }) => {
                                stuck = true;
                                (*best, best_distance)
                            }
                            Err(e) => return Err(e),
                        };
                        let isa = transpile(&circ, gateset)?;
                        gates += isa.gate_count();
                        two += isa.two_qubit_count();
                        worst = worst.max(d);
                    }
                    Ok((gates, two, worst, stuck))
                })
                .collect::<Result<Vec<_>>>()?;
            let n = per_t.len() as f64;
            Ok(EpsilonRow {
                epsilon,
                process_gates: per_t.iter().map(|r| r.0 as f64).sum::<f64>() / n,
                two_qubit_gates: per_t.iter().map(|r| r.1 as f64).sum::<f64>() / n,
                max_distance: per_t.iter().map(|r| r.2).fold(0.0, f64::max),
                unconverged: per_t.iter().filter(|r| r.3).count(),
            })
        })
        .collect()
}

/// HS distance between an approximate circuit and its target; exposed for reporting.
pub fn verify_distance(circ: &Circuit, target: &linalg::CMatrix) -> Result<f64> {
    hs_distance(&crate::circuit::unitary_of_circuit(circ)?, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "table" | "txt" => Ok(ReportFormat::Table),
            other => Err(Error::InvalidParameter(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn report(records: &[ExperimentRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no records to report".into()));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in records {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Table => Ok(table(records)),
    }
}

fn table(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6} {:>8} {:>5} {:>9}",
        "T", "sx", "sy", "theta", "analytic", "|G|", "prep", "uhlmann", "meas", "dS"
    );
    for r in records {
        let _ = write!(
            out,
            "{:>7.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>8} {:>5} {:>9.2e}",
            r.t,
            r.sx,
            r.sy,
            r.theta_circuit,
            r.theta_analytic,
            r.abs_g,
            r.gates_prep,
            r.gates_uhlmann,
            r.gates_meas,
            r.delta_s
        );
        if r.indeterminate {
            out.push_str("  indeterminate");
        }
        if !r.error.is_empty() {
            let _ = write!(out, "  error: {}", r.error);
        }
        out.push('\n');
    }
    let sum = |f: fn(&ExperimentRecord) -> usize| records.iter().map(f).sum::<usize>();
    let _ = writeln!(
        out,
        "{:>7} {:>59} {:>8} {:>5}",
        "total",
        sum(|r| r.gates_prep),
        sum(|r| r.gates_uhlmann),
        sum(|r| r.gates_meas)
    );
    out
}

pub fn parse_records(csv_text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_report(path: impl AsRef<Path>, records: &[ExperimentRecord], format: ReportFormat) -> Result<()> {
    std::fs::write(path, report(records, format)?)?;
    Ok(())
}
