//! Calibration ingestion and the Kraus channels used by the density-matrix simulator.
//!
//! Each gate is followed by a depolarizing channel with the gate's calibrated error rate
//! and then by thermal relaxation of every addressed qubit over the gate's duration.
//! Readout error is a classical confusion matrix applied to sampled bits.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde_json::{Map, Value};

use crate::circuit::{Confusion, Gate, GateKind, DEFAULT_READOUT_DURATION_NS};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ZERO};
use crate::synth::GateSet;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    pub qubits: Vec<usize>,
    pub ops: Vec<CMatrix>,
}

impl KrausChannel {
    /// `max |Σ K†K − I|`.
    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(&self.ops)
    }
}

pub fn completeness_deviation(ops: &[CMatrix]) -> f64 {
    let dim = ops.first().map_or(1, |k| k.ncols());
    let mut sum = CMatrix::zeros(dim, dim);
    for k in ops {
        sum += k.adjoint() * k;
    }
    linalg::max_abs_diff(&sum, &linalg::identity(dim))
}

fn paulis() -> [CMatrix; 4] {
    [
        linalg::identity(2),
        Gate::x(0).matrix,
        Gate::y(0).matrix,
        Gate::z(0).matrix,
    ]
}

/// `ρ → (1 − p) ρ + p I/d` on `n_qubits`, as `4^n` Pauli Kraus operators.
pub fn depolarizing_channel(p: f64, n_qubits: usize) -> Result<Vec<CMatrix>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing probability {p} outside [0, 1]"
        )));
    }
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("depolarizing on zero qubits".into()));
    }
    let d2 = (1usize << (2 * n_qubits)) as f64;
    let single = paulis();
    let mut ops = Vec::with_capacity(d2 as usize);
    for idx in 0..(d2 as usize) {
        let mut op = linalg::identity(1);
        for q in (0..n_qubits).rev() {
            op = linalg::kron(&op, &single[(idx >> (2 * q)) & 3]);
        }
        let weight = if idx == 0 { 1.0 - p + p / d2 } else { p / d2 };
        if weight > 0.0 {
            ops.push(op * c(weight.sqrt(), 0.0));
        }
    }
    Ok(ops)
}

/// Amplitude plus phase damping: populations relax as `exp(-t/T1)`, coherences as `exp(-t/T2)`.
/// `T1`, `T2` in µs, `duration` in ns.
pub fn thermal_relaxation(t1_us: f64, t2_us: f64, duration_ns: f64) -> Result<Vec<CMatrix>> {
    if !(t1_us > 0.0 && t2_us > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T1 = {t1_us} µs and T2 = {t2_us} µs must be positive"
        )));
    }
    if t2_us > 2.0 * t1_us * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "T2 = {t2_us} µs exceeds 2·T1 = {} µs",
            2.0 * t1_us
        )));
    }
    if !(duration_ns >= 0.0 && duration_ns.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration_ns} ns must be non-negative"
        )));
    }
    let t = duration_ns * 1e-3;
    let gamma = 1.0 - (-t / t1_us).exp();
    // Coherence left after amplitude damping is exp(-t/2T1); dephasing supplies the rest.
    let extra = (-t / t2_us + t / (2.0 * t1_us)).exp().min(1.0);
    let lambda = 1.0 - extra * extra;
    let a0 = linalg::from_rows(&[&[c(1.0, 0.0), ZERO], &[ZERO, c((1.0 - gamma).sqrt(), 0.0)]]);
    let a1 = linalg::from_rows(&[&[ZERO, c(gamma.sqrt(), 0.0)], &[ZERO, ZERO]]);
    let p0 = linalg::from_rows(&[&[c(1.0, 0.0), ZERO], &[ZERO, c((1.0 - lambda).sqrt(), 0.0)]]);
    let p1 = linalg::from_rows(&[&[ZERO, ZERO], &[ZERO, c(lambda.sqrt(), 0.0)]]);
    let mut ops = vec![&p0 * &a0];
    if gamma > 0.0 {
        ops.push(&p0 * &a1);
    }
    if lambda > 0.0 {
        ops.push(&p1 * &a0);
    }
    Ok(ops)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitCalibration {
    /// `None` disables relaxation on this qubit.
    pub t1_us: Option<f64>,
    pub t2_us: Option<f64>,
    pub readout: Confusion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateCalibration {
    pub kind: GateKind,
    /// `None` applies to every qubit tuple of this kind.
    pub qubits: Option<Vec<usize>>,
    pub error: f64,
    pub duration_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationData {
    pub qubits: Vec<QubitCalibration>,
    pub gates: Vec<GateCalibration>,
    pub readout_duration_ns: f64,
}

fn cal_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Calibration {
        field: field.into(),
        message: message.into(),
    }
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(cal_err(format!("{path}.{key}"), "unknown key"));
        }
    }
    Ok(())
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| cal_err(path, "expected a finite number"))
}

fn parse_confusion(v: &Value, path: &str) -> Result<Confusion> {
    let rows = v
        .as_array()
        .filter(|r| r.len() == 2)
        .ok_or_else(|| cal_err(path, "expected a 2x2 array"))?;
    let mut out = [[0.0; 2]; 2];
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let cols = row
            .as_array()
            .filter(|r| r.len() == 2)
            .ok_or_else(|| cal_err(&rp, "expected two entries"))?;
        for (j, x) in cols.iter().enumerate() {
            let x = number(x, &format!("{rp}[{j}]"))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(cal_err(format!("{rp}[{j}]"), "probability outside [0, 1]"));
            }
            out[i][j] = x;
        }
        if (out[i][0] + out[i][1] - 1.0).abs() > 1e-9 {
            return Err(cal_err(rp, "row does not sum to 1"));
        }
    }
    Ok(out)
}

fn parse_qubit(v: &Value, path: &str) -> Result<QubitCalibration> {
    let obj = v
        .as_object()
        .ok_or_else(|| cal_err(path, "expected an object"))?;
    check_keys(obj, &["t1_us", "t2_us", "readout"], path)?;
    let t1 = obj
        .get("t1_us")
        .map(|x| number(x, &format!("{path}.t1_us")))
        .transpose()?;
    let t2 = obj
        .get("t2_us")
        .map(|x| number(x, &format!("{path}.t2_us")))
        .transpose()?;
    for (name, val) in [("t1_us", t1), ("t2_us", t2)] {
        if matches!(val, Some(x) if x <= 0.0) {
            return Err(cal_err(format!("{path}.{name}"), "must be positive"));
        }
    }
    let (t1, t2) = match (t1, t2) {
        (Some(a), Some(b)) => (Some(a), Some(b)),
        // T2 defaults to its upper bound, which is pure amplitude damping.
        (Some(a), None) => (Some(a), Some(2.0 * a)),
        (None, Some(_)) => return Err(cal_err(format!("{path}.t1_us"), "required when t2_us is given")),
        (None, None) => (None, None),
    };
    if let (Some(a), Some(b)) = (t1, t2) {
        if b > 2.0 * a {
            return Err(cal_err(
                format!("{path}.t2_us"),
                format!("T2 = {b} µs exceeds 2·T1 = {} µs", 2.0 * a),
            ));
        }
    }
    let readout = match obj.get("readout") {
        Some(r) => parse_confusion(r, &format!("{path}.readout"))?,
        None => [[1.0, 0.0], [0.0, 1.0]],
    };
    Ok(QubitCalibration {
        t1_us: t1,
        t2_us: t2,
        readout,
    })
}

enum GateEntry {
    Gate(GateCalibration),
    Readout(f64),
}

fn parse_gate(v: &Value, path: &str, n_qubits: usize) -> Result<GateEntry> {
    let obj = v
        .as_object()
        .ok_or_else(|| cal_err(path, "expected an object"))?;
    check_keys(obj, &["kind", "qubits", "error", "duration_ns"], path)?;
    let name = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| cal_err(format!("{path}.kind"), "expected a gate name"))?;
    let duration = obj
        .get("duration_ns")
        .map(|x| number(x, &format!("{path}.duration_ns")))
        .transpose()?;
    if matches!(duration, Some(d) if d < 0.0) {
        return Err(cal_err(format!("{path}.duration_ns"), "must be non-negative"));
    }
    if name == "measure" {
        return Ok(GateEntry::Readout(
            duration.unwrap_or(DEFAULT_READOUT_DURATION_NS),
        ));
    }
    let kind = GateKind::from_name(name)
        .filter(|k| !matches!(k, GateKind::Unitary | GateKind::Barrier))
        .ok_or_else(|| cal_err(format!("{path}.kind"), format!("unknown gate `{name}`")))?;
    let error = obj
        .get("error")
        .map(|x| number(x, &format!("{path}.error")))
        .transpose()?
        .unwrap_or(0.0);
    if !(0.0..1.0).contains(&error) {
        return Err(cal_err(format!("{path}.error"), "must lie in [0, 1)"));
    }
    let qubits = match obj.get("qubits") {
        None => None,
        Some(q) => {
            let qp = format!("{path}.qubits");
            let list = q
                .as_array()
                .ok_or_else(|| cal_err(&qp, "expected an array of qubit indices"))?;
            let mut out = Vec::new();
            for (i, x) in list.iter().enumerate() {
                let idx = x
                    .as_u64()
                    .ok_or_else(|| cal_err(format!("{qp}[{i}]"), "expected a qubit index"))?
                    as usize;
                if idx >= n_qubits {
                    return Err(cal_err(format!("{qp}[{i}]"), "qubit not listed in `qubits`"));
                }
                out.push(idx);
            }
            if Some(out.len()) != kind.arity() {
                return Err(cal_err(qp, format!("{kind} acts on {:?} qubits", kind.arity())));
            }
            Some(out)
        }
    };
    let arity = kind.arity().unwrap_or(1);
    Ok(GateEntry::Gate(GateCalibration {
        kind,
        qubits,
        error,
        duration_ns: duration.unwrap_or_else(|| kind.default_duration_ns(arity)),
    }))
}

pub fn parse_calibration(text: &str) -> Result<CalibrationData> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root
        .as_object()
        .ok_or_else(|| cal_err("$", "expected an object"))?;
    check_keys(obj, &["qubits", "gates"], "$")?;
    let qubit_list = obj
        .get("qubits")
        .and_then(Value::as_array)
        .ok_or_else(|| cal_err("$.qubits", "expected an array"))?;
    if qubit_list.is_empty() {
        return Err(cal_err("$.qubits", "at least one qubit is required"));
    }
    let qubits = qubit_list
        .iter()
        .enumerate()
        .map(|(i, q)| parse_qubit(q, &format!("$.qubits[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let mut gates = Vec::new();
    let mut readout_duration_ns = DEFAULT_READOUT_DURATION_NS;
    if let Some(list) = obj.get("gates") {
        let list = list
            .as_array()
            .ok_or_else(|| cal_err("$.gates", "expected an array"))?;
        for (i, g) in list.iter().enumerate() {
            match parse_gate(g, &format!("$.gates[{i}]"), qubits.len())? {
                GateEntry::Gate(g) => gates.push(g),
                GateEntry::Readout(d) => readout_duration_ns = d,
            }
        }
    }
    Ok(CalibrationData {
        qubits,
        gates,
        readout_duration_ns,
    })
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<CalibrationData> {
    let text = std::fs::read_to_string(path)?;
    parse_calibration(&text)
}

/// Representative calibration resembling an Eagle-generation device.
pub fn eagle_like() -> CalibrationData {
    parse_calibration(include_str!("../data/eagle_like.json")).expect("bundled calibration")
}

/// Representative calibration resembling a Heron-generation device.
pub fn heron_like() -> CalibrationData {
    parse_calibration(include_str!("../data/heron_like.json")).expect("bundled calibration")
}

impl CalibrationData {
    /// Noise-free calibration on `n_qubits` covering every gate kind.
    pub fn ideal(n_qubits: usize) -> CalibrationData {
        let kinds = [
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::SX,
            GateKind::RX,
            GateKind::RY,
            GateKind::RZ,
            GateKind::U3,
            GateKind::CNOT,
            GateKind::ECR,
            GateKind::RZZ,
        ];
        CalibrationData {
            qubits: vec![
                QubitCalibration {
                    t1_us: None,
                    t2_us: None,
                    readout: [[1.0, 0.0], [0.0, 1.0]],
                };
                n_qubits
            ],
            gates: kinds
                .iter()
                .map(|&k| GateCalibration {
                    kind: k,
                    qubits: None,
                    error: 0.0,
                    duration_ns: k.default_duration_ns(k.arity().unwrap_or(1)),
                })
                .collect(),
            readout_duration_ns: DEFAULT_READOUT_DURATION_NS,
        }
    }

    /// Multiply every error rate (gate errors, readout flips, relaxation rates) by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<CalibrationData> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {alpha} must be >= 0")));
        }
        let mut out = self.clone();
        for g in &mut out.gates {
            g.error *= alpha;
            if g.error >= 1.0 {
                return Err(cal_err(g.kind.name(), "scaled error rate reaches 1"));
            }
        }
        for q in &mut out.qubits {
            if alpha == 0.0 {
                q.t1_us = None;
                q.t2_us = None;
            } else {
                q.t1_us = q.t1_us.map(|t| t / alpha);
                q.t2_us = q.t2_us.map(|t| t / alpha);
            }
            for row in 0..2 {
                let flip = (q.readout[row][1 - row] * alpha).min(1.0);
                q.readout[row][1 - row] = flip;
                q.readout[row][row] = 1.0 - flip;
            }
        }
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    fn lookup(&self, kind: GateKind, qubits: &[usize]) -> Option<&GateCalibration> {
        self.gates
            .iter()
            .find(|g| g.kind == kind && g.qubits.as_deref() == Some(qubits))
            .or_else(|| self.gates.iter().find(|g| g.kind == kind && g.qubits.is_none()))
    }

    /// Mean calibrated error over entries of `kind` (useful for summaries).
    pub fn mean_error(&self, kind: GateKind) -> Option<f64> {
        let errs: Vec<f64> = self
            .gates
            .iter()
            .filter(|g| g.kind == kind)
            .map(|g| g.error)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

fn tuples(n: usize, arity: usize) -> Vec<Vec<usize>> {
    match arity {
        1 => (0..n).map(|q| vec![q]).collect(),
        2 => (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| vec![a, b]))
            .collect(),
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct NoiseModel {
    gateset: GateSet,
    n_qubits: usize,
    channels: HashMap<(GateKind, Vec<usize>), Vec<KrausChannel>>,
    durations: HashMap<(GateKind, Vec<usize>), f64>,
    readout: Vec<Confusion>,
}

pub fn build_noise_model(cal: &CalibrationData, gateset: GateSet) -> Result<NoiseModel> {
    let n = cal.n_qubits();
    let mut missing = BTreeSet::new();
    let mut channels = HashMap::new();
    let mut durations = HashMap::new();
    for kind in gateset.basis() {
        let arity = kind.arity().unwrap_or(1);
        for qs in tuples(n, arity) {
            let Some(entry) = cal.lookup(kind, &qs) else {
                missing.insert(format!("{kind} on {qs:?}"));
                continue;
            };
            let mut list = Vec::new();
            if entry.error > 0.0 {
                list.push(KrausChannel {
                    qubits: qs.clone(),
                    ops: depolarizing_channel(entry.error, arity)?,
                });
            }
            for &q in &qs {
                let qc = &cal.qubits[q];
                if let (Some(t1), Some(t2)) = (qc.t1_us, qc.t2_us) {
                    if entry.duration_ns > 0.0 {
                        list.push(KrausChannel {
                            qubits: vec![q],
                            ops: thermal_relaxation(t1, t2, entry.duration_ns)?,
                        });
                    }
                }
            }
            for ch in &list {
                let dev = ch.completeness_deviation();
                if dev > 1e-12 {
                    return Err(Error::MalformedNoise(format!(
                        "{kind} on {qs:?} is not trace preserving ({dev:e})"
                    )));
                }
            }
            durations.insert((kind, qs.clone()), entry.duration_ns);
            channels.insert((kind, qs), list);
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCoverage(missing.into_iter().collect()));
    }
    Ok(NoiseModel {
        gateset,
        n_qubits: n,
        channels,
        durations,
        readout: cal.qubits.iter().map(|q| q.readout).collect(),
    })
}

impl NoiseModel {
    pub fn gateset(&self) -> GateSet {
        self.gateset
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn readout(&self) -> &[Confusion] {
        &self.readout
    }

    /// Channels to apply after `gate`'s unitary.
    pub fn channels_for(&self, gate: &Gate) -> Result<&[KrausChannel]> {
        if gate.is_barrier() {
            return Ok(&[]);
        }
        self.channels
            .get(&(gate.kind, gate.qubits.clone()))
            .map(Vec::as_slice)
            .ok_or_else(|| {
                Error::MissingCoverage(vec![format!("{} on {:?}", gate.kind, gate.qubits)])
            })
    }

    /// Calibrated duration of `gate`, falling back to the gate's own duration.
    pub fn duration_ns(&self, gate: &Gate) -> f64 {
        self.durations
            .get(&(gate.kind, gate.qubits.clone()))
            .copied()
            .unwrap_or(gate.duration_ns)
    }

    /// Total depolarizing weight per gate kind, for summaries.
    pub fn kinds(&self) -> BTreeMap<GateKind, usize> {
        let mut out = BTreeMap::new();
        for (kind, _) in self.channels.keys() {
            *out.entry(*kind).or_insert(0) += 1;
        }
        out
    }
}
