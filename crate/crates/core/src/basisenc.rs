//! Two-qubit encoding of a spin-1, triplet-only operators, and assembly of the probe-controlled
//! trace-estimation circuits.
//!
//! Register layout: qubit 0 is the probe, then the system copy, then the ancilla copy (two
//! qubits each for spin-1, one each for spin-1/2).

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Basis, Block, Circuit, Gate, ShotCounts};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::spinsys::{self, Spin, SpinParams, ThermalSpinState};
use crate::synth::{
    approx_synthesize, diagonal_circuit, multiplexed_rotation_with, qsd_decompose_with, Axis,
    MuxStyle, QsdOptions, SynthesisConfig,
};

/// Computational → physical change of basis for two qubits, `|ψ⟩_ph = M |φ⟩`.
///
/// Physical order: singlet, `|1,1⟩`, `|1,0⟩`, `|1,−1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMap {
    pub m: CMatrix,
}

pub fn m_matrix() -> BasisMap {
    let h = FRAC_1_SQRT_2;
    BasisMap {
        m: linalg::from_real_rows(&[
            &[0.0, h, -h, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, h, h, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]),
    }
}

impl BasisMap {
    /// Computational-basis image of the triplet state with index `k` (`m = 1 − k`).
    pub fn triplet_image(&self, k: usize) -> CVector {
        self.m.adjoint().column(k + 1).into_owned()
    }

    pub fn singlet(&self) -> CVector {
        self.m.adjoint().column(0).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedOperator {
    pub triplet_block: CMatrix,
    pub full: CMatrix,
}

/// `V = M† · diag(1, a) · M`: acts as `a` on the triplet and leaves the singlet alone.
pub fn embed_triplet(a: &CMatrix) -> Result<EmbeddedOperator> {
    if a.shape() != (3, 3) {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: a.nrows(),
        });
    }
    linalg::ensure_unitary(a, 1e-10, "embed_triplet")?;
    let mut block = linalg::identity(4);
    block.view_mut((1, 1), (3, 3)).copy_from(a);
    let m = m_matrix().m;
    Ok(EmbeddedOperator {
        triplet_block: a.clone(),
        full: m.adjoint() * block * m,
    })
}

/// Spin-1 rotation about `y` by `theta`, written directly in the computational basis.
pub fn two_qubit_ry(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    let rows = [
        [1.0 + co, -s, -s, 1.0 - co],
        [s, 1.0 + co, co - 1.0, -s],
        [s, co - 1.0, 1.0 + co, -s],
        [1.0 - co, s, s, 1.0 + co],
    ];
    CMatrix::from_fn(4, 4, |i, j| c(0.5 * rows[i][j], 0.0))
}

/// `diag(I, u)`: `u` applied when the control (most significant qubit) is set.
pub fn controlled(u: &CMatrix) -> Result<CMatrix> {
    if !u.is_square() {
        return Err(Error::InvalidParameter(format!("controlled of {:?}", u.shape())));
    }
    linalg::ensure_unitary(u, 1e-10, "controlled")?;
    let d = u.nrows();
    let mut out = linalg::identity(2 * d);
    out.view_mut((d, d), (d, d)).copy_from(u);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrepMethod {
    /// Binary tree of multi-controlled RY gates, one per amplitude split.
    Arbitrary,
    /// Uniformly controlled RY cascade with trivial multiplexors removed.
    Shannon,
}

/// Non-negative real target amplitudes for the system+ancilla register.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrepSpec {
    pub amplitudes: Vec<f64>,
    pub method: PrepMethod,
}

impl StatePrepSpec {
    /// Embed the purification of `state` into the register (spin-1: 4 qubits, spin-1/2: 2).
    pub fn from_state(state: &ThermalSpinState, method: PrepMethod) -> Result<StatePrepSpec> {
        let psi = spinsys::purify(state).standard_basis_amplitudes();
        let d = state.dim();
        let complex = match state.params.spin {
            s if s == Spin::HALF => psi,
            s if s == Spin::ONE => {
                let map = m_matrix();
                let images: Vec<CVector> = (0..3).map(|k| map.triplet_image(k)).collect();
                let mut v = CVector::zeros(16);
                for s in 0..d {
                    for a in 0..d {
                        let amp = psi[s * d + a];
                        if amp.norm() > 0.0 {
                            v += linalg::kron_vec(&images[a], &images[s]) * amp;
                        }
                    }
                }
                v
            }
            other => return Err(Error::UnsupportedSpin(other.j())),
        };
        // Reorder spin-1/2 amplitudes from `s * 2 + a` to the register index `s + 2 a`.
        let amplitudes: Vec<f64> = if d == 2 {
            (0..4).map(|x| complex[(x & 1) * 2 + (x >> 1)]).map(|z| z.re).collect()
        } else {
            complex.iter().map(|z| z.re).collect()
        };
        let imag = complex.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imag > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "purified amplitudes are not real (imaginary part {imag:e})"
            )));
        }
        let spec = StatePrepSpec { amplitudes, method };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "state preparation needs 2^n amplitudes, got {len}"
            )));
        }
        if let Some(a) = self.amplitudes.iter().find(|a| **a < -1e-14 || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitudes must be real and non-negative, found {a}"
            )));
        }
        let norm: f64 = self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("target norm {norm} is not 1")));
        }
        Ok(())
    }

    pub fn as_vector(&self) -> CVector {
        CVector::from_iterator(self.amplitudes.len(), self.amplitudes.iter().map(|&a| c(a, 0.0)))
    }
}

/// Split angles for target qubit `q`: one RY angle per pattern of the qubits above `q`.
fn split_angles(amps: &[f64], q: usize) -> Vec<f64> {
    let n = amps.len().trailing_zeros() as usize;
    let patterns = 1usize << (n - 1 - q);
    let mut zero = vec![0.0; patterns];
    let mut one = vec![0.0; patterns];
    for (x, a) in amps.iter().enumerate() {
        let j = x >> (q + 1);
        if (x >> q) & 1 == 0 {
            zero[j] += a * a;
        } else {
            one[j] += a * a;
        }
    }
    (0..patterns)
        .map(|j| 2.0 * one[j].sqrt().atan2(zero[j].sqrt()))
        .collect()
}

/// Multi-controlled X on `target`, all `controls` required to be `|1⟩`.
fn mcx(controls: &[usize], target: usize) -> Vec<Gate> {
    match controls.len() {
        0 => vec![Gate::x(target)],
        1 => vec![Gate::cnot(controls[0], target)],
        k => {
            let mut qubits = controls.to_vec();
            qubits.push(target);
            let mut phases = vec![0.0; 1 << (k + 1)];
            *phases.last_mut().unwrap() = PI;
            let mut out = vec![Gate::h(target)];
            out.extend(diagonal_circuit(&qubits, &phases, false));
            out.push(Gate::h(target));
            out
        }
    }
}

/// RY(`theta`) on `target` conditioned on `controls` matching `pattern` (bit b ↔ controls[b]).
fn mcry(controls: &[usize], pattern: usize, target: usize, theta: f64) -> Vec<Gate> {
    if controls.is_empty() {
        return vec![Gate::ry(target, theta)];
    }
    let flips: Vec<Gate> = controls
        .iter()
        .enumerate()
        .filter(|(b, _)| (pattern >> b) & 1 == 0)
        .map(|(_, &q)| Gate::x(q))
        .collect();
    let mut out = flips.clone();
    out.push(Gate::ry(target, theta / 2.0));
    out.extend(mcx(controls, target));
    out.push(Gate::ry(target, -theta / 2.0));
    out.extend(mcx(controls, target));
    out.extend(flips);
    out
}

/// Circuit on `spec.n_qubits()` qubits taking `|0…0⟩` to the target amplitudes.
pub fn build_state_prep(spec: &StatePrepSpec) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.n_qubits();
    let amps = &spec.amplitudes;
    let mut circ = Circuit::new(n);
    let support: Vec<usize> = (0..amps.len()).filter(|&x| amps[x] > 1e-12).collect();
    if support.len() == 1 {
        for q in 0..n {
            if (support[0] >> q) & 1 == 1 {
                circ.push(Gate::x(q))?;
            }
        }
        return Ok(circ.with_block(Block::StatePrep));
    }
    for q in (0..n).rev() {
        let controls: Vec<usize> = (q + 1..n).collect();
        let angles = split_angles(amps, q);
        match spec.method {
            PrepMethod::Arbitrary => {
                for (pattern, &theta) in angles.iter().enumerate() {
                    circ.extend(mcry(&controls, pattern, q, theta))?;
                }
            }
            PrepMethod::Shannon => {
                let style = MuxStyle {
                    simplify: true,
                    ..MuxStyle::default()
                };
                circ.extend(multiplexed_rotation_with(Axis::Y, &controls, q, &angles, style))?;
            }
        }
    }
    Ok(circ.with_block(Block::StatePrep))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Arbitrary state preparation and plain Shannon decomposition of the process.
    Naive,
    /// Shannon-cascade state preparation and approximate synthesis of the process.
    Optimized,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Optimized => "optimized",
        }
    }

    pub fn prep_method(self) -> PrepMethod {
        match self {
            Method::Naive => PrepMethod::Arbitrary,
            Method::Optimized => PrepMethod::Shannon,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Method::Naive),
            "optimized" | "optimised" => Ok(Method::Optimized),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitOptions {
    pub method: Method,
    /// Insert XY4 sequences into idle windows.
    pub dd: bool,
    pub synthesis: SynthesisConfig,
}

impl Default for CircuitOptions {
    fn default() -> Self {
        CircuitOptions {
            method: Method::Optimized,
            dd: false,
            synthesis: SynthesisConfig::default(),
        }
    }
}

/// The pair of trace-estimation circuits for one temperature.
#[derive(Debug, Clone)]
pub struct UhlmannCircuits {
    /// Probe measured in the X basis.
    pub x: Circuit,
    /// Probe measured in the Y basis.
    pub y: Circuit,
    pub state: ThermalSpinState,
}

impl UhlmannCircuits {
    pub fn n_qubits(&self) -> usize {
        self.x.n_qubits()
    }
}

pub const PROBE: usize = 0;

fn register(spin: Spin) -> (Vec<usize>, Vec<usize>) {
    let k = spin.qubits_per_copy();
    ((1..=k).collect(), (k + 1..=2 * k).collect())
}

/// Probe-controlled RY(`theta`) about the loop axis at azimuth `psi` (spin-1/2).
fn controlled_spin_half_rotation(target: usize, theta: f64, psi: f64) -> Vec<Gate> {
    let mut out = Vec::new();
    let tilted = psi.abs() > 1e-15;
    if tilted {
        out.push(Gate::rz(target, -psi));
    }
    out.extend([
        Gate::ry(target, theta / 2.0),
        Gate::cnot(PROBE, target),
        Gate::ry(target, -theta / 2.0),
        Gate::cnot(PROBE, target),
    ]);
    if tilted {
        out.push(Gate::rz(target, psi));
    }
    out
}

/// Synthesize the probe-controlled `u` on `targets` (two qubits) with the chosen method.
fn controlled_block(u: &CMatrix, targets: &[usize], opts: &CircuitOptions) -> Result<Vec<Gate>> {
    let cu = controlled(u)?;
    let local = match opts.method {
        Method::Naive => qsd_decompose_with(&cu, QsdOptions::naive())?,
        Method::Optimized => approx_synthesize(&cu, &opts.synthesis)?.circuit,
    };
    let map = [targets[0], targets[1], PROBE];
    Ok(local.gates().iter().map(|g| g.remapped(&map)).collect())
}

/// Probe preparation, purified-state preparation and the controlled process, unmeasured.
pub fn build_core_circuit(params: &SpinParams, t: f64, opts: &CircuitOptions) -> Result<(Circuit, ThermalSpinState)> {
    if !(0.01..1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "temperature {t} outside [0.01, 1)"
        )));
    }
    let spin = params.spin;
    let state = ThermalSpinState::at_temperature(params, t)?;
    let process = spinsys::uhlmann_process(&state)?;
    let (system, ancilla) = register(spin);
    let n = 1 + system.len() + ancilla.len();
    let mut circ = Circuit::new(n);
    circ.push(Gate::h(PROBE).with_block(Block::StatePrep))?;

    let spec = StatePrepSpec::from_state(&state, opts.method.prep_method())?;
    let mut map = system.clone();
    map.extend(&ancilla);
    let prep = build_state_prep(&spec)?;
    circ.append_mapped(&prep, &map)?;

    let mut gates = Vec::new();
    if spin == Spin::HALF {
        gates.extend(controlled_spin_half_rotation(
            system[0],
            process.theta_total_system,
            params.psi,
        ));
        gates.extend(controlled_spin_half_rotation(
            ancilla[0],
            process.theta_total_ancilla,
            params.psi,
        ));
    } else {
        let us = embed_triplet(&process.us)?.full;
        let ua = embed_triplet(&process.ua)?.full;
        gates.extend(controlled_block(&us, &system, opts)?);
        gates.extend(controlled_block(&ua, &ancilla, opts)?);
    }
    circ.extend(gates.into_iter().map(|g| g.with_block(Block::Process)))?;
    Ok((circ, state))
}

/// Both measurement circuits for temperature `t`.
pub fn build_uhlmann_circuit(params: &SpinParams, t: f64, opts: &CircuitOptions) -> Result<UhlmannCircuits> {
    let (core, state) = build_core_circuit(params, t, opts)?;
    let measured = |basis: Basis| -> Result<Circuit> {
        let mut c = core.clone();
        c.measure(PROBE, 0, basis)?;
        if opts.dd {
            c = insert_xy4(&c)?;
        }
        Ok(c)
    };
    Ok(UhlmannCircuits {
        x: measured(Basis::X)?,
        y: measured(Basis::Y)?,
        state,
    })
}

/// Pad idle windows longer than four single-qubit gate times with X·Y·X·Y.
///
/// Windows come from an as-soon-as-possible schedule of the gate durations. A qubit's window is
/// only padded once the qubit has been used; trailing windows are padded for measured qubits.
/// Each sequence is fenced by barriers so later single-qubit merging leaves it intact.
pub fn insert_xy4(circuit: &Circuit) -> Result<Circuit> {
    let n = circuit.n_qubits();
    let pulse = crate::circuit::DEFAULT_1Q_DURATION_NS;
    let min_window = 4.0 * pulse;
    let mut free = vec![0.0f64; n];
    let mut touched = vec![false; n];
    let mut out: Vec<Gate> = Vec::with_capacity(circuit.len());
    let xy4 = |q: usize, out: &mut Vec<Gate>| {
        out.push(Gate::barrier(vec![q]));
        for g in [Gate::x(q), Gate::y(q), Gate::x(q), Gate::y(q)] {
            out.push(g.with_block(Block::Other).with_duration(pulse));
        }
        out.push(Gate::barrier(vec![q]));
    };
    for g in circuit.gates() {
        if g.is_barrier() {
            out.push(g.clone());
            continue;
        }
        let start = g.qubits.iter().map(|&q| free[q]).fold(0.0, f64::max);
        for &q in &g.qubits {
            if touched[q] && start - free[q] > min_window {
                xy4(q, &mut out);
            }
        }
        out.push(g.clone());
        for &q in &g.qubits {
            free[q] = start + g.duration_ns;
            touched[q] = true;
        }
    }
    let end = free.iter().cloned().fold(0.0, f64::max);
    for m in circuit.measurements() {
        let q = m.qubit;
        if touched[q] && end - free[q] > min_window {
            xy4(q, &mut out);
            free[q] = end;
        }
    }
    circuit.with_gates(out)
}

/// θ_U estimate from the probe's X and Y counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub sx: f64,
    pub sy: f64,
    /// `arg(⟨σx⟩ + i⟨σy⟩)` in (−π, π].
    pub theta: f64,
    /// Both expectations lie within three standard errors of zero.
    pub indeterminate: bool,
}

/// Phase from expectation values measured with `shots` shots per basis.
pub fn phase_from_expectations(sx: f64, sy: f64, shots: u64) -> PhaseEstimate {
    let floor = if shots == 0 {
        0.0
    } else {
        3.0 / (shots as f64).sqrt()
    };
    PhaseEstimate {
        sx,
        sy,
        theta: linalg::arg(c(sx, sy)),
        indeterminate: sx.abs() < floor && sy.abs() < floor,
    }
}

pub fn phase_from_counts(counts_x: &ShotCounts, counts_y: &ShotCounts) -> Result<PhaseEstimate> {
    let (sx, sy) = crate::circuit::expectation_xy(counts_x, counts_y, 0)?;
    let shots = counts_x.shots.min(counts_y.shots);
    Ok(phase_from_expectations(sx, sy, shots))
}
