//! Gate-level circuit representation and the simulators that consume it.

mod density;
pub mod qasm;
mod sampling;
mod statevector;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I, ONE, ZERO};

pub use density::{simulate_density, DensityMatrixState};
pub use sampling::{
    expectation_xy, measured_distribution, sample_counts, Confusion, QuantumState, ShotCounts,
};
pub use statevector::{apply_gate, simulate_from, simulate_statevector, unitary_of_circuit, StateVector};

pub const DEFAULT_1Q_DURATION_NS: f64 = 35.0;
pub const DEFAULT_2Q_DURATION_NS: f64 = 300.0;
pub const DEFAULT_READOUT_DURATION_NS: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    SX,
    RX,
    RY,
    RZ,
    U3,
    CNOT,
    ECR,
    RZZ,
    Unitary,
    Barrier,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
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
        GateKind::Unitary,
        GateKind::Barrier,
    ];

    /// Lower-case name as used in OpenQASM and calibration files.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::SX => "sx",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
            GateKind::U3 => "u3",
            GateKind::CNOT => "cx",
            GateKind::ECR => "ecr",
            GateKind::RZZ => "rzz",
            GateKind::Unitary => "unitary",
            GateKind::Barrier => "barrier",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        let lower = name.to_ascii_lowercase();
        let alias = match lower.as_str() {
            "cnot" => "cx",
            "u" => "u3",
            other => other,
        };
        GateKind::ALL.into_iter().find(|k| k.name() == alias)
    }

    /// Fixed arity, or `None` for kinds that take any number of qubits.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::CNOT | GateKind::ECR | GateKind::RZZ => Some(2),
            GateKind::Unitary | GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ => 1,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Virtual gates (frame changes) take no time on hardware.
    pub fn default_duration_ns(self, arity: usize) -> f64 {
        match self {
            GateKind::RZ | GateKind::Barrier => 0.0,
            _ if arity >= 2 => DEFAULT_2Q_DURATION_NS,
            _ => DEFAULT_1Q_DURATION_NS,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which logical stage of the experiment a gate belongs to (used for gate-count reports).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Block {
    StatePrep,
    Process,
    Measurement,
    Other,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::StatePrep, Block::Process, Block::Measurement, Block::Other];

    pub fn name(self) -> &'static str {
        match self {
            Block::StatePrep => "state_prep",
            Block::Process => "uhlmann_process",
            Block::Measurement => "trace_estimation",
            Block::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
    pub matrix: CMatrix,
    pub duration_ns: f64,
    pub block: Block,
}

pub fn rx_matrix(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    linalg::from_rows(&[&[c(co, 0.0), c(0.0, -s)], &[c(0.0, -s), c(co, 0.0)]])
}

pub fn ry_matrix(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    linalg::from_real_rows(&[&[co, -s], &[s, co]])
}

pub fn rz_matrix(theta: f64) -> CMatrix {
    linalg::from_rows(&[
        &[Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        &[ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ])
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    linalg::from_rows(&[
        &[c(co, 0.0), -Complex64::from_polar(s, lambda)],
        &[
            Complex64::from_polar(s, phi),
            Complex64::from_polar(co, phi + lambda),
        ],
    ])
}

pub fn rzz_matrix(theta: f64) -> CMatrix {
    let a = Complex64::from_polar(1.0, -theta / 2.0);
    let b = Complex64::from_polar(1.0, theta / 2.0);
    CMatrix::from_diagonal(&linalg::CVector::from_vec(vec![a, b, b, a]))
}

fn fixed_matrix(kind: GateKind) -> CMatrix {
    let h = FRAC_1_SQRT_2;
    match kind {
        GateKind::X => linalg::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        GateKind::Y => linalg::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        GateKind::Z => linalg::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
        GateKind::H => linalg::from_real_rows(&[&[h, h], &[h, -h]]),
        GateKind::S => linalg::from_rows(&[&[ONE, ZERO], &[ZERO, I]]),
        GateKind::Sdg => linalg::from_rows(&[&[ONE, ZERO], &[ZERO, -I]]),
        GateKind::SX => linalg::from_rows(&[
            &[c(0.5, 0.5), c(0.5, -0.5)],
            &[c(0.5, -0.5), c(0.5, 0.5)],
        ]),
        // Local qubit 0 (first listed) is the control.
        GateKind::CNOT => linalg::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]),
        GateKind::ECR => {
            let z = ZERO;
            let o = c(h, 0.0);
            let i = c(0.0, h);
            linalg::from_rows(&[&[z, o, z, i], &[o, z, -i, z], &[z, i, z, o], &[-i, z, o, z]])
        }
        _ => unreachable!("{kind} has parameters or variable arity"),
    }
}

impl Gate {
    /// Build a named gate; its matrix is derived from `kind` and `params`.
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Gate> {
        let arity = match kind.arity() {
            Some(a) => a,
            None => {
                return Err(Error::InvalidParameter(format!(
                    "{kind} needs an explicit matrix or qubit list"
                )))
            }
        };
        if qubits.len() != arity {
            return Err(Error::InvalidParameter(format!(
                "{kind} acts on {arity} qubit(s), got {}",
                qubits.len()
            )));
        }
        check_distinct(&qubits)?;
        if params.len() != kind.param_count() {
            return Err(Error::InvalidParameter(format!(
                "{kind} takes {} parameter(s), got {}",
                kind.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("{kind} has a non-finite angle")));
        }
        let matrix = match kind {
            GateKind::RX => rx_matrix(params[0]),
            GateKind::RY => ry_matrix(params[0]),
            GateKind::RZ => rz_matrix(params[0]),
            GateKind::RZZ => rzz_matrix(params[0]),
            GateKind::U3 => u3_matrix(params[0], params[1], params[2]),
            _ => fixed_matrix(kind),
        };
        Ok(Gate {
            kind,
            duration_ns: kind.default_duration_ns(arity),
            qubits,
            params,
            matrix,
            block: Block::Other,
        })
    }

    /// A dense unitary on `qubits`; local qubit `k` of `matrix` is `qubits[k]` (LSB first).
    pub fn unitary(qubits: Vec<usize>, matrix: CMatrix) -> Result<Gate> {
        if qubits.is_empty() {
            return Err(Error::InvalidParameter("unitary gate on no qubits".into()));
        }
        check_distinct(&qubits)?;
        let dim = 1usize << qubits.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        linalg::ensure_unitary(&matrix, 1e-10, "unitary gate")?;
        Ok(Gate {
            kind: GateKind::Unitary,
            duration_ns: GateKind::Unitary.default_duration_ns(qubits.len()),
            qubits,
            params: Vec::new(),
            matrix,
            block: Block::Other,
        })
    }

    pub fn barrier(qubits: Vec<usize>) -> Gate {
        let dim = 1usize << qubits.len();
        Gate {
            kind: GateKind::Barrier,
            qubits,
            params: Vec::new(),
            matrix: linalg::identity(dim),
            duration_ns: 0.0,
            block: Block::Other,
        }
    }

    fn fixed(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Gate {
        Gate::new(kind, qubits, params).expect("well-formed built-in gate")
    }

    pub fn x(q: usize) -> Gate {
        Gate::fixed(GateKind::X, vec![q], vec![])
    }
    pub fn y(q: usize) -> Gate {
        Gate::fixed(GateKind::Y, vec![q], vec![])
    }
    pub fn z(q: usize) -> Gate {
        Gate::fixed(GateKind::Z, vec![q], vec![])
    }
    pub fn h(q: usize) -> Gate {
        Gate::fixed(GateKind::H, vec![q], vec![])
    }
    pub fn s(q: usize) -> Gate {
        Gate::fixed(GateKind::S, vec![q], vec![])
    }
    pub fn sdg(q: usize) -> Gate {
        Gate::fixed(GateKind::Sdg, vec![q], vec![])
    }
    pub fn sx(q: usize) -> Gate {
        Gate::fixed(GateKind::SX, vec![q], vec![])
    }
    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RX, vec![q], vec![theta])
    }
    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RY, vec![q], vec![theta])
    }
    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RZ, vec![q], vec![theta])
    }
    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Gate {
        Gate::fixed(GateKind::U3, vec![q], vec![theta, phi, lambda])
    }
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::CNOT, vec![control, target], vec![])
    }
    pub fn ecr(a: usize, b: usize) -> Gate {
        Gate::fixed(GateKind::ECR, vec![a, b], vec![])
    }
    pub fn rzz(a: usize, b: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RZZ, vec![a, b], vec![theta])
    }

    pub fn with_block(mut self, block: Block) -> Gate {
        self.block = block;
        self
    }

    pub fn with_duration(mut self, duration_ns: f64) -> Gate {
        self.duration_ns = duration_ns;
        self
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_barrier(&self) -> bool {
        self.kind == GateKind::Barrier
    }

    /// Same gate relabelled through `map[old] = new`.
    pub fn remapped(&self, map: &[usize]) -> Gate {
        let mut g = self.clone();
        g.qubits = self.qubits.iter().map(|&q| map[q]).collect();
        g
    }
}

fn check_distinct(qubits: &[usize]) -> Result<()> {
    for (i, a) in qubits.iter().enumerate() {
        if qubits[i + 1..].contains(a) {
            return Err(Error::InvalidParameter(format!(
                "qubit {a} listed twice in one gate"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub qubit: usize,
    pub clbit: usize,
    pub basis: Basis,
}

/// Rotation taking `basis` eigenstates to the computational basis (H for X; S† then H for Y).
pub fn basis_rotation(qubit: usize, basis: Basis) -> Vec<Gate> {
    match basis {
        Basis::Z => vec![],
        Basis::X => vec![Gate::h(qubit)],
        Basis::Y => vec![Gate::sdg(qubit), Gate::h(qubit)],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    measurements: Vec<Measurement>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Circuit {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            measurements: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if !self.measurements.is_empty() {
            return Err(Error::InvalidParameter(
                "gates cannot follow measurements".into(),
            ));
        }
        for &q in &gate.qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    /// Append all gates of `other` (same width), keeping its measurements out.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        self.extend(other.gates.iter().cloned())
    }

    /// Append `other` with its qubit `k` placed on `map[k]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<()> {
        if map.len() != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: other.n_qubits,
                found: map.len(),
            });
        }
        self.extend(other.gates.iter().map(|g| g.remapped(map)))
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize, basis: Basis) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        if self.measurements.iter().any(|m| m.clbit == clbit || m.qubit == qubit) {
            return Err(Error::InvalidParameter(format!(
                "qubit {qubit} or bit {clbit} is already measured"
            )));
        }
        self.measurements.push(Measurement {
            qubit,
            clbit,
            basis,
        });
        Ok(())
    }

    pub fn n_clbits(&self) -> usize {
        self.measurements.iter().map(|m| m.clbit + 1).max().unwrap_or(0)
    }

    /// The same gates without any measurements.
    pub fn without_measurements(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.clone(),
            measurements: Vec::new(),
        }
    }

    /// Replace X/Y measurements by explicit basis-rotation gates followed by Z measurements.
    pub fn lower_measurements(&self) -> Circuit {
        let mut out = self.without_measurements();
        for m in &self.measurements {
            for g in basis_rotation(m.qubit, m.basis) {
                out.gates.push(g.with_block(Block::Measurement));
            }
            out.measurements.push(Measurement {
                basis: Basis::Z,
                ..*m
            });
        }
        out
    }

    pub fn set_block(&mut self, block: Block) {
        for g in &mut self.gates {
            g.block = block;
        }
    }

    pub fn with_block(mut self, block: Block) -> Circuit {
        self.set_block(block);
        self
    }

    /// Rebuild with a new gate list (same width and measurements).
    pub fn with_gates(&self, gates: Vec<Gate>) -> Result<Circuit> {
        let mut out = Circuit::new(self.n_qubits);
        out.extend(gates)?;
        out.measurements = self.measurements.clone();
        Ok(out)
    }

    /// Adjoint circuit (gate order reversed, each gate daggered as a dense unitary when needed).
    pub fn inverse(&self) -> Result<Circuit> {
        if !self.measurements.is_empty() {
            return Err(Error::MeasurementPresent);
        }
        let mut out = Circuit::new(self.n_qubits);
        for g in self.gates.iter().rev() {
            let inv = match g.kind {
                GateKind::Barrier => g.clone(),
                GateKind::X | GateKind::Y | GateKind::Z | GateKind::H | GateKind::CNOT => g.clone(),
                GateKind::S => Gate::sdg(g.qubits[0]),
                GateKind::Sdg => Gate::s(g.qubits[0]),
                GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ => {
                    Gate::new(g.kind, g.qubits.clone(), vec![-g.params[0]])?
                }
                GateKind::U3 => Gate::u3(g.qubits[0], -g.params[0], -g.params[2], -g.params[1]),
                _ => Gate::unitary(g.qubits.clone(), g.matrix.adjoint())?,
            };
            out.gates.push(inv.with_block(g.block).with_duration(g.duration_ns));
        }
        Ok(out)
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Number of gates excluding barriers.
    pub fn gate_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_barrier()).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| !g.is_barrier() && g.arity() >= 2)
            .count()
    }

    /// Gates excluding barriers in `block`.
    pub fn block_count(&self, block: Block) -> usize {
        self.gates
            .iter()
            .filter(|g| !g.is_barrier() && g.block == block)
            .count()
    }
}

/// Global phase is unobservable; `wrap` keeps rotation angles in (-π, π].
pub(crate) fn wrap(theta: f64) -> f64 {
    let w = linalg::wrap_angle(theta);
    if (w - PI).abs() < 1e-15 {
        PI
    } else {
        w
    }
}
