//! Exact and approximate unitary synthesis, native gate-set transpilation and gate counting.

mod approx;
mod kak;
mod multiplexor;
mod onequbit;
mod qsd;
mod report;
mod transpile;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::GateKind;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use approx::{approx_synthesize, ApproxResult};
pub use kak::{
    canonical_gate, kak, kak_decompose, kak_decompose_on, kak_decompose_on_with, kak_decompose_with,
    weyl_coordinates, KakDecomposition,
};
pub use multiplexor::{diagonal_circuit, multiplexed_rotation, multiplexed_rotation_with, Axis, MuxStyle};
pub use onequbit::{one_qubit_circuit, u3_angles, u3_circuit, zsx_sequence, zxz_sequence, OneQubitAngles};
pub use qsd::{qsd_decompose, qsd_decompose_with, QsdOptions};
pub use report::{count_report, BlockCounts, GateCountReport, MEASURE};
pub use transpile::{merge_single_qubit_runs, transpile, transpile_with, TranspileOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateSet {
    Eagle,
    Heron,
    Generic,
}

impl GateSet {
    pub fn basis(self) -> Vec<GateKind> {
        use GateKind::*;
        match self {
            GateSet::Eagle => vec![ECR, RZ, X, SX],
            GateSet::Heron => vec![RZ, RX, CNOT, SX, X, RZZ],
            GateSet::Generic => vec![U3, CNOT],
        }
    }

    pub fn contains(self, kind: GateKind) -> bool {
        kind == GateKind::Barrier || self.basis().contains(&kind)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateSet::Eagle => "eagle",
            GateSet::Heron => "heron",
            GateSet::Generic => "generic",
        }
    }
}

impl fmt::Display for GateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<GateSet> {
        match s.to_ascii_lowercase().as_str() {
            "eagle" => Ok(GateSet::Eagle),
            "heron" => Ok(GateSet::Heron),
            "generic" => Ok(GateSet::Generic),
            other => Err(Error::InvalidParameter(format!("unknown gate set `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisConfig {
    /// Target Hilbert–Schmidt distance.
    pub epsilon: f64,
    /// Maximum number of entangling blocks in the template.
    pub max_depth: usize,
    /// Optimizer iterations per candidate.
    pub iterations: usize,
    /// Random restarts per growth step (capped at 32).
    pub restarts: usize,
    /// Candidates kept between growth steps.
    pub beam_width: usize,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            epsilon: 1e-8,
            max_depth: 12,
            iterations: 300,
            restarts: 4,
            beam_width: 4,
            seed: 7,
        }
    }
}

impl SynthesisConfig {
    pub fn with_epsilon(epsilon: f64) -> SynthesisConfig {
        SynthesisConfig {
            epsilon,
            ..SynthesisConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-20..=1e-1).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} outside [1e-20, 1e-1]",
                self.epsilon
            )));
        }
        if self.max_depth == 0 || self.iterations == 0 || self.beam_width == 0 {
            return Err(Error::InvalidParameter(
                "max_depth, iterations and beam_width must be positive".into(),
            ));
        }
        if self.restarts == 0 || self.restarts > 32 {
            return Err(Error::InvalidParameter(format!(
                "restarts {} outside 1..=32",
                self.restarts
            )));
        }
        Ok(())
    }
}

/// Global-phase-invariant Hilbert–Schmidt distance `sqrt(1 - |Tr(u† v)| / N)`.
///
/// Evaluated as `‖v − e^{iφ} u‖_F / sqrt(2N)` with `φ = arg Tr(u† v)`, which is the same
/// quantity for unitaries but does not lose the small-distance digits to cancellation.
pub fn hs_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() || !u.is_square() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            found: v.nrows(),
        });
    }
    let n = u.nrows() as f64;
    let overlap: num_complex::Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    if overlap.norm() == 0.0 {
        return Ok(1.0);
    }
    let phase = overlap / overlap.norm();
    let diff: f64 = u
        .iter()
        .zip(v.iter())
        .map(|(a, b)| (b - phase * a).norm_sqr())
        .sum();
    Ok((diff / (2.0 * n)).sqrt().min(1.0))
}
