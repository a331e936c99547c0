//! Finite-temperature Uhlmann phase of spin-1/2 and spin-1 systems: analytic model, circuit
//! construction and simulation, unitary synthesis for native gate sets, and calibration-based
//! noise.

pub mod basisenc;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod noise;
pub mod spinsys;
pub mod synth;

pub use circuit::{Basis, Block, Circuit, Gate, GateKind};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use noise::{CalibrationData, NoiseModel};
pub use spinsys::{Spin, SpinParams, ThermalSpinState};
pub use synth::{GateSet, SynthesisConfig};
