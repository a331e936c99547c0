//! Shared inputs for the benchmarks in `benches/`.

use uhlmann_core::basisenc::{controlled, embed_triplet};
use uhlmann_core::spinsys::uhlmann_process;
use uhlmann_core::{CMatrix, Spin, SpinParams, ThermalSpinState};

/// The controlled system and ancilla blocks of the spin-1 process at temperature `t`.
pub fn spin_one_targets(t: f64) -> [CMatrix; 2] {
    let params = SpinParams::unit(Spin::ONE);
    let state = ThermalSpinState::at_temperature(&params, t).expect("valid temperature");
    let p = uhlmann_process(&state).expect("process");
    [&p.us, &p.ua].map(|op| controlled(&embed_triplet(op).expect("unitary").full).expect("unitary"))
}
