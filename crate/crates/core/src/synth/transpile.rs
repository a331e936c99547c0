//! Rewriting circuits into a native gate set.

use std::f64::consts::FRAC_PI_2;

use super::onequbit::{product, u3_circuit, zsx_sequence, zxz_sequence};
use super::GateSet;
use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranspileOptions {
    /// Collapse runs of single-qubit gates (within one block) after rewriting.
    pub merge_1q: bool,
}

impl Default for TranspileOptions {
    fn default() -> Self {
        TranspileOptions { merge_1q: true }
    }
}

pub fn transpile(circuit: &Circuit, gateset: GateSet) -> Result<Circuit> {
    transpile_with(circuit, gateset, TranspileOptions::default())
}

/// Rewrite every gate into `gateset`; X/Y measurements are lowered to explicit rotations first.
pub fn transpile_with(circuit: &Circuit, gateset: GateSet, opts: TranspileOptions) -> Result<Circuit> {
    let lowered = circuit.lower_measurements();
    let mut gates = Vec::with_capacity(lowered.len() * 2);
    for g in lowered.gates() {
        let block = g.block;
        let rewritten = rewrite(g, gateset)?;
        gates.extend(rewritten.into_iter().map(|x| x.with_block(block)));
    }
    let out = lowered.with_gates(gates)?;
    if opts.merge_1q {
        merge_single_qubit_runs(&out, gateset)
    } else {
        Ok(out)
    }
}

pub(crate) fn one_qubit_sequence(u: &CMatrix, q: usize, gateset: GateSet) -> Vec<Gate> {
    match gateset {
        GateSet::Eagle => zsx_sequence(u, q),
        GateSet::Heron => zxz_sequence(u, q),
        GateSet::Generic => u3_circuit(u, q),
    }
}

fn localise(gates: Vec<Gate>, gateset: GateSet) -> Vec<Gate> {
    gates
        .into_iter()
        .flat_map(|g| {
            if g.arity() == 1 && !gateset.contains(g.kind) {
                one_qubit_sequence(&g.matrix, g.qubits[0], gateset)
            } else {
                vec![g]
            }
        })
        .collect()
}

/// CNOT as ECR with fixed local corrections (exact up to global phase).
fn cnot_via_ecr(c: usize, t: usize) -> Vec<Gate> {
    vec![
        Gate::z(c),
        Gate::x(t),
        Gate::ecr(c, t),
        Gate::x(c),
        Gate::rz(c, FRAC_PI_2),
        Gate::rx(t, FRAC_PI_2),
    ]
}

fn ecr_via_cnot(a: usize, b: usize) -> Vec<Gate> {
    vec![
        Gate::z(a),
        Gate::x(b),
        Gate::cnot(a, b),
        Gate::rz(a, -FRAC_PI_2),
        Gate::x(a),
        Gate::rx(b, -FRAC_PI_2),
    ]
}

fn cnot_for(c: usize, t: usize, gateset: GateSet) -> Vec<Gate> {
    match gateset {
        GateSet::Eagle => cnot_via_ecr(c, t),
        _ => vec![Gate::cnot(c, t)],
    }
}

fn rewrite(g: &Gate, gateset: GateSet) -> Result<Vec<Gate>> {
    if gateset.contains(g.kind) {
        return Ok(vec![g.clone()]);
    }
    let q = &g.qubits;
    let raw = match (g.kind, g.arity()) {
        (_, 1) => return Ok(one_qubit_sequence(&g.matrix, q[0], gateset)),
        (GateKind::CNOT, 2) => cnot_for(q[0], q[1], gateset),
        (GateKind::ECR, 2) => ecr_via_cnot(q[0], q[1]),
        (GateKind::RZZ, 2) => {
            let mut v = cnot_for(q[0], q[1], gateset);
            v.push(Gate::rz(q[1], g.params[0]));
            v.extend(cnot_for(q[0], q[1], gateset));
            v
        }
        _ => {
            return Err(Error::UnconvertibleGate(format!(
                "{} on {} qubits has no rewrite into the {gateset} gate set",
                g.kind.name(),
                g.arity()
            )))
        }
    };
    Ok(localise(raw, gateset))
}

/// Collapse runs of adjacent single-qubit gates on a wire into the shortest native sequence.
///
/// Runs never cross barriers, multi-qubit gates or block boundaries; a run is only replaced
/// when the rewrite is strictly shorter.
pub fn merge_single_qubit_runs(circuit: &Circuit, gateset: GateSet) -> Result<Circuit> {
    let n = circuit.n_qubits();
    let mut pending: Vec<Vec<Gate>> = vec![Vec::new(); n];
    let mut out: Vec<Gate> = Vec::with_capacity(circuit.len());

    fn flush(run: Vec<Gate>, gateset: GateSet, out: &mut Vec<Gate>) {
        if run.is_empty() {
            return;
        }
        let block = run[0].block;
        let q = run[0].qubits[0];
        let merged = one_qubit_sequence(&product(&run), q, gateset);
        if merged.len() < run.len() {
            out.extend(merged.into_iter().map(|g| g.with_block(block)));
        } else {
            out.extend(run);
        }
    }

    for g in circuit.gates() {
        if g.arity() == 1 && !g.is_barrier() {
            let q = g.qubits[0];
            if pending[q].first().is_some_and(|p| p.block != g.block) {
                flush(std::mem::take(&mut pending[q]), gateset, &mut out);
            }
            pending[q].push(g.clone());
        } else {
            for &q in &g.qubits {
                flush(std::mem::take(&mut pending[q]), gateset, &mut out);
            }
            out.push(g.clone());
        }
    }
    for run in pending {
        flush(run, gateset, &mut out);
    }
    circuit.with_gates(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{simulate_statevector, unitary_of_circuit, Basis, Block, StateVector};
    use crate::synth::hs_distance;
    use crate::synth::kak::tests::random_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn equivalent(a: &Circuit, b: &Circuit) -> f64 {
        hs_distance(&unitary_of_circuit(a).unwrap(), &unitary_of_circuit(b).unwrap()).unwrap()
    }

    fn single(n: usize, g: Gate) -> Circuit {
        let mut c = Circuit::new(n);
        c.push(g).unwrap();
        c
    }

    fn in_basis(c: &Circuit, gs: GateSet) -> bool {
        c.gates().iter().all(|g| gs.contains(g.kind))
    }

    #[test]
    fn hadamard_on_eagle() {
        let c = single(1, Gate::h(0));
        let t = transpile(&c, GateSet::Eagle).unwrap();
        assert!(t.gates().iter().all(|g| matches!(g.kind, GateKind::RZ | GateKind::SX)));
        assert!(equivalent(&c, &t) < 1e-10);
    }

    #[test]
    fn cnot_rules() {
        let c = single(2, Gate::cnot(0, 1));
        let heron = transpile(&c, GateSet::Heron).unwrap();
        assert_eq!(heron.gates(), c.gates());
        let eagle = transpile(&c, GateSet::Eagle).unwrap();
        assert_eq!(eagle.count_kind(GateKind::ECR), 1);
        assert!(in_basis(&eagle, GateSet::Eagle));
        assert!(equivalent(&c, &eagle) < 1e-10);
        let rev = single(2, Gate::cnot(1, 0));
        assert!(equivalent(&rev, &transpile(&rev, GateSet::Eagle).unwrap()) < 1e-10);
    }

    #[test]
    fn two_qubit_rewrites() {
        for g in [Gate::ecr(0, 1), Gate::ecr(1, 0), Gate::rzz(0, 1, 0.37)] {
            let c = single(2, g);
            for gs in [GateSet::Eagle, GateSet::Heron, GateSet::Generic] {
                let t = transpile(&c, gs).unwrap();
                assert!(in_basis(&t, gs), "{gs}");
                assert!(equivalent(&c, &t) < 1e-10, "{gs}");
            }
        }
    }

    #[test]
    fn dense_multi_qubit_unitary_rejected() {
        let g = Gate::unitary(vec![0, 1], random_unitary(4, 5)).unwrap();
        let c = single(2, g);
        assert!(matches!(transpile(&c, GateSet::Eagle), Err(Error::UnconvertibleGate(_))));
        let g1 = Gate::unitary(vec![1], random_unitary(2, 5)).unwrap();
        let t = transpile(&single(2, g1.clone()), GateSet::Heron).unwrap();
        assert!(equivalent(&single(2, g1), &t) < 1e-10);
    }

    #[test]
    fn measurement_rotations_on_eagle() {
        for (basis, gates) in [(Basis::X, 3), (Basis::Y, 2)] {
            let mut c = Circuit::new(1);
            c.measure(0, 0, basis).unwrap();
            let t = transpile(&c, GateSet::Eagle).unwrap();
            assert_eq!(t.block_count(Block::Measurement), gates);
            assert_eq!(t.measurements()[0].basis, Basis::Z);
        }
    }

    #[test]
    fn merging_respects_blocks_and_barriers() {
        let mut c = Circuit::new(1);
        c.extend([
            Gate::h(0).with_block(Block::StatePrep),
            Gate::h(0).with_block(Block::StatePrep),
            Gate::x(0).with_block(Block::Process),
            Gate::barrier(vec![0]),
            Gate::x(0).with_block(Block::Process),
        ])
        .unwrap();
        let t = transpile(&c, GateSet::Generic).unwrap();
        assert_eq!(t.block_count(Block::StatePrep), 0);
        assert_eq!(t.block_count(Block::Process), 2);
        assert!(equivalent(&c, &t) < 1e-10);
    }

    fn random_circuit(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..depth {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n);
            while b == a {
                b = rng.random_range(0..n);
            }
            let t: f64 = rng.random_range(-3.0..3.0);
            let g = match rng.random_range(0..12) {
                0 => Gate::h(a),
                1 => Gate::s(a),
                2 => Gate::sdg(a),
                3 => Gate::y(a),
                4 => Gate::rx(a, t),
                5 => Gate::ry(a, t),
                6 => Gate::rz(a, t),
                7 => Gate::u3(a, t, 0.5 * t, -t),
                8 => Gate::cnot(a, b),
                9 => Gate::ecr(a, b),
                10 => Gate::rzz(a, b, t),
                _ => Gate::sx(a),
            };
            c.push(g).unwrap();
        }
        c
    }

    #[test]
    fn random_circuits_keep_semantics() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let c = random_circuit(&mut rng, 3, 30);
            let psi = simulate_statevector(&c).unwrap();
            for gs in [GateSet::Eagle, GateSet::Heron, GateSet::Generic] {
                let t = transpile(&c, gs).unwrap();
                assert!(in_basis(&t, gs));
                let phi: StateVector = simulate_statevector(&t).unwrap();
                assert!(psi.fidelity(&phi) > 1.0 - 1e-9);
            }
        }
    }
}
