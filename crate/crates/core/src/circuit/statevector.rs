use num_complex::Complex64;

use super::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits`.
    pub fn zero(n_qubits: usize) -> StateVector {
        let mut amplitudes = CVector::zeros(1 << n_qubits);
        amplitudes[0] = ONE;
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: CVector) -> Result<StateVector> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len == 0 {
            return Err(Error::InvalidParameter(format!(
                "state length {len} is not a power of two"
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "state norm is {norm}, expected 1"
            )));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    /// Reduced density matrix of the listed qubits (local qubit `k` is `keep[k]`).
    pub fn reduced_density(&self, keep: &[usize]) -> CMatrix {
        let k = keep.len();
        let dim = 1usize << k;
        let mut rho = CMatrix::zeros(dim, dim);
        let mask: usize = keep.iter().map(|&q| 1usize << q).sum();
        let local = |i: usize| -> usize {
            keep.iter()
                .enumerate()
                .map(|(b, &q)| ((i >> q) & 1) << b)
                .sum()
        };
        // Group basis indices by the traced-out bits.
        let full = 1usize << self.n_qubits;
        for env in (0..full).filter(|i| i & mask == 0) {
            let members: Vec<usize> = (0..full).filter(|i| i & !mask == env).collect();
            for &a in &members {
                for &b in &members {
                    rho[(local(a), local(b))] += self.amplitudes[a] * self.amplitudes[b].conj();
                }
            }
        }
        rho
    }
}

/// Apply `m` to the qubits `qubits` of a register of `n` qubits stored in `amps`.
pub(crate) fn apply_local(amps: &mut [Complex64], n: usize, qubits: &[usize], m: &CMatrix) {
    let k = qubits.len();
    let dim = 1usize << k;
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|l| {
            qubits
                .iter()
                .enumerate()
                .map(|(b, &q)| ((l >> b) & 1) << q)
                .sum()
        })
        .collect();
    let mut buf = vec![ZERO; dim];
    for base in 0..(1usize << n) {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (col, b) in buf.iter().enumerate() {
                acc += m[(r, col)] * b;
            }
            amps[base | off] = acc;
        }
    }
}

fn check_range(gate: &Gate, n: usize) -> Result<()> {
    for &q in &gate.qubits {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits: n });
        }
    }
    Ok(())
}

pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_in_place(&mut out, gate)?;
    Ok(out)
}

pub(crate) fn apply_gate_in_place(state: &mut StateVector, gate: &Gate) -> Result<()> {
    check_range(gate, state.n_qubits)?;
    if gate.is_barrier() {
        return Ok(());
    }
    apply_local(
        state.amplitudes.as_mut_slice(),
        state.n_qubits,
        &gate.qubits,
        &gate.matrix,
    );
    Ok(())
}

/// Run every gate from `|0…0⟩`; measurements are ignored.
pub fn simulate_statevector(circuit: &Circuit) -> Result<StateVector> {
    simulate_from(circuit, StateVector::zero(circuit.n_qubits()))
}

pub fn simulate_from(circuit: &Circuit, mut state: StateVector) -> Result<StateVector> {
    if state.n_qubits != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            found: state.n_qubits,
        });
    }
    for g in circuit.gates() {
        apply_gate_in_place(&mut state, g)?;
    }
    Ok(state)
}

/// Full unitary of a measurement-free circuit.
pub fn unitary_of_circuit(circuit: &Circuit) -> Result<CMatrix> {
    if !circuit.measurements().is_empty() {
        return Err(Error::MeasurementPresent);
    }
    let n = circuit.n_qubits();
    if n > 12 {
        return Err(Error::InvalidParameter(format!(
            "unitary of a {n}-qubit circuit is too large"
        )));
    }
    let dim = 1usize << n;
    let mut u = CMatrix::identity(dim, dim);
    // Columns are contiguous in column-major storage; evolve each basis vector.
    for col in u.as_mut_slice().chunks_mut(dim) {
        for g in circuit.gates() {
            check_range(g, n)?;
            if !g.is_barrier() {
                apply_local(col, n, &g.qubits, &g.matrix);
            }
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::linalg::{c, from_real_rows, max_abs_diff};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn x_flips_zero() {
        let s = apply_gate(&StateVector::zero(1), &Gate::x(0)).unwrap();
        assert!((s.amplitudes()[1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn bell_pair() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::h(0)).unwrap();
        circ.push(Gate::cnot(0, 1)).unwrap();
        let s = simulate_statevector(&circ).unwrap();
        assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[3] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(s.amplitudes()[1].norm() < 1e-15 && s.amplitudes()[2].norm() < 1e-15);
    }

    #[test]
    fn cnot_permutation_control_on_qubit_zero() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::cnot(0, 1)).unwrap();
        let u = unitary_of_circuit(&circ).unwrap();
        // Basis index = q0 + 2 q1: |q1 q0⟩ = 01 → 11, 11 → 01.
        let expected = from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert!(max_abs_diff(&u, &expected) < 1e-15);
        let mut rev = Circuit::new(2);
        rev.push(Gate::cnot(1, 0)).unwrap();
        let u = unitary_of_circuit(&rev).unwrap();
        assert_eq!(u[(2, 3)], ONE);
        assert_eq!(u[(3, 2)], ONE);
    }

    #[test]
    fn empty_circuit_is_ground_state() {
        let s = simulate_statevector(&Circuit::new(5)).unwrap();
        assert_eq!(s.amplitudes().len(), 32);
        assert_eq!(s.amplitudes()[0], ONE);
    }

    #[test]
    fn out_of_range_gate_rejected() {
        let r = apply_gate(&StateVector::zero(2), &Gate::x(3));
        assert!(matches!(r, Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn reduced_density_of_bell_pair_is_mixed() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::h(0)).unwrap();
        circ.push(Gate::cnot(0, 1)).unwrap();
        let s = simulate_statevector(&circ).unwrap();
        let rho = s.reduced_density(&[1]);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(rho[(0, 1)].norm() < 1e-15);
    }
}
