use super::statevector::apply_local;
use super::{Circuit, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::noise::{KrausChannel, NoiseModel};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixState {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrixState {
    pub fn zero(n_qubits: usize) -> DensityMatrixState {
        let dim = 1usize << n_qubits;
        let mut matrix = CMatrix::zeros(dim, dim);
        matrix[(0, 0)] = linalg::ONE;
        DensityMatrixState { n_qubits, matrix }
    }

    pub fn from_pure(state: &StateVector) -> DensityMatrixState {
        let v = state.amplitudes();
        DensityMatrixState {
            n_qubits: state.n_qubits(),
            matrix: v * v.adjoint(),
        }
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<DensityMatrixState> {
        let dim = matrix.nrows();
        if !dim.is_power_of_two() || matrix.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "density matrix of shape {:?}",
                matrix.shape()
            )));
        }
        let state = DensityMatrixState {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        };
        state.validate(1e-10)?;
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Hermiticity, unit trace, and a `-1e-9` floor on the spectrum.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = linalg::hermiticity_deviation(&self.matrix);
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidParameter(format!("density trace {tr}")));
        }
        let sym = (&self.matrix + self.matrix.adjoint()).map(|z| z * 0.5);
        let min = sym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has eigenvalue {min}"
            )));
        }
        Ok(())
    }

    /// Reduced state of `keep` (local qubit `k` is `keep[k]`).
    pub fn reduced(&self, keep: &[usize]) -> CMatrix {
        let k = keep.len();
        let dim = 1usize << k;
        let full = 1usize << self.n_qubits;
        let mask: usize = keep.iter().map(|&q| 1usize << q).sum();
        let local = |i: usize| -> usize {
            keep.iter()
                .enumerate()
                .map(|(b, &q)| ((i >> q) & 1) << b)
                .sum()
        };
        let mut out = CMatrix::zeros(dim, dim);
        for a in 0..full {
            for b in 0..full {
                if a & !mask == b & !mask {
                    out[(local(a), local(b))] += self.matrix[(a, b)];
                }
            }
        }
        out
    }

    /// `ρ → U ρ U†` with `u` acting on `qubits`.
    pub fn apply_unitary(&mut self, qubits: &[usize], u: &CMatrix) {
        let n = self.n_qubits;
        let cols: Vec<usize> = qubits.iter().map(|&q| q + n).collect();
        // Column-major storage: row index in the low n bits, column index in the high n bits.
        let data = self.matrix.as_mut_slice();
        apply_local(data, 2 * n, qubits, u);
        apply_local(data, 2 * n, &cols, &u.map(|z| z.conj()));
    }

    /// `ρ → Σ K ρ K†`.
    pub fn apply_channel(&mut self, channel: &KrausChannel) {
        if channel.ops.len() == 1 {
            self.apply_unitary(&channel.qubits, &channel.ops[0]);
            return;
        }
        let mut acc = CMatrix::from_element(self.matrix.nrows(), self.matrix.ncols(), ZERO);
        for k in &channel.ops {
            let mut term = self.clone();
            term.apply_unitary(&channel.qubits, k);
            acc += term.matrix;
        }
        self.matrix = acc;
    }
}

/// Density-matrix evolution: each gate's unitary followed by its noise channels.
pub fn simulate_density(circuit: &Circuit, noise: Option<&NoiseModel>) -> Result<DensityMatrixState> {
    let n = circuit.n_qubits();
    if n > 10 {
        return Err(Error::InvalidParameter(format!(
            "density simulation limited to 10 qubits, got {n}"
        )));
    }
    let mut state = DensityMatrixState::zero(n);
    for g in circuit.gates() {
        for &q in &g.qubits {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits: n });
            }
        }
        if g.is_barrier() {
            continue;
        }
        state.apply_unitary(&g.qubits, &g.matrix);
        if let Some(model) = noise {
            for ch in model.channels_for(g)? {
                state.apply_channel(ch);
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{simulate_statevector, Gate};
    use crate::linalg::max_abs_diff;

    #[test]
    fn noiseless_matches_projector() {
        let mut circ = Circuit::new(3);
        circ.extend([
            Gate::h(0),
            Gate::cnot(0, 2),
            Gate::ry(1, 0.7),
            Gate::rzz(1, 2, 0.3),
            Gate::u3(2, 0.2, 0.5, 1.0),
        ])
        .unwrap();
        let rho = simulate_density(&circ, None).unwrap();
        let psi = simulate_statevector(&circ).unwrap();
        let pure = DensityMatrixState::from_pure(&psi);
        assert!(max_abs_diff(rho.matrix(), pure.matrix()) < 1e-12);
        rho.validate(1e-10).unwrap();
    }

    #[test]
    fn reduced_state_of_product() {
        let mut circ = Circuit::new(2);
        circ.extend([Gate::x(1), Gate::h(0)]).unwrap();
        let rho = simulate_density(&circ, None).unwrap();
        let r1 = rho.reduced(&[1]);
        assert!((r1[(1, 1)].re - 1.0).abs() < 1e-14);
        let r0 = rho.reduced(&[0]);
        assert!((r0[(0, 1)].re - 0.5).abs() < 1e-14);
    }
}
