//! Uniformly controlled (multiplexed) rotations and diagonal gates, Gray-code construction.

use crate::circuit::{wrap, Gate};

const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

/// Construction knobs for [`multiplexed_rotation_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MuxStyle {
    /// Use CZ (as H·CNOT·H on the target) instead of CNOT; only valid for `Axis::Y`.
    pub cz: bool,
    /// Leave out the final entangler; the caller must absorb it.
    pub drop_last: bool,
    /// Emit nothing for all-zero angles and a bare rotation for constant angles.
    pub simplify: bool,
}

pub(crate) fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn rotation(axis: Axis, q: usize, theta: f64) -> Gate {
    match axis {
        Axis::Y => Gate::ry(q, theta),
        Axis::Z => Gate::rz(q, theta),
    }
}

/// Control whose entangler closes the Gray cycle (the one dropped by `drop_last`).
pub fn last_control(controls: &[usize]) -> Option<usize> {
    controls.last().copied()
}

/// `Σ_j |j⟩⟨j| ⊗ R_axis(angles[j])` on `target`; bit `b` of `j` is the state of `controls[b]`.
pub fn multiplexed_rotation(axis: Axis, controls: &[usize], target: usize, angles: &[f64]) -> Vec<Gate> {
    multiplexed_rotation_with(axis, controls, target, angles, MuxStyle::default())
}

pub fn multiplexed_rotation_with(
    axis: Axis,
    controls: &[usize],
    target: usize,
    angles: &[f64],
    style: MuxStyle,
) -> Vec<Gate> {
    let k = controls.len();
    let n = 1usize << k;
    assert_eq!(angles.len(), n, "multiplexor needs 2^k angles");
    assert!(!(style.cz && axis == Axis::Z), "CZ multiplexing flips only Y rotations");
    if style.simplify {
        if angles.iter().all(|a| a.abs() < ANGLE_TOL) {
            return Vec::new();
        }
        if angles.iter().all(|a| (a - angles[0]).abs() < ANGLE_TOL) {
            return vec![rotation(axis, target, angles[0])];
        }
    }
    if k == 0 {
        return vec![rotation(axis, target, angles[0])];
    }
    let scale = 1.0 / n as f64;
    let thetas: Vec<f64> = (0..n)
        .map(|i| {
            let g = gray(i);
            scale
                * (0..n)
                    .map(|j| {
                        if (j & g).count_ones() % 2 == 0 {
                            angles[j]
                        } else {
                            -angles[j]
                        }
                    })
                    .sum::<f64>()
        })
        .collect();
    let mut out = Vec::with_capacity(4 * n);
    for (i, &theta) in thetas.iter().enumerate() {
        if !(style.simplify && theta.abs() < ANGLE_TOL) {
            out.push(rotation(axis, target, theta));
        }
        let changed = gray(i) ^ gray((i + 1) % n);
        let ctrl = controls[changed.trailing_zeros() as usize];
        if style.drop_last && i == n - 1 {
            break;
        }
        if style.cz {
            out.extend([Gate::h(target), Gate::cnot(ctrl, target), Gate::h(target)]);
        } else {
            out.push(Gate::cnot(ctrl, target));
        }
    }
    out
}

/// Diagonal `diag(e^{i phases[x]})` on `qubits` (bit `b` of `x` is `qubits[b]`), up to global phase.
pub fn diagonal_circuit(qubits: &[usize], phases: &[f64], simplify: bool) -> Vec<Gate> {
    let m = qubits.len();
    assert_eq!(phases.len(), 1usize << m);
    if m == 0 {
        return Vec::new();
    }
    let half = phases.len() / 2;
    let msb = qubits[m - 1];
    // Split on the most significant qubit: the difference becomes an RZ multiplexor.
    let diffs: Vec<f64> = (0..half).map(|j| wrap(phases[j + half] - phases[j])).collect();
    let means: Vec<f64> = (0..half).map(|j| (phases[j + half] + phases[j]) / 2.0).collect();
    let style = MuxStyle {
        simplify,
        ..MuxStyle::default()
    };
    let mut out = multiplexed_rotation_with(Axis::Z, &qubits[..m - 1], msb, &diffs, style);
    out.extend(diagonal_circuit(&qubits[..m - 1], &means, simplify));
    out
}
