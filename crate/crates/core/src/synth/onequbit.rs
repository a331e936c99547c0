use std::f64::consts::PI;

use crate::circuit::{wrap, Circuit, Gate};
use crate::linalg::{self, CMatrix};

const TOL: f64 = 1e-12;

/// `u = e^{i phase} U3(theta, phi, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneQubitAngles {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub phase: f64,
}

pub fn u3_angles(u: &CMatrix) -> OneQubitAngles {
    let (a, b, cc, d) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let theta = 2.0 * cc.norm().atan2(a.norm());
    let (phase, phi, lambda) = if cc.norm() < TOL {
        let phase = linalg::arg(a);
        (phase, wrap(linalg::arg(d) - phase), 0.0)
    } else if a.norm() < TOL {
        let phase = linalg::arg(-b);
        (phase, wrap(linalg::arg(cc) - phase), 0.0)
    } else {
        let phase = linalg::arg(a);
        (
            phase,
            wrap(linalg::arg(cc) - phase),
            wrap(linalg::arg(-b) - phase),
        )
    };
    OneQubitAngles {
        theta,
        phi,
        lambda,
        phase,
    }
}

fn near(x: f64, target: f64) -> bool {
    (wrap(x - target)).abs() < 1e-10
}

fn push_rz(out: &mut Vec<Gate>, q: usize, angle: f64) {
    if !near(angle, 0.0) {
        out.push(Gate::rz(q, wrap(angle)));
    }
}

/// `u` as at most one U3 (nothing when `u` is a global phase).
pub fn u3_circuit(u: &CMatrix, q: usize) -> Vec<Gate> {
    let a = u3_angles(u);
    if a.theta.abs() < 1e-10 && near(a.phi + a.lambda, 0.0) {
        return Vec::new();
    }
    vec![Gate::u3(q, a.theta, a.phi, a.lambda)]
}

/// `u` over {RZ, SX, X}: RZ·SX·RZ·SX·RZ in general, shorter for special polar angles.
pub fn zsx_sequence(u: &CMatrix, q: usize) -> Vec<Gate> {
    let a = u3_angles(u);
    let mut out = Vec::new();
    if a.theta.abs() < 1e-10 {
        push_rz(&mut out, q, a.phi + a.lambda);
    } else if near(a.theta, PI / 2.0) {
        push_rz(&mut out, q, a.lambda - PI / 2.0);
        out.push(Gate::sx(q));
        push_rz(&mut out, q, a.phi + PI / 2.0);
    } else if near(a.theta, PI) {
        out.push(Gate::x(q));
        push_rz(&mut out, q, a.phi - a.lambda - PI);
    } else {
        push_rz(&mut out, q, a.lambda);
        out.push(Gate::sx(q));
        push_rz(&mut out, q, a.theta + PI);
        out.push(Gate::sx(q));
        push_rz(&mut out, q, a.phi + PI);
    }
    out
}

/// `u` over {RZ, RX}: RZ·RX·RZ.
pub fn zxz_sequence(u: &CMatrix, q: usize) -> Vec<Gate> {
    let a = u3_angles(u);
    let mut out = Vec::new();
    if a.theta.abs() < 1e-10 {
        push_rz(&mut out, q, a.phi + a.lambda);
    } else {
        push_rz(&mut out, q, a.lambda - PI / 2.0);
        out.push(Gate::rx(q, a.theta));
        push_rz(&mut out, q, a.phi + PI / 2.0);
    }
    out
}

/// Dense 2x2 product of a run of single-qubit gates (first gate applied first).
pub fn product(gates: &[Gate]) -> CMatrix {
    let mut m = linalg::identity(2);
    for g in gates {
        m = &g.matrix * m;
    }
    m
}

/// A one-qubit circuit for `u` with a single U3.
pub fn one_qubit_circuit(u: &CMatrix) -> Circuit {
    let mut c = Circuit::new(1);
    c.extend(u3_circuit(u, 0)).expect("qubit 0 exists");
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::u3_matrix;
    use crate::synth::hs_distance;
    use proptest::prelude::*;

    fn check(seq: Vec<Gate>, u: &CMatrix) {
        let m = product(&seq);
        assert!(hs_distance(&m, u).unwrap() < 1e-10, "{seq:?}");
    }

    #[test]
    fn basis_changes_on_eagle() {
        let h = Gate::h(0).matrix;
        let seq = zsx_sequence(&h, 0);
        assert_eq!(seq.len(), 3);
        check(seq, &h);
        let hs = &h * Gate::sdg(0).matrix;
        let seq = zsx_sequence(&hs, 0);
        assert_eq!(seq.len(), 2);
        check(seq, &hs);
    }

    #[test]
    fn special_cases() {
        for u in [
            Gate::x(0).matrix,
            Gate::y(0).matrix,
            Gate::z(0).matrix,
            Gate::s(0).matrix,
            linalg::identity(2),
            Gate::rz(0, 0.4).matrix,
            Gate::rx(0, PI).matrix,
        ] {
            check(zsx_sequence(&u, 0), &u);
            check(zxz_sequence(&u, 0), &u);
            check(u3_circuit(&u, 0), &u);
        }
        assert!(zsx_sequence(&linalg::identity(2), 0).is_empty());
        assert!(u3_circuit(&linalg::identity(2), 0).is_empty());
        assert_eq!(zsx_sequence(&Gate::y(0).matrix, 0).len(), 2);
    }

    proptest! {
        #[test]
        fn decompositions_reproduce(theta in -4.0f64..4.0, phi in -4.0f64..4.0, lam in -4.0f64..4.0, ph in -3.0f64..3.0) {
            let u = u3_matrix(theta, phi, lam) * num_complex::Complex64::from_polar(1.0, ph);
            let a = u3_angles(&u);
            let rebuilt = u3_matrix(a.theta, a.phi, a.lambda) * num_complex::Complex64::from_polar(1.0, a.phase);
            prop_assert!(linalg::max_abs_diff(&rebuilt, &u) < 1e-10);
            for seq in [zsx_sequence(&u, 0), zxz_sequence(&u, 0), u3_circuit(&u, 0)] {
                prop_assert!(hs_distance(&product(&seq), &u).unwrap() < 1e-10);
            }
        }
    }
}
