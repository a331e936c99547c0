#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uhlmann_core::linalg::{c, CVector};
use uhlmann_core::{CMatrix, Circuit, Gate};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian-like matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        (0..dim).map(|k| r[(k, k)] / r[(k, k)].norm()),
    ));
    q * signs
}

pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Circuit {
    let mut circ = Circuit::new(n);
    for _ in 0..depth {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        while b == a {
            b = rng.random_range(0..n);
        }
        let t: f64 = rng.random_range(-3.0..3.0);
        let g = match rng.random_range(0..13) {
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
            11 => Gate::x(a),
            _ => Gate::sx(a),
        };
        circ.push(g).unwrap();
    }
    circ
}

/// `|Tr(U† V)| / N`.
pub fn unitary_fidelity(u: &CMatrix, v: &CMatrix) -> f64 {
    (u.adjoint() * v).trace().norm() / u.nrows() as f64
}
