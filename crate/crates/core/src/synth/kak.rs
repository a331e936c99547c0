//! Two-qubit Cartan (KAK) decomposition and minimal-CNOT circuits.
//!
//! `u = e^{iφ} (A1 ⊗ B1) · exp(i(a XX + b YY + c ZZ)) · (A2 ⊗ B2)`, with `A` on the high
//! qubit and `B` on the low qubit of the pair.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::onequbit::{product, u3_circuit};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ZERO};

const ZERO_TOL: f64 = 1e-11;

fn magic() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    let (o, i, z) = (c(h, 0.0), c(0.0, h), ZERO);
    linalg::from_rows(&[&[o, z, z, i], &[z, i, o, z], &[z, i, -o, z], &[o, z, z, -i]])
}

fn pauli_pair(k: usize) -> CMatrix {
    let p = match k {
        0 => Gate::x(0).matrix,
        1 => Gate::y(0).matrix,
        _ => Gate::z(0).matrix,
    };
    linalg::kron(&p, &p)
}

/// `exp(i(a XX + b YY + c ZZ))`.
pub fn canonical_gate(a: f64, b: f64, cc: f64) -> CMatrix {
    let b_m = magic();
    let mut diag = CMatrix::zeros(4, 4);
    let coeffs = [a, b, cc];
    for k in 0..4 {
        let mut angle = 0.0;
        for (axis, coef) in coeffs.iter().enumerate() {
            let d = (b_m.adjoint() * pauli_pair(axis) * &b_m)[(k, k)].re;
            angle += coef * d;
        }
        diag[(k, k)] = Complex64::from_polar(1.0, angle);
    }
    &b_m * diag * b_m.adjoint()
}

/// Split `k = A ⊗ B` (A on the high qubit); both factors in SU(2) up to a shared phase.
fn split_local(k: &CMatrix) -> (CMatrix, CMatrix) {
    let mut best = (0, 0);
    let mut best_norm = -1.0;
    for i in 0..2 {
        for j in 0..2 {
            let n: f64 = (0..2)
                .flat_map(|r| (0..2).map(move |s| (r, s)))
                .map(|(r, s)| k[(2 * i + r, 2 * j + s)].norm_sqr())
                .sum();
            if n > best_norm {
                best_norm = n;
                best = (i, j);
            }
        }
    }
    let block = k.view((2 * best.0, 2 * best.1), (2, 2)).into_owned();
    let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
    let b = block / det.sqrt();
    let mut a = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let blk = k.view((2 * i, 2 * j), (2, 2));
            a[(i, j)] = (b.adjoint() * blk).trace() / c(2.0, 0.0);
        }
    }
    (a, b)
}

#[derive(Debug, Clone)]
pub struct KakDecomposition {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Locals applied after the canonical gate: (high qubit, low qubit).
    pub after: (CMatrix, CMatrix),
    /// Locals applied before the canonical gate: (high qubit, low qubit).
    pub before: (CMatrix, CMatrix),
    pub phase: f64,
}

impl KakDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let k1 = linalg::kron(&self.after.0, &self.after.1);
        let k2 = linalg::kron(&self.before.0, &self.before.1);
        k1 * canonical_gate(self.a, self.b, self.c) * k2 * Complex64::from_polar(1.0, self.phase)
    }

    /// Minimum number of CNOTs needed for this class.
    pub fn cnot_count(&self) -> usize {
        let coords = [self.a, self.b, self.c];
        let zeros = coords.iter().filter(|x| x.abs() < ZERO_TOL).count();
        let quarter = coords
            .iter()
            .filter(|x| (x.abs() - FRAC_PI_4).abs() < ZERO_TOL)
            .count();
        match zeros {
            3 => 0,
            2 if quarter == 1 => 1,
            z if z >= 1 => 2,
            _ => 3,
        }
    }
}

/// Reduce `x` into (−π/4, π/4] by multiples of π/2; returns the reduced value and the shift count.
fn reduce(x: f64) -> (f64, i64) {
    let k = ((x + FRAC_PI_4) / FRAC_PI_2).floor();
    let mut r = x - k * FRAC_PI_2;
    let mut k = k as i64;
    if r <= -FRAC_PI_4 + 1e-15 && (r + FRAC_PI_4).abs() < 1e-13 {
        r += FRAC_PI_2;
        k -= 1;
    }
    (r, k)
}

pub fn kak(u: &CMatrix) -> Result<KakDecomposition> {
    if u.shape() != (4, 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: u.nrows(),
        });
    }
    linalg::ensure_unitary(u, 1e-9, "kak_decompose")?;
    let det = u.determinant();
    let phase0 = det.arg() / 4.0;
    let su = u * Complex64::from_polar(1.0, -phase0);
    let bm = magic();
    let up = bm.adjoint() * &su * &bm;
    let m2 = up.transpose() * &up;
    let re = DMatrix::from_fn(4, 4, |i, j| m2[(i, j)].re);
    let im = DMatrix::from_fn(4, 4, |i, j| m2[(i, j)].im);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut p_real: Option<DMatrix<f64>> = None;
    let mut best_off = f64::INFINITY;
    for _ in 0..200 {
        let (c1, c2): (f64, f64) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let mix = &re * c1 + &im * c2;
        let eig = mix.symmetric_eigen();
        let p = eig.eigenvectors;
        let pc = p.map(|x| c(x, 0.0));
        let d = pc.transpose() * &m2 * &pc;
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < best_off {
            best_off = off;
            p_real = Some(p);
        }
        if off < 1e-13 {
            break;
        }
    }
    let mut p = p_real.expect("at least one trial");
    if best_off > 1e-9 {
        return Err(Error::NotUnitary {
            context: "kak diagonalisation".into(),
            deviation: best_off,
        });
    }
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    let pc = p.map(|x| c(x, 0.0));
    let d = pc.transpose() * &m2 * &pc;
    let mut theta: Vec<f64> = (0..4).map(|k| d[(k, k)].arg() / 2.0).collect();
    let phases = |th: &[f64]| {
        CMatrix::from_diagonal(&linalg::CVector::from_iterator(
            4,
            th.iter().map(|t| Complex64::from_polar(1.0, -t)),
        ))
    };
    let mut k1p = &up * &pc * phases(&theta);
    if k1p.determinant().re < 0.0 {
        theta[0] += PI;
        k1p = &up * &pc * phases(&theta);
    }
    // θ_k = a x_k + b y_k + c z_k + g with x, y, z the magic-basis eigenvalues of XX, YY, ZZ.
    let mut sys = Matrix4::<f64>::zeros();
    for axis in 0..3 {
        let diag = bm.adjoint() * pauli_pair(axis) * &bm;
        for k in 0..4 {
            sys[(k, axis)] = diag[(k, k)].re;
        }
    }
    for k in 0..4 {
        sys[(k, 3)] = 1.0;
    }
    let rhs = Vector4::from_iterator(theta.iter().cloned());
    let sol = sys
        .lu()
        .solve(&rhs)
        .expect("Pauli eigenvalue table is invertible");
    let k1 = &bm * &k1p * bm.adjoint();
    let k2 = &bm * pc.transpose() * bm.adjoint();

    // Canonicalise coordinates, absorbing (i PP)^k into the right-hand locals.
    let mut coords = [sol[0], sol[1], sol[2]];
    let mut k2 = k2;
    let mut phase = phase0 + sol[3];
    for (axis, coord) in coords.iter_mut().enumerate() {
        let (r, shift) = reduce(*coord);
        *coord = r;
        let times = shift.rem_euclid(4);
        for _ in 0..times {
            // exp(i(x + π/2) PP) = exp(i x PP) · i PP
            k2 = pauli_pair(axis) * k2;
            phase += FRAC_PI_2;
        }
    }
    let (a1, b1) = split_local(&k1);
    let (a2, b2) = split_local(&k2);
    let mut dec = KakDecomposition {
        a: coords[0],
        b: coords[1],
        c: coords[2],
        after: (a1, b1),
        before: (a2, b2),
        phase: 0.0,
    };
    let rebuilt = dec.reconstruct();
    let overlap: Complex64 = rebuilt.iter().zip(u.iter()).map(|(x, y)| x.conj() * y).sum();
    dec.phase = overlap.arg();
    let _ = phase;
    Ok(dec)
}

/// Weyl-chamber-style coordinates `(a, b, c)` of `u`, each reduced into (−π/4, π/4].
pub fn weyl_coordinates(u: &CMatrix) -> Result<(f64, f64, f64)> {
    let d = kak(u)?;
    Ok((d.a, d.b, d.c))
}

/// Gates (on local qubits 0 = low, 1 = high) realising `exp(i(a XX + b YY + c ZZ))` up to phase.
fn canonical_circuit(a: f64, b: f64, cc: f64, cnots: usize) -> Vec<Gate> {
    let both = |g: fn(usize, f64) -> Gate, t: f64| vec![g(0, t), g(1, t)];
    match cnots {
        0 => Vec::new(),
        1 => {
            // One coordinate at ±π/4 on axis P; map P P → XX by a shared local W.
            let coords = [a, b, cc];
            let axis = (0..3)
                .max_by(|&i, &j| coords[i].abs().total_cmp(&coords[j].abs()))
                .unwrap();
            let sign = coords[axis].signum();
            let (w_dag, w): (Vec<Gate>, Vec<Gate>) = match axis {
                0 => (vec![], vec![]),
                1 => (both(Gate::rz, -FRAC_PI_2), both(Gate::rz, FRAC_PI_2)),
                _ => (vec![Gate::h(0), Gate::h(1)], vec![Gate::h(0), Gate::h(1)]),
            };
            let mut out = Vec::new();
            if sign < 0.0 {
                // exp(−iπ/4 PP) = exp(iπ/4 PP) · (−i PP)
                let pauli = [Gate::x, Gate::y, Gate::z][axis];
                out.extend([pauli(0), pauli(1)]);
            }
            out.extend(w_dag);
            out.extend([
                Gate::h(0),
                Gate::cnot(0, 1),
                Gate::rx(1, -FRAC_PI_2),
                Gate::rz(0, -FRAC_PI_2),
                Gate::h(0),
            ]);
            out.extend(w);
            out
        }
        2 => {
            let core = |x: f64, z: f64| {
                vec![
                    Gate::cnot(0, 1),
                    Gate::rx(0, -2.0 * x),
                    Gate::rz(1, -2.0 * z),
                    Gate::cnot(0, 1),
                ]
            };
            if b.abs() < ZERO_TOL {
                core(a, cc)
            } else if a.abs() < ZERO_TOL {
                // YY = R XX R† with R = RZ(π/2) ⊗ RZ(π/2)
                let mut out = both(Gate::rz, -FRAC_PI_2);
                out.extend(core(b, cc));
                out.extend(both(Gate::rz, FRAC_PI_2));
                out
            } else {
                // R' = RX(π/2) ⊗ RX(π/2) swaps YY and ZZ
                let mut out = both(Gate::rx, -FRAC_PI_2);
                out.extend(core(a, b));
                out.extend(both(Gate::rx, FRAC_PI_2));
                out
            }
        }
        _ => vec![
            Gate::rz(1, -FRAC_PI_2),
            Gate::cnot(1, 0),
            Gate::rz(0, FRAC_PI_2 - 2.0 * cc),
            Gate::ry(1, 2.0 * a - FRAC_PI_2),
            Gate::cnot(0, 1),
            Gate::ry(1, FRAC_PI_2 - 2.0 * b),
            Gate::cnot(1, 0),
            Gate::rz(0, FRAC_PI_2),
        ],
    }
}

/// Collapse runs of one-qubit gates into single U3 gates (local two-qubit gate list).
fn collapse(gates: Vec<Gate>, n: usize) -> Vec<Gate> {
    let mut pending: Vec<Vec<Gate>> = vec![Vec::new(); n];
    let mut out = Vec::new();
    let flush = |q: usize, pending: &mut Vec<Vec<Gate>>, out: &mut Vec<Gate>| {
        let run = std::mem::take(&mut pending[q]);
        if !run.is_empty() {
            out.extend(u3_circuit(&product(&run), q));
        }
    };
    for g in gates {
        if g.arity() == 1 {
            pending[g.qubits[0]].push(g);
        } else {
            for &q in &g.qubits.clone() {
                flush(q, &mut pending, &mut out);
            }
            out.push(g);
        }
    }
    for q in 0..n {
        flush(q, &mut pending, &mut out);
    }
    out
}

fn local_gates(a: &CMatrix, b: &CMatrix) -> Vec<Gate> {
    vec![
        Gate::unitary(vec![0], b.clone()).expect("2x2 unitary"),
        Gate::unitary(vec![1], a.clone()).expect("2x2 unitary"),
    ]
}

/// Minimal-CNOT circuit for a 4×4 unitary over {U3, CNOT}; local qubit 0 is the low qubit.
pub fn kak_decompose(u: &CMatrix) -> Result<Circuit> {
    kak_decompose_with(u, true)
}

/// With `minimal` false every input gets the generic three-CNOT circuit.
pub fn kak_decompose_with(u: &CMatrix, minimal: bool) -> Result<Circuit> {
    let d = kak(u)?;
    let cnots = if minimal { d.cnot_count() } else { 3 };
    let mut gates = local_gates(&d.before.0, &d.before.1);
    gates.extend(canonical_circuit(d.a, d.b, d.c, cnots));
    gates.extend(local_gates(&d.after.0, &d.after.1));
    let mut circ = Circuit::new(2);
    circ.extend(collapse(gates, 2))?;
    Ok(circ)
}

/// [`kak_decompose`] with local qubits 0 and 1 placed on `low` and `high`.
pub fn kak_decompose_on(u: &CMatrix, low: usize, high: usize) -> Result<Vec<Gate>> {
    kak_decompose_on_with(u, low, high, true)
}

pub fn kak_decompose_on_with(u: &CMatrix, low: usize, high: usize, minimal: bool) -> Result<Vec<Gate>> {
    let circ = kak_decompose_with(u, minimal)?;
    Ok(circ.gates().iter().map(|g| g.remapped(&[low, high])).collect())
}

/// Diagonal `D` such that `D · u` needs at most two CNOTs (returned with `D`).
pub fn two_cnot_diagonal(u: &CMatrix) -> CMatrix {
    let det = u.determinant();
    let m = u * Complex64::from_polar(1.0, -det.arg() / 4.0);
    let a1 = -m[(1, 3)] * m[(2, 0)] + m[(1, 2)] * m[(2, 1)] + m[(1, 1)] * m[(2, 2)]
        - m[(1, 0)] * m[(2, 3)];
    let a2 = m[(0, 3)] * m[(3, 0)] - m[(0, 2)] * m[(3, 1)] - m[(0, 1)] * m[(3, 2)]
        + m[(0, 0)] * m[(3, 3)];
    let psi = (a1.im + a2.im).atan2(a1.re - a2.re);
    CMatrix::from_diagonal(&linalg::CVector::from_vec(vec![
        c(1.0, 0.0),
        c(1.0, 0.0),
        Complex64::from_polar(1.0, -psi),
        Complex64::from_polar(1.0, psi),
    ]))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::circuit::unitary_of_circuit;
    use crate::synth::hs_distance;
    use rand::SeedableRng;

    pub(crate) fn random_unitary(dim: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let signs = CMatrix::from_diagonal(&linalg::CVector::from_iterator(
            dim,
            (0..dim).map(|k| r[(k, k)] / r[(k, k)].norm()),
        ));
        q * signs
    }

    fn count_cnots(c: &Circuit) -> usize {
        c.two_qubit_count()
    }

    #[test]
    fn canonical_circuits_match() {
        let cases = [
            (0.3, -0.2, 0.1, 3),
            (0.3, 0.0, 0.1, 2),
            (0.0, 0.25, -0.3, 2),
            (0.2, -0.4, 0.0, 2),
            (FRAC_PI_4, 0.0, 0.0, 1),
            (-FRAC_PI_4, 0.0, 0.0, 1),
            (0.0, FRAC_PI_4, 0.0, 1),
            (0.0, 0.0, -FRAC_PI_4, 1),
            (0.0, 0.0, 0.0, 0),
        ];
        for (a, b, cc, n) in cases {
            let mut circ = Circuit::new(2);
            circ.extend(canonical_circuit(a, b, cc, n)).unwrap();
            let u = unitary_of_circuit(&circ).unwrap();
            let d = hs_distance(&u, &canonical_gate(a, b, cc)).unwrap();
            assert!(d < 1e-12, "({a}, {b}, {cc}) with {n} cnots: {d}");
        }
    }

    #[test]
    fn reconstructs_random_unitaries() {
        for seed in 0..20 {
            let u = random_unitary(4, seed);
            let d = kak(&u).unwrap();
            assert!(linalg::max_abs_diff(&d.reconstruct(), &u) < 1e-11);
            for x in [d.a, d.b, d.c] {
                assert!(x > -FRAC_PI_4 - 1e-12 && x <= FRAC_PI_4 + 1e-12);
            }
            let circ = kak_decompose(&u).unwrap();
            assert_eq!(count_cnots(&circ), 3);
            assert!(circ.len() - 3 <= 8);
            let dist = hs_distance(&unitary_of_circuit(&circ).unwrap(), &u).unwrap();
            assert!(dist < 1e-10, "seed {seed}: {dist}");
        }
    }

    #[test]
    fn known_gates_use_minimal_cnots() {
        let cnot = Gate::cnot(0, 1).matrix;
        let swap = linalg::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let local = linalg::kron(&Gate::h(0).matrix, &Gate::u3(0, 0.3, 0.2, 0.1).matrix);
        let iswap_like = canonical_gate(FRAC_PI_4, FRAC_PI_4, 0.0);
        for (u, expected) in [
            (cnot.clone(), 1),
            (Gate::cnot(1, 0).matrix, 1),
            (Gate::ecr(0, 1).matrix, 1),
            (swap, 3),
            (local, 0),
            (linalg::identity(4), 0),
            (iswap_like, 2),
            (Gate::rzz(0, 1, 0.7).matrix, 2),
        ] {
            let circ = kak_decompose(&u).unwrap();
            assert_eq!(count_cnots(&circ), expected, "{u}");
            assert!(circ.len() - expected <= 8);
            let dist = hs_distance(&unitary_of_circuit(&circ).unwrap(), &u).unwrap();
            assert!(dist < 1e-10);
        }
    }

    #[test]
    fn diagonal_absorption_gives_two_cnots() {
        for seed in 100..110 {
            let u = random_unitary(4, seed);
            let d = two_cnot_diagonal(&u);
            let circ = kak_decompose(&(&d * &u)).unwrap();
            assert_eq!(count_cnots(&circ), 2, "seed {seed}");
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::from_element(4, 4, c(0.5, 0.0));
        assert!(matches!(kak_decompose(&m), Err(Error::NotUnitary { .. })));
    }
}
