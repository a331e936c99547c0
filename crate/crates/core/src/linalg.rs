//! Dense complex linear algebra shared by the simulators and the synthesis passes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_rows(rows: &[&[Complex64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn hermiticity_deviation(h: &CMatrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(h, &h.adjoint())
}

pub fn ensure_unitary(u: &CMatrix, tol: f64, context: &str) -> Result<()> {
    let deviation = unitarity_deviation(u);
    if deviation > tol {
        return Err(Error::NotUnitary {
            context: context.to_string(),
            deviation,
        });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`; with the LSB-first qubit convention `b` acts on the low qubits.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Rotate the phase of a vector so its first component above `1e-12` is real and positive.
pub fn fix_phase(v: &mut CVector) {
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order,
/// phase-fixed eigenvectors, and ties broken lexicographically on the eigenvectors.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let deviation = hermiticity_deviation(h);
    if deviation > 1e-10 {
        return Err(Error::NotHermitian(deviation));
    }
    let dim = h.nrows();
    let sym = (h + h.adjoint()).map(|z| z * 0.5);
    let eig = sym.symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = (0..dim)
        .map(|k| {
            let mut v: CVector = eig.eigenvectors.column(k).into_owned();
            let norm = v.norm();
            v.unscale_mut(norm);
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|(ea, va), (eb, vb)| {
        if (ea - eb).abs() > 1e-12 {
            return ea.total_cmp(eb);
        }
        for (x, y) in va.iter().zip(vb.iter()) {
            let ord = y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    let values = pairs.iter().map(|(e, _)| *e).collect();
    let vectors = CMatrix::from_fn(dim, dim, |i, j| pairs[j].1[i]);
    Ok((values, vectors))
}

/// `exp(-i t H)` for Hermitian `H`, via its eigen-decomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|e| Complex64::from_polar(1.0, -t * e)),
    ));
    Ok(&vectors * phases * vectors.adjoint())
}

/// Eigen-decomposition `u = q diag(d) q†` of a unitary (or any normal) matrix.
///
/// The Hermitian and anti-Hermitian parts of a normal matrix commute, so a fixed generic mix of
/// the two shares its eigenvectors. This avoids the stalls the complex Schur iteration shows on
/// nearly degenerate spectra.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<Complex64>, CMatrix) {
    let ud = u.adjoint();
    let herm = (u + &ud).map(|z| z * 0.5);
    let anti = (u - &ud).map(|z| z * c(0.0, -0.5));
    let mix = herm * c(0.618_033_988_749_895, 0.0) + anti * c(0.786_151_377_757_423, 0.0);
    let (_, q) = hermitian_eigen(&mix).expect("mix of commuting Hermitian parts is Hermitian");
    let d = (0..u.nrows())
        .map(|k| q.column(k).dotc(&(u * q.column(k))))
        .collect();
    (d, q)
}

/// Nearest unitary in Frobenius norm (polar factor).
///
/// Uses the scaled Newton iteration `X ← (γX + (γX)^{-†})/2`; the complex SVD loses the small
/// singular directions of nearly singular inputs. Inputs where the iteration does not settle on a
/// unitary fall back to the SVD.
pub fn closest_unitary(m: &CMatrix) -> CMatrix {
    let mut x = m.clone();
    let mut scale = true;
    for _ in 0..100 {
        let Some(inv) = x.clone().try_inverse() else {
            return svd_polar(m);
        };
        let g = if scale { (inv.norm() / x.norm()).sqrt() } else { 1.0 };
        let next = (x.map(|z| z * g) + inv.adjoint().map(|z| z / g)).map(|z| z * 0.5);
        let delta = max_abs_diff(&next, &x);
        x = next;
        if !delta.is_finite() {
            return svd_polar(m);
        }
        if delta < 1e-2 {
            scale = false;
        }
        if delta < 1e-15 {
            break;
        }
    }
    if unitarity_deviation(&x) > 1e-13 {
        return svd_polar(m);
    }
    x
}

fn svd_polar(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// Wrap an angle into (-π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = theta % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// `arg(z)` wrapped into (-π, π]; a negative real with a `-0.0` imaginary part maps to `π`.
pub fn arg(z: Complex64) -> f64 {
    wrap_angle(z.im.atan2(z.re))
}
