//! Quantum Shannon decomposition: cosine-sine split on the top qubit, demultiplexing of
//! the block-diagonal factors, recursion down to two-qubit KAK blocks.

use num_complex::Complex64;

use super::kak::{kak, kak_decompose_on_with, two_cnot_diagonal};
use super::multiplexor::{last_control, multiplexed_rotation_with, Axis, MuxStyle};
use super::onequbit::u3_circuit;
use super::hs_distance;
use crate::circuit::{unitary_of_circuit, Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QsdOptions {
    /// Build the cosine-sine multiplexor from CZ and fold the last one into the left factor.
    pub a1: bool,
    /// Decompose two-qubit leaves up to a diagonal and push it into the next leaf.
    pub a2: bool,
    /// Drop identity sub-blocks and trivial multiplexors.
    pub skip_trivial: bool,
    /// Use the fewest CNOTs each two-qubit leaf allows instead of the generic three.
    pub minimal_leaves: bool,
}

impl QsdOptions {
    pub fn naive() -> QsdOptions {
        QsdOptions {
            a1: false,
            a2: false,
            skip_trivial: false,
            minimal_leaves: false,
        }
    }

    pub fn optimized() -> QsdOptions {
        QsdOptions {
            a1: true,
            a2: true,
            skip_trivial: true,
            minimal_leaves: true,
        }
    }
}

impl Default for QsdOptions {
    fn default() -> Self {
        QsdOptions::optimized()
    }
}

enum Item {
    Gates(Vec<Gate>),
    Leaf { u: CMatrix, low: usize, high: usize },
}

pub fn qsd_decompose(u: &CMatrix) -> Result<Circuit> {
    qsd_decompose_with(u, QsdOptions::default())
}

pub fn qsd_decompose_with(u: &CMatrix, opts: QsdOptions) -> Result<Circuit> {
    let dim = u.nrows();
    if !dim.is_power_of_two() || u.ncols() != dim || dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "qsd needs a 2^n square matrix, got {:?}",
            u.shape()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 4 {
        return Err(Error::InvalidParameter(format!("qsd limited to 4 qubits, got {n}")));
    }
    linalg::ensure_unitary(u, 1e-9, "qsd_decompose")?;
    let qubits: Vec<usize> = (0..n).collect();
    let mut items = Vec::new();
    // Rounding noise off the unitary group is amplified by the cosine-sine step.
    decompose(linalg::closest_unitary(u), &qubits, opts, &mut items)?;
    let gates = lower_leaves(items, opts)?;
    let mut circ = Circuit::new(n);
    circ.extend(gates)?;
    let dist = hs_distance(&unitary_of_circuit(&circ)?, u)?;
    if dist > 1e-9 {
        return Err(Error::NotUnitary {
            context: "qsd verification".into(),
            deviation: dist,
        });
    }
    Ok(circ)
}

fn is_identity_up_to_phase(u: &CMatrix) -> bool {
    let id = linalg::identity(u.nrows());
    hs_distance(&id, u).map(|d| d < 1e-13).unwrap_or(false)
}

fn decompose(u: CMatrix, qubits: &[usize], opts: QsdOptions, out: &mut Vec<Item>) -> Result<()> {
    let n = qubits.len();
    if opts.skip_trivial && is_identity_up_to_phase(&u) {
        return Ok(());
    }
    match n {
        1 => {
            out.push(Item::Gates(u3_circuit(&u, qubits[0])));
            return Ok(());
        }
        2 => {
            out.push(Item::Leaf {
                u,
                low: qubits[0],
                high: qubits[1],
            });
            return Ok(());
        }
        _ => {}
    }
    let lower = &qubits[..n - 1];
    let msb = qubits[n - 1];
    let simplify = opts.skip_trivial;
    let cs = cosine_sine(&u);

    // Right factor R0† ⊕ R1†.
    demultiplex(&cs.r0h, &cs.r1h, lower, msb, opts, out)?;

    // Middle factor: multiplexed RY on the top qubit.
    let angles: Vec<f64> = cs.theta.iter().map(|t| 2.0 * t).collect();
    let constant = angles.iter().all(|a| (a - angles[0]).abs() < 1e-12);
    let fold = opts.a1 && !(simplify && constant);
    let style = MuxStyle {
        cz: opts.a1,
        drop_last: fold,
        simplify,
    };
    out.push(Item::Gates(multiplexed_rotation_with(
        Axis::Y,
        lower,
        msb,
        &angles,
        style,
    )));

    // Left factor L0 ⊕ L1, absorbing the dropped CZ as Z on its control.
    let mut l1 = cs.l1;
    if fold {
        let ctrl = last_control(lower).expect("at least one control");
        let bit = lower.iter().position(|&q| q == ctrl).unwrap();
        for col in 0..l1.ncols() {
            if (col >> bit) & 1 == 1 {
                l1.column_mut(col).neg_mut();
            }
        }
    }
    demultiplex(&cs.l0, &l1, lower, msb, opts, out)
}

struct CosineSine {
    l0: CMatrix,
    l1: CMatrix,
    r0h: CMatrix,
    r1h: CMatrix,
    theta: Vec<f64>,
}

/// `u = (L0 ⊕ L1) · [[C, −S], [S, C]] · (R0† ⊕ R1†)` with `C = cos θ`, `S = sin θ`.
fn cosine_sine(u: &CMatrix) -> CosineSine {
    let h = u.nrows() / 2;
    let u00 = u.view((0, 0), (h, h)).into_owned();
    let u01 = u.view((0, h), (h, h)).into_owned();
    let u10 = u.view((h, 0), (h, h)).into_owned();
    let u11 = u.view((h, h), (h, h)).into_owned();

    let r0 = right_basis(&u00, &u10);
    let x0 = &u00 * &r0;
    let x1 = &u10 * &r0;
    let (l0, cvals) = normalised_columns(&x0);
    let (l1, svals) = normalised_columns(&x1);

    let top = l1.adjoint() * &u11;
    let bottom = l0.adjoint() * &u01;
    let mut r1h = CMatrix::zeros(h, h);
    for i in 0..h {
        let row = if cvals[i] > svals[i] {
            top.row(i) / c(cvals[i], 0.0)
        } else {
            -bottom.row(i) / c(svals[i], 0.0)
        };
        r1h.set_row(i, &row);
    }
    let r1h = linalg::closest_unitary(&r1h);
    let theta = (0..h).map(|i| svals[i].atan2(cvals[i])).collect();
    CosineSine {
        l0,
        l1,
        r0h: r0.adjoint(),
        r1h,
        theta,
    }
}

/// Common right singular basis of `u00` and `u10`.
///
/// Cosines near 1 are indistinguishable in floating point, so directions with small angles come
/// from the SVD of the sine block and the rest from the cosine block.
fn right_basis(u00: &CMatrix, u10: &CMatrix) -> CMatrix {
    let h = u00.nrows();
    let right = |m: &CMatrix| {
        let svd = m.clone().svd(true, true);
        let v = svd.v_t.expect("svd v_t").adjoint();
        let mut idx: Vec<usize> = (0..h).collect();
        idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        (svd.singular_values, v, idx)
    };
    let (s, vs, order_s) = right(u10);
    let (_, vc, order_c) = right(u00);
    let small = order_s
        .iter()
        .filter(|&&i| s[i] <= std::f64::consts::FRAC_1_SQRT_2)
        .count();
    let mut cols: Vec<CVector> = order_s[..small]
        .iter()
        .map(|&i| vs.column(i).into_owned())
        .collect();
    cols.extend(order_c[..h - small].iter().map(|&i| vc.column(i).into_owned()));
    orthonormalise(&cols)
}

/// Orthonormal columns in the directions of `x`'s columns, largest first, plus their norms.
/// Columns too short to carry a direction are completed from the standard basis.
fn normalised_columns(x: &CMatrix) -> (CMatrix, Vec<f64>) {
    let h = x.ncols();
    let norms: Vec<f64> = (0..h).map(|i| x.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..h).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut q = CMatrix::zeros(x.nrows(), h);
    let mut filled: Vec<usize> = Vec::new();
    for &i in &order {
        if norms[i] > 1e-13 {
            let mut v: CVector = x.column(i).into_owned();
            project_out(&mut v, &q, &filled);
            let nv = v.norm();
            q.set_column(i, &(v / c(nv, 0.0)));
            filled.push(i);
        }
    }
    let mut basis = 0;
    for &i in &order {
        if norms[i] > 1e-13 {
            continue;
        }
        loop {
            let mut v = CVector::zeros(x.nrows());
            v[basis] = c(1.0, 0.0);
            basis += 1;
            project_out(&mut v, &q, &filled);
            let nv = v.norm();
            if nv > 0.5 {
                q.set_column(i, &(v / c(nv, 0.0)));
                filled.push(i);
                break;
            }
        }
    }
    let projected = (0..h).map(|i| q.column(i).dotc(&x.column(i)).re.max(0.0)).collect();
    (q, projected)
}

fn project_out(v: &mut CVector, q: &CMatrix, filled: &[usize]) {
    for _ in 0..2 {
        for &k in filled {
            let col = q.column(k);
            let proj = col.dotc(v);
            *v -= col * proj;
        }
    }
}

fn orthonormalise(cols: &[CVector]) -> CMatrix {
    let n = cols.len();
    let mut q = CMatrix::zeros(cols[0].len(), n);
    let filled: Vec<usize> = (0..n).collect();
    for (i, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        project_out(&mut v, &q, &filled[..i]);
        let nv = v.norm();
        q.set_column(i, &(v / c(nv, 0.0)));
    }
    q
}

/// `a ⊕ b = (I ⊗ V)(D ⊕ D†)(I ⊗ W)` on `lower` with the top qubit `msb` selecting the block.
fn demultiplex(
    a: &CMatrix,
    b: &CMatrix,
    lower: &[usize],
    msb: usize,
    opts: QsdOptions,
    out: &mut Vec<Item>,
) -> Result<()> {
    let (evals, v) = linalg::unitary_eigen(&(a * b.adjoint()));
    let d: Vec<Complex64> = evals.iter().map(|e| (e / e.norm()).sqrt()).collect();
    let dmat = CMatrix::from_diagonal(&CVector::from_vec(d.clone()));
    let w = linalg::closest_unitary(&(&dmat * v.adjoint() * b));
    let v = linalg::closest_unitary(&v);
    decompose(w, lower, opts, out)?;
    let phis: Vec<f64> = d.iter().map(|z| -2.0 * z.arg()).collect();
    let style = MuxStyle {
        simplify: opts.skip_trivial,
        ..MuxStyle::default()
    };
    out.push(Item::Gates(multiplexed_rotation_with(
        Axis::Z,
        lower,
        msb,
        &phis,
        style,
    )));
    decompose(v, lower, opts, out)
}

/// Emit KAK circuits for the two-qubit leaves, optionally chaining diagonals between them.
fn lower_leaves(items: Vec<Item>, opts: QsdOptions) -> Result<Vec<Gate>> {
    let leaves = items.iter().filter(|i| matches!(i, Item::Leaf { .. })).count();
    let mut seen = 0;
    let mut carry: Option<CMatrix> = None;
    let mut gates = Vec::new();
    for item in items {
        match item {
            Item::Gates(g) => gates.extend(g),
            Item::Leaf { u, low, high } => {
                seen += 1;
                let mut u = match carry.take() {
                    Some(d) => u * d,
                    None => u,
                };
                if opts.a2 && seen < leaves && kak(&u)?.cnot_count() == 3 {
                    let d = two_cnot_diagonal(&u);
                    u = &d * u;
                    carry = Some(d.adjoint());
                }
                if opts.skip_trivial && is_identity_up_to_phase(&u) {
                    continue;
                }
                gates.extend(kak_decompose_on_with(&u, low, high, opts.minimal_leaves)?);
            }
        }
    }
    Ok(gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::kak::tests::random_unitary;
    use std::f64::consts::PI;

    fn check(u: &CMatrix, opts: QsdOptions) -> Circuit {
        let circ = qsd_decompose_with(u, opts).unwrap();
        let d = hs_distance(&unitary_of_circuit(&circ).unwrap(), u).unwrap();
        assert!(d <= 1e-9, "{d}");
        circ
    }

    #[test]
    fn small_rotations_away_from_identity() {
        let g = random_unitary(8, 5);
        let h = (&g + g.adjoint()).map(|z| z * 0.5);
        for t in [1e-13, 1e-10, 1e-8, 1e-6, 1e-3] {
            let u = linalg::expm_hermitian(&h, t).unwrap();
            check(&u, QsdOptions::naive());
            check(&u, QsdOptions::optimized());
        }
        let mut near = linalg::identity(8);
        near[(1, 2)] = c(1e-21, 8e-17);
        near[(2, 1)] = c(-1e-21, 8e-17);
        near[(7, 7)] = c(1.0 + 4e-16, 0.0);
        check(&near, QsdOptions::naive());
    }

    #[test]
    fn one_qubit_is_single_u3() {
        let u = random_unitary(2, 3);
        let circ = check(&u, QsdOptions::naive());
        assert_eq!(circ.len(), 1);
    }

    #[test]
    fn three_qubit_cnot_counts() {
        for seed in 0..5 {
            let u = random_unitary(8, seed);
            assert_eq!(check(&u, QsdOptions::naive()).two_qubit_count(), 24);
            assert!(check(&u, QsdOptions::optimized()).two_qubit_count() <= 20);
        }
    }

    #[test]
    fn four_qubits() {
        let u = random_unitary(16, 11);
        check(&u, QsdOptions::naive());
        let opt = check(&u, QsdOptions::optimized());
        assert!(opt.two_qubit_count() <= 100);
    }

    #[test]
    fn structured_inputs() {
        let id = linalg::identity(8);
        assert!(check(&id, QsdOptions::optimized()).is_empty());
        check(&id, QsdOptions::naive());
        // Block-diagonal on the top qubit: controlled two-qubit unitary.
        let mut cu = linalg::identity(8);
        let inner = random_unitary(4, 99);
        cu.view_mut((4, 4), (4, 4)).copy_from(&inner);
        check(&cu, QsdOptions::optimized());
        check(&cu, QsdOptions::naive());
        // Controlled on the low qubit instead.
        let mut perm = CMatrix::zeros(8, 8);
        for x in 0..8usize {
            let y = ((x & 1) << 2) | (x >> 1);
            perm[(y, x)] = c(1.0, 0.0);
        }
        check(&(perm.adjoint() * &cu * &perm), QsdOptions::optimized());
        let ry = Gate::ry(0, PI / 3.0).matrix;
        check(&linalg::kron(&ry, &linalg::kron(&ry, &ry)), QsdOptions::optimized());
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_element(8, 8, c(0.3, 0.0));
        assert!(qsd_decompose(&m).is_err());
    }
}
