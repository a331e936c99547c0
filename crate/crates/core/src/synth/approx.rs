//! Bottom-up template search: a layer of U3 gates grown by `{CNOT, U3, U3}` blocks, with all
//! angles refit by Levenberg–Marquardt after each growth step.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{hs_distance, SynthesisConfig};
use crate::circuit::{u3_matrix, unitary_of_circuit, Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ONE, ZERO};

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub circuit: Circuit,
    pub distance: f64,
    /// Number of `{CNOT, U3, U3}` blocks in the template that produced the circuit.
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    U3(usize),
    Cnot(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Template {
    n: usize,
    ops: Vec<Op>,
}

impl Template {
    fn seed(n: usize) -> Template {
        Template {
            n,
            ops: (0..n).map(Op::U3).collect(),
        }
    }

    fn grown(&self, a: usize, b: usize) -> Template {
        let mut ops = self.ops.clone();
        ops.extend([Op::Cnot(a, b), Op::U3(a), Op::U3(b)]);
        Template { n: self.n, ops }
    }

    fn n_params(&self) -> usize {
        3 * self.ops.iter().filter(|o| matches!(o, Op::U3(_))).count() + 1
    }

    fn depth(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::Cnot(..))).count()
    }
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Embed a one-qubit matrix on qubit `q` of an `n`-qubit register.
fn embed(m: &CMatrix, q: usize, n: usize) -> CMatrix {
    let mut out = linalg::identity(1);
    for k in (0..n).rev() {
        out = if k == q {
            linalg::kron(&out, m)
        } else {
            linalg::kron(&out, &linalg::identity(2))
        };
    }
    out
}

fn cnot_full(a: usize, b: usize, n: usize) -> CMatrix {
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let y = if (x >> a) & 1 == 1 { x ^ (1 << b) } else { x };
        m[(y, x)] = ONE;
    }
    m
}

fn u3_partials(t: f64, p: f64, l: f64) -> [CMatrix; 3] {
    let (s, co) = ((t / 2.0).sin(), (t / 2.0).cos());
    let ep = Complex64::from_polar(1.0, p);
    let el = Complex64::from_polar(1.0, l);
    let epl = ep * el;
    let i = c(0.0, 1.0);
    let m = |a, b, cc, d| linalg::from_rows(&[&[a, b], &[cc, d]]);
    [
        m(c(-0.5 * s, 0.0), -el * (0.5 * co), ep * (0.5 * co), -epl * (0.5 * s)),
        m(ZERO, ZERO, i * ep * s, i * epl * co),
        m(ZERO, -i * el * s, ZERO, i * epl * co),
    ]
}

/// Template unitary and, on request, its derivatives with respect to every parameter.
fn evaluate(t: &Template, x: &[f64], want_jac: bool) -> (CMatrix, Vec<CMatrix>) {
    let dim = 1usize << t.n;
    let mut mats = Vec::with_capacity(t.ops.len());
    let mut slot = 0;
    for op in &t.ops {
        match *op {
            Op::U3(q) => {
                mats.push(embed(&u3_matrix(x[slot], x[slot + 1], x[slot + 2]), q, t.n));
                slot += 3;
            }
            Op::Cnot(a, b) => mats.push(cnot_full(a, b, t.n)),
        }
    }
    let phase = Complex64::from_polar(1.0, x[x.len() - 1]);
    let mut prefix = Vec::with_capacity(mats.len() + 1);
    prefix.push(linalg::identity(dim));
    for m in &mats {
        let next = m * prefix.last().unwrap();
        prefix.push(next);
    }
    let u = prefix.last().unwrap() * phase;
    if !want_jac {
        return (u, Vec::new());
    }
    let mut suffix = vec![linalg::identity(dim); mats.len() + 1];
    for k in (0..mats.len()).rev() {
        suffix[k] = &suffix[k + 1] * &mats[k];
    }
    let mut jac = Vec::with_capacity(t.n_params());
    let mut slot = 0;
    for (k, op) in t.ops.iter().enumerate() {
        if let Op::U3(q) = *op {
            for d in u3_partials(x[slot], x[slot + 1], x[slot + 2]) {
                jac.push(&suffix[k + 1] * embed(&d, q, t.n) * &prefix[k] * phase);
            }
            slot += 3;
        }
    }
    jac.push(&u * c(0.0, 1.0));
    (u, jac)
}

fn residual(u: &CMatrix, target: &CMatrix) -> DVector<f64> {
    let diff = u - target;
    DVector::from_iterator(2 * diff.len(), diff.iter().flat_map(|z| [z.re, z.im]))
}

/// Levenberg–Marquardt on `‖e^{iα} U(x) − V‖²`; returns the fitted parameters.
fn fit(t: &Template, target: &CMatrix, mut x: Vec<f64>, iterations: usize) -> Vec<f64> {
    let (u0, _) = evaluate(t, &x, false);
    let overlap: Complex64 = u0.iter().zip(target.iter()).map(|(a, b)| a.conj() * b).sum();
    let last = x.len() - 1;
    x[last] += overlap.arg();
    let mut lambda = 1e-3;
    let (u, _) = evaluate(t, &x, false);
    let mut cost = residual(&u, target).norm_squared();
    let mut stalled = 0;
    for _ in 0..iterations {
        if cost < 1e-32 {
            break;
        }
        let (u, jac) = evaluate(t, &x, true);
        let r = residual(&u, target);
        let p = jac.len();
        let j = DMatrix::from_fn(r.len(), p, |row, col| {
            let z = jac[col][row / 2];
            if row % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * &r;
        if g.amax() < 1e-18 {
            break;
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut damped = a.clone();
            for k in 0..p {
                damped[(k, k)] += lambda * (1.0 + a[(k, k)]);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (ut, _) = evaluate(t, &trial, false);
            let trial_cost = residual(&ut, target).norm_squared();
            if trial_cost < cost {
                let gain = cost - trial_cost;
                x = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if gain > 1e-6 * (cost + gain) {
                    stalled = 0;
                } else {
                    stalled += 1;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved || stalled >= 8 {
            break;
        }
    }
    x
}

fn template_distance(t: &Template, x: &[f64], target: &CMatrix) -> f64 {
    let (u, _) = evaluate(t, x, false);
    hs_distance(&u, target).unwrap_or(1.0)
}

fn to_circuit(t: &Template, x: &[f64]) -> Circuit {
    let mut circ = Circuit::new(t.n);
    let mut slot = 0;
    for op in &t.ops {
        let g = match *op {
            Op::U3(q) => {
                let g = Gate::u3(q, x[slot], x[slot + 1], x[slot + 2]);
                slot += 3;
                if hs_distance(&g.matrix, &linalg::identity(2)).unwrap_or(1.0) < 1e-12 {
                    continue;
                }
                g
            }
            Op::Cnot(a, b) => Gate::cnot(a, b),
        };
        circ.push(g).expect("template qubits in range");
    }
    circ
}

#[derive(Clone)]
struct Candidate {
    template: Template,
    params: Vec<f64>,
    distance: f64,
}

fn random_params(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(-PI..PI)).collect()
}

fn child_seed(seed: u64, depth: usize, parent: usize, pair: usize, restart: usize) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [depth, parent, pair, restart] {
        h = h.rotate_left(17) ^ (v as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    }
    h
}

/// Best of `restarts` fits of one template; restart 0 warm-starts from `warm` when given.
fn best_fit(
    template: &Template,
    target: &CMatrix,
    warm: Option<&[f64]>,
    cfg: &SynthesisConfig,
    seeds: impl Fn(usize) -> u64 + Sync,
) -> Candidate {
    let p = template.n_params();
    let fits: Vec<Candidate> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds(r));
            let x0 = match (r, warm) {
                (0, Some(w)) => {
                    let mut x = w[..w.len() - 1].to_vec();
                    x.extend((0..6).map(|_| rng.random_range(-1e-2..1e-2)));
                    x.push(w[w.len() - 1]);
                    x
                }
                _ => random_params(&mut rng, p),
            };
            let x = fit(template, target, x0, cfg.iterations);
            let distance = template_distance(template, &x, target);
            Candidate {
                template: template.clone(),
                params: x,
                distance,
            }
        })
        .collect();
    fits.into_iter()
        .reduce(|a, b| if b.distance < a.distance { b } else { a })
        .expect("restarts >= 1")
}

/// Approximate `u` to Hilbert–Schmidt distance `config.epsilon` over {U3, CNOT}.
pub fn approx_synthesize(u: &CMatrix, config: &SynthesisConfig) -> Result<ApproxResult> {
    config.validate()?;
    let dim = u.nrows();
    if !matches!(dim, 2 | 4 | 8) || u.ncols() != dim {
        return Err(Error::InvalidParameter(format!(
            "approximate synthesis supports 1 to 3 qubits, got shape {:?}",
            u.shape()
        )));
    }
    linalg::ensure_unitary(u, 1e-9, "approx_synthesize")?;
    let n = dim.trailing_zeros() as usize;
    let eps = config.epsilon;
    let seed = config.seed;

    let root = Template::seed(n);
    let mut beam = vec![best_fit(&root, u, None, config, |r| child_seed(seed, 0, 0, 0, r))];
    let placements = pairs(n);
    let mut best = beam[0].clone();
    let mut depth = 0;
    loop {
        let done = finish(&best, u);
        if done.distance <= eps {
            return Ok(done);
        }
        if depth >= config.max_depth || placements.is_empty() {
            return Err(Error::SynthesisFailed {
                best_distance: done.distance,
                depth,
                best: Box::new(done.circuit),
            });
        }
        depth += 1;
        let jobs: Vec<(usize, usize)> = (0..beam.len())
            .flat_map(|b| (0..placements.len()).map(move |p| (b, p)))
            .collect();
        let children: Vec<Candidate> = jobs
            .par_iter()
            .map(|&(b, p)| {
                let (qa, qb) = placements[p];
                let t = beam[b].template.grown(qa, qb);
                best_fit(&t, u, Some(&beam[b].params), config, |r| {
                    child_seed(seed, depth, b, p, r)
                })
            })
            .collect();
        let mut order: Vec<usize> = (0..children.len()).collect();
        order.sort_by(|&i, &j| {
            children[i]
                .distance
                .total_cmp(&children[j].distance)
                .then(i.cmp(&j))
        });
        // Children that land on the same distance are almost always the same local minimum.
        let mut kept: Vec<Candidate> = Vec::with_capacity(config.beam_width);
        for i in order {
            let d = children[i].distance;
            if kept.iter().any(|k| (k.distance - d).abs() <= 1e-9 * d.max(1e-300)) {
                continue;
            }
            kept.push(children[i].clone());
            if kept.len() == config.beam_width {
                break;
            }
        }
        beam = kept;
        if beam[0].distance <= eps || beam[0].distance < best.distance {
            best = beam[0].clone();
        }
    }
}

fn finish(c: &Candidate, target: &CMatrix) -> ApproxResult {
    let circuit = to_circuit(&c.template, &c.params);
    let distance = unitary_of_circuit(&circuit)
        .and_then(|m| hs_distance(&m, target))
        .unwrap_or(1.0);
    ApproxResult {
        circuit,
        distance,
        depth: c.template.depth(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::kak::tests::random_unitary;
    use crate::synth::kak_decompose;

    #[test]
    fn jacobian_matches_finite_differences() {
        let t = Template::seed(2).grown(0, 1).grown(0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_params(&mut rng, t.n_params());
        let (_, jac) = evaluate(&t, &x, true);
        let h = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let fd = (evaluate(&t, &xp, false).0 - evaluate(&t, &xm, false).0) / c(2.0 * h, 0.0);
            assert!(linalg::max_abs_diff(&fd, &jac[k]) < 1e-8, "param {k}");
        }
    }

    #[test]
    fn recovers_exact_two_qubit_circuit() {
        let target = Gate::cnot(0, 1).matrix;
        let res = approx_synthesize(&target, &SynthesisConfig::default()).unwrap();
        assert!(res.distance <= 1e-8);
        assert_eq!(res.circuit.two_qubit_count(), 1);

        let u = random_unitary(4, 4);
        let exact = kak_decompose(&u).unwrap();
        let res = approx_synthesize(&u, &SynthesisConfig::default()).unwrap();
        assert!(res.distance <= 1e-8);
        assert!(res.circuit.two_qubit_count() <= exact.two_qubit_count());
    }

    #[test]
    fn deterministic_under_seed() {
        let u = random_unitary(4, 8);
        let cfg = SynthesisConfig::with_epsilon(1e-6);
        let a = approx_synthesize(&u, &cfg).unwrap();
        let b = approx_synthesize(&u, &cfg).unwrap();
        assert_eq!(a.circuit.gates(), b.circuit.gates());
    }

    #[test]
    fn depth_cap_reports_best() {
        let u = random_unitary(8, 2);
        let cfg = SynthesisConfig {
            max_depth: 2,
            ..SynthesisConfig::default()
        };
        match approx_synthesize(&u, &cfg) {
            Err(Error::SynthesisFailed { best_distance, depth, best }) => {
                assert_eq!(depth, 2);
                assert!(best_distance > 1e-8);
                assert_eq!(best.two_qubit_count(), 2);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(approx_synthesize(&linalg::identity(16), &SynthesisConfig::default()).is_err());
        assert!(approx_synthesize(&linalg::identity(3), &SynthesisConfig::default()).is_err());
    }
}
