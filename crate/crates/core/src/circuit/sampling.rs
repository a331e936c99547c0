use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::density::DensityMatrixState;
use super::statevector::{apply_gate_in_place, StateVector};
use super::{basis_rotation, Measurement};
use crate::error::{Error, Result};

/// Row-stochastic readout matrix: `confusion[true_bit][reported_bit]`.
pub type Confusion = [[f64; 2]; 2];

/// Anything that yields computational-basis probabilities after basis pre-rotation.
pub trait QuantumState: Clone {
    fn n_qubits(&self) -> usize;
    fn probabilities(&self) -> Vec<f64>;
    fn rotate(&mut self, gate: &super::Gate) -> Result<()>;
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        StateVector::n_qubits(self)
    }

    fn probabilities(&self) -> Vec<f64> {
        self.amplitudes().iter().map(|z| z.norm_sqr()).collect()
    }

    fn rotate(&mut self, gate: &super::Gate) -> Result<()> {
        apply_gate_in_place(self, gate)
    }
}

impl QuantumState for DensityMatrixState {
    fn n_qubits(&self) -> usize {
        DensityMatrixState::n_qubits(self)
    }

    fn probabilities(&self) -> Vec<f64> {
        let m = self.matrix();
        (0..m.nrows()).map(|k| m[(k, k)].re.max(0.0)).collect()
    }

    fn rotate(&mut self, gate: &super::Gate) -> Result<()> {
        self.apply_unitary(&gate.qubits, &gate.matrix);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    /// Bitstring (classical bit 0 rightmost) → number of shots.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotCounts {
    pub fn get(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Shots where classical bit `clbit` read 0 and 1.
    pub fn marginal(&self, clbit: usize) -> (u64, u64) {
        let mut zeros = 0;
        let mut ones = 0;
        for (bits, &n) in &self.counts {
            let len = bits.len();
            let bit = if clbit < len {
                bits.as_bytes()[len - 1 - clbit]
            } else {
                b'0'
            };
            if bit == b'1' {
                ones += n;
            } else {
                zeros += n;
            }
        }
        (zeros, ones)
    }
}

fn rotated<S: QuantumState>(state: &S, measurements: &[Measurement]) -> Result<S> {
    let mut s = state.clone();
    for m in measurements {
        if m.qubit >= s.n_qubits() {
            return Err(Error::QubitOutOfRange {
                qubit: m.qubit,
                n_qubits: s.n_qubits(),
            });
        }
        for g in basis_rotation(m.qubit, m.basis) {
            s.rotate(&g)?;
        }
    }
    Ok(s)
}

fn n_clbits(measurements: &[Measurement]) -> usize {
    measurements.iter().map(|m| m.clbit + 1).max().unwrap_or(0)
}

/// Exact distribution over classical outcomes (index bit `b` = classical bit `b`),
/// with readout confusion folded in when given (indexed by qubit).
pub fn measured_distribution<S: QuantumState>(
    state: &S,
    measurements: &[Measurement],
    readout: Option<&[Confusion]>,
) -> Result<Vec<f64>> {
    let s = rotated(state, measurements)?;
    let probs = s.probabilities();
    let nc = n_clbits(measurements);
    let mut dist = vec![0.0; 1 << nc];
    for (idx, p) in probs.iter().enumerate() {
        let mut out = 0usize;
        for m in measurements {
            out |= ((idx >> m.qubit) & 1) << m.clbit;
        }
        dist[out] += p;
    }
    if let Some(table) = readout {
        for m in measurements {
            let conf = table.get(m.qubit).copied().unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
            let bit = 1usize << m.clbit;
            let mut next = vec![0.0; dist.len()];
            for (k, p) in dist.iter().enumerate() {
                let truth = (k & bit != 0) as usize;
                next[k & !bit] += p * conf[truth][0];
                next[k | bit] += p * conf[truth][1];
            }
            dist = next;
        }
    }
    let total: f64 = dist.iter().sum();
    Ok(dist.into_iter().map(|p| p / total).collect())
}

fn bitstring(value: usize, width: usize) -> String {
    (0..width)
        .rev()
        .map(|b| if value >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Draw `shots` outcomes of `measurements`, then flip each reported bit through the
/// qubit's readout confusion when `readout` is given.
pub fn sample_counts<S: QuantumState>(
    state: &S,
    measurements: &[Measurement],
    shots: u64,
    seed: u64,
    readout: Option<&[Confusion]>,
) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let ideal = measured_distribution(state, measurements, None)?;
    let mut cdf = Vec::with_capacity(ideal.len());
    let mut acc = 0.0;
    for p in &ideal {
        acc += p;
        cdf.push(acc);
    }
    let nc = n_clbits(measurements);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; ideal.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let mut outcome = cdf.partition_point(|&c| c <= u).min(ideal.len() - 1);
        if let Some(table) = readout {
            for m in measurements {
                let conf = table.get(m.qubit).copied().unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
                let bit = 1usize << m.clbit;
                let truth = (outcome & bit != 0) as usize;
                let flip: f64 = rng.random();
                let reported_one = flip < conf[truth][1];
                outcome = if reported_one { outcome | bit } else { outcome & !bit };
            }
        }
        tally[outcome] += 1;
    }
    let counts = tally
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(k, &n)| (bitstring(k, nc.max(1)), n))
        .collect();
    Ok(ShotCounts {
        counts,
        shots,
        seed,
    })
}

/// `(⟨σx⟩, ⟨σy⟩)` from X- and Y-basis runs, each as `(N0 - N1) / N` on `clbit`.
pub fn expectation_xy(x: &ShotCounts, y: &ShotCounts, clbit: usize) -> Result<(f64, f64)> {
    let single = |counts: &ShotCounts| -> Result<f64> {
        let (n0, n1) = counts.marginal(clbit);
        let n = n0 + n1;
        if n == 0 {
            return Err(Error::InvalidParameter("no shots recorded".into()));
        }
        Ok((n0 as f64 - n1 as f64) / n as f64)
    };
    Ok((single(x)?, single(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{simulate_statevector, Basis, Circuit, Gate};

    fn counts(n0: u64, n1: u64) -> ShotCounts {
        let mut c = BTreeMap::new();
        c.insert("0".to_string(), n0);
        c.insert("1".to_string(), n1);
        ShotCounts {
            counts: c,
            shots: n0 + n1,
            seed: 0,
        }
    }

    fn meas(basis: Basis) -> Vec<Measurement> {
        vec![Measurement {
            qubit: 0,
            clbit: 0,
            basis,
        }]
    }

    #[test]
    fn plus_state_in_x_basis_is_deterministic() {
        let mut circ = Circuit::new(1);
        circ.push(Gate::h(0)).unwrap();
        let s = simulate_statevector(&circ).unwrap();
        let c = sample_counts(&s, &meas(Basis::X), 500, 3, None).unwrap();
        assert_eq!(c.get("0"), 500);
    }

    #[test]
    fn zero_state_in_x_basis_is_balanced() {
        let s = StateVector::zero(1);
        let c = sample_counts(&s, &meas(Basis::X), 2024, 11, None).unwrap();
        let frac = c.get("0") as f64 / 2024.0;
        assert!((frac - 0.5).abs() < 5.0 * 0.5 / 2024f64.sqrt());
    }

    #[test]
    fn readout_confusion_flips_bits() {
        let s = StateVector::zero(1);
        let table = [[[0.99, 0.01], [0.02, 0.98]]];
        let exact = measured_distribution(&s, &meas(Basis::Z), Some(&table)).unwrap();
        assert!((exact[1] - 0.01).abs() < 1e-15);
        let c = sample_counts(&s, &meas(Basis::Z), 100_000, 5, Some(&table)).unwrap();
        let rate = c.get("1") as f64 / 1e5;
        assert!((rate - 0.01).abs() < 5.0 * (0.01f64 * 0.99 / 1e5).sqrt());
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut circ = Circuit::new(2);
        circ.extend([Gate::ry(0, 1.1), Gate::ry(1, 0.4)]).unwrap();
        let s = simulate_statevector(&circ).unwrap();
        let m = vec![
            Measurement { qubit: 0, clbit: 0, basis: Basis::Z },
            Measurement { qubit: 1, clbit: 1, basis: Basis::Y },
        ];
        let a = sample_counts(&s, &m, 1000, 42, None).unwrap();
        let b = sample_counts(&s, &m, 1000, 42, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.values().sum::<u64>(), 1000);
        assert!(a.counts.keys().all(|k| k.len() == 2));
    }

    #[test]
    fn expectation_arithmetic() {
        assert_eq!(expectation_xy(&counts(10, 0), &counts(5, 5), 0).unwrap(), (1.0, 0.0));
        let (sx, _) = expectation_xy(&counts(1518, 506), &counts(1, 1), 0).unwrap();
        assert!((sx - 0.5).abs() < 1e-15);
        let empty = ShotCounts {
            counts: BTreeMap::new(),
            shots: 0,
            seed: 0,
        };
        assert!(expectation_xy(&empty, &empty, 0).is_err());
    }

    #[test]
    fn zero_shots_rejected() {
        assert!(sample_counts(&StateVector::zero(1), &meas(Basis::Z), 0, 0, None).is_err());
    }
}
