//! Spin-j thermal states, their purification, the engineered Uhlmann process, and two
//! independent routes to the Uhlmann phase: the Loschmidt overlap of the purified state
//! and a discretised parallel transport along the loop.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, ZERO};

/// Below this modulus the Loschmidt amplitude is treated as a zero (a transition point).
pub const AMPLITUDE_FLOOR: f64 = 1e-9;

/// Spin quantum number, stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Spin {
    twice_j: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice_j: 1 };
    pub const ONE: Spin = Spin { twice_j: 2 };

    pub fn new(j: f64) -> Result<Spin> {
        let twice = (2.0 * j).round();
        if (2.0 * j - twice).abs() > 1e-12 || !(twice == 1.0 || twice == 2.0) {
            return Err(Error::UnsupportedSpin(j));
        }
        Ok(Spin {
            twice_j: twice as u32,
        })
    }

    pub fn j(self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    /// Hilbert-space dimension `2j + 1`.
    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    /// Qubits needed to encode one copy of the spin (system or ancilla).
    pub fn qubits_per_copy(self) -> usize {
        self.twice_j as usize
    }
}

impl std::fmt::Display for Spin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.twice_j {
            1 => write!(f, "1/2"),
            n if n % 2 == 0 => write!(f, "{}", n / 2),
            n => write!(f, "{n}/2"),
        }
    }
}

impl std::str::FromStr for Spin {
    type Err = Error;

    /// Accepts `half`, `one`, or a number such as `1/2`, `0.5`, `1`.
    fn from_str(s: &str) -> Result<Spin> {
        let t = s.trim().to_ascii_lowercase();
        let j = match t.as_str() {
            "half" => 0.5,
            "one" => 1.0,
            _ => match t.split_once('/') {
                Some((n, d)) => {
                    let n: f64 = n.trim().parse().map_err(|_| bad_spin(s))?;
                    let d: f64 = d.trim().parse().map_err(|_| bad_spin(s))?;
                    n / d
                }
                None => t.parse().map_err(|_| bad_spin(s))?,
            },
        };
        Spin::new(j)
    }
}

fn bad_spin(s: &str) -> Error {
    Error::InvalidParameter(format!("cannot parse spin `{s}`"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinParams {
    pub spin: Spin,
    /// Energy scale; temperatures are measured in units of `omega0`.
    pub omega0: f64,
    /// Azimuth of the longitude loop.
    pub psi: f64,
}

impl SpinParams {
    pub fn new(spin: Spin, omega0: f64, psi: f64) -> Result<SpinParams> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be positive, got {omega0}"
            )));
        }
        Ok(SpinParams { spin, omega0, psi })
    }

    pub fn unit(spin: Spin) -> SpinParams {
        SpinParams {
            spin,
            omega0: 1.0,
            psi: 0.0,
        }
    }
}

/// `Jx, Jy, Jz` in the `|j, m⟩` basis ordered `m = j, j-1, …, -j` (ħ = 1).
#[derive(Debug, Clone)]
pub struct AngularMomentumOps {
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
}

impl AngularMomentumOps {
    pub fn dim(&self) -> usize {
        self.jz.nrows()
    }
}

pub fn angular_momentum(spin: Spin) -> AngularMomentumOps {
    let j = spin.j();
    let d = spin.dim();
    let m: Vec<f64> = (0..d).map(|k| j - k as f64).collect();
    // J+ |m⟩ = sqrt(j(j+1) - m(m+1)) |m+1⟩; index k-1 holds m+1.
    let mut jp = CMatrix::zeros(d, d);
    for k in 1..d {
        jp[(k - 1, k)] = c((j * (j + 1.0) - m[k] * (m[k] + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm).map(|z| z * 0.5);
    let jy = (&jp - &jm).map(|z| z / c(0.0, 2.0));
    let jz = CMatrix::from_fn(d, d, |r, s| if r == s { c(m[r], 0.0) } else { ZERO });
    AngularMomentumOps { jx, jy, jz }
}

/// `H = ω0 J·B̂` with `B̂ = (sinθ cosψ, sinθ sinψ, cosθ)`.
pub fn hamiltonian(params: &SpinParams, theta: f64) -> CMatrix {
    let ops = angular_momentum(params.spin);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = params.psi.sin_cos();
    (ops.jx * c(st * cp, 0.0) + ops.jy * c(st * sp, 0.0) + ops.jz * c(ct, 0.0))
        * c(params.omega0, 0.0)
}

/// Generator of rotations along the longitude at azimuth `ψ` (equals `Jy` at `ψ = 0`).
pub fn loop_generator(params: &SpinParams) -> CMatrix {
    let ops = angular_momentum(params.spin);
    let (sp, cp) = params.psi.sin_cos();
    ops.jy * c(cp, 0.0) - ops.jx * c(sp, 0.0)
}

#[derive(Debug, Clone)]
pub struct ThermalSpinState {
    pub params: SpinParams,
    pub beta: f64,
    pub hamiltonian: CMatrix,
    /// Energies in ascending order.
    pub energies: Vec<f64>,
    /// Boltzmann weights aligned with `energies`.
    pub weights: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `energies`.
    pub eigenvectors: CMatrix,
    pub partition_function: f64,
}

pub fn thermal_state(
    params: &SpinParams,
    hamiltonian: CMatrix,
    beta: f64,
) -> Result<ThermalSpinState> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be finite and positive, got {beta}"
        )));
    }
    if hamiltonian.nrows() != params.spin.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.spin.dim(),
            found: hamiltonian.nrows(),
        });
    }
    let (energies, eigenvectors) = linalg::hermitian_eigen(&hamiltonian)?;
    let e0 = energies[0];
    let shifted: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let total: f64 = shifted.iter().sum();
    let weights: Vec<f64> = shifted.iter().map(|w| w / total).collect();
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} underflows a Boltzmann weight; the state is not full rank"
        )));
    }
    Ok(ThermalSpinState {
        params: *params,
        beta,
        partition_function: total * (-beta * e0).exp(),
        hamiltonian,
        energies,
        weights,
        eigenvectors,
    })
}

impl ThermalSpinState {
    /// Thermal state at temperature `t` (in `ω0` units) at the start of the loop (`θ = 0`).
    pub fn at_temperature(params: &SpinParams, t: f64) -> Result<ThermalSpinState> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be finite and positive, got {t}"
            )));
        }
        thermal_state(params, hamiltonian(params, 0.0), 1.0 / t)
    }

    /// The `β = 0` uniform mixture.
    pub fn infinite_temperature(params: &SpinParams, hamiltonian: CMatrix) -> Result<Self> {
        let (energies, eigenvectors) = linalg::hermitian_eigen(&hamiltonian)?;
        let d = energies.len();
        Ok(ThermalSpinState {
            params: *params,
            beta: 0.0,
            hamiltonian,
            weights: vec![1.0 / d as f64; d],
            energies,
            eigenvectors,
            partition_function: d as f64,
        })
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn density_matrix(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let lam = CMatrix::from_diagonal(&CVector::from_iterator(
            self.dim(),
            self.weights.iter().map(|&w| c(w, 0.0)),
        ));
        v * lam * v.adjoint()
    }
}

/// `|W⟩ = Σ_j √λ_j |j⟩|j⟩`, stored in the eigenbasis with index `system * d + ancilla`.
#[derive(Debug, Clone)]
pub struct PurifiedState {
    pub dim: usize,
    pub amplitudes: CVector,
    pub eigenvectors: CMatrix,
}

pub fn purify(state: &ThermalSpinState) -> PurifiedState {
    let d = state.dim();
    let mut amplitudes = CVector::zeros(d * d);
    for (j, &w) in state.weights.iter().enumerate() {
        amplitudes[j * d + j] = c(w.sqrt(), 0.0);
    }
    PurifiedState {
        dim: d,
        amplitudes,
        eigenvectors: state.eigenvectors.clone(),
    }
}

impl PurifiedState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Amplitudes in the `|j, m⟩ ⊗ |j, m⟩` basis (`m` descending), index `system * d + ancilla`.
    pub fn standard_basis_amplitudes(&self) -> CVector {
        let basis = linalg::kron(&self.eigenvectors, &self.eigenvectors);
        basis * &self.amplitudes
    }

    /// Reduced state of the system, in the standard basis.
    pub fn reduced_system(&self) -> CMatrix {
        let d = self.dim;
        let psi = self.standard_basis_amplitudes();
        CMatrix::from_fn(d, d, |r, s| {
            (0..d).map(|a| psi[r * d + a] * psi[s * d + a].conj()).sum()
        })
    }
}

/// Dilation factor `sech(β ω0 / 2)` slowing the ancilla rotation.
pub fn eta(beta: f64, omega0: f64) -> f64 {
    1.0 / (0.5 * beta * omega0).cosh()
}

#[derive(Debug, Clone)]
pub struct UhlmannProcess {
    pub beta: f64,
    pub eta: f64,
    pub theta_total_system: f64,
    pub theta_total_ancilla: f64,
    /// System evolution after one loop, standard basis.
    pub us: CMatrix,
    /// Ancilla evolution after one loop, standard basis.
    pub ua: CMatrix,
}

pub fn uhlmann_process(state: &ThermalSpinState) -> Result<UhlmannProcess> {
    let params = &state.params;
    let eta = eta(state.beta, params.omega0);
    let generator = loop_generator(params);
    let theta_s = 2.0 * PI;
    let theta_a = eta * theta_s;
    Ok(UhlmannProcess {
        beta: state.beta,
        eta,
        theta_total_system: theta_s,
        theta_total_ancilla: theta_a,
        us: linalg::expm_hermitian(&generator, theta_s)?,
        ua: linalg::expm_hermitian(&generator, theta_a)?,
    })
}

/// `G = ⟨W(0)| Us ⊗ Ua |W(0)⟩ = Σ_{j,k} √(λ_j λ_k) ⟨k|Us|j⟩ ⟨k|Ua|j⟩` in the eigenbasis.
pub fn loschmidt_amplitude(state: &ThermalSpinState, process: &UhlmannProcess) -> Result<Complex64> {
    let d = state.dim();
    for m in [&process.us, &process.ua] {
        if m.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
    }
    if (process.beta - state.beta).abs() > 1e-12 * state.beta.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "process built for beta = {} applied to a state at beta = {}",
            process.beta, state.beta
        )));
    }
    let v = &state.eigenvectors;
    let us = v.adjoint() * &process.us * v;
    let ua = v.adjoint() * &process.ua * v;
    let mut g = ZERO;
    for j in 0..d {
        for k in 0..d {
            let amp = (state.weights[j] * state.weights[k]).sqrt();
            g += us[(k, j)] * ua[(k, j)] * amp;
        }
    }
    Ok(g)
}

fn phase_of(g: Complex64) -> Result<f64> {
    if g.norm() < AMPLITUDE_FLOOR {
        return Err(Error::CriticalPoint { modulus: g.norm() });
    }
    Ok(linalg::arg(g))
}

/// `θ_U = arg G`, in (-π, π].
pub fn uhlmann_phase(state: &ThermalSpinState, process: &UhlmannProcess) -> Result<f64> {
    phase_of(loschmidt_amplitude(state, process)?)
}

fn sqrt_density(params: &SpinParams, theta: f64, beta: f64) -> Result<CMatrix> {
    let st = thermal_state(params, hamiltonian(params, theta), beta)?;
    let v = &st.eigenvectors;
    let root = CMatrix::from_diagonal(&CVector::from_iterator(
        st.dim(),
        st.weights.iter().map(|&w| c(w.sqrt(), 0.0)),
    ));
    Ok(v * root * v.adjoint())
}

/// `Tr[ρ(0) U(τ)]` where `U(τ)` is accumulated as a left-ordered product of discrete
/// parallel-transport steps: each step picks the unitary making `W_k† W_{k+1}` positive,
/// i.e. the inverse polar factor of `√ρ_k √ρ_{k+1}`.
pub fn holonomy_amplitude(state: &ThermalSpinState, steps: usize) -> Result<Complex64> {
    let params = &state.params;
    let d = state.dim();
    let dtheta = 2.0 * PI / steps as f64;
    let mut u = linalg::identity(d);
    let mut root = sqrt_density(params, 0.0, state.beta)?;
    let rho0 = state.density_matrix();
    for k in 1..=steps {
        let next = sqrt_density(params, k as f64 * dtheta, state.beta)?;
        let overlap = &root * &next;
        let polar = linalg::closest_unitary(&overlap);
        u = polar.adjoint() * u;
        root = next;
    }
    Ok((rho0 * u).trace())
}

/// Phase of the discretised holonomy at `steps`, checked against `2 * steps`.
pub fn holonomy_oracle(state: &ThermalSpinState, steps: usize) -> Result<f64> {
    if steps < 100 {
        return Err(Error::InvalidParameter(format!(
            "holonomy oracle needs at least 100 steps, got {steps}"
        )));
    }
    let coarse = phase_of(holonomy_amplitude(state, steps)?)?;
    let fine = phase_of(holonomy_amplitude(state, 2 * steps)?)?;
    let change = linalg::wrap_angle(fine - coarse).abs();
    if change > 1e-6 {
        return Err(Error::NotConverged {
            steps,
            doubled: 2 * steps,
            change,
        });
    }
    Ok(coarse)
}

/// Real part of the Loschmidt amplitude at temperature `t`.
pub fn loschmidt_at(params: &SpinParams, t: f64) -> Result<f64> {
    let state = ThermalSpinState::at_temperature(params, t)?;
    let process = uhlmann_process(&state)?;
    Ok(loschmidt_amplitude(&state, &process)?.re)
}

/// Temperatures in `t_range` where `G(T)` changes sign, each bracketed to `resolution`.
pub fn critical_temperatures(
    params: &SpinParams,
    t_range: (f64, f64),
    resolution: f64,
) -> Result<Vec<f64>> {
    let (lo, hi) = t_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "temperature range ({lo}, {hi}) must lie in (0, inf)"
        )));
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    const SCAN: usize = 4000;
    let step = (hi - lo) / SCAN as f64;
    let mut roots = Vec::new();
    let mut t_prev = lo;
    let mut g_prev = loschmidt_at(params, lo)?;
    for k in 1..=SCAN {
        let t = lo + k as f64 * step;
        let g = loschmidt_at(params, t)?;
        if g_prev == 0.0 {
            roots.push(t_prev);
        } else if g_prev.signum() != g.signum() && g != 0.0 {
            let (mut a, mut b, mut ga) = (t_prev, t, g_prev);
            while b - a > resolution {
                let mid = 0.5 * (a + b);
                let gm = loschmidt_at(params, mid)?;
                if gm.signum() == ga.signum() {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        t_prev = t;
        g_prev = g;
    }
    Ok(roots)
}
