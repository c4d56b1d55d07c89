//! Time propagation of schedules: unitary stepping, Lindblad dephasing and
//! quasi-static Monte Carlo averaging.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    average_gate_fidelity, c, cis, cr, eigvalsh, expm_hermitian_2x2, kron, mat_exp, pauli, spin1,
    CMatrix, C64, ZERO,
};
use crate::pulses::{two_tone, PulseSchedule};
use crate::spinsys::{
    basis, electron_hamiltonian_lab, lab_tones, lambda_hamiltonian, m_of_index,
    rotating_frame_hamiltonian, BrightFrame, SpinSystemParams, Transition,
};
use crate::table::CsvTable;

/// Noise sources. Rates and spreads are angular/inverse-µs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Quasi-static detuning spread, rad/µs (Gaussian, one draw per shot).
    pub detuning_sigma: f64,
    /// Relative Rabi-amplitude spread (Gaussian, one draw per shot).
    pub amplitude_rel_sigma: f64,
    /// Electron Lindblad dephasing rate, 1/µs.
    pub dephasing_rate_e: f64,
    /// Nuclear Lindblad dephasing rate, 1/µs.
    pub dephasing_rate_n: f64,
    /// Depolarizing probability applied after each gate.
    pub depol_per_gate: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("detuning_sigma", self.detuning_sigma),
            ("amplitude_rel_sigma", self.amplitude_rel_sigma),
            ("dephasing_rate_e", self.dephasing_rate_e),
            ("dephasing_rate_n", self.dephasing_rate_n),
            ("depol_per_gate", self.depol_per_gate),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.depol_per_gate > 1.0 {
            return Err(Error::Argument(format!(
                "depol_per_gate must be <= 1, got {}",
                self.depol_per_gate
            )));
        }
        Ok(())
    }

    pub fn is_quasi_static_free(&self) -> bool {
        self.detuning_sigma == 0.0 && self.amplitude_rel_sigma == 0.0
    }
}

/// One realization of the quasi-static errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Perturbation {
    /// Detuning δ, rad/µs.
    pub detuning: f64,
    /// Relative amplitude error ε (Ω → (1+ε)Ω).
    pub amplitude_error: f64,
}

/// Hilbert space and frame in which a schedule is propagated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    /// 2-dim {|b⟩, |a⟩} working subspace; detuning enters as (δ/2)σ_z.
    Lambda,
    /// 3-dim electron in the resonant rotating frame after the RWA.
    Electron,
    /// 3-dim electron built from explicit tones in the rotating frame,
    /// with or without the RWA.
    ElectronRotating { params: SpinSystemParams, rwa: bool },
    /// 3-dim electron in the lab frame.
    ElectronLab { params: SpinSystemParams },
    /// 9-dim electron ⊗ ¹⁴N in the interaction picture of the static
    /// hybrid Hamiltonian; the tones are resonant with the `manifold`
    /// (m_I) line and act on every manifold with its hyperfine detuning.
    Hybrid { params: SpinSystemParams, manifold: i32 },
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Lambda => 2,
            Space::Electron | Space::ElectronRotating { .. } | Space::ElectronLab { .. } => 3,
            Space::Hybrid { .. } => 9,
        }
    }

    /// Indices of the computational subspace.
    pub fn qubit_indices(&self) -> Vec<usize> {
        match self {
            Space::Lambda => vec![0, 1],
            Space::Hybrid { .. } => basis::COMPUTATIONAL.to_vec(),
            _ => basis::QUBIT.to_vec(),
        }
    }

    /// Eigenvalues of the electron and nuclear dephasing operators for each
    /// basis state.
    fn dephasing_weights(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Space::Lambda => (vec![1.0, -1.0], vec![0.0, 0.0]),
            Space::Hybrid { .. } => {
                let e = (0..9).map(|k| m_of_index(k / 3) as f64).collect();
                let n = (0..9).map(|k| m_of_index(k % 3) as f64).collect();
                (e, n)
            }
            _ => (vec![1.0, 0.0, -1.0], vec![0.0; 3]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exponential of H at the step midpoint (second order).
    Midpoint,
    /// Fourth-order commutator-free Magnus scheme (two exponentials per step).
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepPolicy {
    /// Upper bound on ‖H‖·dt per step, rad.
    pub max_phase: f64,
    /// Minimum number of steps per segment.
    pub min_steps: usize,
    pub integrator: Integrator,
    /// Record every k-th step; 0 records segment boundaries only.
    pub record_every: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            max_phase: 0.05,
            min_steps: 16,
            integrator: Integrator::Magnus4,
            record_every: 0,
        }
    }
}

impl StepPolicy {
    pub fn midpoint(max_phase: f64) -> Self {
        StepPolicy {
            max_phase,
            integrator: Integrator::Midpoint,
            ..StepPolicy::default()
        }
    }

    pub fn magnus4(max_phase: f64) -> Self {
        StepPolicy {
            max_phase,
            integrator: Integrator::Magnus4,
            ..StepPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_phase > 0.0 && self.max_phase.is_finite()) || self.min_steps == 0 {
            return Err(Error::Argument(format!(
                "step policy yields no steps (max_phase = {}, min_steps = {})",
                self.max_phase, self.min_steps
            )));
        }
        if self.max_phase > 0.05 {
            return Err(Error::Argument(format!(
                "max_phase must be <= 0.05 rad per step, got {}",
                self.max_phase
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Unitary,
    Density,
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub branch: Branch,
    pub space: Space,
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub leakage_final: Option<f64>,
}

impl TrajectoryResult {
    pub fn final_state(&self) -> &CMatrix {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Populations per sample for a given input vector (unitary branch) or
    /// the density diagonal, plus population outside the qubit subspace.
    pub fn to_csv(&self, input: Option<&[C64]>) -> Result<CsvTable> {
        let dim = self.space.dim();
        let mut header = vec!["t_us".to_string()];
        header.extend((0..dim).map(|k| format!("pop_{k}")));
        header.push("leakage".into());
        let mut table = CsvTable::new(&header);
        let qubit = self.space.qubit_indices();
        for (t, state) in self.times.iter().zip(&self.states) {
            let pops: Vec<f64> = match self.branch {
                Branch::Unitary => {
                    let v = input.ok_or_else(|| {
                        Error::Argument("unitary trajectory export needs an input state".into())
                    })?;
                    if v.len() != dim {
                        return Err(Error::Dimension(format!(
                            "input has length {}, space has dimension {dim}",
                            v.len()
                        )));
                    }
                    state.mat_vec(v).iter().map(|z| z.norm_sqr()).collect()
                }
                Branch::Density => state.diag().iter().map(|z| z.re).collect(),
            };
            let inside: f64 = qubit.iter().map(|&k| pops[k]).sum();
            let mut row = vec![*t];
            row.extend(&pops);
            row.push(if self.space == Space::Lambda { 0.0 } else { (1.0 - inside).max(0.0) });
            table.push_nums(&row);
        }
        Ok(table)
    }
}

/// Hamiltonian of the schedule at time t in the given space.
pub fn hamiltonian(s: &PulseSchedule, space: &Space, pert: &Perturbation, t: f64) -> CMatrix {
    let scale = 1.0 + pert.amplitude_error;
    let omega = s.omega(t) * scale;
    let phi2 = s.phi2(t);
    let delta = pert.detuning;
    match space {
        Space::Lambda => {
            let mut h = lambda_hamiltonian(omega, phi2);
            if delta != 0.0 {
                h[(0, 0)] += cr(delta / 2.0);
                h[(1, 1)] -= cr(delta / 2.0);
            }
            h
        }
        Space::Electron => {
            let mut h = s.frame().embed_hamiltonian(omega, phi2);
            add_sz(&mut h, delta);
            h
        }
        Space::ElectronRotating { params, rwa } => {
            let tt = two_tone(s, t);
            let tones = lab_tones(params, tt.omega1 * scale, tt.omega2 * scale, tt.phi1, tt.phi2);
            let mut h = rotating_frame_hamiltonian(
                params,
                &tones,
                t,
                params.lower_transition(),
                params.upper_transition(),
                *rwa,
            );
            add_sz(&mut h, delta);
            h
        }
        Space::ElectronLab { params } => {
            let tt = two_tone(s, t);
            let tones = lab_tones(params, tt.omega1 * scale, tt.omega2 * scale, tt.phi1, tt.phi2);
            let mut h = electron_hamiltonian_lab(params, &tones, t);
            add_sz(&mut h, delta);
            h
        }
        Space::Hybrid { params, manifold } => {
            let tt = two_tone(s, t);
            let mut h = CMatrix::zeros(9, 9);
            let tones = [
                (Transition::ZeroAncilla, tt.omega1 * scale, tt.phi1),
                (Transition::AncillaOne, tt.omega2 * scale, tt.phi2),
            ];
            for (target, amp, phase) in tones {
                if amp == 0.0 {
                    continue;
                }
                let q = target.qubit_index();
                let qm = target.qubit_ms() as f64;
                for n in 0..3 {
                    let shift = params.a_hf * qm * (m_of_index(n) - manifold) as f64;
                    let v = cis(phase + shift * t) * (amp / 2.0);
                    let (row, col) = (basis::hybrid(q, n), basis::hybrid(basis::ANCILLA, n));
                    h[(row, col)] += v;
                    h[(col, row)] += v.conj();
                }
            }
            if delta != 0.0 {
                for k in 0..9 {
                    h[(k, k)] += cr(delta * m_of_index(k / 3) as f64);
                }
            }
            h
        }
    }
}

fn add_sz(h: &mut CMatrix, delta: f64) {
    if delta != 0.0 {
        h[(basis::PLUS, basis::PLUS)] += cr(delta);
        h[(basis::MINUS, basis::MINUS)] -= cr(delta);
    }
}

/// `exp(−i dt H)` using the closed form for 2×2 blocks.
fn step_exp(h: &CMatrix, dt: f64) -> Result<CMatrix> {
    if h.rows() == 2 {
        Ok(expm_hermitian_2x2(h, dt))
    } else {
        mat_exp(h, c(0.0, -dt))
    }
}

/// Propagator over [t0, t0 + dt].
fn step_propagator(
    s: &PulseSchedule,
    space: &Space,
    pert: &Perturbation,
    integrator: Integrator,
    t0: f64,
    dt: f64,
) -> Result<CMatrix> {
    match integrator {
        Integrator::Midpoint => step_exp(&hamiltonian(s, space, pert, t0 + 0.5 * dt), dt),
        Integrator::Magnus4 => {
            let r = 3f64.sqrt() / 6.0;
            let h1 = hamiltonian(s, space, pert, t0 + (0.5 - r) * dt);
            let h2 = hamiltonian(s, space, pert, t0 + (0.5 + r) * dt);
            let (a1, a2) = (0.25 - r, 0.25 + r);
            let first = step_exp(&(&h1.scale_re(a2) + &h2.scale_re(a1)), dt)?;
            let second = step_exp(&(&h1.scale_re(a1) + &h2.scale_re(a2)), dt)?;
            Ok(&second * &first)
        }
    }
}

/// Sub-intervals of the schedule (segment pieces split at phase jumps).
fn intervals(s: &PulseSchedule) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = 0.0;
    for seg in &s.segments {
        let mut cuts: Vec<f64> = seg
            .phase
            .jumps
            .iter()
            .map(|j| j.at_us)
            .filter(|&t| t > 0.0 && t < seg.duration_us)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut a = 0.0;
        for cut in cuts.into_iter().chain(std::iter::once(seg.duration_us)) {
            if cut > a {
                out.push((start + a, start + cut));
            }
            a = cut;
        }
        start += seg.duration_us;
    }
    out
}

fn step_count(
    s: &PulseSchedule,
    space: &Space,
    pert: &Perturbation,
    policy: &StepPolicy,
    a: f64,
    b: f64,
) -> usize {
    // Bound both ‖H‖·dt and the phase of H's own oscillation per step, so
    // weak but fast-rotating couplings are still resolved.
    let probes = 33;
    let span = b - a;
    let eps = span * 1e-9;
    let h_fd = span * 1e-6;
    let mut norm: f64 = 0.0;
    let mut rate: f64 = 0.0;
    for k in 0..probes {
        let t = a + eps + (span - 2.0 * eps) * k as f64 / (probes - 1) as f64;
        let h = hamiltonian(s, space, pert, t);
        norm = norm.max(h.frobenius_norm());
        let lo = (t - h_fd).max(a + eps);
        let hi = (t + h_fd).min(b - eps);
        if hi > lo {
            let d = &hamiltonian(s, space, pert, hi) - &hamiltonian(s, space, pert, lo);
            rate = rate.max(d.frobenius_norm() / (hi - lo));
        }
    }
    let by_norm = norm * span / policy.max_phase;
    let by_rate = if norm > 0.0 {
        (rate / norm) * span / policy.max_phase
    } else {
        0.0
    };
    (by_norm.max(by_rate).ceil() as usize).max(policy.min_steps)
}

/// Steps a propagation, calling `visit(t, U)` after every step and
/// `boundary` at interval ends.
fn drive_steps(
    s: &PulseSchedule,
    space: &Space,
    pert: &Perturbation,
    policy: &StepPolicy,
    mut visit: impl FnMut(f64, &CMatrix, bool) -> Result<()>,
) -> Result<()> {
    for (a, b) in intervals(s) {
        let n = step_count(s, space, pert, policy, a, b);
        let dt = (b - a) / n as f64;
        for k in 0..n {
            let t0 = a + k as f64 * dt;
            let u = step_propagator(s, space, pert, policy.integrator, t0, dt)?;
            let t1 = if k + 1 == n { b } else { t0 + dt };
            visit(t1, &u, k + 1 == n)?;
        }
    }
    Ok(())
}

/// Final propagator only; the fast path used by scans and Monte Carlo.
pub fn final_unitary(
    s: &PulseSchedule,
    space: &Space,
    pert: &Perturbation,
    policy: &StepPolicy,
) -> Result<CMatrix> {
    policy.validate()?;
    s.validate()?;
    let mut u = CMatrix::identity(space.dim());
    drive_steps(s, space, pert, policy, |_, step, _| {
        u = step * &u;
        Ok(())
    })?;
    Ok(u)
}

/// Unitary propagation with recorded samples.
pub fn propagate_unitary(
    s: &PulseSchedule,
    space: &Space,
    policy: &StepPolicy,
) -> Result<TrajectoryResult> {
    propagate_unitary_perturbed(s, space, &Perturbation::default(), policy)
}

pub fn propagate_unitary_perturbed(
    s: &PulseSchedule,
    space: &Space,
    pert: &Perturbation,
    policy: &StepPolicy,
) -> Result<TrajectoryResult> {
    policy.validate()?;
    s.validate()?;
    let mut u = CMatrix::identity(space.dim());
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut counter = 0usize;
    drive_steps(s, space, pert, policy, |t, step, boundary| {
        u = step * &u;
        counter += 1;
        let every = policy.record_every;
        if boundary || (every > 0 && counter % every == 0) {
            times.push(t);
            states.push(u.clone());
        }
        Ok(())
    })?;
    let mut tr = TrajectoryResult {
        branch: Branch::Unitary,
        space: *space,
        times,
        states,
        leakage_final: None,
    };
    tr.leakage_final = leakage(&tr).ok();
    Ok(tr)
}

/// Checks Hermiticity, unit trace and positivity of a density matrix.
pub fn validate_density(rho: &CMatrix, tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::Argument("density matrix must be square".into()));
    }
    if !rho.is_hermitian(tol) {
        return Err(Error::Argument("density matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::Argument(format!("density matrix trace is {tr}, expected 1")));
    }
    let min = eigvalsh(rho)?.first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::Argument(format!(
            "density matrix has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Multiplies ρ_jk by the pure-dephasing decay over `dt`.
pub fn apply_dephasing(rho: &mut CMatrix, space: &Space, noise: &NoiseModel, dt: f64) {
    let (le, ln) = space.dephasing_weights();
    let (ge, gn) = (noise.dephasing_rate_e, noise.dephasing_rate_n);
    if ge == 0.0 && gn == 0.0 {
        return;
    }
    let n = rho.rows();
    for j in 0..n {
        for k in 0..n {
            let rate = ge * (le[j] - le[k]).powi(2) + gn * (ln[j] - ln[k]).powi(2);
            if rate != 0.0 {
                rho[(j, k)] *= (-0.5 * rate * dt).exp();
            }
        }
    }
}

/// Lindblad evolution with σ_z-type dephasing per spin (Strang splitting;
/// the dissipator is diagonal, so each half step is exact).
pub fn propagate_master(
    rho0: &CMatrix,
    s: &PulseSchedule,
    noise: &NoiseModel,
    space: &Space,
    policy: &StepPolicy,
) -> Result<TrajectoryResult> {
    policy.validate()?;
    s.validate()?;
    noise.validate()?;
    if rho0.rows() != space.dim() {
        return Err(Error::Argument(format!(
            "rho0 has dimension {}, space needs {}",
            rho0.rows(),
            space.dim()
        )));
    }
    validate_density(rho0, 1e-10)?;
    let mut rho = rho0.clone();
    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];
    let mut counter = 0usize;
    let mut last_t = 0.0;
    let pert = Perturbation::default();
    drive_steps(s, space, &pert, policy, |t, step, boundary| {
        let dt = t - last_t;
        last_t = t;
        apply_dephasing(&mut rho, space, noise, 0.5 * dt);
        rho = &(step * &rho) * &step.adjoint();
        apply_dephasing(&mut rho, space, noise, 0.5 * dt);
        rho = rho.hermitian_part();
        counter += 1;
        let every = policy.record_every;
        if boundary || (every > 0 && counter % every == 0) {
            times.push(t);
            states.push(rho.clone());
        }
        Ok(())
    })?;
    let mut tr = TrajectoryResult {
        branch: Branch::Density,
        space: *space,
        times,
        states,
        leakage_final: None,
    };
    tr.leakage_final = leakage(&tr).ok();
    Ok(tr)
}

/// Free dephasing of ρ for a time `t` (no drive).
pub fn idle(rho: &CMatrix, space: &Space, noise: &NoiseModel, t: f64) -> CMatrix {
    let mut out = rho.clone();
    apply_dephasing(&mut out, space, noise, t);
    out
}

/// ρ → (1 − p)ρ + p·Tr(ρ)·I/d.
pub fn depolarize(rho: &CMatrix, p: f64) -> CMatrix {
    let d = rho.rows();
    let mixed = CMatrix::identity(d).scale(rho.trace() * (p / d as f64));
    &rho.scale_re(1.0 - p) + &mixed
}

/// Worst-case population outside the qubit subspace at the final time.
pub fn leakage(tr: &TrajectoryResult) -> Result<f64> {
    if tr.space == Space::Lambda {
        return Err(Error::NotApplicable(
            "leakage is undefined in the 2-dim working subspace".into(),
        ));
    }
    let qubit = tr.space.qubit_indices();
    let last = tr.final_state();
    let inside = |v: &[C64]| -> f64 { qubit.iter().map(|&k| v[k].norm_sqr()).sum() };
    let value = match tr.branch {
        Branch::Density => 1.0 - qubit.iter().map(|&k| last[(k, k)].re).sum::<f64>(),
        Branch::Unitary => {
            let dim = tr.space.dim();
            let mut inputs: Vec<Vec<C64>> = Vec::new();
            let pairs: Vec<[usize; 2]> = if qubit.len() == 2 {
                vec![[qubit[0], qubit[1]]]
            } else {
                vec![[qubit[0], qubit[1]], [qubit[2], qubit[3]]]
            };
            for &k in &qubit {
                let mut v = vec![ZERO; dim];
                v[k] = cr(1.0);
                inputs.push(v);
            }
            for [i, j] in pairs {
                for sign in [1.0, -1.0] {
                    let mut v = vec![ZERO; dim];
                    v[i] = cr(FRAC_1_SQRT_2);
                    v[j] = cr(sign * FRAC_1_SQRT_2);
                    inputs.push(v);
                }
            }
            inputs
                .iter()
                .map(|v| 1.0 - inside(&last.mat_vec(v)))
                .fold(0.0, f64::max)
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Qubit-subspace operator of a propagator. For the Λ space the dark
/// state is a spectator, so the block is |d⟩⟨d| + U_bb|b⟩⟨b|.
pub fn qubit_operator(space: &Space, frame: &BrightFrame, u: &CMatrix) -> CMatrix {
    match space {
        Space::Lambda => {
            let b = frame.bright_qubit();
            let d = frame.dark_qubit();
            &CMatrix::projector(&d) + &CMatrix::projector(&b).scale(u[(0, 0)])
        }
        _ => u.select(&space.qubit_indices()),
    }
}

/// Pauli transfer matrix `R_ij = Tr(P_i E(P_j))/d` of `ρ → M ρ M†`.
pub fn pauli_transfer_matrix(m: &CMatrix) -> Vec<f64> {
    let d = m.rows();
    let n_qubits = d.trailing_zeros() as usize;
    let paulis: Vec<CMatrix> = pauli::labels(n_qubits)
        .iter()
        .map(|l| pauli::from_label(l).expect("valid label"))
        .collect();
    let md = m.adjoint();
    let mut out = Vec::with_capacity(paulis.len() * paulis.len());
    let images: Vec<CMatrix> = paulis.iter().map(|p| &(m * p) * &md).collect();
    for pi in &paulis {
        for img in &images {
            out.push(pi.inner(img).re / d as f64);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub n_shots: usize,
    /// Mean Pauli transfer matrix of the qubit-subspace channel, row-major.
    pub ptm_mean: Vec<f64>,
    /// Per-entry sample variance of the transfer matrix.
    pub ptm_variance: Vec<f64>,
    pub fidelity_mean: f64,
    pub fidelity_variance: f64,
}

/// Quasi-static error draw for shot `shot`; the stream depends only on
/// (seed, shot).
pub fn sample_perturbation(noise: &NoiseModel, seed: u64, shot: u64) -> Perturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    let zd: f64 = StandardNormal.sample(&mut rng);
    let za: f64 = StandardNormal.sample(&mut rng);
    Perturbation {
        detuning: noise.detuning_sigma * zd,
        amplitude_error: noise.amplitude_rel_sigma * za,
    }
}

/// Averages the qubit channel and gate fidelity over quasi-static shots.
/// Shots run in parallel and are reduced in shot order, so results do not
/// depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    s: &PulseSchedule,
    noise: &NoiseModel,
    n_shots: usize,
    seed: u64,
    space: &Space,
    policy: &StepPolicy,
    target: &CMatrix,
) -> Result<MonteCarloResult> {
    if n_shots == 0 {
        return Err(Error::Argument("n_shots must be >= 1".into()));
    }
    noise.validate()?;
    let frame = s.frame();
    let run = |pert: Perturbation| -> Result<(Vec<f64>, f64)> {
        let u = final_unitary(s, space, &pert, policy)?;
        let q = qubit_operator(space, &frame, &u);
        Ok((pauli_transfer_matrix(&q), average_gate_fidelity(&q, target)))
    };
    if noise.is_quasi_static_free() {
        let (ptm, f) = run(Perturbation::default())?;
        return Ok(MonteCarloResult {
            n_shots,
            ptm_variance: vec![0.0; ptm.len()],
            ptm_mean: ptm,
            fidelity_mean: f,
            fidelity_variance: 0.0,
        });
    }
    let shots: Vec<(Vec<f64>, f64)> = (0..n_shots)
        .into_par_iter()
        .map(|k| run(sample_perturbation(noise, seed, k as u64)))
        .collect::<Result<_>>()?;
    let len = shots[0].0.len();
    let n = n_shots as f64;
    let mut mean = vec![0.0; len];
    let mut f_mean = 0.0;
    for (ptm, f) in &shots {
        for (m, x) in mean.iter_mut().zip(ptm) {
            *m += x;
        }
        f_mean += f;
    }
    mean.iter_mut().for_each(|m| *m /= n);
    f_mean /= n;
    let denom = if n_shots > 1 { n - 1.0 } else { 1.0 };
    let mut var = vec![0.0; len];
    let mut f_var = 0.0;
    for (ptm, f) in &shots {
        for ((v, x), m) in var.iter_mut().zip(ptm).zip(&mean) {
            *v += (x - m).powi(2);
        }
        f_var += (f - f_mean).powi(2);
    }
    var.iter_mut().for_each(|v| *v /= denom);
    Ok(MonteCarloResult {
        n_shots,
        ptm_mean: mean,
        ptm_variance: var,
        fidelity_mean: f_mean,
        fidelity_variance: f_var / denom,
    })
}

/// Spin-1 S_z ⊗ I on the hybrid space, exposed for tests and callers that
/// add static terms.
pub fn hybrid_sz() -> CMatrix {
    kron(&spin1::sz(), &CMatrix::identity(3))
}
