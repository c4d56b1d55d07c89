//! Target gates, fidelity measures, the conditional C-Y construction and
//! repeated-gate decay experiments.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::evolve::{
    depolarize, final_unitary, propagate_unitary, qubit_operator, Perturbation, Space, StepPolicy,
};
use crate::fit::{levenberg_marquardt, linear_lsq, LsqOptions};
use crate::numerics::{
    average_gate_fidelity, cis, cr, kron, mat_exp, pauli, CMatrix, C64, ZERO,
};
use crate::pulses::{make_bnhqc, make_nhqc, NhqcEnvelope, PulseSchedule, ScheduleKind};
use crate::spinsys::{basis, m_of_index, SpinSystemParams};
use crate::table::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedGate {
    I,
    X2,
    X,
    Y2,
    Y,
    T,
    Z,
}

impl NamedGate {
    pub const ALL: [NamedGate; 7] = [
        NamedGate::I,
        NamedGate::X2,
        NamedGate::X,
        NamedGate::Y2,
        NamedGate::Y,
        NamedGate::T,
        NamedGate::Z,
    ];

    /// The six-gate set used for process tomography.
    pub const TOMOGRAPHY_SET: [NamedGate; 6] = [
        NamedGate::I,
        NamedGate::X2,
        NamedGate::X,
        NamedGate::Y2,
        NamedGate::Y,
        NamedGate::T,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NamedGate::I => "I",
            NamedGate::X2 => "X/2",
            NamedGate::X => "X",
            NamedGate::Y2 => "Y/2",
            NamedGate::Y => "Y",
            NamedGate::T => "T",
            NamedGate::Z => "Z",
        }
    }

    /// (γ, θ, φ); the identity has γ = 0.
    pub fn angles(self) -> (f64, f64, f64) {
        match self {
            NamedGate::I => (0.0, 0.0, 0.0),
            NamedGate::X2 => (FRAC_PI_2, FRAC_PI_2, 0.0),
            NamedGate::X => (PI, FRAC_PI_2, 0.0),
            NamedGate::Y2 => (FRAC_PI_2, FRAC_PI_2, FRAC_PI_2),
            NamedGate::Y => (PI, FRAC_PI_2, FRAC_PI_2),
            NamedGate::T => (FRAC_PI_4, 0.0, 0.0),
            NamedGate::Z => (PI, 0.0, 0.0),
        }
    }
}

/// A holonomic gate, either a named alias or explicit (γ, θ, φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    Named(NamedGate),
    Angles { gamma: f64, theta: f64, phi: f64 },
}

impl GateSpec {
    pub fn angles(&self) -> (f64, f64, f64) {
        match *self {
            GateSpec::Named(g) => g.angles(),
            GateSpec::Angles { gamma, theta, phi } => (gamma, theta, phi),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, GateSpec::Named(NamedGate::I))
    }
}

impl From<NamedGate> for GateSpec {
    fn from(g: NamedGate) -> Self {
        GateSpec::Named(g)
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateSpec::Named(g) => f.write_str(g.label()),
            GateSpec::Angles { gamma, theta, phi } => {
                write!(f, "(gamma={gamma},theta={theta},phi={phi})")
            }
        }
    }
}

impl FromStr for GateSpec {
    type Err = Error;

    /// Accepts an alias (`X/2`, `T`, ...) or `(gamma=..,theta=..,phi=..)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(g) = NamedGate::ALL.iter().find(|g| g.label() == s) {
            return Ok(GateSpec::Named(*g));
        }
        let inner = s
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Argument(format!("unknown gate '{s}'")))?;
        let (mut gamma, mut theta, mut phi) = (None, None, None);
        for part in inner.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("malformed gate field '{part}'")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("gate field '{part}' is not a number")))?;
            let slot = match key.trim() {
                "gamma" => &mut gamma,
                "theta" => &mut theta,
                "phi" => &mut phi,
                other => return Err(Error::Argument(format!("unknown gate field '{other}'"))),
            };
            *slot = Some(v);
        }
        match (gamma, theta, phi) {
            (Some(gamma), Some(theta), Some(phi)) => Ok(GateSpec::Angles { gamma, theta, phi }),
            _ => Err(Error::Argument(format!("gate '{s}' needs gamma, theta and phi"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GateSpecRepr {
    Alias(String),
    Angles { gamma: f64, theta: f64, phi: f64 },
}

impl Serialize for GateSpec {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            GateSpec::Named(g) => GateSpecRepr::Alias(g.label().to_string()).serialize(ser),
            GateSpec::Angles { gamma, theta, phi } => {
                GateSpecRepr::Angles { gamma, theta, phi }.serialize(ser)
            }
        }
    }
}

impl<'de> Deserialize<'de> for GateSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match GateSpecRepr::deserialize(de)? {
            GateSpecRepr::Alias(s) => s.parse().map_err(serde::de::Error::custom),
            GateSpecRepr::Angles { gamma, theta, phi } => Ok(GateSpec::Angles { gamma, theta, phi }),
        }
    }
}

/// `n̂·σ` for the axis (θ, φ).
pub fn axis_operator(theta: f64, phi: f64) -> CMatrix {
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let [_, x, y, z] = pauli::basis();
    &(&x.scale_re(n[0]) + &y.scale_re(n[1])) + &z.scale_re(n[2])
}

/// U_G = e^{iγ/2} exp(−i(γ/2) n̂·σ).
pub fn holonomic_unitary(gamma: f64, theta: f64, phi: f64) -> CMatrix {
    let (c, s) = ((gamma / 2.0).cos(), (gamma / 2.0).sin());
    let rot = &CMatrix::identity(2).scale_re(c) - &axis_operator(theta, phi).scale(C64::new(0.0, s));
    rot.scale(cis(gamma / 2.0))
}

pub fn target_unitary(g: &GateSpec) -> CMatrix {
    let (gamma, theta, phi) = g.angles();
    holonomic_unitary(gamma, theta, phi)
}

/// Average gate fidelity of a (possibly leaky) block against a unitary.
pub fn gate_fidelity(u_sim: &CMatrix, u_tgt: &CMatrix) -> f64 {
    average_gate_fidelity(u_sim, u_tgt)
}

/// |Tr(U_tgt† U_sim)| / d.
pub fn trace_fidelity(u_sim: &CMatrix, u_tgt: &CMatrix) -> f64 {
    (&u_tgt.adjoint() * u_sim).trace().norm() / u_tgt.rows() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Nhqc,
    Bnhqc,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nhqc" => Ok(Scheme::Nhqc),
            "bnhqc" | "b-nhqc" => Ok(Scheme::Bnhqc),
            _ => Err(Error::Argument(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Drive settings for single-qubit gate synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSettings {
    /// Constant Rabi frequency of the time-optimal ramp, rad/µs.
    pub bnhqc_rabi: f64,
    pub nhqc_envelope: NhqcEnvelope,
}

impl Default for GateSettings {
    fn default() -> Self {
        GateSettings {
            bnhqc_rabi: TAU * 12.5,
            nhqc_envelope: NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us: TAU * 12.76,
                baseline_subtract: true,
            },
        }
    }
}

/// Schedule for a gate under a scheme; the identity is an empty schedule.
pub fn synthesize(g: &GateSpec, scheme: Scheme, settings: &GateSettings) -> Result<PulseSchedule> {
    let (gamma, theta, phi) = g.angles();
    if g.is_identity() {
        return Ok(PulseSchedule::identity(theta, phi, gamma));
    }
    match scheme {
        Scheme::Bnhqc => make_bnhqc(gamma, theta, phi, settings.bnhqc_rabi),
        Scheme::Nhqc => {
            if gamma.abs() < 1e-12 {
                return Ok(PulseSchedule::identity(theta, phi, gamma));
            }
            make_nhqc(gamma, theta, phi, settings.nhqc_envelope)
        }
    }
}

#[derive(Debug, Clone)]
pub struct GateSimulation {
    /// Qubit-subspace block in the (|0⟩, |1⟩) basis.
    pub block: CMatrix,
    pub leakage: Option<f64>,
    pub duration_us: f64,
}

/// Ideal propagation of a single-qubit schedule in the given space.
pub fn simulate_gate(s: &PulseSchedule, space: &Space, policy: &StepPolicy) -> Result<GateSimulation> {
    let tr = propagate_unitary(s, space, policy)?;
    Ok(GateSimulation {
        block: qubit_operator(space, &s.frame(), tr.final_state()),
        leakage: tr.leakage_final,
        duration_us: s.duration(),
    })
}

/// Conditional electron drives for a nuclear-controlled gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CySchedules {
    /// Drive resonant with the m_I = +1 manifold, realizing the gate.
    pub controlled: PulseSchedule,
    /// Drive resonant with the m_I = −1 manifold: a trivial-holonomy loop.
    pub idle: PulseSchedule,
    pub gamma: f64,
}

/// Two conditional schedules for controlled-`electron_gate`: the gate loop
/// on the m_I = +1 line followed by a full 2π geometric identity loop
/// (phase jump π, zero holonomy) on the m_I = −1 line. `omega` is the
/// peak Rabi frequency; selectivity requires omega ≪ 2A_hf.
pub fn cy_schedule(
    _p: &SpinSystemParams,
    electron_gate: &GateSpec,
    scheme: Scheme,
    omega: f64,
) -> Result<CySchedules> {
    let (gamma, theta, phi) = electron_gate.angles();
    let (controlled, envelope) = match scheme {
        Scheme::Bnhqc => (
            make_bnhqc(gamma, theta, phi, omega)?,
            NhqcEnvelope::Constant {
                peak_rad_per_us: omega,
            },
        ),
        Scheme::Nhqc => {
            let env = NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us: omega,
                baseline_subtract: true,
            };
            (make_nhqc(gamma, theta, phi, env)?, env)
        }
    };
    let mut idle = make_nhqc(TAU, theta, phi, envelope)?;
    idle.kind = ScheduleKind::Custom;
    Ok(CySchedules {
        controlled,
        idle,
        gamma,
    })
}

/// blockdiag(I, e^{−iγ/2} U_G) in the (nuclear, electron) computational basis.
pub fn controlled_target(electron_gate: &GateSpec) -> CMatrix {
    let (gamma, _, _) = electron_gate.angles();
    let rot = target_unitary(electron_gate).scale(cis(-gamma / 2.0));
    let mut u = CMatrix::identity(4);
    for i in 0..2 {
        for j in 0..2 {
            u[(2 + i, 2 + j)] = rot[(i, j)];
        }
    }
    u
}

/// Runs both conditional drives in the 9-dim hybrid space and returns the
/// 4×4 computational block, including the frame update e^{−iγ/2} on the
/// nuclear |1⟩ level that removes the holonomy's global phase.
pub fn simulate_cy(
    p: &SpinSystemParams,
    pair: &CySchedules,
    pert: &Perturbation,
    policy: &StepPolicy,
) -> Result<CMatrix> {
    let u_ctrl = final_unitary(
        &pair.controlled,
        &Space::Hybrid {
            params: *p,
            manifold: 1,
        },
        pert,
        policy,
    )?;
    let u_idle = final_unitary(
        &pair.idle,
        &Space::Hybrid {
            params: *p,
            manifold: -1,
        },
        pert,
        policy,
    )?;
    // the idle drive starts at t₀ = duration of the controlled one
    let w = clock_shift(p, -1, pair.controlled.duration());
    let u9 = &(&(&w * &u_idle) * &w.adjoint()) * &u_ctrl;
    let block = u9.select(&basis::COMPUTATIONAL);
    let frame = CMatrix::from_diag(&[
        cr(1.0),
        cr(1.0),
        cis(-pair.gamma / 2.0),
        cis(-pair.gamma / 2.0),
    ]);
    Ok(&frame * &block)
}

/// Hybrid interaction-picture couplings carry e^{iA m_s (m_I − m) t}; a
/// drive resonant with manifold `m` that starts at t₀ instead of 0 is the
/// t = 0 propagator conjugated by W = exp(i A t₀ S_z ⊗ (I_z − m)).
fn clock_shift(p: &SpinSystemParams, manifold: i32, t0: f64) -> CMatrix {
    let d: Vec<C64> = (0..9)
        .map(|k| {
            let ms = m_of_index(k / 3) as f64;
            let mi = m_of_index(k % 3) as f64;
            cis(p.a_hf * ms * (mi - manifold as f64) * t0)
        })
        .collect();
    CMatrix::from_diag(&d)
}

/// 1-qubit and 2-qubit states used as inputs for repetition experiments.
pub fn cardinal_states() -> Vec<Vec<C64>> {
    let s = FRAC_1_SQRT_2;
    vec![
        vec![cr(1.0), ZERO],
        vec![ZERO, cr(1.0)],
        vec![cr(s), cr(s)],
        vec![cr(s), cr(-s)],
        vec![cr(s), C64::new(0.0, s)],
        vec![cr(s), C64::new(0.0, -s)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: usize,
    pub fidelity: f64,
}

/// N-fold repetition of `u_gate` with depolarizing `p` after each gate and
/// a SPAM depolarization `eps_if`; returns the input-averaged state
/// fidelity to the ideal `target^N` output for N = 1..=n_max.
pub fn repeat_channel_series(
    u_gate: &CMatrix,
    target: &CMatrix,
    inputs: &[Vec<C64>],
    n_max: usize,
    p: f64,
    eps_if: f64,
) -> Result<Vec<DecayPoint>> {
    if n_max == 0 {
        return Err(Error::Argument("n_max must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&eps_if) {
        return Err(Error::Argument("p and eps_if must lie in [0, 1]".into()));
    }
    let mut rhos: Vec<CMatrix> = inputs.iter().map(|v| CMatrix::projector(v)).collect();
    let mut ideal: Vec<Vec<C64>> = inputs.to_vec();
    let ud = u_gate.adjoint();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut total = 0.0;
        for (rho, psi) in rhos.iter_mut().zip(ideal.iter_mut()) {
            *rho = depolarize(&(&(u_gate * &*rho) * &ud), p);
            *psi = target.mat_vec(psi);
            let measured = depolarize(rho, eps_if);
            let f: C64 = psi
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    a.conj()
                        * psi
                            .iter()
                            .enumerate()
                            .map(|(j, b)| measured[(i, j)] * b)
                            .sum::<C64>()
                })
                .sum();
            total += f.re;
        }
        out.push(DecayPoint {
            n,
            fidelity: total / inputs.len() as f64,
        });
    }
    Ok(out)
}

/// Single-qubit repetition experiment on the simulated schedule of `g`.
pub fn repeat_gate_experiment(
    g: &GateSpec,
    scheme: Scheme,
    settings: &GateSettings,
    policy: &StepPolicy,
    n_max: usize,
    depol_per_gate: f64,
    eps_if: f64,
) -> Result<Vec<DecayPoint>> {
    let s = synthesize(g, scheme, settings)?;
    let sim = simulate_gate(&s, &Space::Electron, policy)?;
    repeat_channel_series(
        &sim.block,
        &target_unitary(g),
        &cardinal_states(),
        n_max,
        depol_per_gate,
        eps_if,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub eps_if: f64,
    pub p: f64,
    pub covariance: Vec<Vec<f64>>,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoQubitDecayFit {
    pub a: f64,
    pub b: f64,
    pub f_g: f64,
    pub covariance: Vec<Vec<f64>>,
    pub rms: f64,
}

/// Fits F_N = [1 + (1−ε)(1−p)^N]/2.
pub fn fit_single_decay(series: &[DecayPoint]) -> Result<DecayFit> {
    if series.len() < 3 {
        return Err(Error::Argument("need at least 3 points".into()));
    }
    let ns: Vec<f64> = series.iter().map(|d| d.n as f64).collect();
    let fs: Vec<f64> = series.iter().map(|d| d.fidelity).collect();
    // log-linear start on the points that are above the floor
    let (rows, ys): (Vec<Vec<f64>>, Vec<f64>) = ns
        .iter()
        .zip(&fs)
        .filter(|(_, f)| 2.0 * **f - 1.0 > 1e-6)
        .map(|(n, f)| (vec![1.0, *n], (2.0 * f - 1.0).ln()))
        .unzip();
    let (a0, q0) = if rows.len() >= 2 {
        let x = linear_lsq(&rows, &ys)?;
        (x[0].exp().min(1.0), x[1].exp().min(1.0))
    } else {
        (0.9, 0.9)
    };
    // parametrize by a = 1 − ε and q = 1 − p
    let fit = levenberg_marquardt(
        &[a0, q0],
        |p| {
            ns.iter()
                .zip(&fs)
                .map(|(n, f)| 0.5 * (1.0 + p[0] * p[1].powf(*n)) - f)
                .collect()
        },
        |p| {
            ns.iter()
                .map(|n| {
                    vec![
                        0.5 * p[1].powf(*n),
                        0.5 * p[0] * n * p[1].powf(n - 1.0),
                    ]
                })
                .collect()
        },
        &LsqOptions::default(),
    )?;
    let (a, q) = (fit.params[0], fit.params[1]);
    Ok(DecayFit {
        eps_if: 1.0 - a,
        p: 1.0 - q,
        covariance: fit.covariance,
        rms: fit.rms,
    })
}

/// Fits F_s(N) = A·F_g^N + B.
pub fn fit_two_qubit_decay(series: &[DecayPoint]) -> Result<TwoQubitDecayFit> {
    if series.len() < 3 {
        return Err(Error::Argument("need at least 3 points".into()));
    }
    let ns: Vec<f64> = series.iter().map(|d| d.n as f64).collect();
    let fs: Vec<f64> = series.iter().map(|d| d.fidelity).collect();
    // variable projection on a coarse F_g grid for the start point
    let mut best = (f64::INFINITY, 0.5, 0.0, 0.0);
    for k in 1..2000 {
        let fg = k as f64 / 2000.0;
        let rows: Vec<Vec<f64>> = ns.iter().map(|n| vec![fg.powf(*n), 1.0]).collect();
        if let Ok(x) = linear_lsq(&rows, &fs) {
            let rss: f64 = rows
                .iter()
                .zip(&fs)
                .map(|(r, f)| (x[0] * r[0] + x[1] - f).powi(2))
                .sum();
            if rss < best.0 {
                best = (rss, fg, x[0], x[1]);
            }
        }
    }
    let (_, fg0, a0, b0) = best;
    let fit = levenberg_marquardt(
        &[a0, b0, fg0],
        |p| {
            ns.iter()
                .zip(&fs)
                .map(|(n, f)| p[0] * p[2].powf(*n) + p[1] - f)
                .collect()
        },
        |p| {
            ns.iter()
                .map(|n| vec![p[2].powf(*n), 1.0, p[0] * n * p[2].powf(n - 1.0)])
                .collect()
        },
        &LsqOptions::default(),
    )?;
    Ok(TwoQubitDecayFit {
        a: fit.params[0],
        b: fit.params[1],
        f_g: fit.params[2],
        covariance: fit.covariance,
        rms: fit.rms,
    })
}

pub fn decay_csv(series: &[DecayPoint]) -> CsvTable {
    let mut t = CsvTable::new(&["n", "fidelity"]);
    for d in series {
        t.push_nums(&[d.n as f64, d.fidelity]);
    }
    t
}

/// |ψ⟩ ⊗ |φ⟩ helper in the (nuclear, electron) ordering.
pub fn two_qubit_state(nuclear: &[C64], electron: &[C64]) -> Vec<C64> {
    crate::numerics::kron_vec(nuclear, electron)
}

/// Exponential of a 2×2 generator, used by tests of gate composition.
pub fn rotation(theta: f64, phi: f64, angle: f64) -> Result<CMatrix> {
    mat_exp(&axis_operator(theta, phi), C64::new(0.0, -angle / 2.0))
}

/// Controlled gate with the control on the first tensor factor.
pub fn controlled(u: &CMatrix) -> CMatrix {
    let p0 = CMatrix::from_real_diag(&[1.0, 0.0]);
    let p1 = CMatrix::from_real_diag(&[0.0, 1.0]);
    &kron(&p0, &CMatrix::identity(2)) + &kron(&p1, u)
}

/// Default selective Rabi frequency for the conditional drives, rad/µs
/// (well below the 2A_hf hyperfine splitting).
pub const CY_RABI: f64 = TAU * 0.1;
