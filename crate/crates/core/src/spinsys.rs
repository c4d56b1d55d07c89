//! Hamiltonians of the NV register: lab frame, rotating frame, the effective
//! Λ system in the bright/ancilla basis, and the electron–¹⁴N hybrid.
//!
//! Basis convention shared by every module: a spin-1 is ordered
//! (m = +1, 0, −1). The electron qubit is |0⟩ ≡ m_s = −1 and |1⟩ ≡ m_s = +1,
//! with |a⟩ ≡ m_s = 0 as the ancilla; the nuclear qubit uses the same mapping
//! on m_I. Frequencies are angular (rad/µs) throughout.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::numerics::{cis, cr, kron, spin1, CMatrix, C64, ZERO};

/// Indices into the (+1, 0, −1) spin-1 basis.
pub mod basis {
    pub const PLUS: usize = 0;
    pub const ANCILLA: usize = 1;
    pub const MINUS: usize = 2;
    /// Qubit states (|0⟩, |1⟩) in the spin-1 basis.
    pub const QUBIT: [usize; 2] = [MINUS, PLUS];

    /// Index of (m_s, m_I) in the 9-dim electron ⊗ nuclear basis.
    pub const fn hybrid(ms: usize, mi: usize) -> usize {
        ms * 3 + mi
    }

    /// Computational two-qubit states |n e⟩ ordered |00⟩, |01⟩, |10⟩, |11⟩
    /// with the nuclear (control) qubit first.
    pub const COMPUTATIONAL: [usize; 4] = [
        hybrid(MINUS, MINUS),
        hybrid(PLUS, MINUS),
        hybrid(MINUS, PLUS),
        hybrid(PLUS, PLUS),
    ];
}

/// Physical constants of the register, stored in angular units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpinSystemConfig", try_from = "SpinSystemConfig")]
pub struct SpinSystemParams {
    /// Zero-field splitting, rad/µs.
    pub d: f64,
    /// Electron gyromagnetic ratio, rad/µs per gauss.
    pub gamma_e: f64,
    /// ¹⁴N gyromagnetic ratio, rad/µs per gauss.
    pub gamma_n: f64,
    /// Nuclear quadrupolar splitting, rad/µs.
    pub p_quad: f64,
    /// Hyperfine constant, rad/µs.
    pub a_hf: f64,
    /// Static field, gauss.
    pub b0: f64,
}

impl Default for SpinSystemParams {
    fn default() -> Self {
        SpinSystemConfig::default()
            .try_into()
            .expect("default parameters are valid")
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.d, self.gamma_e, self.gamma_n, self.p_quad, self.a_hf, self.b0]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err("all spin-system parameters must be finite".into());
        }
        if self.d <= 0.0 {
            return Err(format!("d_mhz must be > 0, got {}", self.d / TAU));
        }
        if self.b0 < 0.0 {
            return Err(format!("b0_gauss must be >= 0, got {}", self.b0));
        }
        Ok(())
    }

    /// Energy of |m_s⟩ for the bare electron, rad/µs.
    pub fn electron_energy(&self, ms: i32) -> f64 {
        let m = ms as f64;
        self.d * m * m + self.gamma_e * self.b0 * m
    }

    /// |a⟩ ↔ |1⟩ (m_s 0 ↔ +1) splitting, D + γ_e B₀.
    pub fn upper_transition(&self) -> f64 {
        self.d + self.gamma_e * self.b0
    }

    /// |0⟩ ↔ |a⟩ (m_s −1 ↔ 0) splitting, D − γ_e B₀.
    pub fn lower_transition(&self) -> f64 {
        self.d - self.gamma_e * self.b0
    }

    /// Energy of |m_s, m_I⟩ in the hybrid Hamiltonian.
    pub fn hybrid_energy(&self, ms: i32, mi: i32) -> f64 {
        let (s, n) = (ms as f64, mi as f64);
        self.d * s * s
            + self.gamma_e * self.b0 * s
            + self.p_quad * n * n
            + self.gamma_n * self.b0 * n
            + self.a_hf * s * n
    }

    /// Electron transition frequency inside the m_I manifold.
    pub fn electron_transition(&self, target: Transition, mi: i32) -> f64 {
        let q = target.qubit_ms();
        self.hybrid_energy(q, mi) - self.hybrid_energy(0, mi)
    }
}

/// JSON form of [`SpinSystemParams`] with cyclic-MHz fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinSystemConfig {
    pub d_mhz: f64,
    pub gamma_e_mhz_per_gauss: f64,
    pub gamma_n_mhz_per_gauss: f64,
    pub p_quad_mhz: f64,
    pub a_hf_mhz: f64,
    pub b0_gauss: f64,
}

impl Default for SpinSystemConfig {
    fn default() -> Self {
        SpinSystemConfig {
            d_mhz: 2870.0,
            gamma_e_mhz_per_gauss: 2.8025,
            gamma_n_mhz_per_gauss: -3.077e-4,
            p_quad_mhz: -4.95,
            a_hf_mhz: 2.16,
            b0_gauss: 510.0,
        }
    }
}

impl From<SpinSystemParams> for SpinSystemConfig {
    fn from(p: SpinSystemParams) -> Self {
        SpinSystemConfig {
            d_mhz: p.d / TAU,
            gamma_e_mhz_per_gauss: p.gamma_e / TAU,
            gamma_n_mhz_per_gauss: p.gamma_n / TAU,
            p_quad_mhz: p.p_quad / TAU,
            a_hf_mhz: p.a_hf / TAU,
            b0_gauss: p.b0,
        }
    }
}

impl TryFrom<SpinSystemConfig> for SpinSystemParams {
    type Error = String;

    fn try_from(cfg: SpinSystemConfig) -> Result<Self, String> {
        let p = SpinSystemParams {
            d: TAU * cfg.d_mhz,
            gamma_e: TAU * cfg.gamma_e_mhz_per_gauss,
            gamma_n: TAU * cfg.gamma_n_mhz_per_gauss,
            p_quad: TAU * cfg.p_quad_mhz,
            a_hf: TAU * cfg.a_hf_mhz,
            b0: cfg.b0_gauss,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Electron transition addressed by a drive tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// |0⟩ ↔ |a⟩, i.e. m_s = −1 ↔ 0.
    ZeroAncilla,
    /// |a⟩ ↔ |1⟩, i.e. m_s = 0 ↔ +1.
    AncillaOne,
}

impl Transition {
    /// m_s of the qubit level on this transition.
    pub fn qubit_ms(self) -> i32 {
        match self {
            Transition::ZeroAncilla => -1,
            Transition::AncillaOne => 1,
        }
    }

    pub fn qubit_index(self) -> usize {
        match self {
            Transition::ZeroAncilla => basis::MINUS,
            Transition::AncillaOne => basis::PLUS,
        }
    }
}

/// A single microwave tone `γ_e B cos(ω t + φ) S_x`, with `amplitude` the
/// Rabi frequency Ω = (√2/2) γ_e B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveTone {
    pub carrier: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub target: Transition,
}

/// Bright/dark basis of the two-tone drive for a rotation axis (θ, φ).
///
/// The bright state is the −1 eigenvector of n̂·σ, so a cyclic loop that
/// returns it with phase e^{iγ} realizes `e^{iγ/2} exp(−i γ/2 n̂·σ)`.
/// States are 3-vectors in the (+1, 0, −1) electron basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BrightFrame {
    pub theta: f64,
    pub phi: f64,
    pub bright: [C64; 3],
    pub dark: [C64; 3],
}

impl BrightFrame {
    pub fn from_axis(theta: f64, phi: f64) -> Self {
        let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        let mut bright = [ZERO; 3];
        bright[basis::PLUS] = cr(co);
        bright[basis::MINUS] = -cis(-phi) * s;
        let mut dark = [ZERO; 3];
        dark[basis::PLUS] = cis(phi) * s;
        dark[basis::MINUS] = cr(co);
        BrightFrame {
            theta,
            phi,
            bright,
            dark,
        }
    }

    /// Recovers the frame from tone amplitudes and phases; requires Ω₁ or
    /// Ω₂ to be nonzero.
    pub fn from_tones(omega1: f64, omega2: f64, phi1: f64, phi2: f64) -> Self {
        let theta = 2.0 * omega1.atan2(omega2);
        let phi = wrap_angle(PI - (phi1 - phi2));
        Self::from_axis(theta, phi)
    }

    /// Relative tone phase φ₁ − φ₂ that puts the drive on this bright state.
    pub fn relative_tone_phase(&self) -> f64 {
        PI - self.phi
    }

    /// Bright state as a qubit vector (|0⟩, |1⟩).
    pub fn bright_qubit(&self) -> [C64; 2] {
        [self.bright[basis::MINUS], self.bright[basis::PLUS]]
    }

    pub fn dark_qubit(&self) -> [C64; 2] {
        [self.dark[basis::MINUS], self.dark[basis::PLUS]]
    }

    /// `(Ω/2) e^{iφ₂} |b⟩⟨a| + h.c.` embedded in the 3-level electron space.
    pub fn embed_hamiltonian(&self, omega: f64, phi2: f64) -> CMatrix {
        let mut h = CMatrix::zeros(3, 3);
        let coupling = cis(phi2) * (omega / 2.0);
        for k in [basis::PLUS, basis::MINUS] {
            let v = coupling * self.bright[k];
            h[(k, basis::ANCILLA)] = v;
            h[(basis::ANCILLA, k)] = v.conj();
        }
        h
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

/// Lab-frame electron Hamiltonian
/// `D S_z² + γ_e B₀ S_z + Σ √2 Ω cos(ω t + φ) S_x`.
pub fn electron_hamiltonian_lab(p: &SpinSystemParams, tones: &[DriveTone], t: f64) -> CMatrix {
    let mut h = CMatrix::from_real_diag(&[
        p.electron_energy(1),
        p.electron_energy(0),
        p.electron_energy(-1),
    ]);
    let drive: f64 = tones
        .iter()
        .map(|tone| SQRT_2 * tone.amplitude * (tone.carrier * t + tone.phase).cos())
        .sum();
    if drive != 0.0 {
        h = &h + &spin1::sx().scale_re(drive);
    }
    h
}

/// Exact transform `V† H V + i (∂V†/∂t) V` with
/// `V = diag(e^{−iω₂t}, 1, e^{−iω₁t})`; `omega1` is the |0⟩↔|a⟩ frame
/// frequency and `omega2` the |a⟩↔|1⟩ one.
pub fn rotating_frame(h_lab: &CMatrix, t: f64, omega1: f64, omega2: f64) -> CMatrix {
    let w = [omega2, 0.0, omega1];
    let mut hr = CMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            hr[(i, j)] = h_lab[(i, j)] * cis((w[i] - w[j]) * t);
        }
        hr[(i, i)] -= cr(w[i]);
    }
    hr
}

/// Rotating-frame Hamiltonian for a tone set. With `rwa` each tone keeps
/// only its co-rotating term on its own target transition, which for
/// resonant tones gives the static Λ matrix.
pub fn rotating_frame_hamiltonian(
    p: &SpinSystemParams,
    tones: &[DriveTone],
    t: f64,
    omega1: f64,
    omega2: f64,
    rwa: bool,
) -> CMatrix {
    if !rwa {
        return rotating_frame(&electron_hamiltonian_lab(p, tones, t), t, omega1, omega2);
    }
    let mut h = CMatrix::from_real_diag(&[
        p.electron_energy(1) - omega2,
        0.0,
        p.electron_energy(-1) - omega1,
    ]);
    for tone in tones {
        let (q, frame) = match tone.target {
            Transition::ZeroAncilla => (basis::MINUS, omega1),
            Transition::AncillaOne => (basis::PLUS, omega2),
        };
        let v = cis(-tone.phase + (frame - tone.carrier) * t) * (tone.amplitude / 2.0);
        h[(q, basis::ANCILLA)] += v;
        h[(basis::ANCILLA, q)] += v.conj();
    }
    h
}

/// Effective Λ Hamiltonian `(Ω/2) e^{iφ₂}|b⟩⟨a| + h.c.` in the ordered
/// basis (|b⟩, |a⟩).
pub fn lambda_hamiltonian(omega: f64, phi2: f64) -> CMatrix {
    let v = cis(phi2) * (omega / 2.0);
    CMatrix::from_rows(&[[ZERO, v], [v.conj(), ZERO]])
}

/// Hybrid electron ⊗ ¹⁴N Hamiltonian
/// `D S_z² + γ_e B S_z + P I_z² + γ_n B I_z + A S_z I_z` (diagonal).
pub fn hybrid_hamiltonian(p: &SpinSystemParams) -> CMatrix {
    let id = CMatrix::identity(3);
    let sz = spin1::sz();
    let sz2 = spin1::sz2();
    let terms = [
        kron(&sz2, &id).scale_re(p.d),
        kron(&sz, &id).scale_re(p.gamma_e * p.b0),
        kron(&id, &sz2).scale_re(p.p_quad),
        kron(&id, &sz).scale_re(p.gamma_n * p.b0),
        kron(&sz, &sz).scale_re(p.a_hf),
    ];
    terms
        .iter()
        .fold(CMatrix::zeros(9, 9), |acc, term| &acc + term)
}

/// m value of a spin-1 basis index.
pub fn m_of_index(i: usize) -> i32 {
    1 - i as i32
}

/// Drive tones, in the lab convention, that reproduce the two-tone
/// rotating-frame couplings `Ω₁ e^{iφ₁}` and `Ω₂ e^{iφ₂}` of the Λ drive.
pub fn lab_tones(
    p: &SpinSystemParams,
    omega1: f64,
    omega2: f64,
    phi1: f64,
    phi2: f64,
) -> [DriveTone; 2] {
    [
        DriveTone {
            carrier: p.lower_transition(),
            phase: -phi1,
            amplitude: omega1,
            target: Transition::ZeroAncilla,
        },
        DriveTone {
            carrier: p.upper_transition(),
            phase: -phi2,
            amplitude: omega2,
            target: Transition::AncillaOne,
        },
    ]
}
