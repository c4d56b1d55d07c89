//! Pulse schedules for the holonomic gate U_G(γ, θ, φ): the two-segment
//! NHQC loop and the single-segment time-optimal (B-NHQC) ramp.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinsys::{wrap_angle, BrightFrame};
use crate::table::CsvTable;

/// exp(−2): value of the Gaussian at the ±2σ truncation points.
const GAUSS_EDGE: f64 = 0.135_335_283_236_612_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    Constant {
        peak_rad_per_us: f64,
    },
    /// Gaussian centred at 2σ and truncated to [0, 4σ]; with
    /// `baseline_subtract` the edge value is removed and the peak restored,
    /// so the waveform starts and ends at exactly zero.
    TruncatedGaussian {
        peak_rad_per_us: f64,
        sigma_us: f64,
        baseline_subtract: bool,
    },
}

impl Envelope {
    pub fn peak(&self) -> f64 {
        match *self {
            Envelope::Constant { peak_rad_per_us } => peak_rad_per_us,
            Envelope::TruncatedGaussian {
                peak_rad_per_us, ..
            } => peak_rad_per_us,
        }
    }

    /// Ω at local time `t` within the segment.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant { peak_rad_per_us } => peak_rad_per_us,
            Envelope::TruncatedGaussian {
                peak_rad_per_us,
                sigma_us,
                baseline_subtract,
            } => peak_rad_per_us * gaussian_shape((t / sigma_us).clamp(0.0, 4.0), baseline_subtract),
        }
    }

    pub fn scaled(&self, factor: f64) -> Envelope {
        let mut e = *self;
        match &mut e {
            Envelope::Constant { peak_rad_per_us } => *peak_rad_per_us *= factor,
            Envelope::TruncatedGaussian {
                peak_rad_per_us, ..
            } => *peak_rad_per_us *= factor,
        }
        e
    }
}

/// Unit-peak truncated Gaussian at u = t/σ ∈ [0, 4].
fn gaussian_shape(u: f64, baseline_subtract: bool) -> f64 {
    let g = (-(u - 2.0).powi(2) / 2.0).exp();
    if baseline_subtract {
        (g - GAUSS_EDGE) / (1.0 - GAUSS_EDGE)
    } else {
        g
    }
}

/// Mean of the unit-peak truncated Gaussian over its 4σ window.
pub fn gaussian_fill_factor(baseline_subtract: bool) -> f64 {
    integrate(&|u| gaussian_shape(u, baseline_subtract), 0.0, 4.0, 1e-13) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Constant,
    LinearRamp,
    /// Linear ramp plus discrete jumps inside the segment.
    Piecewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseJump {
    pub at_us: f64,
    pub delta_rad: f64,
}

/// φ₂(t) = intercept + slope·t (+ jumps), in segment-local time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseProgram {
    pub kind: PhaseKind,
    #[serde(default)]
    pub slope_rad_per_us: f64,
    #[serde(default)]
    pub intercept_rad: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<PhaseJump>,
}

impl PhaseProgram {
    pub fn constant(value: f64) -> Self {
        PhaseProgram {
            kind: PhaseKind::Constant,
            slope_rad_per_us: 0.0,
            intercept_rad: value,
            jumps: Vec::new(),
        }
    }

    pub fn linear(slope: f64, intercept: f64) -> Self {
        PhaseProgram {
            kind: PhaseKind::LinearRamp,
            slope_rad_per_us: slope,
            intercept_rad: intercept,
            jumps: Vec::new(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let jumps: f64 = self
            .jumps
            .iter()
            .filter(|j| t >= j.at_us)
            .map(|j| j.delta_rad)
            .sum();
        self.intercept_rad + self.slope_rad_per_us * t + jumps
    }

    pub fn rate(&self) -> f64 {
        self.slope_rad_per_us
    }

    pub fn is_smooth(&self) -> bool {
        self.jumps.iter().all(|j| j.delta_rad == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub duration_us: f64,
    pub envelope: Envelope,
    pub phase: PhaseProgram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Nhqc,
    Bnhqc,
    Identity,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub kind: ScheduleKind,
    pub segments: Vec<Segment>,
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
}

/// Instantaneous two-tone parameters (Ω₁ on |0⟩↔|a⟩, Ω₂ on |a⟩↔|1⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTone {
    pub omega1: f64,
    pub omega2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl PulseSchedule {
    pub fn identity(theta: f64, phi: f64, gamma: f64) -> Self {
        PulseSchedule {
            kind: ScheduleKind::Identity,
            segments: Vec::new(),
            theta,
            phi,
            gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.duration_us > 0.0 && seg.duration_us.is_finite()) {
                return Err(Error::Argument(format!(
                    "segment {k}: duration must be > 0, got {}",
                    seg.duration_us
                )));
            }
            if !(seg.envelope.peak() >= 0.0) {
                return Err(Error::Argument(format!("segment {k}: negative amplitude")));
            }
            if let Envelope::TruncatedGaussian { sigma_us, .. } = seg.envelope {
                if !(sigma_us > 0.0) {
                    return Err(Error::Argument(format!("segment {k}: sigma must be > 0")));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_us).sum()
    }

    /// Start times of each segment.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration_us;
                start
            })
            .collect()
    }

    /// Segment index and local time for a global time; the end point
    /// belongs to the last segment.
    pub fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let mut start = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let last = k + 1 == self.segments.len();
            if t < start + seg.duration_us || (last && t <= start + seg.duration_us + 1e-15) {
                return Some((k, (t - start).max(0.0)));
            }
            start += seg.duration_us;
        }
        None
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.locate(t)
            .map(|(k, tl)| self.segments[k].envelope.value(tl))
            .unwrap_or(0.0)
    }

    pub fn phi2(&self, t: f64) -> f64 {
        self.locate(t)
            .map(|(k, tl)| self.segments[k].phase.value(tl))
            .unwrap_or(0.0)
    }

    pub fn frame(&self) -> BrightFrame {
        BrightFrame::from_axis(self.theta, self.phi)
    }

    /// Samples (t, Ω, φ₂) at `rate` samples per µs, end points included.
    pub fn sampled(&self, rate_per_us: f64) -> Result<CsvTable> {
        if !(rate_per_us > 0.0) {
            return Err(Error::Argument("sample rate must be > 0".into()));
        }
        let mut table = CsvTable::new(&["t_us", "omega_rad_per_us", "phi2_rad"]);
        let total = self.duration();
        let n = (total * rate_per_us).ceil() as usize;
        for k in 0..=n {
            let t = if n == 0 { 0.0 } else { total * k as f64 / n as f64 };
            table.push_nums(&[t, self.omega(t), self.phi2(t)]);
        }
        Ok(table)
    }
}

/// Minimum loop duration 2√(π² − (π−γ)²)/Ω for geometric phase γ.
pub fn tau_min(gamma: f64, omega: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < TAU) {
        return Err(Error::Domain(format!("gamma must lie in (0, 2π), got {gamma}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    let d = PI - gamma;
    Ok(2.0 * (PI * PI - d * d).sqrt() / omega)
}

fn trivial_phase(gamma: f64) -> bool {
    gamma.abs() < 1e-12 || (gamma - TAU).abs() < 1e-12
}

/// Time-optimal schedule: constant Ω for τ_min with φ₂(t) = 2(γ−π)t/τ.
/// γ = 0 or 2π gives a zero-duration identity schedule.
pub fn make_bnhqc(gamma: f64, theta: f64, phi: f64, omega: f64) -> Result<PulseSchedule> {
    if trivial_phase(gamma) && omega > 0.0 {
        log::warn!("gamma = {gamma}: trivial holonomy, returning an empty identity schedule");
        return Ok(PulseSchedule::identity(theta, phi, gamma));
    }
    let tau = tau_min(gamma, omega)?;
    Ok(PulseSchedule {
        kind: ScheduleKind::Bnhqc,
        segments: vec![Segment {
            duration_us: tau,
            envelope: Envelope::Constant {
                peak_rad_per_us: omega,
            },
            phase: PhaseProgram::linear(2.0 * (gamma - PI) / tau, 0.0),
        }],
        theta,
        phi,
        gamma,
    })
}

/// Envelope family for the two-segment NHQC loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NhqcEnvelope {
    Constant { peak_rad_per_us: f64 },
    TruncatedGaussian { peak_rad_per_us: f64, baseline_subtract: bool },
}

impl NhqcEnvelope {
    pub fn peak(&self) -> f64 {
        match *self {
            NhqcEnvelope::Constant { peak_rad_per_us } => peak_rad_per_us,
            NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us, ..
            } => peak_rad_per_us,
        }
    }

    /// Envelope and duration of one π-area segment.
    pub fn pi_segment(&self) -> (Envelope, f64) {
        match *self {
            NhqcEnvelope::Constant { peak_rad_per_us } => (
                Envelope::Constant { peak_rad_per_us },
                PI / peak_rad_per_us,
            ),
            NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us,
                baseline_subtract,
            } => {
                let t_seg = PI / (peak_rad_per_us * gaussian_fill_factor(baseline_subtract));
                (
                    Envelope::TruncatedGaussian {
                        peak_rad_per_us,
                        sigma_us: t_seg / 4.0,
                        baseline_subtract,
                    },
                    t_seg,
                )
            }
        }
    }
}

/// Two π-area segments, φ₂ = 0 then φ₂ = π + γ.
pub fn make_nhqc(gamma: f64, theta: f64, phi: f64, envelope: NhqcEnvelope) -> Result<PulseSchedule> {
    if !(envelope.peak() > 0.0 && envelope.peak().is_finite()) {
        return Err(Error::Argument(format!(
            "envelope peak must be > 0, got {}",
            envelope.peak()
        )));
    }
    let (env, t_seg) = envelope.pi_segment();
    let segment = |phase: f64| Segment {
        duration_us: t_seg,
        envelope: env,
        phase: PhaseProgram::constant(phase),
    };
    Ok(PulseSchedule {
        kind: ScheduleKind::Nhqc,
        segments: vec![segment(0.0), segment(PI + gamma)],
        theta,
        phi,
        gamma,
    })
}

/// Tone amplitudes and phases at time t.
pub fn two_tone(s: &PulseSchedule, t: f64) -> TwoTone {
    let omega = s.omega(t);
    let phi2 = s.phi2(t);
    let frame = s.frame();
    TwoTone {
        omega1: omega * (s.theta / 2.0).sin(),
        omega2: omega * (s.theta / 2.0).cos(),
        phi1: phi2 + frame.relative_tone_phase(),
        phi2,
    }
}

/// Inverse of [`two_tone`]: (Ω, θ, φ) with φ wrapped to (−π, π].
pub fn reconstruct(tt: &TwoTone) -> (f64, f64, f64) {
    let frame = BrightFrame::from_tones(tt.omega1, tt.omega2, tt.phi1, tt.phi2);
    (tt.omega1.hypot(tt.omega2), frame.theta, wrap_angle(frame.phi))
}

/// ∫ Ω dt over the schedule.
pub fn area(s: &PulseSchedule) -> f64 {
    s.segments
        .iter()
        .map(|seg| match seg.envelope {
            Envelope::Constant { peak_rad_per_us } => peak_rad_per_us * seg.duration_us,
            env => {
                let scale = env.peak().abs().max(1.0) * seg.duration_us;
                integrate(&|t| env.value(t), 0.0, seg.duration_us, 1e-13 * scale)
            }
        })
        .sum()
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    const OMEGA: f64 = TAU * 12.5;

    #[test]
    fn tau_min_examples() {
        assert_eq!(tau_min(PI, OMEGA).unwrap(), TAU / OMEGA);
        assert!((tau_min(FRAC_PI_4, OMEGA).unwrap() - 0.05292).abs() < 5e-6);
        let t = tau_min(FRAC_PI_2, OMEGA).unwrap();
        assert!((t - PI * 3f64.sqrt() / OMEGA).abs() < 1e-15);
        assert!((t - 0.06928).abs() < 5e-6);
    }

    #[test]
    fn tau_min_domain() {
        for g in [0.0, TAU, -0.1, 7.0, f64::NAN] {
            assert_eq!(tau_min(g, OMEGA).unwrap_err().kind(), "domain");
        }
        assert_eq!(tau_min(1.0, 0.0).unwrap_err().kind(), "domain");
    }

    #[test]
    fn bnhqc_shape() {
        let s = make_bnhqc(PI, 0.0, 0.0, OMEGA).unwrap();
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].phase.slope_rad_per_us, 0.0);
        assert!((s.duration() - TAU / OMEGA).abs() < 1e-15);

        let s = make_bnhqc(FRAC_PI_4, 0.0, 0.0, OMEGA).unwrap();
        let tau = s.duration();
        let slope = s.segments[0].phase.slope_rad_per_us;
        assert!((slope - (-3.0 * PI / (2.0 * tau))).abs() < 1e-9);
        assert!((slope - (-3.0 * PI / (2.0 * 0.05292))).abs() / slope.abs() < 1e-3);
        // 2√(π² − (3π/4)²) = π√7/2
        assert!((area(&s) - PI * 7f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((area(&s) - OMEGA * tau).abs() < 1e-12);
    }

    #[test]
    fn trivial_bnhqc_is_empty() {
        for g in [0.0, TAU] {
            let s = make_bnhqc(g, 0.3, 0.1, OMEGA).unwrap();
            assert_eq!(s.kind, ScheduleKind::Identity);
            assert_eq!(s.duration(), 0.0);
        }
    }

    #[test]
    fn nhqc_constant_duration_independent_of_gamma() {
        for g in [0.3, FRAC_PI_4, PI, 5.0] {
            let s = make_nhqc(g, 1.0, 0.2, NhqcEnvelope::Constant { peak_rad_per_us: OMEGA }).unwrap();
            assert_eq!(s.segments.len(), 2);
            assert!((s.duration() - TAU / OMEGA).abs() < 1e-15);
            assert_eq!(s.segments[0].phase.value(0.0), 0.0);
            assert!((s.segments[1].phase.value(0.0) - (PI + g)).abs() < 1e-15);
            assert!((area(&s) - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_fill_factor_matches_midpoint_oracle() {
        // independent oracle: composite midpoint rule on a fine grid
        let n = 200_000;
        let h = 4.0 / n as f64;
        let edge = (-2.0f64).exp();
        let sum: f64 = (0..n)
            .map(|k| {
                let u = (k as f64 + 0.5) * h;
                ((-(u - 2.0) * (u - 2.0) / 2.0).exp() - edge) / (1.0 - edge)
            })
            .sum();
        let oracle = sum * h / 4.0;
        let c = gaussian_fill_factor(true);
        assert!((c - oracle).abs() < 1e-9, "{c} vs {oracle}");
        assert!((c - 0.5349).abs() < 1e-3);
    }

    #[test]
    fn gaussian_nhqc_area_and_edges() {
        let peak = TAU * 12.76;
        let env = NhqcEnvelope::TruncatedGaussian {
            peak_rad_per_us: peak,
            baseline_subtract: true,
        };
        let s = make_nhqc(FRAC_PI_4, 0.0, 0.0, env).unwrap();
        let t_seg = s.segments[0].duration_us;
        assert!((peak * gaussian_fill_factor(true) * t_seg - PI).abs() < 1e-12);
        assert!((area(&s) - TAU).abs() < 1e-9 * TAU);
        let e = s.segments[0].envelope;
        assert_eq!(e.value(0.0), 0.0);
        assert!(e.value(t_seg).abs() < 1e-15);
        assert!((e.value(t_seg / 2.0) - peak).abs() < 1e-12);
    }

    #[test]
    fn nhqc_rejects_bad_peak() {
        let err = make_nhqc(1.0, 0.0, 0.0, NhqcEnvelope::Constant { peak_rad_per_us: 0.0 });
        assert_eq!(err.unwrap_err().kind(), "argument");
    }

    #[test]
    fn two_tone_examples() {
        let s = make_bnhqc(FRAC_PI_2, FRAC_PI_2, 0.4, OMEGA).unwrap();
        let tt = two_tone(&s, 0.01);
        assert!((tt.omega1 - OMEGA / SQRT_2).abs() < 1e-12);
        assert!((tt.omega2 - OMEGA / SQRT_2).abs() < 1e-12);

        let s = make_bnhqc(FRAC_PI_2, 0.0, 0.4, OMEGA).unwrap();
        let tt = two_tone(&s, 0.01);
        assert_eq!(tt.omega1, 0.0);
        assert!((tt.omega2 - OMEGA).abs() < 1e-12);
    }

    #[test]
    fn two_tone_round_trip() {
        for &(theta, phi) in &[(0.3, 0.2), (FRAC_PI_2, -2.0), (2.9, 3.0), (1.0, -PI + 0.01)] {
            let s = make_bnhqc(1.3, theta, phi, OMEGA).unwrap();
            for t in [0.0, 0.013, s.duration()] {
                let (om, th, ph) = reconstruct(&two_tone(&s, t));
                assert!((om - OMEGA).abs() < 1e-12 * OMEGA);
                assert!((th - theta).abs() < 1e-12);
                assert!(wrap_angle(ph - phi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn locate_covers_end_point() {
        let s = make_nhqc(1.0, 0.0, 0.0, NhqcEnvelope::Constant { peak_rad_per_us: OMEGA }).unwrap();
        let t_seg = s.segments[0].duration_us;
        assert_eq!(s.locate(0.0), Some((0, 0.0)));
        assert_eq!(s.locate(t_seg).unwrap().0, 1);
        assert_eq!(s.locate(s.duration()).unwrap().0, 1);
        assert_eq!(s.locate(s.duration() * 1.01), None);
    }

    #[test]
    fn json_layout() {
        let s = make_bnhqc(FRAC_PI_4, 0.0, 0.0, OMEGA).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        let seg = &v["segments"][0];
        assert!(seg["duration_us"].is_number());
        assert_eq!(seg["envelope"]["kind"], "constant");
        assert_eq!(seg["phase"]["kind"], "linear_ramp");
        assert!(seg["phase"]["slope_rad_per_us"].is_number());
        let back: PulseSchedule = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn sampled_csv_has_end_points() {
        let s = make_bnhqc(FRAC_PI_4, 0.0, 0.0, OMEGA).unwrap();
        let table = s.sampled(1000.0).unwrap();
        assert_eq!(table.header, vec!["t_us", "omega_rad_per_us", "phi2_rad"]);
        assert_eq!(table.rows.len(), 54);
        assert_eq!(table.rows[0][0], "0");
    }
}
