//! Brachistochrone checks on the driven bright/ancilla problem: constraint
//! residuals, a constant-multiplier QBE witness and a brute-force
//! minimum-time scan over constant-amplitude linear phase ramps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{c, pauli, CMatrix, C64};
use crate::pulses::{PulseSchedule, Segment};
use crate::spinsys::lambda_hamiltonian;
use crate::table::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    /// max_t |Tr H² − Ω²/2|, rad²/µs².
    pub f1_residual: f64,
    /// max_t |Tr Hσ_z|, rad/µs.
    pub f2_residual: f64,
}

fn sample_times(total: f64, grid: usize) -> impl Iterator<Item = f64> {
    (0..grid).map(move |k| total * k as f64 / (grid - 1) as f64)
}

pub fn constraint_residuals(s: &PulseSchedule, grid: usize) -> Result<ConstraintReport> {
    constraint_residuals_detuned(s, grid, 0.0)
}

/// Same as [`constraint_residuals`] with a static `detuning·σ_z` added to H.
pub fn constraint_residuals_detuned(
    s: &PulseSchedule,
    grid: usize,
    detuning: f64,
) -> Result<ConstraintReport> {
    if grid < 2 {
        return Err(Error::Argument(format!("grid must be ≥ 2, got {grid}")));
    }
    let sz = pauli::z();
    let mut report = ConstraintReport {
        f1_residual: 0.0,
        f2_residual: 0.0,
    };
    for t in sample_times(s.duration(), grid) {
        let omega = s.omega(t);
        let h = &lambda_hamiltonian(omega, s.phi2(t)) + &sz.scale_re(detuning);
        let f1 = ((&h * &h).trace().re - 0.5 * omega * omega).abs();
        let f2 = (&h * &sz).trace().norm();
        report.f1_residual = report.f1_residual.max(f1);
        report.f2_residual = report.f2_residual.max(f2);
    }
    Ok(report)
}

/// Search range for λ₂ (in units of the schedule's peak Ω) and the number
/// of time samples per segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbeSearch {
    pub lambda2_min: f64,
    pub lambda2_max: f64,
    pub points: usize,
    pub samples: usize,
}

impl Default for QbeSearch {
    fn default() -> Self {
        QbeSearch {
            lambda2_min: -20.0,
            lambda2_max: 20.0,
            points: 4001,
            samples: 64,
        }
    }
}

/// F = λ₁H + λ₂Ω_ref σ_z with λ₁ fixed to 1; the residual is
/// max_t ‖Ḟ + i[H, F]‖_F / Ω_ref², so both λ₂ and the residual are
/// unchanged when Ω and 1/τ are scaled together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QbeWitness {
    pub lambda1: f64,
    pub lambda2: f64,
    pub residual: f64,
}

/// (H, Ḣ) at segment-local time `tl`.
fn h_and_rate(seg: &Segment, tl: f64) -> (CMatrix, CMatrix) {
    let omega = seg.envelope.value(tl);
    let phi = seg.phase.value(tl);
    let fd = seg.duration_us * 1e-6;
    let (lo, hi) = ((tl - fd).max(0.0), (tl + fd).min(seg.duration_us));
    let omega_dot = (seg.envelope.value(hi) - seg.envelope.value(lo)) / (hi - lo);
    let phi_dot = seg.phase.rate();
    // H₀₁ = (Ω/2)e^{iφ} ⇒ Ḣ₀₁ = (Ω̇/2 + iΩφ̇/2)e^{iφ}
    let d01 = c(omega_dot / 2.0, omega * phi_dot / 2.0) * C64::from_polar(1.0, phi);
    let zero = C64::new(0.0, 0.0);
    let h_dot = CMatrix::from_rows(&[[zero, d01], [d01.conj(), zero]]);
    (lambda_hamiltonian(omega, phi), h_dot)
}

pub fn qbe_residual(s: &PulseSchedule, search: &QbeSearch) -> Result<QbeWitness> {
    if search.points < 2 || search.samples < 2 || !(search.lambda2_max > search.lambda2_min) {
        return Err(Error::Argument("empty λ search range".into()));
    }
    for (k, seg) in s.segments.iter().enumerate() {
        if !seg.phase.is_smooth() {
            return Err(Error::UnsupportedShape(format!(
                "segment {k}: phase jumps inside a segment have no derivative"
            )));
        }
    }
    let omega_ref = s
        .segments
        .iter()
        .map(|seg| seg.envelope.peak())
        .fold(0.0, f64::max);
    if omega_ref == 0.0 {
        return Ok(QbeWitness {
            lambda1: 1.0,
            lambda2: 0.0,
            residual: 0.0,
        });
    }
    let sz = &pauli::z();
    // residual(λ₂) = max_t ‖Ḣ + iλ₂Ω_ref[H, σ_z]‖ is a max of norms of
    // affine maps, hence convex in λ₂.
    let terms: Vec<(CMatrix, CMatrix)> = s
        .segments
        .iter()
        .flat_map(|seg| {
            (0..search.samples).map(move |k| {
                let tl = seg.duration_us * k as f64 / (search.samples - 1) as f64;
                let (h, h_dot) = h_and_rate(seg, tl);
                let comm = (&(&h * sz) - &(sz * &h)).scale(c(0.0, omega_ref));
                (h_dot, comm)
            })
        })
        .collect();
    let scale = omega_ref * omega_ref;
    let objective = |l2: f64| {
        terms
            .iter()
            .map(|(hd, cm)| (hd + &cm.scale_re(l2)).frobenius_norm())
            .fold(0.0, f64::max)
            / scale
    };
    let step = (search.lambda2_max - search.lambda2_min) / (search.points - 1) as f64;
    let (mut best_l, mut best_r) = (search.lambda2_min, f64::INFINITY);
    for k in 0..search.points {
        let l = search.lambda2_min + step * k as f64;
        let r = objective(l);
        if r < best_r {
            best_l = l;
            best_r = r;
        }
    }
    let refined = golden_section(&objective, best_l - step, best_l + step, 1e-14);
    let r = objective(refined);
    if r < best_r {
        best_l = refined;
        best_r = r;
    }
    Ok(QbeWitness {
        lambda1: 1.0,
        lambda2: best_l,
        residual: best_r,
    })
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() < tol * (1.0 + a.abs()) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Bright-state amplitude after a constant-amplitude loop with φ₂ = s·t.
/// In the frame V = exp(i s t σ_z/2) the Hamiltonian is static:
/// U(τ) = V(τ)·exp(−iτ((a/2)σ_x + (s/2)σ_z)).
pub fn ramp_bright_amplitude(amplitude: f64, slope: f64, tau: f64) -> C64 {
    let r = (amplitude * amplitude + slope * slope).sqrt();
    let half = 0.5 * r * tau;
    let sinc = if r > 0.0 { half.sin() / r } else { 0.5 * tau };
    C64::from_polar(1.0, 0.5 * slope * tau) * c(half.cos(), -slope * sinc)
}

/// 1 − F for the qubit block |d⟩⟨d| + u|b⟩⟨b| against the holonomic target,
/// which acts as e^{iγ} on |b⟩.
pub fn ramp_infidelity(gamma: f64, amplitude: f64, slope: f64, tau: f64) -> f64 {
    let u = ramp_bright_amplitude(amplitude, slope, tau);
    let m = u * C64::from_polar(1.0, -gamma);
    let f = ((c(1.0, 0.0) + m).norm_sqr() + 1.0 + u.norm_sqr()) / 6.0;
    (1.0 - f).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub slopes: Vec<f64>,
    pub durations: Vec<f64>,
}

/// `n` evenly spaced values on [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

impl ScanGrid {
    /// Slopes −150…150 rad/µs in 1 rad/µs steps and durations on a
    /// `step`-aligned window of ±`half_width` steps around `center`.
    pub fn around(center: f64, step: f64, half_width: usize) -> ScanGrid {
        let k0 = (center / step).round() as i64;
        let durations = (k0 - half_width as i64..=k0 + half_width as i64)
            .filter(|&k| k > 0)
            .map(|k| k as f64 * step)
            .collect();
        ScanGrid {
            slopes: linspace(-150.0, 150.0, 301),
            durations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub slope: f64,
    pub duration_us: f64,
    pub infidelity: f64,
    /// Best amplitude (≤ Ω) and slope within the cell.
    pub amplitude: f64,
    pub slope_refined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub gamma: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub cells: Vec<ScanCell>,
    pub tau_star: Option<f64>,
}

impl ScanResult {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["slope", "duration_us", "infidelity"]);
        for cell in &self.cells {
            t.push_nums(&[cell.slope, cell.duration_us, cell.infidelity]);
        }
        t
    }
}

/// Best infidelity over amplitude ∈ [0, Ω] and slope within ±h/2 of the
/// grid slope: golden section on the slope offset around an inner
/// grid-then-golden search over the amplitude.
pub fn optimize_cell(gamma: f64, omega: f64, slope: f64, h: f64, tau: f64) -> (f64, f64, f64) {
    let inner = |s: f64| -> (f64, f64) {
        let f = |x: f64| ramp_infidelity(gamma, omega * x, s, tau);
        let n = 32;
        let (mut bx, mut bv) = (0.0, f64::INFINITY);
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let v = f(x);
            if v < bv {
                bx = x;
                bv = v;
            }
        }
        let d = 1.0 / n as f64;
        let xr = golden_section(&f, (bx - d).max(0.0), (bx + d).min(1.0), 1e-13);
        let vr = f(xr);
        if vr < bv { (vr, xr) } else { (bv, bx) }
    };
    if h == 0.0 {
        let (v, x) = inner(slope);
        return (v, omega * x, slope);
    }
    let outer = |y: f64| inner(slope + h * y).0;
    let ny = 8;
    let (mut by, mut bv) = (0.0, f64::INFINITY);
    for j in 0..=ny {
        let y = -0.5 + j as f64 / ny as f64;
        let v = outer(y);
        if v < bv {
            by = y;
            bv = v;
        }
    }
    let d = 1.0 / ny as f64;
    let yr = golden_section(&outer, (by - d).max(-0.5), (by + d).min(0.5), 1e-12);
    let y = if outer(yr) < bv { yr } else { by };
    let (v, x) = inner(slope + h * y);
    (v, omega * x, slope + h * y)
}

/// Minimum-time scan over constant-amplitude linear-ramp loops. Each cell
/// reports the best infidelity with amplitude ≤ Ω and slope refined within
/// the cell; τ* is the shortest duration reaching `epsilon`.
///
/// Searching amplitudes below Ω loses nothing: (a, s, τ) behaves exactly like
/// (Ω, sΩ/a, τa/Ω), so any sub-saturated solution has a shorter saturated twin.
pub fn optimality_scan(gamma: f64, omega: f64, grid: &ScanGrid, epsilon: f64) -> Result<ScanResult> {
    if grid.slopes.is_empty() || grid.durations.is_empty() {
        return Err(Error::Argument("slope and duration grids must be non-empty".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    if grid.durations.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Argument("durations must be > 0".into()));
    }
    let h = if grid.slopes.len() > 1 {
        let mut sorted = grid.slopes.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let jobs: Vec<(f64, f64)> = grid
        .durations
        .iter()
        .flat_map(|&tau| grid.slopes.iter().map(move |&s| (s, tau)))
        .collect();
    let cells: Vec<ScanCell> = jobs
        .par_iter()
        .map(|&(slope, tau)| {
            let (infidelity, amplitude, slope_refined) = optimize_cell(gamma, omega, slope, h, tau);
            ScanCell {
                slope,
                duration_us: tau,
                infidelity,
                amplitude,
                slope_refined,
            }
        })
        .collect();
    let tau_star = cells
        .iter()
        .filter(|c| c.infidelity <= epsilon)
        .map(|c| c.duration_us)
        .min_by(f64::total_cmp);
    Ok(ScanResult {
        gamma,
        omega,
        epsilon,
        cells,
        tau_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{final_unitary, qubit_operator, Perturbation, Space, StepPolicy};
    use crate::gates::{gate_fidelity, holonomic_unitary};
    use crate::pulses::{make_bnhqc, make_nhqc, tau_min, Envelope, NhqcEnvelope, PhaseProgram, ScheduleKind};
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    const OMEGA: f64 = TAU * 12.5;

    fn ramp(omega: f64, slope: f64, tau: f64) -> PulseSchedule {
        PulseSchedule {
            kind: ScheduleKind::Custom,
            segments: vec![Segment {
                duration_us: tau,
                envelope: Envelope::Constant { peak_rad_per_us: omega },
                phase: PhaseProgram::linear(slope, 0.0),
            }],
            theta: 0.7,
            phi: 0.4,
            gamma: 0.0,
        }
    }

    #[test]
    fn bnhqc_satisfies_constraints() {
        for k in 1..=16 {
            let gamma = TAU * k as f64 / 17.0;
            let s = make_bnhqc(gamma, 0.3, 1.1, OMEGA).unwrap();
            let r = constraint_residuals(&s, 257).unwrap();
            assert!(r.f1_residual < 1e-12 && r.f2_residual < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn detuning_shows_up_in_f2() {
        let s = make_bnhqc(FRAC_PI_4, 0.0, 0.0, OMEGA).unwrap();
        let r = constraint_residuals_detuned(&s, 33, -1.5).unwrap();
        // Tr(δσ_z σ_z) = 2δ, Tr((H + δσ_z)²) − Ω²/2 = 2δ²
        assert!((r.f2_residual - 3.0).abs() < 1e-12);
        assert!((r.f1_residual - 4.5).abs() < 1e-9);
    }

    #[test]
    fn zero_amplitude_has_no_residual() {
        let s = ramp(0.0, 3.0, 0.1);
        let r = constraint_residuals(&s, 10).unwrap();
        assert_eq!((r.f1_residual, r.f2_residual), (0.0, 0.0));
        let w = qbe_residual(&s, &QbeSearch::default()).unwrap();
        assert_eq!(w.residual, 0.0);
        assert!(constraint_residuals(&s, 1).is_err());
    }

    #[test]
    fn bnhqc_is_a_qbe_solution() {
        for gamma in [PI / 8.0, FRAC_PI_4, PI / 2.0, 3.0 * PI / 4.0, 1.3 * PI] {
            let s = make_bnhqc(gamma, 0.0, 0.0, OMEGA).unwrap();
            let w = qbe_residual(&s, &QbeSearch::default()).unwrap();
            assert!(w.residual < 1e-8, "γ={gamma}: {w:?}");
            // exact multiplier: φ̇₂/(2Ω)
            let expected = s.segments[0].phase.rate() / (2.0 * OMEGA);
            assert!((w.lambda2 - expected).abs() < 1e-8);
            assert!(w.lambda2 != 0.0);
        }
    }

    #[test]
    fn static_loop_needs_no_multiplier() {
        let s = make_bnhqc(PI, 0.0, 0.0, OMEGA).unwrap();
        let w = qbe_residual(&s, &QbeSearch::default()).unwrap();
        assert_eq!(w.residual, 0.0);
        assert_eq!(w.lambda2, 0.0);
    }

    #[test]
    fn gaussian_nhqc_is_not_a_solution() {
        let s = make_nhqc(
            FRAC_PI_4,
            0.0,
            0.0,
            NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us: OMEGA,
                baseline_subtract: true,
            },
        )
        .unwrap();
        let w = qbe_residual(&s, &QbeSearch::default()).unwrap();
        assert!(w.residual > 1e-2, "{w:?}");
    }

    #[test]
    fn phase_jump_is_rejected() {
        let mut s = ramp(OMEGA, 0.0, 0.1);
        s.segments[0].phase.kind = crate::pulses::PhaseKind::Piecewise;
        s.segments[0].phase.jumps.push(crate::pulses::PhaseJump {
            at_us: 0.05,
            delta_rad: 1.0,
        });
        let err = qbe_residual(&s, &QbeSearch::default()).unwrap_err();
        assert_eq!(err.kind(), "unsupported_shape");
    }

    #[test]
    fn qbe_residual_is_time_rescaling_invariant() {
        let s = make_nhqc(
            2.0,
            0.0,
            0.0,
            NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us: OMEGA,
                baseline_subtract: true,
            },
        )
        .unwrap();
        let mut fast = s.clone();
        for seg in &mut fast.segments {
            seg.duration_us /= 3.0;
            seg.envelope = seg.envelope.scaled(3.0);
            if let Envelope::TruncatedGaussian { sigma_us, .. } = &mut seg.envelope {
                *sigma_us /= 3.0;
            }
            seg.phase.slope_rad_per_us *= 3.0;
        }
        let a = qbe_residual(&s, &QbeSearch::default()).unwrap();
        let b = qbe_residual(&fast, &QbeSearch::default()).unwrap();
        assert!((a.residual - b.residual).abs() < 1e-6 * a.residual.max(1.0), "{a:?} {b:?}");
    }

    #[test]
    fn closed_form_matches_propagator() {
        let frame = crate::spinsys::BrightFrame::from_axis(0.7, 0.4);
        for (a, s, tau) in [(OMEGA, -40.0, 0.05), (0.6 * OMEGA, 100.0, 0.033), (OMEGA, 0.0, 0.08)] {
            let u = final_unitary(&ramp(a, s, tau), &Space::Lambda, &Perturbation::default(), &StepPolicy::magnus4(0.005)).unwrap();
            assert!((u[(0, 0)] - ramp_bright_amplitude(a, s, tau)).norm() < 1e-10);
            let gamma = 1.2;
            let block = qubit_operator(&Space::Lambda, &frame, &u);
            let f = gate_fidelity(&block, &holonomic_unitary(gamma, 0.7, 0.4));
            assert!(((1.0 - f) - ramp_infidelity(gamma, a, s, tau)).abs() < 1e-10);
        }
    }

    #[test]
    fn scan_finds_tau_min() {
        let step = 0.0005;
        for gamma in [FRAC_PI_4, PI] {
            let tm = tau_min(gamma, OMEGA).unwrap();
            let grid = ScanGrid::around(tm, step, 6);
            let res = optimality_scan(gamma, OMEGA, &grid, 1e-6).unwrap();
            let ts = res.tau_star.expect("some cell reaches epsilon");
            assert!((ts - tm).abs() <= step + 1e-12, "γ={gamma} τ*={ts} τ_min={tm}");
            let loose = optimality_scan(gamma, OMEGA, &grid, 1e-2).unwrap();
            assert!(loose.tau_star.unwrap() <= ts);
        }
        assert_eq!(tau_min(PI, OMEGA).unwrap(), TAU / OMEGA);
    }

    #[test]
    fn scan_rejects_bad_input() {
        let empty = ScanGrid {
            slopes: vec![],
            durations: vec![0.05],
        };
        assert_eq!(optimality_scan(1.0, OMEGA, &empty, 1e-6).unwrap_err().kind(), "argument");
        let grid = ScanGrid::around(0.05, 0.0005, 1);
        assert!(optimality_scan(1.0, OMEGA, &grid, 1.5).is_err());
        let csv = optimality_scan(1.0, OMEGA, &grid, 1e-4).unwrap().to_csv().to_csv();
        assert!(csv.starts_with("slope,duration_us,infidelity\n"));
    }
}
