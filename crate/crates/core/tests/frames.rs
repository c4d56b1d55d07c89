//! Lab, rotating and Λ-reduced propagations of the same drive agree.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use bnhqc::evolve::{final_unitary, qubit_operator, Perturbation, Space, StepPolicy};
use bnhqc::numerics::{cis, CMatrix};
use bnhqc::pulses::make_bnhqc;
use bnhqc::spinsys::SpinSystemParams;

/// Scaled-down register: GHz-scale splittings would cost ~10⁵ lab steps
/// per gate without changing what the check exercises.
fn reduced() -> SpinSystemParams {
    SpinSystemParams {
        d: TAU * 300.0,
        b0: TAU * 80.0 / SpinSystemParams::default().gamma_e,
        ..SpinSystemParams::default()
    }
}

/// Rotating-to-lab frame operator V(t) = diag(e^{−iω₂t}, 1, e^{−iω₁t}).
fn frame_operator(p: &SpinSystemParams, t: f64) -> CMatrix {
    CMatrix::from_diag(&[
        cis(-p.upper_transition() * t),
        cis(0.0),
        cis(-p.lower_transition() * t),
    ])
}

#[test]
fn lab_equals_rotating_without_rwa() {
    let p = reduced();
    let omega = TAU * 4.0;
    let policy = StepPolicy::magnus4(0.01);
    for (gamma, theta, phi) in [(PI, FRAC_PI_2, 0.0), (FRAC_PI_2, 1.1, 0.4), (1.3 * PI, 0.3, -2.0)] {
        let s = make_bnhqc(gamma, theta, phi, omega).unwrap();
        let t0 = Instant::now();
        let lab = final_unitary(&s, &Space::ElectronLab { params: p }, &Perturbation::default(), &policy).unwrap();
        let rot = final_unitary(
            &s,
            &Space::ElectronRotating { params: p, rwa: false },
            &Perturbation::default(),
            &policy,
        )
        .unwrap();
        let mapped = &frame_operator(&p, s.duration()) * &rot;
        let dev = (&lab - &mapped).max_abs();
        eprintln!("gamma {gamma}: dev {dev:e} in {:?}", t0.elapsed());
        assert!(dev < 1e-8, "lab vs rotating deviation {dev}");
    }
}

fn unperturbed(s: &bnhqc::pulses::PulseSchedule, space: Space, policy: &StepPolicy) -> CMatrix {
    final_unitary(s, &space, &Perturbation::default(), policy).unwrap()
}

#[test]
fn rwa_frame_matches_resonant_electron_model() {
    let p = SpinSystemParams::default();
    let policy = StepPolicy::magnus4(0.01);
    for (gamma, theta, phi) in [(PI, FRAC_PI_2, 0.0), (FRAC_PI_2, 1.1, 0.4), (0.7, 2.5, 3.0)] {
        let s = make_bnhqc(gamma, theta, phi, TAU * 12.5).unwrap();
        let rwa = unperturbed(&s, Space::ElectronRotating { params: p, rwa: true }, &policy);
        let resonant = unperturbed(&s, Space::Electron, &policy);
        let dev = (&rwa - &resonant).max_abs();
        assert!(dev < 1e-10, "gamma {gamma}: {dev}");
    }
}

#[test]
fn electron_block_matches_lambda_reduction() {
    let policy = StepPolicy::magnus4(0.01);
    for (gamma, theta, phi) in [(PI, FRAC_PI_2, 0.0), (FRAC_PI_2, 1.1, 0.4), (1.7 * PI, 0.2, -1.0)] {
        let s = make_bnhqc(gamma, theta, phi, TAU * 12.5).unwrap();
        let frame = s.frame();
        let e = qubit_operator(&Space::Electron, &frame, &unperturbed(&s, Space::Electron, &policy));
        let l = qubit_operator(&Space::Lambda, &frame, &unperturbed(&s, Space::Lambda, &policy));
        let dev = (&e - &l).max_abs();
        assert!(dev < 1e-10, "gamma {gamma}: {dev}");
    }
}

/// Dropping counter-rotating and cross terms costs O(Ω/ω) in the
/// propagator; halving Ω should shrink the deviation accordingly.
#[test]
fn rwa_error_tracks_drive_to_splitting_ratio() {
    let p = reduced();
    let policy = StepPolicy::magnus4(0.01);
    let dev = |omega: f64| {
        let s = make_bnhqc(PI, FRAC_PI_2, 0.0, omega).unwrap();
        let exact = unperturbed(&s, Space::ElectronRotating { params: p, rwa: false }, &policy);
        let rwa = unperturbed(&s, Space::ElectronRotating { params: p, rwa: true }, &policy);
        (&exact - &rwa).max_abs()
    };
    let (hi, lo) = (dev(TAU * 8.0), dev(TAU * 4.0));
    eprintln!("rwa deviation: {hi:e} at 8 MHz, {lo:e} at 4 MHz");
    let ratio = TAU * 8.0 / p.lower_transition();
    assert!(hi < 4.0 * ratio, "{hi} vs Ω/ω = {ratio}");
    assert!(lo < 0.75 * hi);
}
