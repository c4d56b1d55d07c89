//! Invariants of the propagators and gate algebra over random inputs.

use std::f64::consts::{PI, TAU};

use bnhqc::evolve::{
    final_unitary, propagate_master, NoiseModel, Perturbation, Space, StepPolicy,
};
use bnhqc::gates::{gate_fidelity, holonomic_unitary, simulate_gate, synthesize, GateSettings, GateSpec, Scheme};
use bnhqc::numerics::{c, cis, eigvalsh, expm_hermitian, mat_exp, CMatrix, C64};
use bnhqc::pulses::{make_bnhqc, make_nhqc, NhqcEnvelope, PulseSchedule};
use proptest::prelude::*;

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-5.0f64..5.0, 2 * n * n).prop_map(move |xs| {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let k = 2 * (i * n + j);
                m[(i, j)] = c(xs[k], xs[k + 1]);
            }
        }
        m.hermitian_part()
    })
}

fn gate_angles() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..TAU - 0.05, 0.0f64..PI, -PI..PI)
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    (&(&u.adjoint() * u) - &CMatrix::identity(u.rows())).max_abs()
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn exponential_of_hermitian_is_unitary(h in hermitian(4), t in -3.0f64..3.0) {
        let u = mat_exp(&h, c(0.0, -t)).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-12);
        let spectral = expm_hermitian(&h, t).unwrap();
        prop_assert!((&u - &spectral).max_abs() < 1e-11);
    }

    #[test]
    fn exponentials_compose(h in hermitian(3), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let a = mat_exp(&h, c(0.0, -t1)).unwrap();
        let b = mat_exp(&h, c(0.0, -t2)).unwrap();
        let ab = mat_exp(&h, c(0.0, -(t1 + t2))).unwrap();
        prop_assert!((&(&a * &b) - &ab).max_abs() < 1e-11);
    }

    #[test]
    fn fidelity_ignores_global_phase((g, th, ph) in gate_angles(), alpha in -PI..PI, eps in 0.0f64..0.3) {
        let u = holonomic_unitary(g, th, ph);
        let v = holonomic_unitary(g + eps, th, ph);
        let f = gate_fidelity(&u, &v);
        let fp = gate_fidelity(&u.scale(cis(alpha)), &v);
        prop_assert!((f - fp).abs() < 1e-13);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&f));
    }

    #[test]
    fn rotations_about_one_axis_compose(g1 in -PI..PI, g2 in -PI..PI, th in 0.0f64..PI, ph in -PI..PI) {
        let prod = &holonomic_unitary(g1, th, ph) * &holonomic_unitary(g2, th, ph);
        let sum = holonomic_unitary(g1 + g2, th, ph);
        prop_assert!((&prod - &sum).max_abs() < 1e-13);
        prop_assert!(unitarity_defect(&sum) < 1e-13);
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn simulated_gates_hit_targets((g, th, ph) in gate_angles(), bnhqc in any::<bool>()) {
        let scheme = if bnhqc { Scheme::Bnhqc } else { Scheme::Nhqc };
        let spec = GateSpec::Angles { gamma: g, theta: th, phi: ph };
        let s = synthesize(&spec, scheme, &GateSettings::default()).unwrap();
        let sim = simulate_gate(&s, &Space::Electron, &StepPolicy::default()).unwrap();
        prop_assert!(1.0 - gate_fidelity(&sim.block, &holonomic_unitary(g, th, ph)) < 1e-8);
        prop_assert!(sim.leakage.unwrap() < 1e-9);
    }

    #[test]
    fn propagator_is_unitary_under_perturbation(
        (g, th, ph) in gate_angles(),
        delta in -20.0f64..20.0,
        eps in -0.1f64..0.1,
    ) {
        let s = make_bnhqc(g, th, ph, TAU * 12.5).unwrap();
        let pert = Perturbation { detuning: delta, amplitude_error: eps };
        let u = final_unitary(&s, &Space::Electron, &pert, &StepPolicy::default()).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn propagator_splits_at_segment_boundaries((g, th, ph) in gate_angles(), delta in -10.0f64..10.0) {
        let s = make_nhqc(g, th, ph, NhqcEnvelope::TruncatedGaussian { peak_rad_per_us: TAU * 12.5, baseline_subtract: true }).unwrap();
        prop_assume!(s.segments.len() >= 2);
        let part = |segs: &[bnhqc::pulses::Segment]| PulseSchedule { segments: segs.to_vec(), ..s.clone() };
        let pert = Perturbation { detuning: delta, amplitude_error: 0.0 };
        let run = |sch: &PulseSchedule| final_unitary(sch, &Space::Electron, &pert, &StepPolicy::default()).unwrap();
        let whole = run(&s);
        let first = run(&part(&s.segments[..1]));
        let rest = run(&part(&s.segments[1..]));
        prop_assert!((&whole - &(&rest * &first)).max_abs() < 1e-12);
    }

    #[test]
    fn master_equation_preserves_state((g, th, ph) in gate_angles(), re in 0.0f64..2.0, mix in 0.0f64..1.0) {
        let s = make_bnhqc(g, th, ph, TAU * 12.5).unwrap();
        let noise = NoiseModel { dephasing_rate_e: re, ..NoiseModel::default() };
        let v = [c(0.6, 0.0), c(0.0, 0.0), C64::new(0.0, 0.8)];
        let rho0 = &CMatrix::projector(&v).scale_re(1.0 - mix) + &CMatrix::identity(3).scale_re(mix / 3.0);
        let tr = propagate_master(&rho0, &s, &noise, &Space::Electron, &StepPolicy::default()).unwrap();
        let rho = tr.final_state();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.trace().im.abs() < 1e-12);
        prop_assert!(rho.is_hermitian(1e-14));
        prop_assert!(eigvalsh(rho).unwrap().iter().all(|&l| l > -1e-12));
    }
}
