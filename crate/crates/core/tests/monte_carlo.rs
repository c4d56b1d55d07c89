//! Quasi-static Monte Carlo: thread-count independence and agreement
//! with Gauss–Hermite quadrature over the error distribution.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use bnhqc::evolve::{
    final_unitary, monte_carlo, qubit_operator, MonteCarloResult, NoiseModel, Perturbation, Space,
    StepPolicy,
};
use bnhqc::numerics::{average_gate_fidelity, pauli};
use bnhqc::pulses::{make_bnhqc, PulseSchedule};
use nalgebra::{DMatrix, SymmetricEigen};

fn x_gate() -> PulseSchedule {
    make_bnhqc(PI, FRAC_PI_2, 0.0, TAU * 12.5).unwrap()
}

fn run_in_pool(threads: usize, noise: &NoiseModel, shots: usize, seed: u64) -> MonteCarloResult {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let s = x_gate();
    pool.install(|| {
        monte_carlo(&s, noise, shots, seed, &Space::Lambda, &StepPolicy::default(), &pauli::x()).unwrap()
    })
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let noise = NoiseModel {
        detuning_sigma: TAU * 0.5,
        amplitude_rel_sigma: 0.02,
        ..NoiseModel::default()
    };
    let one = run_in_pool(1, &noise, 257, 42);
    let four = run_in_pool(4, &noise, 257, 42);
    assert_eq!(one.ptm_mean, four.ptm_mean);
    assert_eq!(one.ptm_variance, four.ptm_variance);
    assert_eq!(one.fidelity_mean.to_bits(), four.fidelity_mean.to_bits());
    assert_eq!(one.fidelity_variance.to_bits(), four.fidelity_variance.to_bits());
    let other = run_in_pool(4, &noise, 257, 43);
    assert_ne!(one.fidelity_mean, other.fidelity_mean);
}

/// Nodes and weights of the n-point rule for a standard normal weight,
/// from the eigen-decomposition of the Hermite Jacobi matrix.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect()
}

#[test]
fn gauss_hermite_rule_integrates_moments() {
    let rule = gauss_hermite(20);
    let moment = |p: i32| rule.iter().map(|(x, w)| w * x.powi(p)).sum::<f64>();
    assert!((moment(0) - 1.0).abs() < 1e-12);
    assert!(moment(1).abs() < 1e-12);
    assert!((moment(2) - 1.0).abs() < 1e-12);
    assert!((moment(4) - 3.0).abs() < 1e-11);
    assert!((moment(6) - 15.0).abs() < 1e-10);
}

#[test]
fn mean_fidelity_matches_quadrature() {
    let sigma = TAU * 4.0;
    let s = x_gate();
    let policy = StepPolicy::default();
    let fidelity = |delta: f64| {
        let pert = Perturbation { detuning: delta, amplitude_error: 0.0 };
        let u = final_unitary(&s, &Space::Lambda, &pert, &policy).unwrap();
        average_gate_fidelity(&qubit_operator(&Space::Lambda, &s.frame(), &u), &pauli::x())
    };
    let oracle: f64 = gauss_hermite(40).iter().map(|(x, w)| w * fidelity(sigma * x)).sum();
    let noise = NoiseModel { detuning_sigma: sigma, ..NoiseModel::default() };
    let shots = 4000;
    let mc = monte_carlo(&s, &noise, shots, 7, &Space::Lambda, &policy, &pauli::x()).unwrap();
    let se = (mc.fidelity_variance / shots as f64).sqrt();
    assert!(1.0 - oracle > 1e-3, "spread too small to test: {oracle}");
    assert!(
        (mc.fidelity_mean - oracle).abs() < 4.0 * se,
        "mc {} vs quadrature {oracle} (se {se})",
        mc.fidelity_mean
    );
}
