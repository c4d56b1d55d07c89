//! One function per subcommand; each fills a [`Report`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use bnhqc::brachistochrone::{optimality_scan, ScanGrid};
use bnhqc::evolve::{
    depolarize, monte_carlo, propagate_master, propagate_unitary, qubit_operator, NoiseModel, Perturbation,
    Space,
};
use bnhqc::gates::{
    controlled_target, cy_schedule, fit_single_decay, fit_two_qubit_decay, gate_fidelity, repeat_gate_experiment,
    simulate_cy, simulate_gate, synthesize, target_unitary, two_qubit_state, DecayPoint, GateSpec, NamedGate,
    CY_RABI,
};
use bnhqc::metrology::{
    calibrated_dephasing, default_phase_grid, fit_fringe, run_interferometer, Backend, InterferometerConfig,
    ProbeScheme, SensitivityReport, TimingBudget,
};
use bnhqc::numerics::{c, cr, CMatrix, C64, ZERO};
use bnhqc::pulses::{area, tau_min};
use bnhqc::readout::{stream_rng, Readout, Shots};
use bnhqc::spinsys::basis;
use bnhqc::tomography::{
    input_states, measure_expectations, process_fidelity, qpt, qst, state_fidelity, NoiseProfile, ProcessMatrix,
};
use rand_distr::{Distribution, Normal};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Context};
use crate::report::Report;

pub fn shots(cfg: &RunConfig) -> Shots {
    cfg.shots.map_or(Shots::Exact, Shots::Finite)
}

fn gate_label(g: &GateSpec) -> String {
    match g {
        GateSpec::Named(n) => n.label().replace('/', "_"),
        GateSpec::Angles { .. } => "gate".into(),
    }
}

pub fn synth(cfg: &RunConfig, sample_rate: f64) -> CliResult<Report> {
    let s = synthesize(&cfg.gate, cfg.scheme, &cfg.settings()).ctx("pulses")?;
    let mut r = Report::new("synth", "synth", cfg);
    r.set("schedule", &s);
    r.set("duration_us", s.duration());
    r.set("area_rad", area(&s));
    let (gamma, _, _) = cfg.gate.angles();
    if gamma > 0.0 && gamma < 2.0 * PI {
        r.set("tau_min_us", tau_min(gamma, cfg.settings().bnhqc_rabi).ctx("pulses")?);
    }
    r.table("synth_samples", s.sampled(sample_rate).ctx("pulses")?);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SpaceArg {
    Lambda,
    Electron,
    Rotating,
    RotatingRwa,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl InputState {
    fn qubit(self) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            InputState::Zero => [cr(1.0), ZERO],
            InputState::One => [ZERO, cr(1.0)],
            InputState::Plus => [cr(s), cr(s)],
            InputState::Minus => [cr(s), cr(-s)],
            InputState::PlusI => [cr(s), c(0.0, s)],
            InputState::MinusI => [cr(s), c(0.0, -s)],
        }
    }
}

fn space_of(cfg: &RunConfig, arg: SpaceArg) -> Space {
    let params = cfg.params();
    match arg {
        SpaceArg::Lambda => Space::Lambda,
        SpaceArg::Electron => Space::Electron,
        SpaceArg::Rotating => Space::ElectronRotating { params, rwa: false },
        SpaceArg::RotatingRwa => Space::ElectronRotating { params, rwa: true },
        SpaceArg::Lab => Space::ElectronLab { params },
    }
}

/// Input vector in the propagation space; the Λ space always starts in |b⟩.
fn embed_input(space: &Space, q: [C64; 2]) -> Vec<C64> {
    match space {
        Space::Lambda => vec![cr(1.0), ZERO],
        _ => {
            let mut v = vec![ZERO; 3];
            v[basis::QUBIT[0]] = q[0];
            v[basis::QUBIT[1]] = q[1];
            v
        }
    }
}

pub fn evolve(cfg: &RunConfig, space_arg: SpaceArg, input: InputState, record_every: usize) -> CliResult<Report> {
    let s = synthesize(&cfg.gate, cfg.scheme, &cfg.settings()).ctx("pulses")?;
    let space = space_of(cfg, space_arg);
    let policy = bnhqc::evolve::StepPolicy {
        record_every,
        ..cfg.integrator
    };
    let noise = cfg.noise_model();
    let target = target_unitary(&cfg.gate);
    let psi = embed_input(&space, input.qubit());
    let mut r = Report::new("evolve", "evolve", cfg);
    r.set("duration_us", s.duration());
    let tr = propagate_unitary(&s, &space, &policy).ctx("evolve")?;
    let block = qubit_operator(&space, &s.frame(), tr.final_state());
    r.set("gate_fidelity", gate_fidelity(&block, &target));
    r.set("leakage", tr.leakage_final);
    if noise.dephasing_rate_e > 0.0 || noise.dephasing_rate_n > 0.0 {
        let rho0 = CMatrix::projector(&psi);
        let dm = propagate_master(&rho0, &s, &noise, &space, &policy).ctx("evolve")?;
        let ideal_out: Vec<C64> = {
            let q = target.mat_vec(&input.qubit());
            embed_input(&space, [q[0], q[1]])
        };
        if !matches!(space, Space::Lambda) {
            let f = state_fidelity(dm.final_state(), &CMatrix::projector(&ideal_out)).ctx("tomography")?;
            r.set("state_fidelity_dephased", f);
        }
        r.table("evolve_density", dm.to_csv(None).ctx("evolve")?);
    } else {
        r.table("evolve_trajectory", tr.to_csv(Some(&psi)).ctx("evolve")?);
    }
    if !noise.is_quasi_static_free() {
        let mc = monte_carlo(&s, &noise, cfg.mc_shots, cfg.seed, &space, &cfg.integrator, &target).ctx("evolve")?;
        r.set("monte_carlo", &mc);
    }
    Ok(r)
}

pub fn profile_from(noiseless: bool, target: f64, gate_depol: f64) -> CliResult<NoiseProfile> {
    if noiseless {
        Ok(NoiseProfile::noiseless())
    } else {
        NoiseProfile::calibrated(target, gate_depol).ctx("tomography")
    }
}

fn chi_json(chi: &ProcessMatrix) -> serde_json::Value {
    serde_json::to_value(chi.export()).expect("serializes")
}

pub fn qpt_cmd(cfg: &RunConfig, suite: bool, profile: &NoiseProfile) -> CliResult<Report> {
    let mut r = Report::new("qpt", "qpt", cfg);
    r.set("noise_profile", profile);
    let gates: Vec<GateSpec> = if suite {
        NamedGate::TOMOGRAPHY_SET.iter().map(|&g| g.into()).collect()
    } else {
        vec![cfg.gate]
    };
    let set: Vec<GateSpec> = NamedGate::TOMOGRAPHY_SET.iter().map(|&g| g.into()).collect();
    let inputs = input_states(&set);
    let readout = Readout::default();
    let mut rows = Vec::new();
    let mut total = 0.0;
    for (k, g) in gates.iter().enumerate() {
        let s = synthesize(g, cfg.scheme, &cfg.settings()).ctx("pulses")?;
        let sim = simulate_gate(&s, &Space::Electron, &cfg.integrator).ctx("gates")?;
        let chan = profile.channel(&sim.block);
        let seed = cfg.seed.wrapping_add(1000 * k as u64);
        let chi = qpt(&chan, &inputs, &readout, shots(cfg), seed).ctx("tomography")?;
        let ideal = ProcessMatrix::from_unitary(&target_unitary(g));
        let f = process_fidelity(&chi, &ideal);
        total += f;
        let label = gate_label(g);
        r.table(&format!("chi_{label}"), chi.export().bars());
        rows.push(json!({ "gate": g.to_string(), "fidelity": f, "chi": chi_json(&chi) }));
    }
    r.set("gates", rows);
    r.set("average_fidelity", total / gates.len() as f64);
    Ok(r)
}

/// ρ after `n` noisy C-Y applications to |+⟩_n|0⟩_e and the ideal output.
fn cy_series_states(cfg: &RunConfig, n_max: usize, depol: f64) -> CliResult<Vec<(CMatrix, Vec<C64>)>> {
    let p = cfg.params();
    let y: GateSpec = NamedGate::Y.into();
    let pair = cy_schedule(&p, &y, cfg.scheme, CY_RABI).ctx("gates")?;
    let u = simulate_cy(&p, &pair, &Perturbation::default(), &cfg.integrator).ctx("gates")?;
    let ideal = controlled_target(&y);
    let s = FRAC_1_SQRT_2;
    let mut psi = two_qubit_state(&[cr(s), cr(s)], &[cr(1.0), ZERO]);
    let mut rho = CMatrix::projector(&psi);
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        rho = depolarize(&(&(&u * &rho) * &u.adjoint()), depol);
        psi = ideal.mat_vec(&psi);
        out.push((rho.clone(), psi.clone()));
    }
    Ok(out)
}

pub fn qst_cmd(cfg: &RunConfig, applications: usize) -> CliResult<Report> {
    if applications == 0 {
        return Err(CliError::new("cli", "argument", "--applications must be >= 1"));
    }
    let depol = cfg.noise.depol_per_gate;
    let (rho, ideal) = cy_series_states(cfg, applications, depol)?.pop().expect("nonempty");
    let exp = measure_expectations(&rho, &Readout::default(), shots(cfg), cfg.seed, 0).ctx("tomography")?;
    let est = qst(&exp, 4).ctx("tomography")?;
    let ideal_rho = CMatrix::projector(&ideal);
    let mut r = Report::new("qst", "qst", cfg);
    r.set("applications", applications);
    r.set("state_fidelity", state_fidelity(&est.matrix, &ideal_rho).ctx("tomography")?);
    r.set("simulated_fidelity", state_fidelity(&rho, &ideal_rho).ctx("tomography")?);
    r.set("density", est.export());
    r.table("qst_density", est.export().bars());
    Ok(r)
}

pub fn decay_cmd(cfg: &RunConfig, n_max: usize, eps_if: f64, sigma: f64) -> CliResult<Report> {
    let mut series = repeat_gate_experiment(
        &cfg.gate,
        cfg.scheme,
        &cfg.settings(),
        &cfg.integrator,
        n_max,
        cfg.noise.depol_per_gate,
        eps_if,
    )
    .ctx("gates")?;
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).map_err(|e| CliError::new("cli", "argument", e.to_string()))?;
        let mut rng = stream_rng(cfg.seed, 0);
        for d in &mut series {
            d.fidelity += noise.sample(&mut rng);
        }
    }
    let fit = fit_single_decay(&series).ctx("gates")?;
    let mut r = Report::new("decay", "decay", cfg);
    r.set("eps_if_injected", eps_if);
    r.set("p_injected", cfg.noise.depol_per_gate);
    r.set("measurement_sigma", sigma);
    r.set("fit", &fit);
    r.table("decay_series", bnhqc::gates::decay_csv(&series));
    Ok(r)
}

pub struct MetrologyArgs {
    pub probe: ProbeScheme,
    pub backend: Backend,
    pub calibrated: bool,
    pub points: usize,
    pub shots: u64,
}

pub fn fringe(
    cfg: &RunConfig,
    probe: ProbeScheme,
    backend: Backend,
    noise: &NoiseModel,
    points: usize,
    shots: u64,
    seed: u64,
) -> CliResult<(bnhqc::metrology::InterferometerData, SensitivityReport)> {
    let mut icfg = InterferometerConfig::new(probe, shots, seed);
    icfg.phase_grid = default_phase_grid(points);
    let budget = TimingBudget::for_backend(backend);
    let data = run_interferometer(&icfg, backend, noise, &budget, &cfg.integrator).ctx("metrology")?;
    let label = match probe {
        ProbeScheme::Independent => "independent",
        ProbeScheme::Noon => "noon",
    };
    let rep = SensitivityReport::from_data(label, &data, &budget).ctx("metrology")?;
    Ok((data, rep))
}

pub fn metrology_cmd(cfg: &RunConfig, a: &MetrologyArgs) -> CliResult<Report> {
    let noise = if a.calibrated { calibrated_dephasing() } else { cfg.noise_model() };
    let (data, rep) = fringe(cfg, a.probe, a.backend, &noise, a.points, a.shots, cfg.seed)?;
    let phis: Vec<f64> = data.points.iter().map(|p| p.phi).collect();
    let ps: Vec<f64> = data.points.iter().map(|p| p.mean).collect();
    let mut r = Report::new("metrology", "metrology", cfg);
    r.set("probe", a.probe);
    r.set("backend", a.backend);
    r.set("dephasing_rate_e", noise.dephasing_rate_e);
    r.set("dephasing_rate_n", noise.dephasing_rate_n);
    r.set("shots_per_point", a.shots);
    r.set("fit", fit_fringe(&phis, &ps).ctx("metrology")?);
    r.set("sensitivity", &rep);
    r.table("metrology_fringe", data.to_csv());
    Ok(r)
}

pub fn scan_cmd(cfg: &RunConfig, gamma: Option<f64>, step_ns: f64, half_width: usize, epsilon: f64) -> CliResult<Report> {
    let gamma = gamma.unwrap_or_else(|| cfg.gate.angles().0);
    let omega = cfg.settings().bnhqc_rabi;
    let tm = tau_min(gamma, omega).ctx("pulses")?;
    let step = step_ns * 1e-3;
    if !(step > 0.0) {
        return Err(CliError::new("cli", "argument", "--step-ns must be > 0"));
    }
    let res = optimality_scan(gamma, omega, &ScanGrid::around(tm, step, half_width), epsilon).ctx("brachistochrone")?;
    let mut r = Report::new("scan", "scan", cfg);
    r.set("gamma", gamma);
    r.set("omega_rad_per_us", omega);
    r.set("epsilon", epsilon);
    r.set("step_us", step);
    r.set("tau_min_us", tm);
    r.set("tau_star_us", res.tau_star);
    r.table("scan_cells", res.to_csv());
    Ok(r)
}

/// C-Y repetition series (state fidelity per N) and its A·F_g^N + B fit.
pub fn cy_decay(cfg: &RunConfig, n_max: usize, depol: f64) -> CliResult<(Vec<DecayPoint>, bnhqc::gates::TwoQubitDecayFit)> {
    let states = cy_series_states(cfg, n_max, depol)?;
    let mut series = Vec::with_capacity(n_max);
    for (k, (rho, psi)) in states.iter().enumerate() {
        let f = state_fidelity(rho, &CMatrix::projector(psi)).ctx("tomography")?;
        series.push(DecayPoint { n: k + 1, fidelity: f });
    }
    let fit = fit_two_qubit_decay(&series).ctx("gates")?;
    Ok((series, fit))
}

pub fn decay_of(cfg: &RunConfig, g: NamedGate, n_max: usize, p: f64, eps_if: f64) -> CliResult<Vec<DecayPoint>> {
    repeat_gate_experiment(&g.into(), cfg.scheme, &cfg.settings(), &cfg.integrator, n_max, p, eps_if).ctx("gates")
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}
