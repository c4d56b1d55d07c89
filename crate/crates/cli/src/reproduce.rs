//! Dataset reproduction targets and the manifest saying which
//! numbers are expected to match and which depend on unstated conventions.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use bnhqc::evolve::{propagate_unitary, qubit_operator, Space, StepPolicy};
use bnhqc::gates::{decay_csv, fit_single_decay, gate_fidelity, synthesize, target_unitary, GateSpec, NamedGate, Scheme};
use bnhqc::metrology::{calibrated_dephasing, kappa, table_s1_reports, Backend, ProbeScheme};
use bnhqc::numerics::{cr, ZERO};
use bnhqc::pulses::{make_bnhqc, make_nhqc, tau_min};
use bnhqc::spinsys::basis;
use bnhqc::table::CsvTable;
use bnhqc::tomography::NoiseProfile;
use serde::Serialize;
use serde_json::json;

use crate::commands::{cy_decay, decay_of, fringe, mean, qpt_cmd};
use crate::config::RunConfig;
use crate::error::{CliResult, Context};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    Fig1b,
    Fig1d,
    Fig2a,
    Fig2c,
    Fig3,
    FigS3,
    TableS1Kappa,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Fig1b => "fig1b",
            Target::Fig1d => "fig1d",
            Target::Fig2a => "fig2a",
            Target::Fig2c => "fig2c",
            Target::Fig3 => "fig3",
            Target::FigS3 => "fig-s3",
            Target::TableS1Kappa => "table-s1-kappa",
        }
    }
}

/// How a computed quantity relates to the reported one.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Follows from the model alone and should agree.
    Match,
    /// Computed value is asserted to lie within a stated window.
    Bracket,
    /// Depends on pulse or timing conventions that are not pinned down.
    ConventionSensitive,
    /// The reported value is an input; the target checks the round trip.
    CalibratedInput,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Expectation {
    pub quantity: &'static str,
    pub reported: &'static str,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ManifestEntry {
    pub target: &'static str,
    pub description: &'static str,
    pub csv: &'static [&'static str],
    pub expectations: &'static [Expectation],
}

const fn ex(quantity: &'static str, reported: &'static str, status: Status) -> Expectation {
    Expectation {
        quantity,
        reported,
        status,
    }
}

pub const MANIFEST: [ManifestEntry; 7] = [
    ManifestEntry {
        target: "fig1b",
        description: "Gate time vs rotation angle for R(z, θ), θ ∈ [0, π]: constant-time NHQC loop vs time-optimal ramp",
        csv: &["fig1b"],
        expectations: &[
            ex("tau_bnhqc = 2√(π² − (π − θ)²)/Ω", "closed form", Status::Match),
            ex("mean reduction over θ = π/8, π/4, π", "74.9%", Status::ConventionSensitive),
        ],
    },
    ManifestEntry {
        target: "fig1d",
        description: "Populations during T = R(z, π/4) from (|0⟩ + |1⟩)/√2 under both schemes",
        csv: &["fig1d_bnhqc", "fig1d_nhqc"],
        expectations: &[
            ex("final state equals T|+⟩", "exact", Status::Match),
            ex("time saved", "191.1 ns (75.4%)", Status::ConventionSensitive),
        ],
    },
    ManifestEntry {
        target: "fig2a",
        description: "Fidelity decay of repeated X and Y gates with per-gate depolarizing error and SPAM",
        csv: &["fig2a_X", "fig2a_Y"],
        expectations: &[
            ex("F_X = 1 − p_X", "0.9922(4)", Status::CalibratedInput),
            ex("F_Y = 1 − p_Y", "0.9923(4)", Status::CalibratedInput),
        ],
    },
    ManifestEntry {
        target: "fig2c",
        description: "Two-qubit state fidelity after N C-Y applications to |+⟩|0⟩, fitted to A·F_g^N + B",
        csv: &["fig2c"],
        expectations: &[ex("F_g", "0.965(4)", Status::CalibratedInput)],
    },
    ManifestEntry {
        target: "fig3",
        description: "Interferometer fringes (φ, mean, σ) for independent and NOON probes with NHQC and B-NHQC gates",
        csv: &[
            "fig3_independent_nhqc",
            "fig3_noon_nhqc",
            "fig3_independent_bnhqc",
            "fig3_noon_bnhqc",
        ],
        expectations: &[
            ex("NOON visibility NHQC / B-NHQC", "0.90 / 0.97", Status::CalibratedInput),
            ex("Δφ_min(single)/Δφ_min(NOON) NHQC", "1.93(1)", Status::Bracket),
            ex("Δφ_min(single)/Δφ_min(NOON) B-NHQC", "1.99(1)", Status::Bracket),
        ],
    },
    ManifestEntry {
        target: "fig-s3",
        description: "Process tomography χ bars for {I, X/2, X, Y/2, Y, T} with calibrated SPAM and gate noise",
        csv: &["chi_I", "chi_X_2", "chi_X", "chi_Y_2", "chi_Y", "chi_T"],
        expectations: &[
            ex("average process fidelity", "0.984(2)", Status::Bracket),
            ex("per-gate fidelities", "0.988, 0.981, 0.982, 0.981, 0.987, 0.983", Status::ConventionSensitive),
        ],
    },
    ManifestEntry {
        target: "table-s1-kappa",
        description: "Sensitivity enhancement κ and total-time ratio from the tabulated σ, V and timings",
        csv: &[],
        expectations: &[
            ex("κ", "2.9", Status::Bracket),
            ex("T_t,NHQC / T_t,B-NHQC", "3.5", Status::ConventionSensitive),
        ],
    },
];

pub fn manifest_entry(t: Target) -> &'static ManifestEntry {
    MANIFEST.iter().find(|e| e.target == t.name()).expect("every target has an entry")
}

pub fn run(cfg: &RunConfig, target: Target) -> CliResult<Report> {
    let name = format!("reproduce-{}", target.name());
    let mut r = Report::new(&name, &format!("reproduce {}", target.name()), cfg);
    r.set("manifest", manifest_entry(target));
    match target {
        Target::Fig1b => fig1b(cfg, &mut r)?,
        Target::Fig1d => fig1d(cfg, &mut r)?,
        Target::Fig2a => fig2a(cfg, &mut r)?,
        Target::Fig2c => fig2c(cfg, &mut r)?,
        Target::Fig3 => fig3(cfg, &mut r)?,
        Target::FigS3 => fig_s3(cfg, &mut r)?,
        Target::TableS1Kappa => table_s1_kappa(&mut r)?,
    }
    Ok(r)
}

fn fig1b(cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let settings = cfg.settings();
    let omega = settings.bnhqc_rabi;
    let n = 41;
    let mut t = CsvTable::new(&["theta", "tau_nhqc_us", "tau_bnhqc_us", "tau_min_us"]);
    for k in 0..n {
        let theta = PI * k as f64 / (n - 1) as f64;
        let tn = make_nhqc(theta, 0.0, 0.0, settings.nhqc_envelope).ctx("pulses")?.duration();
        let tb = make_bnhqc(theta, 0.0, 0.0, omega).ctx("pulses")?.duration();
        let tm = if theta > 0.0 { tau_min(theta, omega).ctx("pulses")? } else { 0.0 };
        t.push_nums(&[theta, tn, tb, tm]);
    }
    r.table("fig1b", t);
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for theta in [FRAC_PI_8, FRAC_PI_4, PI] {
        let tn = make_nhqc(theta, 0.0, 0.0, settings.nhqc_envelope).ctx("pulses")?.duration();
        let tb = make_bnhqc(theta, 0.0, 0.0, omega).ctx("pulses")?.duration();
        ratios.push(tb / tn);
        rows.push(json!({ "theta": theta, "tau_nhqc_us": tn, "tau_bnhqc_us": tb }));
    }
    r.set("fig1c", rows);
    r.set("mean_ratio", mean(&ratios));
    r.set("mean_reduction_percent", 100.0 * (1.0 - mean(&ratios)));
    r.set("reported_reduction_percent", 74.9);
    Ok(())
}

fn fig1d(cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let g: GateSpec = NamedGate::T.into();
    let policy = StepPolicy {
        record_every: 1,
        ..cfg.integrator
    };
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = vec![ZERO; 3];
    psi[basis::QUBIT[0]] = cr(s2);
    psi[basis::QUBIT[1]] = cr(s2);
    let mut durations = Vec::new();
    for (scheme, label) in [(Scheme::Bnhqc, "bnhqc"), (Scheme::Nhqc, "nhqc")] {
        let s = synthesize(&g, scheme, &cfg.settings()).ctx("pulses")?;
        let tr = propagate_unitary(&s, &Space::Electron, &policy).ctx("evolve")?;
        r.table(&format!("fig1d_{label}"), tr.to_csv(Some(&psi)).ctx("evolve")?);
        let block = qubit_operator(&Space::Electron, &s.frame(), tr.final_state());
        r.set(&format!("gate_fidelity_{label}"), gate_fidelity(&block, &target_unitary(&g)));
        durations.push(s.duration());
    }
    let saved = durations[1] - durations[0];
    r.set("duration_bnhqc_us", durations[0]);
    r.set("duration_nhqc_us", durations[1]);
    r.set("saved_ns", saved * 1e3);
    r.set("saved_percent", 100.0 * saved / durations[1]);
    r.set("reported_saved_ns", 191.1);
    r.set("reported_saved_percent", 75.4);
    Ok(())
}

fn fig2a(cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let eps_if = 0.02;
    let mut fits = Vec::new();
    for (g, p, label) in [(NamedGate::X, 0.0078, "X"), (NamedGate::Y, 0.0077, "Y")] {
        let series = decay_of(cfg, g, 32, p, eps_if)?;
        let fit = fit_single_decay(&series).ctx("gates")?;
        fits.push(json!({ "gate": label, "p_injected": p, "eps_if_injected": eps_if, "fit": fit, "fidelity": 1.0 - fit.p }));
        r.table(&format!("fig2a_{label}"), decay_csv(&series));
    }
    r.set("fits", fits);
    Ok(())
}

fn fig2c(cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let depol = 0.035;
    let (series, fit) = cy_decay(cfg, 10, depol)?;
    r.set("depol_per_cy_injected", depol);
    r.set("fit", &fit);
    r.set("reported_f_g", 0.965);
    r.table("fig2c", decay_csv(&series));
    Ok(())
}

fn fig3(cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let shots = cfg.shots.unwrap_or(1_000_000);
    let noise = calibrated_dephasing();
    let mut rows = Vec::new();
    for (k, backend) in [Backend::Nhqc, Backend::Bnhqc].into_iter().enumerate() {
        let mut reports = Vec::new();
        for (j, probe) in [ProbeScheme::Independent, ProbeScheme::Noon].into_iter().enumerate() {
            let seed = cfg.seed.wrapping_add((2 * k + j) as u64);
            let (data, rep) = fringe(cfg, probe, backend, &noise, 21, shots, seed)?;
            let stem = format!(
                "fig3_{}_{}",
                serde_json::to_value(probe).expect("enum").as_str().expect("str"),
                serde_json::to_value(backend).expect("enum").as_str().expect("str"),
            );
            r.table(&stem, data.to_csv());
            reports.push(rep);
        }
        let ratio = reports[0].delta_phi_min / reports[1].delta_phi_min;
        rows.push(json!({
            "backend": backend,
            "independent": reports[0],
            "noon": reports[1],
            "hql_ratio": ratio,
        }));
    }
    r.set("shots_per_point", shots);
    r.set("dephasing", noise);
    r.set("backends", rows);
    r.set("reported_hql_ratio", json!({ "nhqc": 1.93, "bnhqc": 1.99 }));
    Ok(())
}

fn fig_s3(cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let mut c = cfg.clone();
    c.scheme = Scheme::Bnhqc;
    // Finite sampling gives the per-gate spread; exact expectations would
    // put every gate on the calibration target.
    c.shots = Some(c.shots.unwrap_or(10_000));
    let inner = qpt_cmd(&c, true, &NoiseProfile::default())?;
    for key in ["gates", "average_fidelity", "noise_profile"] {
        r.set(key, inner.result(key).cloned());
    }
    r.take_tables(inner);
    r.set("reported_average_fidelity", 0.984);
    r.set("reported_fidelities", [0.988, 0.981, 0.982, 0.981, 0.987, 0.983]);
    Ok(())
}

fn table_s1_kappa(r: &mut Report) -> CliResult<()> {
    let (nhqc, bnhqc) = table_s1_reports();
    r.set("kappa", kappa(&nhqc, &bnhqc).ctx("metrology")?);
    r.set("reported_kappa", 2.9);
    r.set("time_ratio", nhqc.t_total_us / bnhqc.t_total_us);
    r.set("reported_time_ratio", 3.5);
    r.set("nhqc", &nhqc);
    r.set("bnhqc", &bnhqc);
    Ok(())
}
