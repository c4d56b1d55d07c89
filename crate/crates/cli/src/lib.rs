//! `bnhqc` command-line front end: config parsing, command dispatch and
//! report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod reproduce;

use std::ffi::OsString;
use std::path::PathBuf;

use bnhqc::metrology::{Backend, ProbeScheme};
use clap::{Parser, Subcommand};

use crate::commands::{InputState, MetrologyArgs, SpaceArg};
use crate::config::{Format, Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::Report;
use crate::reproduce::Target;

#[derive(Debug, Parser)]
#[command(name = "bnhqc", version, about = "Time-optimal nonadiabatic holonomic gates on an NV center")]
pub struct Cli {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    rabi_mhz: Option<f64>,
    /// bnhqc | nhqc
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Named gate (I, X/2, X, Y/2, Y, T, Z) or (gamma=..,theta=..,phi=..).
    #[arg(long, global = true)]
    gate: Option<String>,
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the pulse schedule for the configured gate.
    Synth {
        /// Samples per µs in the exported waveform.
        #[arg(long, default_value_t = 1000.0)]
        sample_rate: f64,
    },
    /// Propagate the schedule and report fidelity, leakage and populations.
    Evolve {
        #[arg(long, value_enum, default_value = "electron")]
        space: SpaceArg,
        #[arg(long, value_enum, default_value = "plus")]
        input: InputState,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
    },
    /// Simulated process tomography.
    Qpt {
        /// Run the six-gate tomography set instead of the configured gate.
        #[arg(long)]
        suite: bool,
        #[arg(long)]
        noiseless: bool,
        /// Target average fidelity used to calibrate SPAM.
        #[arg(long, default_value_t = 0.984)]
        target: f64,
        #[arg(long, default_value_t = 0.0078)]
        gate_depol: f64,
    },
    /// State tomography after repeated C-Y on |+⟩|0⟩.
    Qst {
        #[arg(long, default_value_t = 1)]
        applications: usize,
    },
    /// Repeated-gate fidelity decay and fit.
    Decay {
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        #[arg(long, default_value_t = 0.02)]
        eps_if: f64,
        /// Gaussian noise added to each fidelity point.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Ramsey/NOON interferometer fringe and sensitivity.
    Metrology {
        #[arg(long, default_value = "noon")]
        probe: ProbeScheme,
        #[arg(long, default_value = "bnhqc")]
        backend: Backend,
        /// Use the calibrated dephasing rates instead of the config noise.
        #[arg(long)]
        calibrated: bool,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Brute-force gate-time scan around τ_min.
    Scan {
        /// Rotation angle γ; defaults to the configured gate's.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        step_ns: f64,
        #[arg(long, default_value_t = 20)]
        half_width: usize,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Regenerate a figure or table dataset.
    Reproduce {
        #[arg(value_enum, required_unless_present = "list")]
        target: Option<Target>,
        /// Print the manifest of targets and expected values.
        #[arg(long)]
        list: bool,
    },
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> CliResult<Option<Report>> {
    let report = match &cli.command {
        Command::Synth { sample_rate } => commands::synth(cfg, *sample_rate)?,
        Command::Evolve {
            space,
            input,
            record_every,
        } => commands::evolve(cfg, *space, *input, *record_every)?,
        Command::Qpt {
            suite,
            noiseless,
            target,
            gate_depol,
        } => commands::qpt_cmd(cfg, *suite, &commands::profile_from(*noiseless, *target, *gate_depol)?)?,
        Command::Qst { applications } => commands::qst_cmd(cfg, *applications)?,
        Command::Decay { n_max, eps_if, sigma } => commands::decay_cmd(cfg, *n_max, *eps_if, *sigma)?,
        Command::Metrology {
            probe,
            backend,
            calibrated,
            points,
        } => commands::metrology_cmd(
            cfg,
            &MetrologyArgs {
                probe: *probe,
                backend: *backend,
                calibrated: *calibrated,
                points: *points,
                shots: cfg.shots.unwrap_or(100_000),
            },
        )?,
        Command::Scan {
            gamma,
            step_ns,
            half_width,
            epsilon,
        } => commands::scan_cmd(cfg, *gamma, *step_ns, *half_width, *epsilon)?,
        Command::Reproduce { target, list } => {
            if *list {
                println!("{}", serde_json::to_string_pretty(&reproduce::MANIFEST).expect("json"));
                return Ok(None);
            }
            reproduce::run(cfg, target.expect("clap enforces a target"))?
        }
    };
    Ok(Some(report))
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("cli", "argument", e.to_string()))?;
    }
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        format: cli.format,
        rabi_mhz: cli.rabi_mhz,
        scheme: cli.scheme.clone(),
        gate: cli.gate.clone(),
        shots: cli.shots,
    };
    let cfg = config::parse_config(cli.config.as_deref(), &overrides)?;
    if let Some(report) = dispatch(cli, &cfg)? {
        for path in report.write(&cfg.output.dir, cfg.output.format)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code: 0 on success, 2 on any
/// error (reported as one JSON object on stderr).
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", CliError::new("cli", "argument", e.to_string().trim_end()).to_json());
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            2
        }
    }
}
