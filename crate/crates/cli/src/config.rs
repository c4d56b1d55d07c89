//! Strict JSON run configuration. Frequencies are cyclic MHz on input and
//! converted to rad/µs once, here.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use bnhqc::evolve::{NoiseModel, StepPolicy};
use bnhqc::gates::{GateSettings, GateSpec, NamedGate, Scheme};
use bnhqc::pulses::NhqcEnvelope;
use bnhqc::spinsys::{SpinSystemConfig, SpinSystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[serde(alias = "json-only")]
    #[value(alias = "json-only")]
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            format: Format::Both,
        }
    }
}

/// Noise settings in lab units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Quasi-static detuning spread, MHz.
    pub detuning_sigma_mhz: f64,
    pub amplitude_rel_sigma: f64,
    /// Lindblad dephasing rates, 1/µs.
    pub dephasing_rate_e_per_us: f64,
    pub dephasing_rate_n_per_us: f64,
    pub depol_per_gate: f64,
}

impl NoiseConfig {
    pub fn model(&self) -> NoiseModel {
        NoiseModel {
            detuning_sigma: TAU * self.detuning_sigma_mhz,
            amplitude_rel_sigma: self.amplitude_rel_sigma,
            dephasing_rate_e: self.dephasing_rate_e_per_us,
            dephasing_rate_n: self.dephasing_rate_n_per_us,
            depol_per_gate: self.depol_per_gate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SpinSystemConfig,
    pub scheme: Scheme,
    pub gate: GateSpec,
    /// Constant Rabi frequency of the time-optimal ramp, MHz.
    pub rabi_mhz: f64,
    /// Peak of the truncated-Gaussian NHQC envelope, MHz.
    pub nhqc_peak_mhz: f64,
    pub noise: NoiseConfig,
    pub integrator: StepPolicy,
    /// Shots per measurement setting; absent means exact expectations.
    pub shots: Option<u64>,
    /// Quasi-static Monte Carlo draws.
    pub mc_shots: usize,
    pub seed: u64,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SpinSystemConfig::default(),
            scheme: Scheme::Bnhqc,
            gate: GateSpec::Named(NamedGate::T),
            rabi_mhz: 12.5,
            nhqc_peak_mhz: 12.76,
            noise: NoiseConfig::default(),
            integrator: StepPolicy::default(),
            shots: None,
            mc_shots: 1000,
            seed: 0,
            output: OutputConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub rabi_mhz: Option<f64>,
    pub scheme: Option<String>,
    pub gate: Option<String>,
    pub shots: Option<u64>,
}

fn schema(message: String) -> CliError {
    CliError::new("config", "schema", message)
}

impl RunConfig {
    pub fn params(&self) -> SpinSystemParams {
        SpinSystemParams::try_from(self.system).expect("validated")
    }

    pub fn settings(&self) -> GateSettings {
        GateSettings {
            bnhqc_rabi: TAU * self.rabi_mhz,
            nhqc_envelope: NhqcEnvelope::TruncatedGaussian {
                peak_rad_per_us: TAU * self.nhqc_peak_mhz,
                baseline_subtract: true,
            },
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.model()
    }

    pub fn validate(&self) -> CliResult<()> {
        SpinSystemParams::try_from(self.system).map_err(|m| schema(format!("system: {m}")))?;
        for (key, v) in [("rabi_mhz", self.rabi_mhz), ("nhqc_peak_mhz", self.nhqc_peak_mhz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(schema(format!("{key}: expected a number > 0, got {v}")));
            }
        }
        if let GateSpec::Angles { gamma, theta, phi } = self.gate {
            if ![gamma, theta, phi].iter().all(|x| x.is_finite()) {
                return Err(schema("gate: angles must be finite".into()));
            }
        }
        self.noise_model()
            .validate()
            .map_err(|e| schema(format!("noise: {e}")))?;
        self.integrator
            .validate()
            .map_err(|e| schema(format!("integrator: {e}")))?;
        if self.shots == Some(0) {
            return Err(schema("shots: expected an integer >= 1 or null".into()));
        }
        if self.mc_shots == 0 {
            return Err(schema("mc_shots: expected an integer >= 1".into()));
        }
        Ok(())
    }

    fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(r) = o.rabi_mhz {
            self.rabi_mhz = r;
        }
        if let Some(s) = &o.scheme {
            self.scheme = s.parse().ctx("config")?;
        }
        if let Some(g) = &o.gate {
            self.gate = g.parse().ctx("config")?;
        }
        if let Some(n) = o.shots {
            self.shots = Some(n);
        }
        Ok(())
    }
}

pub fn parse_str(json: &str) -> CliResult<RunConfig> {
    serde_json::from_str(json).map_err(|e| schema(e.to_string()))
}

/// Reads the file (if any), applies overrides and validates.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => parse_str(&fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
        None => RunConfig::default(),
    };
    cfg.apply(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}
