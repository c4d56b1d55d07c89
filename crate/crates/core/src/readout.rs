//! Photon-count readout: a state probability P maps to a detection rate
//! r = r₀(1 − C·P), sampled binomially and inverted back to P̂.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Readout {
    /// Signal contrast C between P = 0 and P = 1.
    pub contrast: f64,
    /// Detection probability per shot at P = 0.
    #[serde(default = "one")]
    pub collection: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Readout {
    fn default() -> Self {
        Readout {
            contrast: 0.27,
            collection: 1.0,
        }
    }
}

/// Exact expectation values or a finite number of shots per setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    Exact,
    Finite(u64),
}

impl Readout {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(Error::Argument(format!("contrast must lie in (0, 1], got {}", self.contrast)));
        }
        if !(self.collection > 0.0 && self.collection <= 1.0) {
            return Err(Error::Argument(format!(
                "collection must lie in (0, 1], got {}",
                self.collection
            )));
        }
        Ok(())
    }

    pub fn rate(&self, p: f64) -> f64 {
        self.collection * (1.0 - self.contrast * p.clamp(0.0, 1.0))
    }

    /// P̂ from `k` detections in `n` shots.
    pub fn invert(&self, k: u64, n: u64) -> f64 {
        (1.0 - k as f64 / (n as f64 * self.collection)) / self.contrast
    }

    /// Standard deviation of P̂ for `n` shots.
    pub fn sigma(&self, p: f64, n: u64) -> f64 {
        let r = self.rate(p);
        (r * (1.0 - r) / n as f64).sqrt() / (self.contrast * self.collection)
    }

    pub fn sample(&self, p: f64, n: u64, rng: &mut impl Rng) -> f64 {
        let k = Binomial::new(n, self.rate(p)).expect("rate in [0, 1]").sample(rng);
        self.invert(k, n)
    }

    /// Estimate of P under `shots`, using an independent stream per setting.
    pub fn estimate(&self, p: f64, shots: Shots, seed: u64, stream: u64) -> f64 {
        match shots {
            Shots::Exact => p,
            Shots::Finite(n) => self.sample(p, n, &mut stream_rng(seed, stream)),
        }
    }
}

/// ChaCha8 generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_passthrough() {
        assert_eq!(Readout::default().estimate(0.3, Shots::Exact, 1, 2), 0.3);
    }

    #[test]
    fn sampled_mean_and_spread() {
        let r = Readout::default();
        let mut rng = stream_rng(7, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..400).map(|_| r.sample(0.6, n, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let sigma = r.sigma(0.6, n);
        assert!((mean - 0.6).abs() < 4.0 * sigma / 20.0);
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.15);
    }

    #[test]
    fn streams_are_reproducible() {
        let r = Readout::default();
        assert_eq!(
            r.estimate(0.5, Shots::Finite(1000), 3, 9),
            r.estimate(0.5, Shots::Finite(1000), 3, 9)
        );
        assert_ne!(
            r.estimate(0.5, Shots::Finite(1000), 3, 9),
            r.estimate(0.5, Shots::Finite(1000), 3, 10)
        );
    }
}
