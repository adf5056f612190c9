//! Unit-mean small-scale fading power distributions.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::function::{erf::erfc, gamma::gamma_ur};

use crate::models::ModelError;
use crate::numerics::integrate_finite;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingModel {
    /// No fading, `h = 1`.
    Deterministic,
    /// Exponential power with unit mean.
    Rayleigh,
    /// Gamma power with shape `m` and scale `1/m`.
    Nakagami { m: f64 },
    /// Log-normal power with dB spread `sigma_db`, shifted to unit mean.
    LogNormal { sigma_db: f64 },
}

impl FadingModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            FadingModel::Nakagami { m } if !(m.is_finite() && m >= 0.5) => Err(
                ModelError::InvalidParameter(format!("nakagami m must be >= 0.5, got {m}")),
            ),
            FadingModel::LogNormal { sigma_db } if !(sigma_db.is_finite() && sigma_db >= 0.0) => {
                Err(ModelError::InvalidParameter(format!(
                    "log-normal sigma_db must be >= 0, got {sigma_db}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Natural-log standard deviation of a log-normal model.
    fn ln_sigma(sigma_db: f64) -> f64 {
        sigma_db * std::f64::consts::LN_10 / 10.0
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            FadingModel::Deterministic => 1.0,
            FadingModel::Rayleigh => 2.0,
            FadingModel::Nakagami { m } => 1.0 + 1.0 / m,
            FadingModel::LogNormal { sigma_db } => Self::ln_sigma(sigma_db).powi(2).exp(),
        }
    }

    /// `E[1 - e^(-s h)]` for `s >= 0`.
    pub fn laplace_complement(&self, s: f64) -> f64 {
        match *self {
            FadingModel::Deterministic => -(-s).exp_m1(),
            FadingModel::Rayleigh => s / (1.0 + s),
            FadingModel::Nakagami { m } => -(-m * (s / m).ln_1p()).exp_m1(),
            FadingModel::LogNormal { sigma_db } => {
                let sigma = Self::ln_sigma(sigma_db);
                if sigma == 0.0 {
                    return -(-s).exp_m1();
                }
                let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
                let f = |z: f64| {
                    let h = (sigma * z - 0.5 * sigma * sigma).exp();
                    norm * (-0.5 * z * z).exp() * -(-s * h).exp_m1()
                };
                integrate_finite(f, -12.0, 12.0, 1e-10, 1e-300, 200)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// `P(h >= x)`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            FadingModel::Deterministic => {
                if x <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FadingModel::Rayleigh => (-x).exp(),
            FadingModel::Nakagami { m } => gamma_ur(m, m * x),
            FadingModel::LogNormal { sigma_db } => {
                let sigma = Self::ln_sigma(sigma_db);
                if sigma == 0.0 {
                    return if x <= 1.0 { 1.0 } else { 0.0 };
                }
                0.5 * erfc((x.ln() + 0.5 * sigma * sigma) / (sigma * std::f64::consts::SQRT_2))
            }
        }
    }

    /// Prebuilt sampler; construct once per worker.
    pub fn sampler(&self) -> FadingSampler {
        match *self {
            FadingModel::Deterministic => FadingSampler::One,
            FadingModel::Rayleigh => FadingSampler::Exp,
            FadingModel::Nakagami { m } => {
                FadingSampler::Gamma(Gamma::new(m, 1.0 / m).expect("validated nakagami m"))
            }
            FadingModel::LogNormal { sigma_db } => {
                let sigma = Self::ln_sigma(sigma_db);
                FadingSampler::LogNormal(
                    LogNormal::new(-0.5 * sigma * sigma, sigma).expect("validated sigma"),
                )
            }
        }
    }

    /// One power sample. Prefer [`sampler`](Self::sampler) in loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    pub fn label(&self) -> String {
        match *self {
            FadingModel::Deterministic => "Deterministic".into(),
            FadingModel::Rayleigh => "Rayleigh".into(),
            FadingModel::Nakagami { m } => format!("Nakagami{{m={m}}}"),
            FadingModel::LogNormal { sigma_db } => format!("LogNormal{{sigma_db={sigma_db}}}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    One,
    Exp,
    Gamma(Gamma<f64>),
    LogNormal(LogNormal<f64>),
}

impl FadingSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::One => 1.0,
            FadingSampler::Exp => Exp1.sample(rng),
            FadingSampler::Gamma(g) => g.sample(rng),
            FadingSampler::LogNormal(l) => l.sample(rng),
        }
    }
}
