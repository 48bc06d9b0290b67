//! Heavy-tailed coefficient distributions.
//!
//! Draws use inverse-CDF transforms of uniforms from the crate's ChaCha
//! streams, so a given seed produces the same coefficients everywhere.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    /// Standard Cauchy, location 0 and scale 1.
    Cauchy,
    /// Standard Pareto magnitude (scale 1, shape `alpha`) with a fair random sign.
    SymmetricPareto { alpha: f64 },
    /// Always returns `value`; for tests.
    Constant { value: f64 },
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Cauchy => "cauchy",
            SamplerKind::SymmetricPareto { .. } => "symmetric_pareto",
            SamplerKind::Constant { .. } => "constant",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            SamplerKind::SymmetricPareto { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

/// Serializable sampler description, embedded in instance metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(flatten)]
    pub kind: SamplerKind,
    /// Rejection bound `B`: draws with `|value| > B` are redrawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

impl SamplerConfig {
    pub fn cauchy(truncation: Option<f64>) -> Self {
        Self {
            kind: SamplerKind::Cauchy,
            truncation,
        }
    }

    pub fn symmetric_pareto(alpha: f64, truncation: Option<f64>) -> Self {
        Self {
            kind: SamplerKind::SymmetricPareto { alpha },
            truncation,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: SamplerKind::Constant { value },
            truncation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.truncation {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "truncation bound must be positive, got {b}"
                )));
            }
        }
        match self.kind {
            SamplerKind::Cauchy => {}
            SamplerKind::SymmetricPareto { alpha } => {
                if !alpha.is_finite() || alpha <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "Pareto shape must be positive, got {alpha}"
                    )));
                }
                // magnitudes are ≥ 1, so a bound below 1 rejects everything
                if matches!(self.truncation, Some(b) if b < 1.0) {
                    return Err(Error::InvalidConfig(
                        "Pareto truncation bound must be at least 1".into(),
                    ));
                }
            }
            SamplerKind::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidConfig("constant must be finite".into()));
                }
                if matches!(self.truncation, Some(b) if value.abs() > b) {
                    return Err(Error::InvalidConfig(
                        "constant lies outside the truncation bound".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn build(self, seed: u64) -> Result<CoefficientSampler> {
        CoefficientSampler::new(self, seed)
    }
}

/// Stateful sampler: a configuration plus its own random stream.
#[derive(Debug, Clone)]
pub struct CoefficientSampler {
    config: SamplerConfig,
    rng: Rng,
}

impl CoefficientSampler {
    pub fn new(config: SamplerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rng: rng::stream(seed, 0xC0EF),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    fn draw_untruncated(&mut self) -> f64 {
        match self.config.kind {
            SamplerKind::Cauchy => {
                // open interval keeps tan() finite
                let u: f64 = self.rng.random_range(f64::EPSILON..1.0);
                (PI * (u - 0.5)).tan()
            }
            SamplerKind::SymmetricPareto { alpha } => {
                let u: f64 = self.rng.random_range(f64::EPSILON..=1.0);
                let magnitude = u.powf(-1.0 / alpha);
                if self.rng.random_bool(0.5) {
                    -magnitude
                } else {
                    magnitude
                }
            }
            SamplerKind::Constant { value } => value,
        }
    }

    pub fn sample(&mut self) -> f64 {
        match self.config.truncation {
            None => self.draw_untruncated(),
            Some(bound) => loop {
                let v = self.draw_untruncated();
                if v.abs() <= bound {
                    break v;
                }
            },
        }
    }
}
