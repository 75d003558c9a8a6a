use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Privacy level (epsilon in nats, delta), integer l1 sensitivity and query dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity: u32,
    pub dims: u32,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, sensitivity: u32, dims: u32) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            sensitivity,
            dims,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn one_dim(epsilon: f64, delta: f64, sensitivity: u32) -> Result<Self> {
        Self::new(epsilon, delta, sensitivity, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.sensitivity == 0 {
            return Err(Error::InvalidParams("sensitivity must be >= 1".into()));
        }
        if self.dims == 0 {
            return Err(Error::InvalidParams("dims must be >= 1".into()));
        }
        Ok(())
    }

    /// Validation plus the requirement that some privacy is given up.
    pub fn validate_nontrivial(&self) -> Result<()> {
        self.validate()?;
        if self.epsilon == 0.0 && self.delta == 0.0 {
            return Err(Error::ZeroPrivacy);
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.epsilon.max(self.delta)
    }
}
