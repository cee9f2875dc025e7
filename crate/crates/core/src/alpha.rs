//! The kernel exponent parameter alpha.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// alpha in [0, 1); the kernel exponent is (3 + alpha)/2 and the linear
/// symbol is |k|^{1+alpha}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlphaParams {
    alpha: f64,
}

impl AlphaParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(CoreError::OutOfRange(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        Ok(AlphaParams { alpha })
    }

    pub fn value(&self) -> f64 {
        self.alpha
    }

    /// Kernel exponent (3 + alpha)/2.
    pub fn kernel_exponent(&self) -> f64 {
        (3.0 + self.alpha) / 2.0
    }

    /// Order of the linear dissipation Lambda^{1+alpha}.
    pub fn dissipation_order(&self) -> f64 {
        1.0 + self.alpha
    }

    /// Global-existence results require alpha in [0, 1/2).
    pub fn require_global_regime(&self) -> Result<()> {
        if self.alpha >= 0.5 {
            return Err(CoreError::OutOfRange(format!(
                "alpha must be < 0.5 for the global-existence regime, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(AlphaParams::new(0.0).is_ok());
        assert!(AlphaParams::new(0.999).is_ok());
        assert!(AlphaParams::new(1.0).is_err());
        assert!(AlphaParams::new(-0.01).is_err());
        assert!(AlphaParams::new(f64::NAN).is_err());
        assert!(AlphaParams::new(0.45).unwrap().require_global_regime().is_ok());
        assert!(AlphaParams::new(0.5).unwrap().require_global_regime().is_err());
    }
}
