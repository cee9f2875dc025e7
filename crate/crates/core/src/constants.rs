//! Named constants of the analysis: C(alpha), k0(alpha), mu(alpha),
//! the gradient threshold, and the decay-envelope constants.

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaParams;
use crate::error::{CoreError, Result};
use crate::special::weighted_series;

/// PV bound constant: pi at alpha = 0, else 6/(1-alpha).
pub fn c_alpha(alpha: f64) -> Result<f64> {
    AlphaParams::new(alpha)?;
    if alpha == 0.0 {
        Ok(std::f64::consts::PI)
    } else {
        Ok(6.0 / (1.0 - alpha))
    }
}

/// Smallness threshold k0(alpha): the unique root in (0, 1) of
/// 2 C(alpha) sum_{n>=1} a_n (2n+1)^2 z^{2n} = 1, by bisection to 1e-12.
///
/// Defined for alpha = 0 and alpha in (0, 1/2) (the global-existence regime).
pub fn k0_of_alpha(alpha: f64) -> Result<f64> {
    let a = AlphaParams::new(alpha)?;
    a.require_global_regime()?;
    let c = c_alpha(alpha)?;
    let g = |z: f64| 2.0 * c * weighted_series(z, alpha).unwrap() - 1.0;
    let mut lo = 0.0;
    let mut hi = 1.0 - 1e-9;
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(CoreError::Bracketing(format!(
            "no sign change for k0 at alpha = {alpha}"
        )));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dissipation margin mu = 1 - 2 C(alpha) sum a_n (2n+1)^2 z^{2n},
/// evaluated at the run's actual ||f0||_1 rather than at k0.
pub fn mu_of(alpha: f64, f1_norm: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&f1_norm) {
        return Err(CoreError::OutOfRange(format!(
            "mu requires 0 <= ||f0||_1 < 1, got {f1_norm}"
        )));
    }
    Ok(1.0 - 2.0 * c_alpha(alpha)? * weighted_series(f1_norm, alpha)?)
}

/// Gradient smallness threshold sqrt((1+alpha-eps)/(5+alpha+eps)).
pub fn grad_threshold(alpha: f64, eps: f64) -> Result<f64> {
    AlphaParams::new(alpha)?;
    if !(eps > 0.0 && eps < 1.0 + alpha) {
        return Err(CoreError::OutOfRange(format!(
            "eps must lie in (0, 1+alpha), got {eps}"
        )));
    }
    Ok(((1.0 + alpha - eps) / (5.0 + alpha + eps)).sqrt())
}

/// L-infinity decay constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    /// C-tilde = pi / (2 [1 + 2 ||f0||_L1 / pi + 4 ||f0||_Linf^3]^{(3+alpha)/2})
    pub c_tilde: f64,
    /// C = (1+alpha)/2 ||f0||_Linf^{(1+alpha)/2} C-tilde; the envelope reads
    /// ||f||_Linf(t) <= ||f0||_Linf (1 + C t)^{-2/(1+alpha)}
    pub c_decay: f64,
}

pub fn decay_constants(alpha: f64, linf0: f64, l1_0: f64) -> Result<DecayConstants> {
    AlphaParams::new(alpha)?;
    if !(linf0 > 0.0) || !(l1_0 >= 0.0) {
        return Err(CoreError::OutOfRange(format!(
            "decay constants need ||f0||_Linf > 0 and ||f0||_L1 >= 0, got {linf0}, {l1_0}"
        )));
    }
    let base = 1.0 + 2.0 * l1_0 / std::f64::consts::PI + 4.0 * linf0.powi(3);
    let c_tilde = std::f64::consts::PI / (2.0 * base.powf((3.0 + alpha) / 2.0));
    let c_decay = (1.0 + alpha) / 2.0 * linf0.powf((1.0 + alpha) / 2.0) * c_tilde;
    Ok(DecayConstants { c_tilde, c_decay })
}

/// All named constants for a given alpha and initial-data norms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub alpha: f64,
    pub c_alpha: f64,
    /// None when alpha >= 1/2 (outside the global-existence regime).
    pub k0: Option<f64>,
    /// Dissipation margin at the actual ||f0||_1 (None if that norm >= 1).
    pub mu: Option<f64>,
    pub grad_threshold: f64,
    pub c_tilde: f64,
    pub c_decay: f64,
    /// The gradient-decay constant of the sharp theorem is data-dependent
    /// through M_T = sup_t ||grad f||_L1; it is reported per run.
    pub c_sharp_note: String,
}

impl ConstantsReport {
    pub fn build(alpha: f64, linf0: f64, l1_0: f64, f1_norm: f64, eps: f64) -> Result<Self> {
        let dc = decay_constants(alpha, linf0, l1_0)?;
        let k0 = k0_of_alpha(alpha).ok();
        let mu = if f1_norm < 1.0 {
            Some(mu_of(alpha, f1_norm)?)
        } else {
            None
        };
        Ok(ConstantsReport {
            alpha,
            c_alpha: c_alpha(alpha)?,
            k0,
            mu,
            grad_threshold: grad_threshold(alpha, eps)?,
            c_tilde: dc.c_tilde,
            c_decay: dc.c_decay,
            c_sharp_note: "gradient-decay constant depends on the observed sup_t ||grad f||_L1 \
                           (M_T); reported per run"
                .to_string(),
        })
    }
}
