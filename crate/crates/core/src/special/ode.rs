//! Explicit solution of the hypergeometric ODE
//! (1 + z^2) g'(z) - (3 + alpha) z g(z) = (3 + alpha) z^2, g(0) = 0.

use crate::error::Result;
use crate::special::hyp2f1::hyp2f1;

/// g(z) = (3+alpha) z^3 (1+z^2)^{(3+alpha)/2} / 3 * 2F1(3/2, (alpha+5)/2; 5/2; -z^2).
pub fn ode_solution_g(z: f64, alpha: f64) -> Result<f64> {
    crate::alpha::AlphaParams::new(alpha)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    let p = (3.0 + alpha) / 2.0;
    let f = hyp2f1(1.5, (alpha + 5.0) / 2.0, 2.5, -z * z)?;
    Ok((3.0 + alpha) * z.powi(3) * (1.0 + z * z).powf(p) / 3.0 * f)
}

/// H(z) = g(z) / (1+z^2)^{(3+alpha)/2}; satisfies
/// H'(z) = (3+alpha) z^2 (1+z^2)^{-(5+alpha)/2}.
pub fn ode_ratio_h(z: f64, alpha: f64) -> Result<f64> {
    let p = (3.0 + alpha) / 2.0;
    Ok(ode_solution_g(z, alpha)? / (1.0 + z * z).powf(p))
}

/// Residual of the ODE at z under a centered finite-difference derivative.
pub fn ode_residual(z: f64, alpha: f64, fd_step: f64) -> Result<f64> {
    let gp = (ode_solution_g(z + fd_step, alpha)? - ode_solution_g(z - fd_step, alpha)?)
        / (2.0 * fd_step);
    let g = ode_solution_g(z, alpha)?;
    Ok((1.0 + z * z) * gp - (3.0 + alpha) * z * g - (3.0 + alpha) * z * z)
}
