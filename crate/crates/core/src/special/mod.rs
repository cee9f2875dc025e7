//! Special functions and series machinery: Gamma-ratio coefficients,
//! the kernel nonlinearity R_alpha, the closed-form weighted series,
//! 2F1, the ODE-lemma solution, and the principal-value integral.

pub mod gamma;
pub mod hyp2f1;
pub mod ode;
pub mod pv;
pub mod series;

pub use gamma::{gamma_pos, ln_gamma};
pub use hyp2f1::hyp2f1;
pub use ode::{ode_ratio_h, ode_residual, ode_solution_g};
pub use pv::pv_exp_integral;
pub use series::{
    r_alpha, r_alpha_primitive, r_alpha_truncated, taylor_coeff, weighted_series,
    weighted_series_partial, CoeffTable,
};
