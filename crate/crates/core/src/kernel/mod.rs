//! Right-hand side of the contour equation by three cross-validating
//! evaluation methods, plus the pointwise inequality monitors.
//!
//! The evolution solved is dt f = -Lambda^{1+alpha} f - N_alpha(f), i.e.
//! the contour integral normalized by b(alpha) = 2^alpha Gamma((3+alpha)/2)
//! / (pi Gamma((1-alpha)/2)) so that its linearization is exactly
//! -Lambda^{1+alpha}. At alpha = 0 this is the familiar 1/(2 pi).

mod defect;
mod engines;
mod geometry;
mod monitors;
#[cfg(test)]
mod tests;

pub use geometry::QuadGeometry;
pub use monitors::KernelMonitors;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaParams;
use crate::error::{CoreError, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::special::{gamma_pos, CoeffTable};
use crate::spectral::{
    self, derivative_x, derivative_y, forward, gradient_of_spec, hessian_of_spec, inverse,
    upsample_spec, SpectralField,
};

use engines::{div_offsets, grad_offsets, DivOff, EngineFields, GradOff, STable};

/// Default near-block upsampling factor shared by the direct and series
/// methods (the split method takes it from its own parameter).
pub const DEFAULT_REFINE: usize = 3;

/// RHS evaluation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RhsMethod {
    /// Lattice quadrature of the original contour integrand.
    DirectQuadrature { cutoff_cells: usize },
    /// Exact spectral linear part plus quadrature of the regularized
    /// remainder kernel (divergence form).
    SplitSpectral { quad_refinement: usize },
    /// Exact linear part plus the R_alpha series truncated at n_max.
    SeriesTruncated { n_max: usize },
}

impl Default for RhsMethod {
    fn default() -> Self {
        RhsMethod::SplitSpectral {
            quad_refinement: DEFAULT_REFINE,
        }
    }
}

impl RhsMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RhsMethod::DirectQuadrature { .. } => "direct_quadrature",
            RhsMethod::SplitSpectral { .. } => "split_spectral",
            RhsMethod::SeriesTruncated { .. } => "series_truncated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RhsMethod::DirectQuadrature { cutoff_cells } if cutoff_cells < 1 => Err(
                CoreError::Config("cutoff_cells must be >= 1".to_string()),
            ),
            RhsMethod::SplitSpectral { quad_refinement }
                if quad_refinement < 1 || quad_refinement % 2 == 0 =>
            {
                Err(CoreError::Config(
                    "quad_refinement must be odd and >= 1".to_string(),
                ))
            }
            RhsMethod::SeriesTruncated { n_max } if n_max < 1 => {
                Err(CoreError::Config("n_max must be >= 1".to_string()))
            }
            _ => Ok(()),
        }
    }
}

/// Normalization constant b(alpha) of the contour integral under which the
/// linear part is exactly -Lambda^{1+alpha}.
pub fn contour_normalization(alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma_pos((3.0 + alpha) / 2.0)
        / (std::f64::consts::PI * gamma_pos((1.0 - alpha) / 2.0))
}

/// Dissipation symbol -|k|^{1+alpha} over the grid's FFT bins.
pub fn dissipation_symbol(grid: GridSpec, alpha: f64) -> Vec<f64> {
    let mut sym = vec![0.0; grid.len()];
    for m2 in 0..grid.ny {
        for m1 in 0..grid.nx {
            let (k1, k2) = grid.wavenumber(m1, m2);
            let kn2 = k1 * k1 + k2 * k2;
            if kn2 > 0.0 {
                sym[m2 * grid.nx + m1] = -kn2.powf((1.0 + alpha) / 2.0);
            }
        }
    }
    sym
}

/// One RHS evaluator: geometry, kernel tables and per-method data are
/// precomputed at construction and immutable afterwards.
pub struct RhsEvaluator {
    pub grid: GridSpec,
    pub alpha: AlphaParams,
    pub method: RhsMethod,
    geom: QuadGeometry,
    norm_const: f64,
    ball_pref: f64,
    lin_sym: Vec<f64>,
    grad_coarse: Vec<GradOff>,
    grad_fine: Vec<GradOff>,
    div_coarse: Vec<DivOff>,
    div_fine: Vec<DivOff>,
    stable: Option<STable>,
    series_coeffs: Option<Vec<f64>>,
    /// Spectral correction delta(k) for the direct method.
    defect_sym: Option<Vec<f64>>,
}

impl RhsEvaluator {
    /// Exact-geometry evaluator (full offset lattice); used by the oracles.
    pub fn new(grid: GridSpec, alpha: AlphaParams, method: RhsMethod) -> Result<Self> {
        Self::with_economy(grid, alpha, method, false)
    }

    /// `economy = true` samples the far field (beyond a 25-cell box) on 3x3
    /// blocks, cutting the quadrature cost ~4x; the time stepper uses this.
    pub fn with_economy(
        grid: GridSpec,
        alpha: AlphaParams,
        method: RhsMethod,
        economy: bool,
    ) -> Result<Self> {
        method.validate()?;
        let a = alpha.value();
        let refine = match method {
            RhsMethod::SplitSpectral { quad_refinement } => quad_refinement,
            _ => DEFAULT_REFINE,
        };
        let cutoff = match method {
            RhsMethod::DirectQuadrature { cutoff_cells } => cutoff_cells,
            _ => 1,
        };
        let geom = QuadGeometry::with_far_coarsening(grid, refine, cutoff, economy)?;
        let norm_const = contour_normalization(a);
        let ball_pref = engines::ball_prefactor(&geom, a);
        let lin_sym = dissipation_symbol(grid, a);

        let mut ev = RhsEvaluator {
            grid,
            alpha,
            method,
            norm_const,
            ball_pref,
            lin_sym,
            grad_coarse: Vec::new(),
            grad_fine: Vec::new(),
            div_coarse: Vec::new(),
            div_fine: Vec::new(),
            stable: None,
            series_coeffs: None,
            defect_sym: None,
            geom,
        };
        match method {
            RhsMethod::DirectQuadrature { .. } => {
                ev.grad_coarse = grad_offsets(&ev.geom, a, false);
                ev.grad_fine = grad_offsets(&ev.geom, a, true);
                let lsym = defect::linear_response_symbol(&ev.geom, a);
                let mut delta = vec![0.0; grid.len()];
                for m2 in 0..grid.ny {
                    for m1 in 0..grid.nx {
                        let i = m2 * grid.nx + m1;
                        if (m1 == 0 && m2 == 0) || m1 == grid.nx / 2 || m2 == grid.ny / 2 {
                            continue; // no correction on mean or Nyquist bins
                        }
                        delta[i] = ev.lin_sym[i] - norm_const * lsym[i];
                    }
                }
                ev.defect_sym = Some(delta);
            }
            RhsMethod::SplitSpectral { .. } => {
                ev.div_coarse = div_offsets(&ev.geom, a, false);
                ev.div_fine = div_offsets(&ev.geom, a, true);
                ev.stable = Some(STable::new(a));
            }
            RhsMethod::SeriesTruncated { n_max } => {
                ev.grad_coarse = grad_offsets(&ev.geom, a, false);
                ev.grad_fine = grad_offsets(&ev.geom, a, true);
                ev.series_coeffs = Some(CoeffTable::new(a, n_max)?.as_slice().to_vec());
            }
        }
        Ok(ev)
    }

    pub fn normalization(&self) -> f64 {
        self.norm_const
    }

    pub fn geometry(&self) -> &QuadGeometry {
        &self.geom
    }

    /// -|k|^{1+alpha} per FFT bin.
    pub fn linear_symbol(&self) -> &[f64] {
        &self.lin_sym
    }

    fn derived_fields(&self, spec: &SpectralField) -> DerivedFields {
        let (gx, gy) = gradient_of_spec(spec);
        let (fxx, fxy, fyy) = hessian_of_spec(spec);
        let (f_up, gx_up, gy_up) = if self.geom.refine == 1 {
            (None, None, None)
        } else {
            let s = self.geom.refine;
            (
                Some(inverse(&upsample_spec(spec, s))),
                Some(inverse(&upsample_spec(&forward_ref(&gx), s))),
                Some(inverse(&upsample_spec(&forward_ref(&gy), s))),
            )
        };
        DerivedFields {
            gx,
            gy,
            fxx,
            fxy,
            fyy,
            f_up,
            gx_up,
            gy_up,
        }
    }

    fn engine_fields<'a>(
        &self,
        f: &'a ScalarField,
        d: &'a DerivedFields,
    ) -> EngineFields<'a> {
        EngineFields {
            f,
            gx: &d.gx,
            gy: &d.gy,
            f_up: d.f_up.as_ref().unwrap_or(f),
            gx_up: d.gx_up.as_ref().unwrap_or(&d.gx),
            gy_up: d.gy_up.as_ref().unwrap_or(&d.gy),
            fxx: &d.fxx,
            fxy: &d.fxy,
            fyy: &d.fyy,
        }
    }

    /// Full right-hand side -Lambda^{1+alpha} f - N_alpha(f).
    pub fn rhs(&self, f: &ScalarField) -> Result<ScalarField> {
        f.validate_finite()?;
        let spec = forward(f)?;
        self.rhs_from_spec(f, &spec)
    }

    pub(crate) fn rhs_from_spec(
        &self,
        f: &ScalarField,
        spec: &SpectralField,
    ) -> Result<ScalarField> {
        let d = self.derived_fields(spec);
        let fields = self.engine_fields(f, &d);
        let a = self.alpha.value();
        let p = (3.0 + a) / 2.0;
        match self.method {
            RhsMethod::DirectQuadrature { .. } => {
                let full_weight = move |w: f64| {
                    if w < 1e-3 {
                        1.0 - p * w
                            * (1.0
                                - (p + 1.0) / 2.0 * w
                                    * (1.0 - (p + 2.0) / 3.0 * w * (1.0 - (p + 3.0) / 4.0 * w)))
                    } else {
                        (1.0 + w).powf(-p)
                    }
                };
                let e = engines::grad_engine(
                    &self.geom,
                    &fields,
                    &self.grad_coarse,
                    &self.grad_fine,
                    self.ball_pref,
                    full_weight,
                );
                let mut corr = spec.clone();
                let delta = self.defect_sym.as_ref().expect("direct method");
                for (c, dl) in corr.coeffs.iter_mut().zip(delta) {
                    *c *= *dl;
                }
                let corr = inverse(&corr);
                Ok(corr.axpy(self.norm_const, &e))
            }
            RhsMethod::SplitSpectral { .. } => {
                let table = self.stable.as_ref().expect("split method");
                let (t1, t2) = engines::div_engine(
                    &self.geom,
                    &fields,
                    &self.div_coarse,
                    &self.div_fine,
                    self.ball_pref,
                    table,
                );
                let t1h = forward_ref(&t1);
                let t2h = forward_ref(&t2);
                let div = derivative_x(&t1h);
                let divy = derivative_y(&t2h);
                let mut out = spec.clone();
                for i in 0..out.coeffs.len() {
                    out.coeffs[i] = out.coeffs[i] * self.lin_sym[i]
                        - (div.coeffs[i] + divy.coeffs[i]) * self.norm_const;
                }
                Ok(inverse(&out))
            }
            RhsMethod::SeriesTruncated { .. } => {
                // series requires sup|D_y f| <= ||grad f||_inf < 1
                let sup_grad = d
                    .gx
                    .values
                    .iter()
                    .zip(&d.gy.values)
                    .map(|(a, b)| a * a + b * b)
                    .fold(0.0f64, f64::max)
                    .sqrt();
                if sup_grad >= 1.0 {
                    return Err(CoreError::SeriesDiverges(format!(
                        "||grad f||_inf = {sup_grad} >= 1"
                    )));
                }
                let coeffs = self.series_coeffs.as_ref().expect("series method").clone();
                let series_weight = move |w: f64| {
                    let mut acc = 0.0;
                    for an in coeffs.iter().rev() {
                        acc = an - w * acc;
                    }
                    -w * acc
                };
                let e = engines::grad_engine(
                    &self.geom,
                    &fields,
                    &self.grad_coarse,
                    &self.grad_fine,
                    self.ball_pref,
                    series_weight,
                );
                let mut lin = spec.clone();
                for (c, s) in lin.coeffs.iter_mut().zip(&self.lin_sym) {
                    *c *= *s;
                }
                Ok(inverse(&lin).axpy(self.norm_const, &e))
            }
        }
    }

    /// Nonlinear part of the RHS in spectral space: RHS-hat + |k|^{1+alpha} f-hat.
    /// The ETD stepper integrates the linear symbol exactly and treats this
    /// term explicitly.
    pub fn nonlinear_rhs_hat(&self, fhat: &SpectralField) -> Result<SpectralField> {
        let f = inverse(fhat);
        let rhs = self.rhs_from_spec(&f, fhat)?;
        let mut out = forward(&rhs)?;
        for (c, (s, fh)) in out.coeffs.iter_mut().zip(self.lin_sym.iter().zip(&fhat.coeffs)) {
            *c -= *s * *fh;
        }
        Ok(out)
    }
}

struct DerivedFields {
    gx: ScalarField,
    gy: ScalarField,
    fxx: ScalarField,
    fxy: ScalarField,
    fyy: ScalarField,
    f_up: Option<ScalarField>,
    gx_up: Option<ScalarField>,
    gy_up: Option<ScalarField>,
}

fn forward_ref(f: &ScalarField) -> SpectralField {
    spectral::forward_unchecked(f)
}
