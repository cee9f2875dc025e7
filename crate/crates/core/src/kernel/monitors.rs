//! Pointwise inequality monitors from the maximum-principle proofs.

use crate::error::Result;
use crate::grid::{ScalarField, SupNorms};
use crate::kernel::engines::{ball_prefactor, ThetaRing, N_THETA};
use crate::kernel::RhsEvaluator;
use crate::spectral::{forward, gradient_of_spec, hessian_of_spec, inverse, upsample_spec};

/// Monitors evaluated on one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMonitors {
    /// D3 = PV int (f(x*) - f(y)) / [...]^{(3+alpha)/2} dy at the argmax x*.
    pub d3_value: f64,
    /// (pi/2) ||f||_inf^{(3+alpha)/2} / [1 + 2||f0||_L1/pi + 4||f0||_inf^3]^{(3+alpha)/2}
    pub d3_lower_bound: f64,
    /// min over sampled (x, y) of the C_alpha(x, y) kernel factor.
    pub c_alpha_min: f64,
    /// ||grad f||_inf
    pub dyf_sup: f64,
}

impl RhsEvaluator {
    /// Kernel monitors for the current field, given the initial-data norms.
    pub fn monitors(&self, f: &ScalarField, f0_norms: &SupNorms) -> Result<KernelMonitors> {
        let a = self.alpha.value();
        let p = (3.0 + a) / 2.0;
        let grid = self.grid;
        let spec = forward(f)?;
        let (gx, gy) = gradient_of_spec(&spec);

        let dyf_sup = gx
            .values
            .iter()
            .zip(&gy.values)
            .map(|(x, y)| x * x + y * y)
            .fold(0.0f64, f64::max)
            .sqrt();

        // argmax of f (first occurrence; deterministic)
        let mut imax = 0;
        for (i, v) in f.values.iter().enumerate() {
            if *v > f.values[imax] {
                imax = i;
            }
        }
        let (ix, iy) = ((imax % grid.nx) as i32, (imax / grid.nx) as i32);
        let fstar = f.values[imax];

        // D3 quadrature: coarse offsets + fine block + ball Taylor term
        let geom = self.geometry();
        let mut d3 = 0.0;
        let area = geom.coarse_area();
        for o in &geom.coarse {
            let jx = (ix - o.j1).rem_euclid(grid.nx as i32) as usize;
            let jy = (iy - o.j2).rem_euclid(grid.ny as i32) as usize;
            let df = fstar - f.values[jy * grid.nx + jx];
            d3 += df * (o.r2 + df * df).powf(-p) * area * o.wmul;
        }
        if geom.refine > 1 {
            let fg = geom.fine_grid();
            let f_up = inverse(&upsample_spec(&spec, geom.refine));
            let farea = geom.fine_area();
            let s = geom.refine as i32;
            for o in &geom.fine {
                let jx = (s * ix - o.j1).rem_euclid(fg.nx as i32) as usize;
                let jy = (s * iy - o.j2).rem_euclid(fg.ny as i32) as usize;
                let df = fstar - f_up.values[jy * fg.nx + jx];
                d3 += df * (o.r2 + df * df).powf(-p) * farea;
            }
        } else {
            let farea = geom.fine_area();
            for o in &geom.fine {
                let jx = (ix - o.j1).rem_euclid(grid.nx as i32) as usize;
                let jy = (iy - o.j2).rem_euclid(grid.ny as i32) as usize;
                let df = fstar - f.values[jy * grid.nx + jx];
                d3 += df * (o.r2 + df * df).powf(-p) * farea;
            }
        }
        // ball term: difference kernel ~ -1/2 y^T H y near 0 (grad ~ 0 at max)
        let (fxx, fxy, fyy) = hessian_of_spec(&spec);
        let ring = ThetaRing::new();
        let pref = ball_prefactor(geom, a);
        let (gxs, gys) = (gx.values[imax], gy.values[imax]);
        let mut bt = 0.0;
        for m in 0..N_THETA {
            let (ct, st) = (ring.cos[m], ring.sin[m]);
            let q = fxx.values[imax] * ct * ct
                + 2.0 * fxy.values[imax] * ct * st
                + fyy.values[imax] * st * st;
            let u = gxs * ct + gys * st;
            bt += -0.5 * q * (1.0 + u * u).powf(-p);
        }
        d3 += bt * pref;

        let base = 1.0 + 2.0 * f0_norms.l1 / std::f64::consts::PI + 4.0 * f0_norms.linf.powi(3);
        let linf_now = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d3_lower_bound = std::f64::consts::PI / 2.0 * linf_now.powf(p) / base.powf(p);

        // C_alpha(x, y) = 1 + alpha + (3+alpha)/(1 + D^2) [D (grad f(x-y).yhat) - D^2]
        // minimized over a strided set of x and the multi-scale offset sample.
        let mut c_min = f64::INFINITY;
        let stride = 2usize;
        for iy0 in (0..grid.ny).step_by(stride) {
            for ix0 in (0..grid.nx).step_by(stride) {
                let i0 = iy0 * grid.nx + ix0;
                let fx = f.values[i0];
                for o in &geom.samples {
                    let jx = (ix0 as i32 - o.j1).rem_euclid(grid.nx as i32) as usize;
                    let jy = (iy0 as i32 - o.j2).rem_euclid(grid.ny as i32) as usize;
                    let js = jy * grid.nx + jx;
                    let r = o.r2.sqrt();
                    let d = (fx - f.values[js]) / r;
                    let gdot = (gx.values[js] * o.y1 + gy.values[js] * o.y2) / r;
                    let c = 1.0 + a + (3.0 + a) / (1.0 + d * d) * (d * gdot - d * d);
                    if c < c_min {
                        c_min = c;
                    }
                }
            }
        }

        Ok(KernelMonitors {
            d3_value: d3,
            d3_lower_bound,
            c_alpha_min: c_min,
            dyf_sup,
        })
    }
}
