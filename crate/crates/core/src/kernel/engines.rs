//! Quadrature engines for the contour kernel.
//!
//! Two independent algebraic routes share the offset geometry:
//!   - the gradient form sums (grad f(x) - grad f(x-y)) . y |y|^{-3-a} W(D^2)
//!     for a weight W (full kernel for the direct method, truncated series
//!     for the series method),
//!   - the divergence form accumulates T(x) = sum y |y|^{-2-a} S(D_y f(x))
//!     with S' = R_alpha and takes a spectral divergence (split method).
//!
//! Offsets are accumulated in the fixed radial order with Neumaier
//! compensation, parallelized over target rows, so results are
//! bit-identical for any thread count.

use rayon::prelude::*;

use crate::grid::ScalarField;
use crate::kernel::geometry::QuadGeometry;
use crate::special::{r_alpha, r_alpha_primitive};

pub(crate) const N_THETA: usize = 32;

#[inline(always)]
fn kahan(sum: &mut f64, comp: &mut f64, v: f64) {
    // branchless compensated accumulation
    let y = v - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GradOff {
    j1: i32,
    j2: i32,
    y1: f64,
    y2: f64,
    inv_r2: f64,
    /// |y|^{-3-alpha} * cell area
    kw: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DivOff {
    j1: i32,
    j2: i32,
    inv_r: f64,
    /// y_i |y|^{-2-alpha} * cell area
    ky1: f64,
    ky2: f64,
}

pub(crate) fn grad_offsets(geom: &QuadGeometry, alpha: f64, fine: bool) -> Vec<GradOff> {
    let (list, area) = if fine {
        (&geom.fine, geom.fine_area())
    } else {
        (&geom.coarse, geom.coarse_area())
    };
    list.iter()
        .map(|o| GradOff {
            j1: o.j1,
            j2: o.j2,
            y1: o.y1,
            y2: o.y2,
            inv_r2: 1.0 / o.r2,
            kw: o.r2.powf(-(3.0 + alpha) / 2.0) * area * o.wmul,
        })
        .collect()
}

pub(crate) fn div_offsets(geom: &QuadGeometry, alpha: f64, fine: bool) -> Vec<DivOff> {
    let (list, area) = if fine {
        (&geom.fine, geom.fine_area())
    } else {
        (&geom.coarse, geom.coarse_area())
    };
    list.iter()
        .map(|o| {
            let r = o.r2.sqrt();
            let k = o.r2.powf(-(2.0 + alpha) / 2.0) * area * o.wmul;
            DivOff {
                j1: o.j1,
                j2: o.j2,
                inv_r: 1.0 / r,
                ky1: o.y1 * k,
                ky2: o.y2 * k,
            }
        })
        .collect()
}

/// Hermite-interpolated table of sigma(w) = S(sqrt w)/sqrt w on [0, w_max],
/// where S(z) = int_0^z R_alpha; then S(d) = d * sigma(d^2).
#[derive(Debug, Clone)]
pub(crate) struct STable {
    alpha: f64,
    inv_dw: f64,
    dw: f64,
    w_max: f64,
    /// interleaved (value, derivative) pairs per node
    nodes: Vec<[f64; 2]>,
    /// leading series coefficients of sigma(w) for small w
    head: [f64; 8],
    w_head: f64,
}

impl STable {
    pub fn new(alpha: f64) -> Self {
        let n = 2048usize;
        let w_max = 4.0;
        let dw = w_max / n as f64;
        let p = (3.0 + alpha) / 2.0;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push([0.0, p / 3.0]);
        for i in 1..=n {
            let w = i as f64 * dw;
            let z = w.sqrt();
            let sig = r_alpha_primitive(z, alpha).expect("alpha validated") / z;
            nodes.push([sig, (r_alpha(z, alpha) - sig) / (2.0 * w)]);
        }
        // sigma(w) = sum (-1)^{m+1} a_m w^m/(2m+1): eight terms cover
        // w <= 0.04 to ~1e-12 relative
        let mut head = [0.0; 8];
        let mut am = p;
        for (m, h) in head.iter_mut().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            *h = sign * am / (2.0 * (m + 1) as f64 + 1.0);
            am *= (p + (m + 1) as f64) / ((m + 1) as f64 + 1.0);
        }
        STable {
            alpha,
            inv_dw: 1.0 / dw,
            dw,
            w_max,
            nodes,
            head,
            w_head: 0.04,
        }
    }

    /// sigma(w); small-w series on the hot range, cubic Hermite table up to
    /// w_max, closed form beyond.
    #[inline(always)]
    pub fn eval(&self, w: f64) -> f64 {
        if w <= self.w_head {
            let mut acc = 0.0;
            for c in self.head.iter().rev() {
                acc = acc * w + c;
            }
            return w * acc;
        }
        if w >= self.w_max {
            return self.eval_cold(w);
        }
        let u = w * self.inv_dw;
        let i = u as usize;
        let t = u - i as f64;
        let [v0, d0] = self.nodes[i];
        let [v1, d1] = self.nodes[i + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * v0
            + (t3 - 2.0 * t2 + t) * self.dw * d0
            + (-2.0 * t3 + 3.0 * t2) * v1
            + (t3 - t2) * self.dw * d1
    }

    #[inline(never)]
    fn eval_cold(&self, w: f64) -> f64 {
        let z = w.sqrt();
        r_alpha_primitive(z, self.alpha).expect("alpha validated") / z
    }
}

#[inline(always)]
fn wrap(i: i32, n: i32) -> usize {
    i.rem_euclid(n) as usize
}

/// Field and derivative views consumed by the engines. The fine-lattice
/// copies alias the coarse arrays when refine == 1.
pub(crate) struct EngineFields<'a> {
    pub f: &'a ScalarField,
    pub gx: &'a ScalarField,
    pub gy: &'a ScalarField,
    pub f_up: &'a ScalarField,
    pub gx_up: &'a ScalarField,
    pub gy_up: &'a ScalarField,
    pub fxx: &'a ScalarField,
    pub fxy: &'a ScalarField,
    pub fyy: &'a ScalarField,
}

pub(crate) struct ThetaRing {
    pub cos: [f64; N_THETA],
    pub sin: [f64; N_THETA],
}

impl ThetaRing {
    pub fn new() -> Self {
        let mut cos = [0.0; N_THETA];
        let mut sin = [0.0; N_THETA];
        for (m, (c, s)) in cos.iter_mut().zip(sin.iter_mut()).enumerate() {
            let th = 2.0 * std::f64::consts::PI * m as f64 / N_THETA as f64;
            *c = th.cos();
            *s = th.sin();
        }
        ThetaRing { cos, sin }
    }
}

/// Ball-correction prefactor r_c^{1-alpha}/(1-alpha) * (2 pi / N_THETA).
pub(crate) fn ball_prefactor(geom: &QuadGeometry, alpha: f64) -> f64 {
    geom.ball_radius.powf(1.0 - alpha) / (1.0 - alpha) * 2.0 * std::f64::consts::PI
        / N_THETA as f64
}

/// Gradient-form quadrature with pointwise weight `weight(D_y f ^ 2)`.
///
/// Returns sum over offsets of (grad f(x) - grad f(x-y)) . y |y|^{-3-a}
/// W(D_y f(x)^2) * area, plus the ball Taylor term
/// r^{1-a}/(1-a) * mean_theta[(yhat^T H yhat) W((grad f . yhat)^2)] * 2 pi.
pub(crate) fn grad_engine<W: Fn(f64) -> f64 + Sync>(
    geom: &QuadGeometry,
    fields: &EngineFields<'_>,
    coarse: &[GradOff],
    fine: &[GradOff],
    ball_pref: f64,
    weight: W,
) -> ScalarField {
    let grid = fields.f.grid;
    let (nxi, nyi) = (grid.nx as i32, grid.ny as i32);
    let nx = grid.nx;
    let s = geom.refine as i32;
    let fg = fields.f_up.grid;
    let (fnxi, fnyi) = (fg.nx as i32, fg.ny as i32);
    let ring = ThetaRing::new();

    let mut out = ScalarField::zeros(grid);
    out.values
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(iy, row_out)| {
            let iyi = iy as i32;
            let mut acc = vec![0.0f64; nx];
            let mut comp = vec![0.0f64; nx];
            let fdst = &fields.f.values[iy * nx..][..nx];
            let gxd = &fields.gx.values[iy * nx..][..nx];
            let gyd = &fields.gy.values[iy * nx..][..nx];

            for o in coarse {
                let jy = wrap(iyi - o.j2, nyi);
                let fsrc = &fields.f.values[jy * nx..][..nx];
                let gxs = &fields.gx.values[jy * nx..][..nx];
                let gys = &fields.gy.values[jy * nx..][..nx];
                let start = wrap(-o.j1, nxi);
                let split = nx - start;
                let (y1, y2, inv_r2, kw) = (o.y1, o.y2, o.inv_r2, o.kw);
                let mut body = |ix: usize, jx: usize| {
                    let df = fdst[ix] - fsrc[jx];
                    let w = df * df * inv_r2;
                    let gterm = (gxd[ix] - gxs[jx]) * y1 + (gyd[ix] - gys[jx]) * y2;
                    kahan(&mut acc[ix], &mut comp[ix], gterm * kw * weight(w));
                };
                for ix in 0..split {
                    body(ix, start + ix);
                }
                for ix in split..nx {
                    body(ix, ix - split);
                }
            }

            for o in fine {
                let jy = wrap(s * iyi - o.j2, fnyi);
                let fsrc = &fields.f_up.values[jy * fg.nx..][..fg.nx];
                let gxs = &fields.gx_up.values[jy * fg.nx..][..fg.nx];
                let gys = &fields.gy_up.values[jy * fg.nx..][..fg.nx];
                for ix in 0..nx {
                    let jx = wrap(s * ix as i32 - o.j1, fnxi);
                    let df = fdst[ix] - fsrc[jx];
                    let w = df * df * o.inv_r2;
                    let gterm = (gxd[ix] - gxs[jx]) * o.y1 + (gyd[ix] - gys[jx]) * o.y2;
                    kahan(&mut acc[ix], &mut comp[ix], gterm * o.kw * weight(w));
                }
            }

            let fxx = &fields.fxx.values[iy * nx..][..nx];
            let fxy = &fields.fxy.values[iy * nx..][..nx];
            let fyy = &fields.fyy.values[iy * nx..][..nx];
            for ix in 0..nx {
                let mut bt = 0.0;
                for m in 0..N_THETA {
                    let (ct, st) = (ring.cos[m], ring.sin[m]);
                    let q = fxx[ix] * ct * ct + 2.0 * fxy[ix] * ct * st + fyy[ix] * st * st;
                    let u = gxd[ix] * ct + gyd[ix] * st;
                    bt += q * weight(u * u);
                }
                row_out[ix] = acc[ix] - comp[ix] + bt * ball_pref;
            }
        });
    out
}

/// Divergence-form accumulation: returns the vector field
/// T_i(x) = sum_y y_i |y|^{-2-a} S(D_y f(x)) * area + ball term, whose
/// spectral divergence is N_alpha / b.
pub(crate) fn div_engine(
    geom: &QuadGeometry,
    fields: &EngineFields<'_>,
    coarse: &[DivOff],
    fine: &[DivOff],
    ball_pref: f64,
    table: &STable,
) -> (ScalarField, ScalarField) {
    let grid = fields.f.grid;
    let (nxi, nyi) = (grid.nx as i32, grid.ny as i32);
    let nx = grid.nx;
    let s = geom.refine as i32;
    let fg = fields.f_up.grid;
    let (fnxi, fnyi) = (fg.nx as i32, fg.ny as i32);
    let ring = ThetaRing::new();

    let mut t1 = ScalarField::zeros(grid);
    let mut t2 = ScalarField::zeros(grid);
    t1.values
        .par_chunks_mut(nx)
        .zip(t2.values.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(iy, (row1, row2))| {
            let iyi = iy as i32;
            let mut a1 = vec![0.0f64; nx];
            let mut c1 = vec![0.0f64; nx];
            let mut a2 = vec![0.0f64; nx];
            let mut c2 = vec![0.0f64; nx];
            let fdst = &fields.f.values[iy * nx..][..nx];

            for o in coarse {
                let jy = wrap(iyi - o.j2, nyi);
                let fsrc = &fields.f.values[jy * nx..][..nx];
                let start = wrap(-o.j1, nxi);
                let split = nx - start;
                let (inv_r, ky1, ky2) = (o.inv_r, o.ky1, o.ky2);
                let run = |fd: &[f64],
                           fs: &[f64],
                           a1: &mut [f64],
                           c1: &mut [f64],
                           a2: &mut [f64],
                           c2: &mut [f64]| {
                    for (((((fd, fs), a1), c1), a2), c2) in fd
                        .iter()
                        .zip(fs)
                        .zip(a1.iter_mut())
                        .zip(c1.iter_mut())
                        .zip(a2.iter_mut())
                        .zip(c2.iter_mut())
                    {
                        let d = (fd - fs) * inv_r;
                        let sval = d * table.eval(d * d);
                        kahan(a1, c1, ky1 * sval);
                        kahan(a2, c2, ky2 * sval);
                    }
                };
                let (a1l, a1r) = a1.split_at_mut(split);
                let (c1l, c1r) = c1.split_at_mut(split);
                let (a2l, a2r) = a2.split_at_mut(split);
                let (c2l, c2r) = c2.split_at_mut(split);
                run(&fdst[..split], &fsrc[start..], a1l, c1l, a2l, c2l);
                run(&fdst[split..], &fsrc[..start], a1r, c1r, a2r, c2r);
            }

            for o in fine {
                let jy = wrap(s * iyi - o.j2, fnyi);
                let fsrc = &fields.f_up.values[jy * fg.nx..][..fg.nx];
                for ix in 0..nx {
                    let jx = wrap(s * ix as i32 - o.j1, fnxi);
                    let d = (fdst[ix] - fsrc[jx]) * o.inv_r;
                    let sval = d * table.eval(d * d);
                    kahan(&mut a1[ix], &mut c1[ix], o.ky1 * sval);
                    kahan(&mut a2[ix], &mut c2[ix], o.ky2 * sval);
                }
            }

            let gxd = &fields.gx.values[iy * nx..][..nx];
            let gyd = &fields.gy.values[iy * nx..][..nx];
            for ix in 0..nx {
                let mut b1 = 0.0;
                let mut b2 = 0.0;
                for m in 0..N_THETA {
                    let (ct, st) = (ring.cos[m], ring.sin[m]);
                    let u = gxd[ix] * ct + gyd[ix] * st;
                    let sval = u * table.eval(u * u);
                    b1 += ct * sval;
                    b2 += st * sval;
                }
                row1[ix] = a1[ix] - c1[ix] + b1 * ball_pref;
                row2[ix] = a2[ix] - c2[ix] + b2 * ball_pref;
            }
        });
    (t1, t2)
}
