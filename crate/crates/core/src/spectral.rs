//! Spectral transforms, fractional Laplacian, derivatives and norms.
//!
//! Normalization convention: f(x) = sum_k coeff(k) e^{i k.x}, so the forward
//! transform divides by nx*ny and Parseval reads
//! sum_k |coeff(k)|^2 = (1/(nx*ny)) sum_x f(x)^2.

use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::{GridSpec, ScalarField, SupNorms};

/// Fourier coefficients of a real field, full complex storage with
/// Hermitian symmetry coeff(-k) = conj(coeff(k)).
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub coeffs: Vec<Complex64>,
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap();
    if forward {
        p.plan_fft_forward(n)
    } else {
        p.plan_fft_inverse(n)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    // src is rows x cols (row-major), dst becomes cols x rows
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// In-place 2D complex FFT over an nx x ny grid (row-major, x fastest).
pub(crate) fn fft2_inplace(data: &mut Vec<Complex64>, nx: usize, ny: usize, forward: bool) {
    let row_fft = plan(nx, forward);
    data.par_chunks_mut(nx).for_each_init(
        || vec![Complex64::default(); row_fft.get_inplace_scratch_len()],
        |scratch, row| row_fft.process_with_scratch(row, scratch),
    );
    let mut t = vec![Complex64::default(); nx * ny];
    transpose(data, &mut t, ny, nx);
    let col_fft = plan(ny, forward);
    t.par_chunks_mut(ny).for_each_init(
        || vec![Complex64::default(); col_fft.get_inplace_scratch_len()],
        |scratch, row| col_fft.process_with_scratch(row, scratch),
    );
    transpose(&t, data, nx, ny);
}

/// Forward transform of a real field.
pub fn forward(f: &ScalarField) -> Result<SpectralField> {
    f.validate_finite()?;
    Ok(forward_unchecked(f))
}

pub(crate) fn forward_unchecked(f: &ScalarField) -> SpectralField {
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_inplace(&mut data, nx, ny, true);
    let scale = 1.0 / (nx * ny) as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
    SpectralField {
        grid: f.grid,
        coeffs: data,
    }
}

/// Inverse transform back to a real field.
pub fn inverse(spec: &SpectralField) -> ScalarField {
    let (nx, ny) = (spec.grid.nx, spec.grid.ny);
    let mut data = spec.coeffs.clone();
    fft2_inplace(&mut data, nx, ny, false);
    ScalarField {
        grid: spec.grid,
        values: data.iter().map(|c| c.re).collect(),
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Applies a real multiplier m(k1, k2) bin-wise.
    pub fn real_multiplier(&self, m: impl Fn(f64, f64) -> f64) -> SpectralField {
        let mut out = self.clone();
        for m2 in 0..self.grid.ny {
            for m1 in 0..self.grid.nx {
                let (k1, k2) = self.grid.wavenumber(m1, m2);
                out.coeffs[m2 * self.grid.nx + m1] *= m(k1, k2);
            }
        }
        out
    }

    /// L2 norm of the coefficient vector.
    pub fn coeff_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Fractional Laplacian: coeff_out(k) = |k|^s coeff_in(k), zero mode annihilated.
pub fn apply_fractional_laplacian(spec: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s >= 0.0) {
        return Err(CoreError::OutOfRange(format!(
            "fractional Laplacian order must be >= 0, got {s}"
        )));
    }
    Ok(spec.real_multiplier(|k1, k2| {
        let k2n = k1 * k1 + k2 * k2;
        if k2n == 0.0 {
            0.0
        } else {
            k2n.powf(s / 2.0)
        }
    }))
}

/// Spectral partial derivative along x1 (Nyquist row zeroed).
pub fn derivative_x(spec: &SpectralField) -> SpectralField {
    let mut out = spec.clone();
    let nx = spec.grid.nx;
    for m2 in 0..spec.grid.ny {
        for m1 in 0..nx {
            let i = m2 * nx + m1;
            if m1 == nx / 2 {
                out.coeffs[i] = Complex64::default();
            } else {
                let (k1, _) = spec.grid.wavenumber(m1, m2);
                out.coeffs[i] *= Complex64::new(0.0, k1);
            }
        }
    }
    out
}

/// Spectral partial derivative along x2 (Nyquist column zeroed).
pub fn derivative_y(spec: &SpectralField) -> SpectralField {
    let mut out = spec.clone();
    let nx = spec.grid.nx;
    for m2 in 0..spec.grid.ny {
        for m1 in 0..nx {
            let i = m2 * nx + m1;
            if m2 == spec.grid.ny / 2 {
                out.coeffs[i] = Complex64::default();
            } else {
                let (_, k2) = spec.grid.wavenumber(m1, m2);
                out.coeffs[i] *= Complex64::new(0.0, k2);
            }
        }
    }
    out
}

/// Spectral gradient of a real field.
pub fn gradient(f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let spec = forward(f)?;
    Ok(gradient_of_spec(&spec))
}

pub(crate) fn gradient_of_spec(spec: &SpectralField) -> (ScalarField, ScalarField) {
    (inverse(&derivative_x(spec)), inverse(&derivative_y(spec)))
}

/// Second derivatives (fxx, fxy, fyy) of a real field.
pub fn hessian_of_spec(spec: &SpectralField) -> (ScalarField, ScalarField, ScalarField) {
    let fxx = inverse(&spec.real_multiplier(|k1, _| -k1 * k1));
    let fyy = inverse(&spec.real_multiplier(|_, k2| -k2 * k2));
    let fxy = inverse(&derivative_y(&derivative_x(spec)));
    (fxx, fxy, fyy)
}

/// Wiener-type Fourier norm sum_{k != 0} |k|^s |coeff(k)|.
///
/// The zero mode is excluded by default (|0|^s = 0 semantics for s > 0).
pub fn fourier_norm(f: &ScalarField, s: f64) -> Result<f64> {
    let spec = forward(f)?;
    fourier_norm_of_spec(&spec, s, false)
}

/// Fourier norm with explicit control over the zero mode (only meaningful
/// for s = 0, where the zero mode contributes |coeff(0)|).
pub fn fourier_norm_of_spec(spec: &SpectralField, s: f64, include_zero_mode: bool) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(CoreError::OutOfRange(format!(
            "fourier norm order must be >= 0, got {s}"
        )));
    }
    let mut sum = 0.0;
    let mut comp = 0.0; // Neumaier compensation
    for m2 in 0..spec.grid.ny {
        for m1 in 0..spec.grid.nx {
            if m1 == 0 && m2 == 0 {
                if include_zero_mode && s == 0.0 {
                    sum += spec.coeffs[0].norm();
                }
                continue;
            }
            let (k1, k2) = spec.grid.wavenumber(m1, m2);
            let kn = (k1 * k1 + k2 * k2).sqrt();
            let term = kn.powf(s) * spec.coeffs[m2 * spec.grid.nx + m1].norm();
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
    }
    Ok(sum + comp)
}

/// L-infinity, gradient sup, L1 and mass in one record.
pub fn sup_norms(f: &ScalarField) -> Result<SupNorms> {
    f.validate_finite()?;
    let (gx, gy) = gradient(f)?;
    let mut linf: f64 = 0.0;
    let mut grad2: f64 = 0.0;
    let mut l1 = 0.0;
    let mut mass = 0.0;
    for i in 0..f.values.len() {
        let v = f.values[i];
        linf = linf.max(v.abs());
        grad2 = grad2.max(gx.values[i] * gx.values[i] + gy.values[i] * gy.values[i]);
        l1 += v.abs();
        mass += v;
    }
    let area = f.grid.cell_area();
    Ok(SupNorms {
        linf,
        grad_linf: grad2.sqrt(),
        l1: l1 * area,
        mass: mass * area,
    })
}

/// Band-limited (trigonometric) upsampling by an integer factor per axis.
///
/// The coarse Nyquist coefficient is split evenly between the +-Nyquist
/// bins of the fine array so the result stays real.
pub fn upsample(f: &ScalarField, factor: usize) -> Result<ScalarField> {
    assert!(factor >= 1);
    if factor == 1 {
        return Ok(f.clone());
    }
    let spec = forward(f)?;
    Ok(inverse(&upsample_spec(&spec, factor)))
}

pub(crate) fn upsample_spec(spec: &SpectralField, factor: usize) -> SpectralField {
    let g = spec.grid;
    let fine = GridSpec {
        nx: g.nx * factor,
        ny: g.ny * factor,
        lx: g.lx,
        ly: g.ly,
    };
    let mut out = SpectralField::zeros(fine);
    let targets = |m: usize, n: usize, fine_n: usize| -> Vec<(usize, f64)> {
        let mode = GridSpec::mode_of_bin(m, n);
        if mode == -(n as i64) / 2 {
            vec![
                ((fine_n as i64 + mode).rem_euclid(fine_n as i64) as usize, 0.5),
                ((-mode) as usize, 0.5),
            ]
        } else {
            vec![(mode.rem_euclid(fine_n as i64) as usize, 1.0)]
        }
    };
    for m2 in 0..g.ny {
        let t2 = targets(m2, g.ny, fine.ny);
        for m1 in 0..g.nx {
            let c = spec.coeffs[m2 * g.nx + m1];
            if c == Complex64::default() {
                continue;
            }
            let t1 = targets(m1, g.nx, fine.nx);
            for &(b2, w2) in &t2 {
                for &(b1, w1) in &t1 {
                    out.coeffs[b2 * fine.nx + b1] += c * (w1 * w2);
                }
            }
        }
    }
    out
}
