//! Periodic grid and real-space fields.
//!
//! The domain is the torus [0, lx) x [0, ly) sampled on an nx x ny lattice.
//! Values are stored row-major with x1 fastest: `values[iy * nx + ix]`.
//! Wavenumbers are k = (2 pi n1 / lx, 2 pi n2 / ly) with
//! n1 in [-nx/2, nx/2), n2 in [-ny/2, ny/2).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Periodic grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 16 || ny < 16 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(CoreError::InvalidGrid(format!(
                "nx, ny must be even and >= 16, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(CoreError::InvalidGrid(format!(
                "lx, ly must be positive finite, got {lx} x {ly}"
            )));
        }
        Ok(GridSpec { nx, ny, lx, ly })
    }

    /// Square grid on [0, l)^2.
    pub fn square(n: usize, l: f64) -> Result<Self> {
        GridSpec::new(n, n, l, l)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Cell area hx * hy.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Signed mode number for FFT bin `m` along an axis of length `n`.
    pub fn mode_of_bin(m: usize, n: usize) -> i64 {
        if m <= n / 2 - 1 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Physical wavenumber components for FFT bins (m1, m2).
    pub fn wavenumber(&self, m1: usize, m2: usize) -> (f64, f64) {
        let n1 = Self::mode_of_bin(m1, self.nx);
        let n2 = Self::mode_of_bin(m2, self.ny);
        (
            2.0 * std::f64::consts::PI * n1 as f64 / self.lx,
            2.0 * std::f64::consts::PI * n2 as f64 / self.ly,
        )
    }

    /// Grid point coordinates.
    pub fn point(&self, ix: usize, iy: usize) -> (f64, f64) {
        (ix as f64 * self.hx(), iy as f64 * self.hy())
    }
}

/// Real scalar field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let (x, y) = grid.point(ix, iy);
                values.push(f(x, y));
            }
        }
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    /// Checks every value is finite.
    pub fn validate_finite(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(format!(
                "index {i} = {}",
                self.values[i]
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Pointwise a + c*b.
    pub fn axpy(&self, c: f64, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Discrete L2 norm: sqrt(cell_area * sum f^2).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_area() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Cyclic lattice shift by (sx, sy) grid points: out(i) = f(i - s).
    pub fn shifted(&self, sx: i64, sy: i64) -> ScalarField {
        let (nx, ny) = (self.grid.nx as i64, self.grid.ny as i64);
        let mut out = ScalarField::zeros(self.grid);
        for iy in 0..ny {
            let jy = (iy - sy).rem_euclid(ny) as usize;
            for ix in 0..nx {
                let jx = (ix - sx).rem_euclid(nx) as usize;
                out.values[(iy as usize) * self.grid.nx + ix as usize] =
                    self.values[jy * self.grid.nx + jx];
            }
        }
        out
    }
}

/// Sup-type norms of a field, in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorms {
    /// max |f|
    pub linf: f64,
    /// max sqrt(|grad f|^2) (= sqrt of the paper's Phi)
    pub grad_linf: f64,
    /// cell-area weighted sum of |f|
    pub l1: f64,
    /// cell-area weighted sum of f
    pub mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_odd_and_small() {
        assert!(GridSpec::new(15, 16, 1.0, 1.0).is_err());
        assert!(GridSpec::new(16, 17, 1.0, 1.0).is_err());
        assert!(GridSpec::new(8, 8, 1.0, 1.0).is_err());
        assert!(GridSpec::new(16, 16, 0.0, 1.0).is_err());
        assert!(GridSpec::new(16, 16, 1.0, f64::NAN).is_err());
        assert!(GridSpec::new(16, 16, 1.0, 1.0).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = GridSpec::square(16, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(g.wavenumber(0, 0), (0.0, 0.0));
        let (k1, _) = g.wavenumber(1, 0);
        assert!((k1 - 1.0).abs() < 1e-15);
        let (k1, _) = g.wavenumber(15, 0);
        assert!((k1 + 1.0).abs() < 1e-15);
        // bin n/2 is the negative Nyquist mode
        let (k1, _) = g.wavenumber(8, 0);
        assert!((k1 + 8.0).abs() < 1e-15);
    }

    #[test]
    fn shift_round_trip() {
        let g = GridSpec::square(16, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 7.0).sin() + y);
        let s = f.shifted(3, -5).shifted(-3, 5);
        assert_eq!(f, s);
    }

    #[test]
    fn validate_finite_catches_nan() {
        let g = GridSpec::square(16, 1.0).unwrap();
        let mut f = ScalarField::zeros(g);
        f.values[7] = f64::NAN;
        assert!(f.validate_finite().is_err());
    }
}
