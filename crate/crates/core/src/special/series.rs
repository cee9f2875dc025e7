//! Gamma-ratio Taylor coefficients a_n, the kernel nonlinearity R_alpha,
//! its antiderivative, and the closed-form weighted series identity.
//!
//! a_n = Gamma((3+alpha)/2 + n) / (Gamma((3+alpha)/2) n!) satisfies the
//! product recurrence a_{n+1} = a_n ((3+alpha)/2 + n)/(n+1) with
//! a_1 = (3+alpha)/2; the recurrence avoids Gamma overflow for n >~ 150.

use crate::error::{CoreError, Result};
use crate::special::hyp2f1::hyp2f1;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(CoreError::OutOfRange(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Table of a_1 .. a_n_max for a fixed alpha.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    pub alpha: f64,
    a: Vec<f64>,
}

impl CoeffTable {
    pub fn new(alpha: f64, n_max: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if n_max < 1 {
            return Err(CoreError::OutOfRange("n_max must be >= 1".into()));
        }
        let p = (3.0 + alpha) / 2.0;
        let mut a = Vec::with_capacity(n_max);
        let mut an = p;
        a.push(an);
        for n in 1..n_max {
            an *= (p + n as f64) / (n as f64 + 1.0);
            a.push(an);
        }
        Ok(CoeffTable { alpha, a })
    }

    /// a_n, 1-indexed.
    pub fn a(&self, n: usize) -> f64 {
        self.a[n - 1]
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }
}

/// a_n by the product recurrence.
pub fn taylor_coeff(n: usize, alpha: f64) -> Result<f64> {
    if n < 1 {
        return Err(CoreError::OutOfRange("n must be >= 1".into()));
    }
    Ok(CoeffTable::new(alpha, n)?.a(n))
}

/// R_alpha(z) = 1 - (1 + z^2)^{-(3+alpha)/2}; the kernel nonlinearity.
pub fn r_alpha(z: f64, alpha: f64) -> f64 {
    let p = (3.0 + alpha) / 2.0;
    -f64::exp_m1(-p * f64::ln_1p(z * z))
}

/// Truncation of R_alpha via its Taylor series -sum (-1)^n a_n z^{2n}.
pub fn r_alpha_truncated(z: f64, alpha: f64, n_max: usize) -> Result<f64> {
    let table = CoeffTable::new(alpha, n_max)?;
    let w = z * z;
    let mut sum = 0.0;
    let mut wn = 1.0;
    for n in 1..=n_max {
        wn *= w;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * table.a(n) * wn;
    }
    Ok(sum)
}

/// Antiderivative S(z) = int_0^z R_alpha(u) du (odd in z).
///
/// Series for |z| <= 0.6, otherwise z - z 2F1(1/2, (3+alpha)/2; 3/2; -z^2).
pub fn r_alpha_primitive(z: f64, alpha: f64) -> Result<f64> {
    let az = z.abs();
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    if az <= 0.6 {
        let w = az * az;
        let p = (3.0 + alpha) / 2.0;
        let mut term = p; // a_1
        let mut wn = w;
        let mut sum = 0.0;
        for n in 1..200 {
            let nf = n as f64;
            let contrib = term * wn / (2.0 * nf + 1.0);
            sum += if n % 2 == 1 { contrib } else { -contrib };
            if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
            term *= (p + nf) / (nf + 1.0);
            wn *= w;
        }
        Ok(sign * az * sum)
    } else {
        let f = hyp2f1(0.5, (3.0 + alpha) / 2.0, 1.5, -az * az)?;
        Ok(sign * az * (1.0 - f))
    }
}

/// Closed form of the weighted series sum_{n>=1} a_n (2n+1)^2 z^{2n}:
/// (1-z^2)^{-(7+alpha)/2} [1 + (10+4 alpha) z^2 + (2+alpha)^2 z^4] - 1.
pub fn weighted_series(z: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(z.abs() < 1.0) {
        return Err(CoreError::OutOfRange(format!(
            "weighted series requires |z| < 1, got {z}"
        )));
    }
    let w = z * z;
    let expo = -(7.0 + alpha) / 2.0 * f64::ln_1p(-w);
    let bracket_tail = (10.0 + 4.0 * alpha) * w + (2.0 + alpha) * (2.0 + alpha) * w * w;
    // e^expo (1 + tail) - 1, rearranged to avoid cancellation near z = 0
    Ok(f64::exp_m1(expo) + expo.exp() * bracket_tail)
}

/// Partial sums sum_{n=1}^{n_terms} a_n (2n+1)^2 z^{2n}; the brute-force
/// oracle for [`weighted_series`].
pub fn weighted_series_partial(z: f64, alpha: f64, n_terms: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let table = CoeffTable::new(alpha, n_terms)?;
    let w = z * z;
    let mut sum = 0.0;
    let mut wn = 1.0;
    for n in 1..=n_terms {
        wn *= w;
        let m = (2 * n + 1) as f64;
        sum += table.a(n) * m * m * wn;
    }
    Ok(sum)
}
