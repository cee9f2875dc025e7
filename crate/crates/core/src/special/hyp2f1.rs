//! Gauss hypergeometric function 2F1 on the non-positive real axis.
//!
//! Only the argument range x <= 0 is supported: the power series is used
//! for x in (-0.5, 0] and the Pfaff transformation
//! 2F1(a,b;c;x) = (1-x)^{-a} 2F1(a, c-b; c; x/(x-1)) for x <= -0.5,
//! which maps the argument into [1/3, 1).

use crate::error::{CoreError, Result};

const MAX_TERMS: usize = 4000;

fn is_nonpositive_int(c: f64) -> bool {
    c <= 0.0 && (c - c.round()).abs() < 1e-12
}

fn series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * x;
        let prev = sum;
        sum += term;
        if term.abs() <= 1e-16 * sum.abs().max(1e-300) && n > 2 {
            return Ok(sum);
        }
        if !sum.is_finite() {
            return Err(CoreError::OutOfRange(format!(
                "2F1 series diverged at term {n} (a={a}, b={b}, c={c}, x={x})"
            )));
        }
        let _ = prev;
    }
    Err(CoreError::OutOfRange(format!(
        "2F1 series did not converge in {MAX_TERMS} terms (a={a}, b={b}, c={c}, x={x})"
    )))
}

/// 2F1(a, b; c; x) for x <= 0, relative accuracy ~1e-10.
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if is_nonpositive_int(c) {
        return Err(CoreError::OutOfRange(format!(
            "2F1 pole: c = {c} is a non-positive integer"
        )));
    }
    if x > 0.0 {
        return Err(CoreError::OutOfRange(format!(
            "2F1 argument {x} outside supported range x <= 0"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x > -0.5 {
        series(a, b, c, x)
    } else {
        let u = x / (x - 1.0);
        Ok((1.0 - x).powf(-a) * series(a, c - b, c, u)?)
    }
}
