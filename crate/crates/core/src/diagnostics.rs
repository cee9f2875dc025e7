//! Per-step measurement, inequality monitoring and decay-exponent fitting.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{ScalarField, SupNorms};
use crate::kernel::RhsEvaluator;
use crate::spectral::{forward, fourier_norm_of_spec, sup_norms};
use crate::stepper::SimState;

/// Norms of the initial data needed by the monitors.
#[derive(Debug, Clone, Copy)]
pub struct InitialNorms {
    pub sup: SupNorms,
    pub fnorm1: f64,
}

impl InitialNorms {
    pub fn of(f0: &ScalarField) -> Result<Self> {
        let spec = forward(f0)?;
        Ok(InitialNorms {
            sup: sup_norms(f0)?,
            fnorm1: fourier_norm_of_spec(&spec, 1.0, false)?,
        })
    }
}

/// One diagnostics row. `d3_ratio` is only defined when the field is
/// nonnegative (up to rounding); it serializes as an empty CSV field
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub linf: f64,
    pub grad_linf: f64,
    pub l1: f64,
    pub mass: f64,
    pub fnorm_1: f64,
    pub fnorm_2pa: f64,
    pub d3_ratio: Option<f64>,
    pub c_alpha_min: f64,
    pub support_margin: f64,
}

pub const CSV_HEADER: &str =
    "t,dt,linf,grad_linf,l1,mass,fnorm_1,fnorm_2pa,d3_ratio,c_alpha_min,support_margin";

impl DiagnosticsRecord {
    /// CSV line with shortest round-trip float formatting; absent monitors
    /// serialize as the empty field.
    pub fn to_csv_line(&self) -> String {
        let d3 = match self.d3_ratio {
            Some(v) => format!("{v}"),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.dt,
            self.linf,
            self.grad_linf,
            self.l1,
            self.mass,
            self.fnorm_1,
            self.fnorm_2pa,
            d3,
            self.c_alpha_min,
            self.support_margin
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 11 {
            return Err(CoreError::Config(format!(
                "expected 11 CSV fields, got {}",
                parts.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| CoreError::Config(format!("bad float {s:?}: {e}")))
        };
        Ok(DiagnosticsRecord {
            t: num(parts[0])?,
            dt: num(parts[1])?,
            linf: num(parts[2])?,
            grad_linf: num(parts[3])?,
            l1: num(parts[4])?,
            mass: num(parts[5])?,
            fnorm_1: num(parts[6])?,
            fnorm_2pa: num(parts[7])?,
            d3_ratio: if parts[8].is_empty() {
                None
            } else {
                Some(num(parts[8])?)
            },
            c_alpha_min: num(parts[9])?,
            support_margin: num(parts[10])?,
        })
    }
}

/// Fraction-of-cell distance of the 1e-8-level support from the boundary.
pub fn support_margin(f: &ScalarField, linf0: f64) -> f64 {
    let thr = 1e-8 * linf0.max(f64::MIN_POSITIVE);
    let g = f.grid;
    let mut margin: f64 = 0.5;
    let mut any = false;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            if f.values[iy * g.nx + ix].abs() > thr {
                any = true;
                let (x, y) = g.point(ix, iy);
                let dx = x.min(g.lx - x) / g.lx;
                let dy = y.min(g.ly - y) / g.ly;
                margin = margin.min(dx.min(dy));
            }
        }
    }
    if any {
        margin
    } else {
        0.5
    }
}

/// Pure measurement of one state.
pub fn record(
    state: &SimState,
    evaluator: &RhsEvaluator,
    f0: &InitialNorms,
) -> Result<DiagnosticsRecord> {
    let f = &state.f;
    let spec = forward(f)?;
    let sn = sup_norms(f)?;
    let mon = evaluator.monitors(f, &f0.sup)?;
    let fnorm_1 = fourier_norm_of_spec(&spec, 1.0, false)?;
    let fnorm_2pa = fourier_norm_of_spec(&spec, 2.0 + evaluator.alpha.value(), false)?;
    let min_f = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let d3_ratio = if min_f >= -1e-12 * f0.sup.linf && mon.d3_lower_bound > 0.0 {
        Some(mon.d3_value / mon.d3_lower_bound)
    } else {
        None
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        dt: state.last_dt,
        linf: sn.linf,
        grad_linf: sn.grad_linf,
        l1: sn.l1,
        mass: sn.mass,
        fnorm_1,
        fnorm_2pa,
        d3_ratio,
        c_alpha_min: mon.c_alpha_min,
        support_margin: support_margin(f, f0.sup.linf),
    })
}

/// Decay-fit kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// value ~ A (1 + C t)^{-p}
    Algebraic,
    /// value ~ A e^{-r t}
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// p for algebraic fits, the rate r for exponential fits.
    pub exponent: f64,
    /// C for algebraic fits, the amplitude A for exponential fits.
    pub constant: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    let slope = sxy / sxx.max(1e-300);
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Least-squares decay fit; the algebraic kind runs an inner golden-section
/// search over C on log(value) vs log(1 + C t).
pub fn fit_decay(series: &[(f64, f64)], kind: FitKind) -> Result<DecayFit> {
    if series.len() < 8 {
        return Err(CoreError::FitFailed(format!(
            "need >= 8 samples, got {}",
            series.len()
        )));
    }
    if series.iter().any(|(_, v)| !(*v > 0.0)) {
        return Err(CoreError::FitFailed("nonpositive values".into()));
    }
    let t0 = series[0].0;
    let t1 = series[series.len() - 1].0;
    if !(t1 > t0) {
        return Err(CoreError::FitFailed("degenerate window".into()));
    }
    let logv: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
    match kind {
        FitKind::Exponential => {
            let ts: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
            let (slope, intercept, r2) = linear_fit(&ts, &logv);
            Ok(DecayFit {
                exponent: -slope,
                constant: intercept.exp(),
                window: (t0, t1),
                r_squared: r2,
            })
        }
        FitKind::Algebraic => {
            let sse_for = |log_c: f64| -> (f64, f64, f64, f64) {
                let c = log_c.exp();
                let xs: Vec<f64> = series.iter().map(|(t, _)| (1.0 + c * t).ln()).collect();
                let (slope, _intercept, r2) = linear_fit(&xs, &logv);
                // recompute SSE explicitly
                let (s, b, _) = linear_fit(&xs, &logv);
                let mut sse = 0.0;
                for i in 0..xs.len() {
                    let e = logv[i] - (b + s * xs[i]);
                    sse += e * e;
                }
                (sse, slope, r2, c)
            };
            // coarse log-space scan then golden-section refinement
            let mut best = (f64::INFINITY, 0.0, 0.0, 1.0);
            let mut best_lc = 0.0;
            for i in 0..=120 {
                let lc = -9.0 + 18.0 * i as f64 / 120.0;
                let r = sse_for(lc);
                if r.0 < best.0 {
                    best = r;
                    best_lc = lc;
                }
            }
            let (mut a, mut b) = (best_lc - 0.3, best_lc + 0.3);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..60 {
                let c1 = b - phi * (b - a);
                let c2 = a + phi * (b - a);
                if sse_for(c1).0 < sse_for(c2).0 {
                    b = c2;
                } else {
                    a = c1;
                }
            }
            let (_, slope, r2, c) = sse_for(0.5 * (a + b));
            Ok(DecayFit {
                exponent: -slope,
                constant: c,
                window: (t0, t1),
                r_squared: r2,
            })
        }
    }
}

/// Monotonicity check with tolerance: s(t_{i+1}) <= s(t_i) + tol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub is_nonincreasing: bool,
    pub worst_violation: f64,
}

pub fn monotonicity_report(series: &[(f64, f64)], tol: f64) -> MonotonicityReport {
    let mut worst: f64 = 0.0;
    for w in series.windows(2) {
        worst = worst.max(w[1].1 - w[0].1);
    }
    MonotonicityReport {
        is_nonincreasing: worst <= tol,
        worst_violation: worst.max(0.0),
    }
}
