//! Scenario library and campaign drivers: theorem-verification suites and
//! the alpha -> 0+ convergence study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alpha::AlphaParams;
use crate::artifacts::{write_plot_script, write_snapshot, CsvSink};
use crate::constants::{grad_threshold, k0_of_alpha, ConstantsReport};
use crate::diagnostics::{monotonicity_report, DiagnosticsRecord};
use crate::error::{CoreError, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::kernel::contour_normalization;
use crate::spectral::{forward, fourier_norm, fourier_norm_of_spec, gradient, sup_norms};
use crate::stepper::{RunOptions, RunSink, SimState, Stepper, StepperConfig};

/// Initial interface shapes. All are reproducible from the scenario alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Gaussian {
        amp: f64,
        sigma: f64,
        center: (f64, f64),
    },
    CosineMode {
        amp: f64,
        k: (i64, i64),
    },
    RandomBand {
        amp: f64,
        kmax: i64,
        seed: u64,
    },
    /// C-infinity bump compactly supported in a disc of radius 4 sigma.
    PositiveBump {
        amp: f64,
        sigma: f64,
    },
}

impl InitialData {
    /// Compactly supported shapes are the R^2 surrogates whose theorem
    /// checks are gated by the support margin.
    pub fn compact_support(&self) -> bool {
        matches!(
            self,
            InitialData::Gaussian { .. } | InitialData::PositiveBump { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub initial_data: InitialData,
    pub grid: GridSpec,
    pub alpha: f64,
    pub stepper: StepperConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        AlphaParams::new(self.alpha)?;
        GridSpec::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)?;
        self.stepper.validate()?;
        match self.initial_data {
            InitialData::Gaussian { amp, sigma, .. } | InitialData::PositiveBump { amp, sigma } => {
                if !(amp.is_finite() && sigma > 0.0) {
                    return Err(CoreError::Config(format!(
                        "need finite amp and sigma > 0, got amp={amp}, sigma={sigma}"
                    )));
                }
            }
            InitialData::CosineMode { amp, .. } => {
                if !amp.is_finite() {
                    return Err(CoreError::Config("amp must be finite".into()));
                }
            }
            InitialData::RandomBand { amp, kmax, .. } => {
                if !(amp.is_finite() && kmax >= 1) {
                    return Err(CoreError::Config(format!(
                        "need finite amp and kmax >= 1, got amp={amp}, kmax={kmax}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_initial(&self) -> Result<ScalarField> {
        self.validate()?;
        let g = self.grid;
        let f = match &self.initial_data {
            InitialData::Gaussian { amp, sigma, center } => {
                let (cx, cy) = *center;
                let s2 = 2.0 * sigma * sigma;
                ScalarField::from_fn(g, |x, y| {
                    amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / s2).exp()
                })
            }
            InitialData::CosineMode { amp, k } => {
                let (k1, k2) = (
                    2.0 * std::f64::consts::PI * k.0 as f64 / g.lx,
                    2.0 * std::f64::consts::PI * k.1 as f64 / g.ly,
                );
                ScalarField::from_fn(g, |x, y| amp * (k1 * x + k2 * y).cos())
            }
            InitialData::RandomBand { amp, kmax, seed } => random_band(g, *amp, *kmax, *seed),
            InitialData::PositiveBump { amp, sigma } => {
                let (cx, cy) = (g.lx / 2.0, g.ly / 2.0);
                let radius = 4.0 * sigma;
                ScalarField::from_fn(g, |x, y| {
                    let q2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (radius * radius);
                    if q2 < 1.0 {
                        amp * (1.0 - 1.0 / (1.0 - q2)).exp()
                    } else {
                        0.0
                    }
                })
            }
        };
        f.validate_finite()?;
        Ok(f)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        hex_string(&h.finalize())
    }

    /// Hash with the random seed (if any) blanked out; scenarios differing
    /// only in seed share this value.
    pub fn config_hash_without_seed(&self) -> String {
        let mut c = self.clone();
        if let InitialData::RandomBand { seed, .. } = &mut c.initial_data {
            *seed = 0;
        }
        c.config_hash()
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn random_band(g: GridSpec, amp: f64, kmax: i64, seed: u64) -> ScalarField {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = ScalarField::zeros(g);
    for n2 in -kmax..=kmax {
        for n1 in -kmax..=kmax {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let k1 = 2.0 * std::f64::consts::PI * n1 as f64 / g.lx;
            let k2 = 2.0 * std::f64::consts::PI * n2 as f64 / g.ly;
            for iy in 0..g.ny {
                for ix in 0..g.nx {
                    let (x, y) = g.point(ix, iy);
                    f.values[iy * g.nx + ix] += a * (k1 * x + k2 * y + ph).cos();
                }
            }
        }
    }
    let m = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        f.scale(amp / m)
    } else {
        f
    }
}

/// Metadata written beside every run; re-running from it reproduces the
/// diagnostics byte-for-byte at a fixed thread count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub constants: ConstantsReport,
    /// Contour-integral normalization b(alpha) used by the kernel.
    pub normalization: f64,
    pub economy_quadrature: bool,
    pub threads: usize,
    pub record_dt: f64,
    pub snapshot_times: Vec<f64>,
    pub config_hash: String,
}

/// A record together with norms not part of the CSV schema.
#[derive(Debug, Clone)]
pub struct ExtRecord {
    pub rec: DiagnosticsRecord,
    /// ||grad f||_L1 (the M_T monitor of the gradient-decay theorem)
    pub grad_l1: f64,
    /// H^4 surrogate ||f||_4 + ||f||_L2 (existence-window monitor)
    pub h4_surrogate: f64,
    /// ||f||_{1+delta} and ||f||_{2+delta+alpha} at delta = 0.2
    pub fnorm_1d: f64,
    pub fnorm_2da: f64,
}

struct ExtSink<'a> {
    alpha: f64,
    ext: Vec<ExtRecord>,
    inner: Option<&'a mut CsvSink>,
}

impl ExtSink<'_> {
    fn push(&mut self, state: &SimState, rec: &DiagnosticsRecord) -> Result<()> {
        let (gx, gy) = gradient(&state.f)?;
        let area = state.f.grid.cell_area();
        let grad_l1 = gx
            .values
            .iter()
            .zip(&gy.values)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .sum::<f64>()
            * area;
        let spec = forward(&state.f)?;
        let h4 = fourier_norm_of_spec(&spec, 4.0, false)? + state.f.l2_norm();
        let delta = 0.2;
        Ok(self.ext.push(ExtRecord {
            rec: rec.clone(),
            grad_l1,
            h4_surrogate: h4,
            fnorm_1d: fourier_norm_of_spec(&spec, 1.0 + delta, false)?,
            fnorm_2da: fourier_norm_of_spec(&spec, 2.0 + delta + self.alpha, false)?,
        }))
    }
}

impl RunSink for ExtSink<'_> {
    fn on_record(&mut self, state: &SimState, rec: &DiagnosticsRecord) {
        // norms of finite fields cannot fail here; state was validated
        let _ = self.push(state, rec);
        if let Some(inner) = self.inner.as_deref_mut() {
            inner.on_record(state, rec);
        }
    }
    fn on_snapshot(&mut self, state: &SimState) {
        if let Some(inner) = self.inner.as_deref_mut() {
            inner.on_snapshot(state);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioRunOptions {
    /// Output root; a subdirectory named after the scenario is created.
    pub out_root: Option<PathBuf>,
    pub record_dt: f64,
    pub snapshot_times: Vec<f64>,
    pub emit_plots: bool,
}

pub struct RunArtifacts {
    pub final_state: SimState,
    pub records: Vec<ExtRecord>,
    pub dir: Option<PathBuf>,
}

/// Deterministic scenario driver; writes diagnostics.csv, snapshots and
/// metadata.json when an output root is given.
pub fn run_scenario(scenario: &Scenario, opts: &ScenarioRunOptions) -> Result<RunArtifacts> {
    scenario.validate()?;
    let f0 = scenario.build_initial()?;
    let alpha = AlphaParams::new(scenario.alpha)?;
    let mut stepper = Stepper::new(scenario.stepper, alpha, scenario.grid)?;

    let dir = match &opts.out_root {
        Some(root) => {
            let dir = root.join(&scenario.name);
            std::fs::create_dir_all(&dir)?;
            Some(dir)
        }
        None => None,
    };

    let mut csv_sink = match &dir {
        Some(d) => Some(CsvSink::create(d, scenario.alpha)?),
        None => None,
    };

    let sup0 = sup_norms(&f0)?;
    let f1_0 = fourier_norm(&f0, 1.0)?;
    if let Some(d) = &dir {
        let constants = ConstantsReport::build(
            scenario.alpha,
            sup0.linf.max(f64::MIN_POSITIVE),
            sup0.l1,
            f1_0.min(0.999_999),
            0.1,
        )?;
        let meta = RunMetadata {
            schema_version: 1,
            scenario: scenario.clone(),
            constants,
            normalization: contour_normalization(scenario.alpha),
            economy_quadrature: true,
            threads: rayon::current_num_threads(),
            record_dt: opts.record_dt,
            snapshot_times: opts.snapshot_times.clone(),
            config_hash: scenario.config_hash(),
        };
        std::fs::write(
            d.join("metadata.json"),
            serde_json::to_string_pretty(&meta)?,
        )?;
        // initial field snapshot is always kept
        write_snapshot(&d.join("fields").join("initial.mskf"), &f0, 0.0, scenario.alpha).ok();
        if opts.emit_plots {
            write_plot_script(d, &scenario.name)?;
        }
    }

    let mut sink = ExtSink {
        alpha: scenario.alpha,
        ext: Vec::new(),
        inner: csv_sink.as_mut(),
    };
    let run_opts = RunOptions {
        record_dt: opts.record_dt,
        snapshot_times: opts.snapshot_times.clone(),
    };
    let final_state = stepper.run(f0, &run_opts, &mut sink)?;
    let records = sink.ext;
    if let Some(cs) = csv_sink {
        cs.finish()?;
    }
    Ok(RunArtifacts {
        final_state,
        records,
        dir,
    })
}

/// The four canonical shapes of the verification suites.
pub fn canonical_scenarios(alpha: f64, n: usize, stepper: StepperConfig) -> Vec<Scenario> {
    let tau = 2.0 * std::f64::consts::PI;
    let grid = GridSpec::square(n, tau).expect("canonical grid");
    let mk = |name: &str, data: InitialData| Scenario {
        name: format!("{name}_a{alpha:.2}"),
        initial_data: data,
        grid,
        alpha,
        stepper,
    };
    vec![
        mk(
            "gauss_bump",
            InitialData::Gaussian {
                amp: 0.1,
                sigma: 0.22,
                center: (tau / 2.0, tau / 2.0),
            },
        ),
        mk("cosine_mode", InitialData::CosineMode { amp: 0.05, k: (2, 1) }),
        mk(
            "random_band",
            InitialData::RandomBand {
                amp: 0.08,
                kmax: 3,
                seed: 7,
            },
        ),
        mk(
            "positive_bump",
            InitialData::PositiveBump {
                amp: 0.12,
                sigma: 0.35,
            },
        ),
    ]
}

/// Compact-support scenarios are valid R^2 surrogates when the initial
/// 1e-8-level support keeps a 25% margin from the cell boundary. The
/// nonlocal semigroup spreads algebraic tails above any fixed level within
/// one step, so the gate tests the initial margin; the per-record margin
/// stays in the diagnostics as the honest indicator.
fn surrogate_gate(records: &[ExtRecord], compact: bool) -> bool {
    !compact
        || records
            .first()
            .map(|r| r.rec.support_margin >= 0.25)
            .unwrap_or(false)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckConclusion {
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub scenario: String,
    pub hypothesis_met: bool,
    /// None whenever the hypothesis gate failed.
    pub conclusion: Option<CheckConclusion>,
}

impl CheckOutcome {
    fn gate_failed(name: &str, scenario: &str) -> Self {
        CheckOutcome {
            name: name.into(),
            scenario: scenario.into(),
            hypothesis_met: false,
            conclusion: None,
        }
    }

    fn checked(name: &str, scenario: &str, passed: bool, details: String) -> Self {
        CheckOutcome {
            name: name.into(),
            scenario: scenario.into(),
            hypothesis_met: true,
            conclusion: Some(CheckConclusion { passed, details }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremSuiteReport {
    pub alpha: f64,
    pub checks: Vec<CheckOutcome>,
}

impl TheoremSuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.conclusion.as_ref().map(|r| r.passed).unwrap_or(true))
    }
}

/// Envelope exponent 2/(1+alpha).
fn envelope_exponent(alpha: f64) -> f64 {
    2.0 / (1.0 + alpha)
}

/// Runs the canonical scenario set and checks every theorem-backed
/// inequality with its hypothesis gate.
pub fn theorem_suite(alpha: f64, n: usize, stepper: StepperConfig) -> Result<TheoremSuiteReport> {
    AlphaParams::new(alpha)?;
    let mut checks = Vec::new();
    let opts = ScenarioRunOptions::default();

    for scenario in canonical_scenarios(alpha, n, stepper) {
        let compact = scenario.initial_data.compact_support();
        let art = run_scenario(&scenario, &opts)?;
        let recs = &art.records;
        let name = &scenario.name;
        let surrogate_ok = surrogate_gate(recs, compact);
        let f0 = scenario.build_initial()?;
        let sup0 = sup_norms(&f0)?;
        let (gx0, gy0) = gradient(&f0)?;
        let grad0 = gx0
            .values
            .iter()
            .zip(&gy0.values)
            .map(|(a, b)| a * a + b * b)
            .fold(0.0f64, f64::max)
            .sqrt();

        // (b) L-infinity maximum principle; hypothesis: valid surrogate
        if surrogate_ok {
            let series: Vec<(f64, f64)> = recs.iter().map(|r| (r.rec.t, r.rec.linf)).collect();
            let m = monotonicity_report(&series, 1e-10);
            checks.push(CheckOutcome::checked(
                "linf_max_principle",
                name,
                m.is_nonincreasing,
                format!(
                    "worst increment {:.3e} over {} records",
                    m.worst_violation,
                    series.len()
                ),
            ));
        } else {
            checks.push(CheckOutcome::gate_failed("linf_max_principle", name));
        }

        // (c) D3 ratio >= 1 for sign-definite data
        let nonneg = f0.values.iter().all(|v| *v >= -1e-12 * sup0.linf);
        if nonneg && sup0.linf > 0.0 && surrogate_ok {
            let worst = recs
                .iter()
                .filter_map(|r| r.rec.d3_ratio)
                .fold(f64::INFINITY, f64::min);
            let ok = worst >= 1.0 - 1e-9 || worst == f64::INFINITY;
            checks.push(CheckOutcome::checked(
                "d3_lower_bound",
                name,
                ok,
                format!("min d3 ratio {worst:.6}"),
            ));
        } else {
            checks.push(CheckOutcome::gate_failed("d3_lower_bound", name));
        }

        // (d) gradient maximum principle under the slope threshold
        let eps = 0.1;
        let thr = grad_threshold(alpha, eps)?;
        if grad0 < thr && surrogate_ok {
            let gseries: Vec<(f64, f64)> =
                recs.iter().map(|r| (r.rec.t, r.rec.grad_linf)).collect();
            let gm = monotonicity_report(&gseries, 1e-8);
            let cmin = recs
                .iter()
                .map(|r| r.rec.c_alpha_min)
                .fold(f64::INFINITY, f64::min);
            checks.push(CheckOutcome::checked(
                "grad_max_principle",
                name,
                gm.is_nonincreasing && cmin > eps,
                format!(
                    "worst increment {:.3e}, min C_alpha {:.4} (eps {eps})",
                    gm.worst_violation, cmin
                ),
            ));
        } else {
            checks.push(CheckOutcome::gate_failed("grad_max_principle", name));
        }

        // (e) decay envelopes
        if nonneg && sup0.linf > 0.0 && surrogate_ok {
            let dc = crate::constants::decay_constants(alpha, sup0.linf, sup0.l1)?;
            let p = envelope_exponent(alpha);
            let mut worst = 0.0f64;
            for r in recs.iter() {
                let env = sup0.linf * (1.0 + dc.c_decay * r.rec.t).powf(-p);
                worst = worst.max(r.rec.linf / env - 1.0);
            }
            checks.push(CheckOutcome::checked(
                "linf_decay_envelope",
                name,
                worst <= 1e-9,
                format!("worst envelope excess {worst:.3e}"),
            ));

            if grad0 < thr && grad0 > 0.0 {
                let m_t = recs.iter().map(|r| r.grad_l1).fold(0.0f64, f64::max);
                let base = 1.0 + 2.0 * m_t / std::f64::consts::PI
                    + 4.0 * sup0.linf * sup0.linf * grad0;
                let c_sharp = (1.0 + alpha) * eps * grad0.powf((1.0 + alpha) / 2.0)
                    / (8.0 * base.powf((3.0 + alpha) / 2.0));
                let mut worst_g = 0.0f64;
                for r in recs.iter() {
                    let env = grad0 * (1.0 + c_sharp * r.rec.t).powf(-p);
                    worst_g = worst_g.max(r.rec.grad_linf / env - 1.0);
                }
                checks.push(CheckOutcome::checked(
                    "grad_decay_envelope",
                    name,
                    worst_g <= 1e-9,
                    format!("worst envelope excess {worst_g:.3e}, M_T {m_t:.4}"),
                ));

                // (f) W^{1,inf} envelope with C* = min of the two constants
                let c_star = dc.c_decay.min(c_sharp);
                let w0 = sup0.linf + grad0;
                let mut worst_w = 0.0f64;
                for r in recs.iter() {
                    let env = w0 * (1.0 + c_star * r.rec.t).powf(-p);
                    worst_w = worst_w.max((r.rec.linf + r.rec.grad_linf) / env - 1.0);
                }
                checks.push(CheckOutcome::checked(
                    "w1inf_decay_envelope",
                    name,
                    worst_w <= 1e-9,
                    format!("worst envelope excess {worst_w:.3e}"),
                ));
            } else {
                checks.push(CheckOutcome::gate_failed("grad_decay_envelope", name));
                checks.push(CheckOutcome::gate_failed("w1inf_decay_envelope", name));
            }
        } else {
            checks.push(CheckOutcome::gate_failed("linf_decay_envelope", name));
        }
    }

    // (a) Fourier-norm monotonicity needs ||f0||_1 < k0(alpha)
    match k0_of_alpha(alpha) {
        Ok(k0) => {
            let scenario = small_fourier_norm_scenario(alpha, n, stepper, 0.8 * k0)?;
            let art = run_scenario(&scenario, &opts)?;
            let series: Vec<(f64, f64)> =
                art.records.iter().map(|r| (r.rec.t, r.rec.fnorm_1)).collect();
            let m = monotonicity_report(&series, 1e-8);
            // Lemma 3.3 companion: mu * int ||f||_{2+d+a} dt <= ||f0||_{1+d}
            let mu = crate::constants::mu_of(alpha, series[0].1)?;
            let mut integral = 0.0;
            for w in art.records.windows(2) {
                integral += 0.5
                    * (w[1].rec.t - w[0].rec.t)
                    * (w[0].fnorm_2da + w[1].fnorm_2da);
            }
            let lhs = mu * integral;
            let rhs = art.records[0].fnorm_1d;
            checks.push(CheckOutcome::checked(
                "fourier_norm_monotone",
                &scenario.name,
                m.is_nonincreasing,
                format!("worst increment {:.3e}", m.worst_violation),
            ));
            checks.push(CheckOutcome::checked(
                "dissipation_budget",
                &scenario.name,
                lhs <= rhs * (1.0 + 1e-9),
                format!("mu int ||f||_(2+d+a) = {lhs:.6e} vs ||f0||_(1+d) = {rhs:.6e}"),
            ));
        }
        Err(_) => {
            checks.push(CheckOutcome::gate_failed("fourier_norm_monotone", "k0_regime"));
            checks.push(CheckOutcome::gate_failed("dissipation_budget", "k0_regime"));
        }
    }

    Ok(TheoremSuiteReport { alpha, checks })
}

/// Gaussian bump rescaled so that ||f0||_1 hits the requested value.
pub fn small_fourier_norm_scenario(
    alpha: f64,
    n: usize,
    stepper: StepperConfig,
    target_f1: f64,
) -> Result<Scenario> {
    let tau = 2.0 * std::f64::consts::PI;
    let grid = GridSpec::square(n, tau)?;
    let probe = Scenario {
        name: format!("f1small_a{alpha:.2}"),
        initial_data: InitialData::Gaussian {
            amp: 1.0,
            sigma: 0.8,
            center: (tau / 2.0, tau / 2.0),
        },
        grid,
        alpha,
        stepper,
    };
    let f = probe.build_initial()?;
    let f1 = fourier_norm(&f, 1.0)?;
    let amp = target_f1 / f1;
    Ok(Scenario {
        initial_data: InitialData::Gaussian {
            amp,
            sigma: 0.8,
            center: (tau / 2.0, tau / 2.0),
        },
        ..probe
    })
}

/// Scenario whose initial slope is `fraction` of the gradient threshold.
pub fn slope_scenario(
    alpha: f64,
    n: usize,
    stepper: StepperConfig,
    fraction: f64,
    eps: f64,
) -> Result<Scenario> {
    let tau = 2.0 * std::f64::consts::PI;
    let grid = GridSpec::square(n, tau)?;
    let probe = Scenario {
        name: format!("slope_a{alpha:.2}"),
        initial_data: InitialData::Gaussian {
            amp: 1.0,
            sigma: 0.8,
            center: (tau / 2.0, tau / 2.0),
        },
        grid,
        alpha,
        stepper,
    };
    let f = probe.build_initial()?;
    let (gx, gy) = gradient(&f)?;
    let g0 = gx
        .values
        .iter()
        .zip(&gy.values)
        .map(|(a, b)| a * a + b * b)
        .fold(0.0f64, f64::max)
        .sqrt();
    let amp = fraction * grad_threshold(alpha, eps)? / g0;
    Ok(Scenario {
        initial_data: InitialData::Gaussian {
            amp,
            sigma: 0.8,
            center: (tau / 2.0, tau / 2.0),
        },
        ..probe
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub alphas: Vec<f64>,
    pub l2_errors: Vec<f64>,
    pub hk_errors: Vec<f64>,
    pub l1_errors: Vec<f64>,
    /// Log-log slope of l2_error vs alpha over the three smallest alphas;
    /// None when fewer than two nonzero errors exist.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceOptions {
    pub t_star: f64,
    /// Abort the study when the H^4 surrogate exceeds this multiple of its
    /// initial value (the uniform existence-window assumption).
    pub h4_ceiling_factor: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            t_star: 1.0,
            h4_ceiling_factor: 100.0,
        }
    }
}

/// alpha -> 0+ convergence study: every member shares f0, grid and stepper
/// tolerances; errors are measured against the alpha = 0 run at t_star.
pub fn alpha_convergence_study(
    base: &Scenario,
    alphas: &[f64],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceResult> {
    base.validate()?;
    let run_at = |alpha: f64| -> Result<(SimState, Vec<ExtRecord>)> {
        let mut s = base.clone();
        s.alpha = alpha;
        s.name = format!("{}_sweep_a{alpha:.4}", base.name);
        s.stepper.t_end = opts.t_star;
        let art = run_scenario(&s, &ScenarioRunOptions::default())?;
        let h4_0 = art.records[0].h4_surrogate;
        for r in &art.records {
            if r.h4_surrogate > opts.h4_ceiling_factor * h4_0.max(f64::MIN_POSITIVE) {
                return Err(CoreError::Diverged(format!(
                    "H^4 surrogate {} exceeded ceiling at t = {} (alpha = {alpha}); \
                     outside the uniform existence window",
                    r.h4_surrogate, r.rec.t
                )));
            }
        }
        Ok((art.final_state, art.records))
    };

    let (reference, _) = run_at(0.0)?;
    let mut l2_errors = Vec::new();
    let mut hk_errors = Vec::new();
    let mut l1_errors = Vec::new();
    for &a in alphas {
        let (state, _) = run_at(a)?;
        let diff = state.f.axpy(-1.0, &reference.f);
        let area = diff.grid.cell_area();
        let l2 = diff.l2_norm();
        let l1: f64 = diff.values.iter().map(|v| v.abs()).sum::<f64>() * area;
        let spec = forward(&diff)?;
        let hk = fourier_norm_of_spec(&spec, 4.0, false)? + l2;
        l2_errors.push(l2);
        hk_errors.push(hk);
        l1_errors.push(l1);
    }

    // slope over the three smallest alphas with nonzero errors
    let mut pairs: Vec<(f64, f64)> = alphas
        .iter()
        .zip(&l2_errors)
        .filter(|(a, e)| **a > 0.0 && **e > 0.0)
        .map(|(a, e)| (*a, *e))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    pairs.truncate(3);
    let slope = if pairs.len() >= 2 {
        let xs: Vec<f64> = pairs.iter().map(|(a, _)| a.ln()).collect();
        let ys: Vec<f64> = pairs.iter().map(|(_, e)| e.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Some(sxy / sxx)
    } else {
        None
    };

    Ok(ConvergenceResult {
        alphas: alphas.to_vec(),
        l2_errors,
        hk_errors,
        l1_errors,
        slope,
    })
}

/// Reads back the metadata of a finished run directory.
pub fn read_metadata(dir: &Path) -> Result<RunMetadata> {
    let text = std::fs::read_to_string(dir.join("metadata.json"))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quick_stepper(t_end: f64) -> StepperConfig {
        StepperConfig {
            t_end,
            rtol: 1e-5,
            dt_max: 0.25,
            ..Default::default()
        }
    }

    #[test]
    fn scenario_validation_and_hash() {
        let s = canonical_scenarios(0.25, 32, quick_stepper(0.5));
        assert_eq!(s.len(), 4);
        for sc in &s {
            sc.validate().unwrap();
        }
        let h1 = s[2].config_hash();
        let mut other = s[2].clone();
        if let InitialData::RandomBand { seed, .. } = &mut other.initial_data {
            *seed = 8;
        }
        assert_ne!(h1, other.config_hash());
        assert_eq!(
            s[2].config_hash_without_seed(),
            other.config_hash_without_seed()
        );
        let mut bad = s[0].clone();
        bad.alpha = 1.2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn initial_shapes_have_expected_norms() {
        let tau = 2.0 * std::f64::consts::PI;
        let grid = GridSpec::square(64, tau).unwrap();
        let s = Scenario {
            name: "g".into(),
            initial_data: InitialData::Gaussian {
                amp: 0.5,
                sigma: 0.5,
                center: (tau / 2.0, tau / 2.0),
            },
            grid,
            alpha: 0.0,
            stepper: quick_stepper(0.1),
        };
        let f = s.build_initial().unwrap();
        let sn = sup_norms(&f).unwrap();
        assert_relative_eq!(sn.linf, 0.5, max_relative = 1e-12);
        assert_relative_eq!(sn.l1, 0.5 * tau * 0.25 / 2.0 * 2.0, epsilon = 1e-6);

        let pb = Scenario {
            initial_data: InitialData::PositiveBump { amp: 0.3, sigma: 0.5 },
            ..s.clone()
        };
        let f = pb.build_initial().unwrap();
        assert!(f.values.iter().all(|v| *v >= 0.0));
        let sn = sup_norms(&f).unwrap();
        assert_relative_eq!(sn.linf, 0.3, max_relative = 1e-12);
        // compact support: zero outside radius 2
        assert_eq!(f.at(0, 0), 0.0);

        let rb = Scenario {
            initial_data: InitialData::RandomBand {
                amp: 0.1,
                kmax: 2,
                seed: 3,
            },
            ..s
        };
        let f1 = rb.build_initial().unwrap();
        let f2 = rb.build_initial().unwrap();
        assert_eq!(f1.values, f2.values, "seeded build must be reproducible");
        let sn = sup_norms(&f1).unwrap();
        assert_relative_eq!(sn.linf, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn zero_amplitude_runs_identically_zero() {
        let tau = 2.0 * std::f64::consts::PI;
        let s = Scenario {
            name: "zero".into(),
            initial_data: InitialData::CosineMode { amp: 0.0, k: (1, 0) },
            grid: GridSpec::square(32, tau).unwrap(),
            alpha: 0.1,
            stepper: quick_stepper(0.3),
        };
        let art = run_scenario(&s, &ScenarioRunOptions::default()).unwrap();
        assert!(art.final_state.f.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_regime_cosine_decays_at_semigroup_rate() {
        // amp 1e-8 single mode: final spectral amplitude within 1e-6
        // relative of exp(-|k|^{1+alpha} t_end)
        let tau = 2.0 * std::f64::consts::PI;
        let alpha = 0.25;
        let s = Scenario {
            name: "lin".into(),
            initial_data: InitialData::CosineMode { amp: 1e-8, k: (1, 0) },
            grid: GridSpec::square(32, tau).unwrap(),
            alpha,
            stepper: quick_stepper(1.0),
        };
        let art = run_scenario(&s, &ScenarioRunOptions::default()).unwrap();
        let expect = 1e-8 * (-1.0f64).exp();
        let got = art
            .final_state
            .f
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert_relative_eq!(got, expect, max_relative = 1e-6);
    }

    #[test]
    fn sweep_with_alpha_zero_gives_exact_zero_errors() {
        let tau = 2.0 * std::f64::consts::PI;
        let base = Scenario {
            name: "sweep0".into(),
            initial_data: InitialData::Gaussian {
                amp: 0.05,
                sigma: 0.8,
                center: (tau / 2.0, tau / 2.0),
            },
            grid: GridSpec::square(32, tau).unwrap(),
            alpha: 0.0,
            stepper: quick_stepper(0.25),
        };
        let res = alpha_convergence_study(
            &base,
            &[0.0],
            &ConvergenceOptions {
                t_star: 0.25,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.l2_errors, vec![0.0]);
        assert_eq!(res.l1_errors, vec![0.0]);
        assert!(res.slope.is_none());
    }

    #[test]
    fn steep_slope_fails_gradient_hypothesis_gate() {
        // initial slope 0.9 sits above every alpha < 1 threshold: the
        // gradient checks must report "hypothesis not met", not failure
        let alpha = 0.25;
        let thr = grad_threshold(alpha, 0.1).unwrap();
        let s = slope_scenario(alpha, 32, quick_stepper(0.05), 0.9 / thr, 0.1).unwrap();
        let f0 = s.build_initial().unwrap();
        let (gx, gy) = gradient(&f0).unwrap();
        let g0 = gx
            .values
            .iter()
            .zip(&gy.values)
            .map(|(a, b)| a * a + b * b)
            .fold(0.0f64, f64::max)
            .sqrt();
        assert!((g0 - 0.9).abs() < 1e-9);
        assert!(g0 > thr);
        // mirror of the suite's gate logic
        let hypothesis_met = g0 < thr;
        assert!(!hypothesis_met);
    }

    #[test]
    fn run_writes_self_describing_artifacts() {
        let tau = 2.0 * std::f64::consts::PI;
        let dir = tempfile::tempdir().unwrap();
        let s = Scenario {
            name: "artifact_run".into(),
            initial_data: InitialData::Gaussian {
                amp: 0.05,
                sigma: 0.8,
                center: (tau / 2.0, tau / 2.0),
            },
            grid: GridSpec::square(32, tau).unwrap(),
            alpha: 0.2,
            stepper: quick_stepper(0.2),
        };
        let opts = ScenarioRunOptions {
            out_root: Some(dir.path().to_path_buf()),
            record_dt: 0.0,
            snapshot_times: vec![0.1],
            emit_plots: true,
        };
        let art = run_scenario(&s, &opts).unwrap();
        let rd = art.dir.unwrap();
        assert!(rd.join("diagnostics.csv").exists());
        assert!(rd.join("metadata.json").exists());
        assert!(rd.join("plot.plt").exists());
        assert!(rd.join("fields").join("initial.mskf").exists());
        assert!(rd.join("fields").join("snap_0000.mskf").exists());
        let meta = read_metadata(&rd).unwrap();
        assert_eq!(meta.scenario, s);
        assert_eq!(meta.config_hash, s.config_hash());
        // determinism: rerunning reproduces the CSV byte for byte
        let csv1 = std::fs::read(rd.join("diagnostics.csv")).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let opts2 = ScenarioRunOptions {
            out_root: Some(dir2.path().to_path_buf()),
            ..opts
        };
        run_scenario(&s, &opts2).unwrap();
        let csv2 = std::fs::read(dir2.path().join("artifact_run").join("diagnostics.csv")).unwrap();
        assert_eq!(csv1, csv2);
    }
}
