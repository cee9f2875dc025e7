//! Command-line driver for the alpha-Muskat simulation laboratory.
//!
//! Exit codes: 0 success, 1 verification/check failure, 2 usage or
//! configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use muskat_core::constants::{c_alpha, decay_constants, grad_threshold, k0_of_alpha, mu_of};
use muskat_core::experiments::{
    alpha_convergence_study, run_scenario, ConvergenceOptions, RunMetadata, Scenario,
    ScenarioRunOptions,
};
use muskat_core::grid::{GridSpec, ScalarField};
use muskat_core::special::{
    hyp2f1, ln_gamma, ode_ratio_h, ode_residual, pv_exp_integral, weighted_series,
    weighted_series_partial, CoeffTable,
};
use muskat_core::spectral::{apply_fractional_laplacian, forward, inverse};
use muskat_core::{AlphaParams, RhsEvaluator, RhsMethod};

#[derive(Parser)]
#[command(
    name = "muskat",
    about = "Simulation laboratory for the generalised alpha-Muskat interface equation",
    version
)]
struct Cli {
    /// Output root directory (default: $MUSKAT_LAB_OUT or ./runs)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on internal parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for seeded utilities (oracle fields)
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Emit gnuplot scripts next to run outputs
    #[arg(long, global = true)]
    emit_plots: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the named constants for one or more alphas
    Constants(ConstantsArgs),
    /// Run the special-function and constants verification checks
    Verify(VerifyArgs),
    /// Run a scenario from a config (or metadata) JSON file
    Run(RunArgs),
    /// Alpha -> 0+ convergence study around a base scenario
    Sweep(SweepArgs),
    /// Three-way RHS cross-method oracle
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Comma-separated list of alphas
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    /// ||f0||_1 at which the dissipation margin mu is evaluated
    #[arg(long, default_value_t = 0.05)]
    f1_norm: f64,
    /// Also write the table as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only the named check
    #[arg(long)]
    check: Option<String>,
    /// Sample count for the pv-bound check
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Test hook: force the named check to use a corrupted identity
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// RunConfig JSON (or a finished run's metadata.json)
    config: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated alphas of the sweep members
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    /// Comparison time t*
    #[arg(long, default_value_t = 1.0)]
    t_star: f64,
    /// Base scenario config JSON
    config: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Field amplitude of the cross-method test
    #[arg(long, default_value_t = 0.1)]
    amp: f64,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    /// Grid points per side
    #[arg(long, default_value_t = 128)]
    n: usize,
}

/// On-disk run configuration; strict keys, versioned.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    schema_version: u32,
    scenario: Scenario,
    #[serde(default)]
    record_dt: f64,
    #[serde(default)]
    snapshot_times: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // a failed build means a pool already exists; the recorded thread
        // count reflects the active pool either way
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out_root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("MUSKAT_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let r = match &cli.command {
        Command::Constants(a) => cmd_constants(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Run(a) => cmd_run(a, &out_root, cli.emit_plots),
        Command::Sweep(a) => cmd_sweep(a, &out_root),
        Command::Oracle(a) => cmd_oracle(a, cli.seed),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_constants(a: &ConstantsArgs) -> anyhow::Result<ExitCode> {
    if a.alpha.is_empty() {
        anyhow::bail!("at least one --alpha is required");
    }
    let mut rows = Vec::new();
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>14} {:>12} {:>12}",
        "alpha", "c_alpha", "k0", "mu", "grad_thresh", "c_tilde", "c_decay"
    );
    for &alpha in &a.alpha {
        let c = c_alpha(alpha).map_err(|e| anyhow::anyhow!("{e}"))?;
        let k0 = match k0_of_alpha(alpha) {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("alpha must be < 0.5 for k0 (got {alpha}); k0/mu omitted");
                None
            }
        };
        let mu = if k0.is_some() {
            mu_of(alpha, a.f1_norm).ok()
        } else {
            None
        };
        let gt = grad_threshold(alpha, 0.1).map_err(|e| anyhow::anyhow!("{e}"))?;
        let dc = decay_constants(alpha, 1.0, 1.0).map_err(|e| anyhow::anyhow!("{e}"))?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.8}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>6} {:>12.8} {:>12} {:>12} {:>14.8} {:>12.8} {:>12.8}",
            alpha,
            c,
            fmt(k0),
            fmt(mu),
            gt,
            dc.c_tilde,
            dc.c_decay
        );
        rows.push((alpha, c, k0, mu, gt, dc));
    }
    if let Some(path) = &a.csv {
        let mut s = String::from("alpha,c_alpha,k0,mu,grad_threshold,c_tilde,c_decay\n");
        for (alpha, c, k0, mu, gt, dc) in rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{alpha},{c},{},{},{gt},{},{}\n",
                opt(k0),
                opt(mu),
                dc.c_tilde,
                dc.c_decay
            ));
        }
        std::fs::write(path, s)?;
    }
    Ok(ExitCode::SUCCESS)
}

struct CheckResult {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<ExitCode> {
    use rand::{Rng, SeedableRng};
    let fault = |name: &str| a.inject_fault.as_deref() == Some(name);
    let wanted = |name: &str| a.check.as_deref().map(|c| c == name).unwrap_or(true);
    let mut results: Vec<CheckResult> = Vec::new();
    let err = |e: muskat_core::CoreError| anyhow::anyhow!("{e}");

    if wanted("series-identity") {
        let mut worst: f64 = 0.0;
        for ai in 0..5 {
            let alpha = 0.1 * ai as f64;
            for zi in 0..20 {
                let z = 0.95 * (zi as f64 + 0.5) / 20.0;
                let mut closed = weighted_series(z, alpha).map_err(err)?;
                if fault("series-identity") {
                    closed *= 1.0 + 1e-6;
                }
                let partial = weighted_series_partial(z, alpha, 600).map_err(err)?;
                worst = worst.max(((closed - partial) / partial.max(1e-300)).abs());
            }
        }
        results.push(CheckResult {
            name: "series-identity",
            ok: worst <= 1e-10,
            detail: format!("max rel err {worst:.3e}"),
        });
    }

    if wanted("an-recurrence") {
        let mut worst: f64 = 0.0;
        for &alpha in &[0.0, 0.25, 0.45, 0.9] {
            let p = (3.0 + alpha) / 2.0;
            let t = CoeffTable::new(alpha, 20).map_err(err)?;
            for n in 1..=20usize {
                let direct =
                    (ln_gamma(p + n as f64) - ln_gamma(p) - ln_gamma(n as f64 + 1.0)).exp();
                let mut an = t.a(n);
                if fault("an-recurrence") {
                    an += 1e-9;
                }
                worst = worst.max(((an - direct) / direct).abs());
            }
        }
        results.push(CheckResult {
            name: "an-recurrence",
            ok: worst <= 1e-12,
            detail: format!("max rel err {worst:.3e}"),
        });
    }

    if wanted("pv-bound") {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        let mut ok = true;
        let mut worst_margin = f64::INFINITY;
        for _ in 0..a.samples {
            let s: f64 = rng.gen_range(-100.0..100.0);
            let alpha: f64 = rng.gen_range(0.0..0.99);
            let mut v = pv_exp_integral(s, alpha).map_err(err)?;
            if fault("pv-bound") {
                v *= 3.0;
            }
            let bound = c_alpha(alpha).map_err(err)? * s.abs().powf(alpha);
            worst_margin = worst_margin.min(bound - v.abs());
            if v.abs() > bound * (1.0 + 1e-9) + 1e-12 {
                ok = false;
            }
        }
        let small = pv_exp_integral(1.0, 1e-5).map_err(err)?;
        let pi_ok = (small - std::f64::consts::PI).abs() < 1e-4;
        results.push(CheckResult {
            name: "pv-bound",
            ok: ok && pi_ok,
            detail: format!(
                "{} samples, min margin {worst_margin:.3e}, pv(1,1e-5) = {small:.6}",
                a.samples
            ),
        });
    }

    if wanted("ode-residual") {
        let mut worst: f64 = 0.0;
        let mut hs: f64 = 0.0;
        for &alpha in &[0.0, 0.45] {
            for i in 0..25 {
                let z = -2.4 + 4.8 * (i as f64 + 0.5) / 25.0;
                let mut r = ode_residual(z, alpha, 1e-5).map_err(err)?;
                if fault("ode-residual") {
                    r += 1e-3;
                }
                worst = worst.max(r.abs());
            }
            // H(z) against quadrature of H'
            let n = 200_000;
            let h = 0.5 / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let s = (i as f64 + 0.5) * h;
                acc += (3.0 + alpha) * s * s * (1.0 + s * s).powf(-(5.0 + alpha) / 2.0);
            }
            let quad = acc * h;
            hs = hs.max((ode_ratio_h(0.5, alpha).map_err(err)? - quad).abs());
        }
        results.push(CheckResult {
            name: "ode-residual",
            ok: worst <= 1e-6 && hs <= 1e-8,
            detail: format!("max residual {worst:.3e}, H-quadrature gap {hs:.3e}"),
        });
    }

    if wanted("hyp2f1-identities") {
        let mut v1 = hyp2f1(1.0, 1.0, 2.0, -1.0).map_err(err)?;
        if fault("hyp2f1-identities") {
            v1 += 1e-6;
        }
        let e1 = ((v1 - 2f64.ln()) / 2f64.ln()).abs();
        let v2 = hyp2f1(1.5, 2.5, 2.5, -0.25).map_err(err)?;
        let e2 = ((v2 - 1.25f64.powf(-1.5)) / 1.25f64.powf(-1.5)).abs();
        results.push(CheckResult {
            name: "hyp2f1-identities",
            ok: e1 <= 1e-10 && e2 <= 1e-10,
            detail: format!("log identity err {e1:.3e}, binomial err {e2:.3e}"),
        });
    }

    if wanted("k0-root") {
        let mut ok = true;
        let mut prev = f64::INFINITY;
        let mut detail = String::new();
        let mut alpha = 0.0;
        while alpha <= 0.451 {
            let mut k0 = k0_of_alpha(alpha).map_err(err)?;
            if fault("k0-root") {
                k0 *= 1.1;
            }
            let c = c_alpha(alpha).map_err(err)?;
            let below = 2.0 * c * weighted_series(0.99 * k0, alpha).map_err(err)?;
            let above = 2.0 * c * weighted_series(1.01 * k0, alpha).map_err(err)?;
            if !(below < 1.0 && above > 1.0 && k0 < prev) {
                ok = false;
                detail = format!("violation at alpha = {alpha}");
            }
            prev = k0;
            alpha += 0.05;
        }
        if detail.is_empty() {
            detail = format!("k0(0) = {:.6}", k0_of_alpha(0.0).map_err(err)?);
        }
        results.push(CheckResult {
            name: "k0-root",
            ok,
            detail,
        });
    }

    if results.is_empty() {
        anyhow::bail!("unknown check {:?}", a.check);
    }
    let mut all_ok = true;
    for r in &results {
        println!(
            "check {:<18} {} ({})",
            r.name,
            if r.ok { "ok" } else { "FAIL" },
            r.detail
        );
        all_ok &= r.ok;
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn load_scenario(path: &Path) -> anyhow::Result<(Scenario, f64, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    if let Ok(cfg) = serde_json::from_str::<RunConfig>(&text) {
        if cfg.schema_version != 1 {
            anyhow::bail!("unsupported schema_version {}", cfg.schema_version);
        }
        return Ok((cfg.scenario, cfg.record_dt, cfg.snapshot_times));
    }
    // fall back to a finished run's metadata.json (self-describing rerun)
    let meta: RunMetadata = serde_json::from_str(&text).map_err(|e| {
        anyhow::anyhow!(
            "config {} is neither a RunConfig nor metadata: {e}",
            path.display()
        )
    })?;
    Ok((meta.scenario, meta.record_dt, meta.snapshot_times))
}

fn cmd_run(a: &RunArgs, out_root: &Path, emit_plots: bool) -> anyhow::Result<ExitCode> {
    let (scenario, record_dt, snapshot_times) = load_scenario(&a.config)?;
    scenario
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
    let opts = ScenarioRunOptions {
        out_root: Some(out_root.to_path_buf()),
        record_dt,
        snapshot_times,
        emit_plots,
    };
    let art = run_scenario(&scenario, &opts).map_err(|e| anyhow::anyhow!("{e}"))?;
    let dir = art.dir.expect("run directory");
    println!(
        "run {} finished: t = {:.6}, steps = {}, linf = {:.6e}",
        scenario.name,
        art.final_state.t,
        art.final_state.step_count,
        art.records.last().map(|r| r.rec.linf).unwrap_or(0.0)
    );
    println!("artifacts: {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(a: &SweepArgs, out_root: &Path) -> anyhow::Result<ExitCode> {
    let (scenario, _, _) = load_scenario(&a.config)?;
    let opts = ConvergenceOptions {
        t_star: a.t_star,
        ..Default::default()
    };
    let res =
        alpha_convergence_study(&scenario, &a.alphas, &opts).map_err(|e| anyhow::anyhow!("{e}"))?;
    let dir = out_root.join(format!("{}_sweep", scenario.name));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("convergence.json"),
        serde_json::to_string_pretty(&res)?,
    )?;
    println!("alphas:    {:?}", res.alphas);
    println!("l2_errors: {:?}", res.l2_errors);
    println!("l1_errors: {:?}", res.l1_errors);
    println!("slope:     {:?}", res.slope);
    println!("artifacts: {}", dir.display());

    // check-failure semantics: errors must decrease as alpha decreases
    let mut sorted: Vec<(f64, f64)> = res
        .alphas
        .iter()
        .cloned()
        .zip(res.l2_errors.iter().cloned())
        .filter(|(a, _)| *a > 0.0)
        .collect();
    sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let decreasing = sorted.windows(2).all(|w| w[0].1 <= w[1].1);
    if !decreasing {
        eprintln!("check sweep-monotone FAIL: l2 errors do not decrease with alpha");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: &OracleArgs, seed: u64) -> anyhow::Result<ExitCode> {
    use muskat_core::experiments::InitialData;
    let err = |e: muskat_core::CoreError| anyhow::anyhow!("{e}");
    let tau = 2.0 * std::f64::consts::PI;
    let grid = GridSpec::square(a.n, tau).map_err(err)?;
    let alpha = AlphaParams::new(a.alpha).map_err(err)?;
    let probe = Scenario {
        name: "oracle".into(),
        initial_data: InitialData::RandomBand {
            amp: a.amp.abs().max(f64::MIN_POSITIVE),
            kmax: 3,
            seed,
        },
        grid,
        alpha: a.alpha,
        stepper: Default::default(),
    };
    let f = if a.amp == 0.0 {
        ScalarField::zeros(grid)
    } else {
        probe.build_initial().map_err(err)?
    };

    let methods = [
        ("direct", RhsMethod::DirectQuadrature { cutoff_cells: 1 }),
        ("split", RhsMethod::SplitSpectral { quad_refinement: 3 }),
        ("series", RhsMethod::SeriesTruncated { n_max: 8 }),
    ];
    let mut outs = Vec::new();
    for (name, m) in methods {
        let ev = RhsEvaluator::new(grid, alpha, m).map_err(err)?;
        outs.push((name, ev.rhs(&f).map_err(err)?));
    }
    if a.amp == 0.0 {
        let all_zero = outs
            .iter()
            .all(|(_, o)| o.values.iter().all(|v| v.abs() < 1e-14));
        println!("zero field: all methods return exact zeros = {all_zero}");
        return Ok(if all_zero {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    }

    let scale = outs[1].1.l2_norm().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..outs.len() {
        for j in (i + 1)..outs.len() {
            let d = outs[i].1.axpy(-1.0, &outs[j].1).l2_norm() / scale;
            println!("|{} - {}| / |rhs| = {d:.3e}", outs[i].0, outs[j].0);
            worst = worst.max(d);
        }
    }
    // linearization report at vanishing amplitude
    let tiny = f.scale(1e-6 / a.amp.abs());
    let spec = forward(&tiny).map_err(err)?;
    let lam = inverse(&apply_fractional_laplacian(&spec, 1.0 + a.alpha).map_err(err)?);
    let mut worst_lin: f64 = 0.0;
    for (name, m) in methods {
        let ev = RhsEvaluator::new(grid, alpha, m).map_err(err)?;
        let r = ev.rhs(&tiny).map_err(err)?;
        let resid = r.axpy(1.0, &lam).l2_norm() / lam.l2_norm();
        println!("linearization residual [{name}] = {resid:.3e}");
        worst_lin = worst_lin.max(resid);
    }
    let ok = worst <= 1e-4 && worst_lin <= 1e-3;
    println!(
        "oracle {}: cross-method {worst:.3e} (tol 1e-4), linearization {worst_lin:.3e} (tol 1e-3)",
        if ok { "ok" } else { "FAIL" }
    );
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
