//! Subcommand implementations. Exit codes: 0 success, 1 verification or
//! run failure, 2 usage/config error; failures also emit a JSON error
//! object on stderr.

use asmc_core::config::{parse_config, RunConfig};
use asmc_core::diagnostics::{
    baseline_direct_langevin, calibrate, complexity_sweep, coverage_trial, mc_error, RunSetup,
    TestFunction,
};
use asmc_core::oracle::{
    gibbs_reference, load_gibbs, load_spectral, save_gibbs, save_spectral, spectral_solve,
    SpectralOptions,
};
use asmc_core::potential::{landscape_summary, LandscapeSummary, Potential};
use asmc_core::schedule::{build_schedule, critical_level, Plan};
use asmc_core::smc::{run_asmc, AsmcOptions, InitialEnsemble, ParticleEnsemble, RunTrace};
use asmc_core::Error;
use clap::{Args, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Subcommand)]
pub enum Command {
    /// Resolve (M, N, T) and the schedule; print the plan as JSON.
    Plan(Common),
    /// Run the sampler and write samples + trace artifacts.
    Sample(Common),
    /// Compute and write oracle fixtures (Gibbs + spectral) per temperature.
    Oracle(Common),
    /// Run the coverage and invariant suite against existing fixtures.
    Verify(Common),
    /// Complexity sweep and single-chain baseline comparison.
    Bench(Common),
    /// Bisect the planner constants down to the cheapest passing budget.
    Calibrate(Common),
}

#[derive(Args)]
pub struct Common {
    /// Path to the run config (key = value format).
    #[arg(long)]
    pub config: PathBuf,

    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory (falls back to config, then $ASMC_OUT_DIR, then ./out).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Acknowledge plan overrides that violate the planner inequalities.
    #[arg(long = "unsafe")]
    pub allow_unsafe: bool,
}

type CmdResult = Result<ExitCode, Error>;

pub fn run(command: Command, json: bool) -> CmdResult {
    match command {
        Command::Plan(args) => cmd_plan(args, json),
        Command::Sample(args) => cmd_sample(args, json),
        Command::Oracle(args) => cmd_oracle(args, json),
        Command::Verify(args) => cmd_verify(args, json),
        Command::Bench(args) => cmd_bench(args, json),
        Command::Calibrate(args) => cmd_calibrate(args, json),
    }
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) | Error::UnknownPotential { .. } | Error::InvalidParameter { .. } => {
            "usage"
        }
        Error::FixtureHashMismatch { .. } | Error::Io(_) | Error::Json(_) => "usage",
        _ => "runtime",
    }
}

pub fn exit_code_for(err: &Error) -> ExitCode {
    match error_kind(err) {
        "usage" => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

struct Context {
    config: RunConfig,
    potential: Potential,
    landscape: Option<LandscapeSummary>,
    out_dir: PathBuf,
}

fn load_context(args: &Common) -> Result<Context, Error> {
    let text = fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.allow_unsafe {
        config.allow_unsafe = true;
    }
    if let Some(dir) = &args.out_dir {
        config.out_dir = Some(dir.display().to_string());
    }
    config.validate()?;
    let potential = config.potential()?;
    let landscape = if potential.minima().len() >= 2 {
        Some(landscape_summary(&potential, config.alpha)?)
    } else {
        None
    };
    let out_dir = config
        .out_dir
        .clone()
        .map(PathBuf::from)
        .or_else(|| std::env::var("ASMC_OUT_DIR").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Context {
        config,
        potential,
        landscape,
        out_dir,
    })
}

/// (M, N, T) from the planner formulas, honoring explicit overrides.
fn resolve_plan(ctx: &Context) -> Result<Plan, Error> {
    let c = &ctx.config;
    let (barrier_ratio, c_k) = match &ctx.landscape {
        Some(ls) => (ls.barrier_ratio, ls.c_k),
        None => (1.0, 1.0),
    };
    let m = match c.m_override {
        Some(m) => m.max(1),
        None => (1.0 / (c.nu * c.eta)).ceil() as usize,
    };
    let n = match c.n_override {
        Some(n) => n.max(1),
        None => {
            let n = (c.constants.c_n * (m * m) as f64 / (c.delta * c.delta)
                * (m as f64 / c.theta).ln())
            .ceil();
            if !n.is_finite() || n > 1e15 {
                return Err(Error::invalid("plan", "sample size N overflows"));
            }
            (n as usize).max(1)
        }
    };
    let t = match c.t_override {
        Some(t) => t,
        None => {
            let mn_over_theta = (m * n) as f64 / c.theta;
            c.constants.c_t
                * (mn_over_theta.powf(barrier_ratio * (1.0 + c.alpha))
                    * ((n as f64).ln() + (m as f64 / c.theta).ln())
                    + (1.0 / c.delta).ln()
                    + 1.0 / c.eta)
        }
    };
    if !t.is_finite() {
        return Err(Error::invalid("plan", "level time T overflows"));
    }
    let eta_critical = c_k / (c.constants.c_tem * (m * n) as f64 / c.theta).ln();
    let schedule = build_schedule(c.eta, m, c.eta1)?;
    Ok(Plan {
        target: c.eta,
        level_count: m,
        sample_size: n,
        level_time: t,
        delta: c.delta,
        theta: c.theta,
        alpha: c.alpha,
        nu: c.nu,
        barrier_ratio,
        constants: c.constants,
        eta_critical,
        critical_level: critical_level(&schedule, eta_critical),
    })
}

fn asmc_options(config: &RunConfig) -> AsmcOptions {
    AsmcOptions {
        dt: config.dt,
        integrator: config.integrator,
        guard_radius: config.guard_radius,
        budget_cap: config.budget_cap,
    }
}

fn initial_ensemble(config: &RunConfig) -> InitialEnsemble {
    match config.init.as_str() {
        "delta_origin" => InitialEnsemble::DeltaOrigin,
        _ => InitialEnsemble::UniformCube,
    }
}

fn cmd_plan(args: Common, _json: bool) -> CmdResult {
    let ctx = load_context(&args)?;
    let plan = resolve_plan(&ctx)?;
    let schedule = build_schedule(ctx.config.eta, plan.level_count, ctx.config.eta1)?;
    let payload = serde_json::json!({
        "config_hash": ctx.config.hash(),
        "plan": plan,
        "schedule": schedule,
        "total_steps": plan.step_count(ctx.config.dt).to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(ExitCode::SUCCESS)
}

fn write_samples_csv(path: &Path, ens: &ParticleEnsemble) -> Result<(), Error> {
    let mut out = String::new();
    for i in 0..ens.len() {
        let row: Vec<String> = ens.point(i).iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &RunTrace, wells: usize) -> Result<(), Error> {
    let mut out = String::from("level,eta");
    out.push_str(",ess");
    for j in 1..=wells {
        out.push_str(&format!(",frac_basin_{j}"));
    }
    out.push_str(",frac_in_K,resample_max_count,wall_ms\n");
    for rec in &trace.levels {
        out.push_str(&format!("{},{:.12e},{:.6}", rec.level, rec.eta, rec.ess));
        for j in 0..wells {
            let v = rec.frac_basin.get(j).copied().unwrap_or(f64::NAN);
            out.push_str(&format!(",{v:.6}"));
        }
        out.push_str(&format!(
            ",{:.6},{},{}\n",
            rec.frac_in_k, rec.resample_max_count, rec.wall_ms
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn cmd_sample(args: Common, json: bool) -> CmdResult {
    let ctx = load_context(&args)?;
    let plan = resolve_plan(&ctx)?;
    let schedule = build_schedule(ctx.config.eta, plan.level_count, ctx.config.eta1)?;
    let options = asmc_options(&ctx.config);
    let (samples, trace) = run_asmc(
        &ctx.potential,
        &schedule,
        plan.sample_size,
        plan.level_time,
        &options,
        &initial_ensemble(&ctx.config),
        ctx.landscape.as_ref(),
        ctx.config.seed,
    )?;

    let run_dir = ctx.out_dir.join(format!("run-{}", ctx.config.seed));
    fs::create_dir_all(&run_dir)?;
    let header = serde_json::json!({
        "version": format!("asmc {}", env!("CARGO_PKG_VERSION")),
        "config": ctx.config,
        "config_hash": ctx.config.hash(),
        "plan": plan,
        "schedule": schedule,
        "seed": ctx.config.seed,
    });
    fs::write(
        run_dir.join("header.json"),
        serde_json::to_vec_pretty(&header)?,
    )?;
    write_samples_csv(&run_dir.join("samples.csv"), &samples)?;
    let wells = ctx
        .landscape
        .as_ref()
        .map(|ls| ls.minima.len())
        .unwrap_or(0);
    write_trace_csv(&run_dir.join("trace.csv"), &trace, wells)?;

    let summary = serde_json::json!({
        "run_dir": run_dir.display().to_string(),
        "n": samples.len(),
        "final_ess": trace.levels.last().map(|l| l.ess),
        "frac_basin": trace.levels.last().map(|l| l.frac_basin.clone()),
    });
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("wrote {}", run_dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: Common, json: bool) -> CmdResult {
    let ctx = load_context(&args)?;
    let Some(ls) = &ctx.landscape else {
        return Err(Error::TooFewMinima {
            found: ctx.potential.minima().len(),
        });
    };
    let hash = ctx.config.hash();
    let root = ctx.out_dir.join(&ctx.config.fixture_dir);
    let mut written = Vec::new();
    for &eps in &ctx.config.oracle_eps {
        let gibbs = gibbs_reference(&ctx.potential, eps, ls, &hash)?;
        written.push(save_gibbs(&root, &gibbs)?);
        if ctx.potential.dim() == 1 {
            let mut spec = spectral_solve(
                &ctx.potential,
                eps,
                &SpectralOptions {
                    alpha: ctx.config.alpha,
                    ..SpectralOptions::default()
                },
            )?;
            spec.config_hash = hash.clone();
            written.push(save_spectral(&root, &spec)?);
        }
    }
    if json {
        let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({"fixtures": files}))?
        );
    } else {
        for p in &written {
            println!("wrote {}", p.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: Common, json: bool) -> CmdResult {
    let ctx = load_context(&args)?;
    let Some(ls) = &ctx.landscape else {
        return Err(Error::TooFewMinima {
            found: ctx.potential.minima().len(),
        });
    };
    let hash = ctx.config.hash();
    let root = ctx.out_dir.join(&ctx.config.fixture_dir);
    let mut checks: Vec<(String, bool, String)> = Vec::new();

    // Oracle fixture invariants at every configured temperature.
    for &eps in &ctx.config.oracle_eps {
        let gibbs = load_gibbs(&root, ctx.potential.id(), eps, &hash)?;
        let mass_sum: f64 = gibbs.well_masses.iter().sum();
        checks.push((
            format!("gibbs[{eps}]: well masses sum to 1"),
            (mass_sum - 1.0).abs() < 1e-6,
            format!("sum = {mass_sum:.8}"),
        ));
        if ctx.potential.dim() == 1 {
            let spec = load_spectral(&root, ctx.potential.id(), eps, &hash)?;
            let wells = ctx.potential.minima().len();
            checks.push((
                format!("spectral[{eps}]: zero mode"),
                spec.eigenvalues[0].abs() <= 1e-8 * spec.lambda_gap.max(1e-300),
                format!("λ1 = {:.3e}", spec.eigenvalues[0]),
            ));
            checks.push((
                format!("spectral[{eps}]: {} low modes below Λ", wells - 1),
                spec.eigenvalues[wells - 1] < spec.lambda_gap,
                format!(
                    "λ_J = {:.3e}, Λ = {:.3e}",
                    spec.eigenvalues[wells - 1],
                    spec.lambda_gap
                ),
            ));
        }
    }

    // Coverage of the basin-1 mass against the fixture at the target η.
    let gibbs_target = load_gibbs(&root, ctx.potential.id(), ctx.config.eta, &hash)
        .or_else(|_| {
            // Fall back to the coldest fixture when η itself has none.
            let eps = ctx
                .config
                .oracle_eps
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            load_gibbs(&root, ctx.potential.id(), eps, &hash)
        })?;
    let reference = gibbs_target.well_masses[0];
    let at_eta = (gibbs_target.eps - ctx.config.eta).abs() < 1e-12;
    if at_eta {
        let plan = resolve_plan(&ctx)?;
        let schedule = build_schedule(ctx.config.eta, plan.level_count, ctx.config.eta1)?;
        let h = TestFunction::basin_indicator(&ctx.potential, ls, 0, reference);
        let seeds: Vec<u64> = (0..ctx.config.verify_runs as u64)
            .map(|i| ctx.config.seed.wrapping_add(i))
            .collect();
        let setup = RunSetup {
            n_particles: plan.sample_size,
            level_time: plan.level_time,
            options: asmc_options(&ctx.config),
            init: initial_ensemble(&ctx.config),
        };
        let report = coverage_trial(
            &ctx.potential,
            &schedule,
            &setup,
            Some(ls),
            &h,
            ctx.config.delta,
            ctx.config.theta,
            &seeds,
        )?;
        checks.push((
            format!(
                "coverage: {} runs, target {:.2} - {:.3}",
                report.n_runs, report.target, report.slack
            ),
            report.pass,
            format!("success fraction {:.3}", report.success_fraction),
        ));
        // Report CSV: seed, error, success.
        fs::create_dir_all(&ctx.out_dir)?;
        let mut csv = String::from("seed,error,success\n");
        let tolerance = h.osc * ctx.config.delta;
        for (seed, err) in report.seeds.iter().zip(&report.errors) {
            csv.push_str(&format!("{seed},{err:.8e},{}\n", err < &tolerance));
        }
        fs::write(ctx.out_dir.join("verify_report.csv"), csv)?;
    } else {
        checks.push((
            "coverage: skipped (no fixture at target η)".to_string(),
            true,
            format!("nearest fixture at ε = {}", gibbs_target.eps),
        ));
    }

    let all_pass = checks.iter().all(|(_, ok, _)| *ok);
    if json {
        let payload: Vec<_> = checks
            .iter()
            .map(|(name, ok, detail)| {
                serde_json::json!({"check": name, "pass": ok, "detail": detail})
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "checks": payload,
                "pass": all_pass,
            }))?
        );
    } else {
        for (name, ok, detail) in &checks {
            println!("{} {name} ({detail})", if *ok { "PASS" } else { "FAIL" });
        }
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_bench(args: Common, json: bool) -> CmdResult {
    let ctx = load_context(&args)?;
    let Some(ls) = &ctx.landscape else {
        return Err(Error::TooFewMinima {
            found: ctx.potential.minima().len(),
        });
    };
    let sweep = complexity_sweep(
        &ctx.potential,
        &ctx.config.bench_etas,
        ctx.config.delta,
        ctx.config.theta,
        ctx.config.alpha,
        ctx.config.nu,
        ls.barrier_ratio,
        ls.c_k,
        ctx.config.constants,
    )?;

    // Matched-budget baseline at the target η.
    let plan = resolve_plan(&ctx)?;
    let schedule = build_schedule(ctx.config.eta, plan.level_count, ctx.config.eta1)?;
    let options = asmc_options(&ctx.config);
    let budget_steps = plan.step_count(ctx.config.dt).min(u64::MAX as u128) as u64;
    let gibbs = gibbs_reference(&ctx.potential, ctx.config.eta, ls, "bench")?;
    let h = TestFunction::basin_indicator(&ctx.potential, ls, 0, gibbs.well_masses[0]);
    let start = ls.minima[0].point.clone();
    let mut rows = Vec::new();
    for i in 0..ctx.config.bench_seeds as u64 {
        let seed = ctx.config.seed.wrapping_add(i);
        let (samples, _) = run_asmc(
            &ctx.potential,
            &schedule,
            plan.sample_size,
            plan.level_time,
            &options,
            &initial_ensemble(&ctx.config),
            Some(ls),
            seed,
        )?;
        let asmc_err = mc_error(&samples, &h);
        let base_err = baseline_direct_langevin(
            &ctx.potential,
            ctx.config.eta,
            budget_steps,
            ctx.config.dt,
            seed,
            &start,
            &h,
        )?;
        rows.push((seed, asmc_err, base_err));
    }
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let asmc_median = median(rows.iter().map(|r| r.1).collect());
    let baseline_median = median(rows.iter().map(|r| r.2).collect());

    fs::create_dir_all(&ctx.out_dir)?;
    let mut csv = String::from("seed,asmc_error,baseline_error\n");
    for (seed, a, b) in &rows {
        csv.push_str(&format!("{seed},{a:.8e},{b:.8e}\n"));
    }
    fs::write(ctx.out_dir.join("bench.csv"), csv)?;
    let summary = serde_json::json!({
        "sweep": sweep,
        "asmc_median_error": asmc_median,
        "baseline_median_error": baseline_median,
        "budget_steps": budget_steps.to_string(),
    });
    fs::write(
        ctx.out_dir.join("bench.json"),
        serde_json::to_vec_pretty(&summary)?,
    )?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!(
            "budget slope {:.2}, rate slope {:.3}, ASMC median {:.4} vs baseline {:.4}",
            sweep.budget_slope, sweep.rate_slope, asmc_median, baseline_median
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(args: Common, json: bool) -> CmdResult {
    let ctx = load_context(&args)?;
    let Some(ls) = &ctx.landscape else {
        return Err(Error::TooFewMinima {
            found: ctx.potential.minima().len(),
        });
    };
    let gibbs = gibbs_reference(&ctx.potential, ctx.config.eta, ls, "calibrate")?;
    let h = TestFunction::basin_indicator(&ctx.potential, ls, 0, gibbs.well_masses[0]);
    let seeds: Vec<u64> = (0..ctx.config.calibrate_runs as u64)
        .map(|i| ctx.config.seed.wrapping_add(i))
        .collect();
    let result = calibrate(
        &ctx.potential,
        ls,
        ctx.config.eta,
        ctx.config.delta,
        ctx.config.theta,
        ctx.config.alpha,
        ctx.config.nu,
        &asmc_options(&ctx.config),
        &h,
        &seeds,
        ctx.config.constants,
    )?;
    if json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        println!(
            "calibrated: c_n = {:.3e}, c_t = {:.3e} (N = {}, T = {:.2})",
            result.constants.c_n,
            result.constants.c_t,
            result.plan.sample_size,
            result.plan.level_time
        );
    }
    Ok(ExitCode::SUCCESS)
}
