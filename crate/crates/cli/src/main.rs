//! `irsbeam` — command-line front end for single-instance solves and Monte
//! Carlo benchmark sweeps.
//!
//! Exit codes: 0 success, 1 runtime/solver failure, 2 configuration error.
//! Every random quantity derives from one seed (config `master_seed`,
//! overridable with `--seed`); the binary never touches ambient entropy, so
//! identical invocations print identical results.

use clap::{ArgAction, Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use irsbeam_core::{FeasibleSet, OptimizeOpts, RcSolver};
use irsbeam_sim::{
    emit_results, gen_instance, load_config, run_bench, BenchConfig, BenchResult, OutputFormat,
    RngSeedPolicy, SweepGrid,
};

#[derive(Parser)]
#[command(
    name = "irsbeam",
    version,
    about = "Joint active/passive beamforming for an IRS-aided MISO downlink",
    max_term_width = 100
)]
struct Cli {
    /// Print progress details to stderr (repeat for more)
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one generated channel instance and print the outcome
    Solve(SolveArgs),
    /// Run a Monte Carlo benchmark sweep from a configuration file
    Bench(BenchArgs),
    /// Run a small built-in demonstration sweep
    SweepDemo(DemoArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// TOML configuration file; built-in scenario defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feasible set: ideal, continuous or discrete:<levels>
    #[arg(long)]
    feasible_set: Option<String>,
    /// RC solver: icu, admm, npp or npp:<ldd|icu|admm>
    #[arg(long)]
    rc_solver: Option<String>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot index of the generated instance
    #[arg(long, default_value_t = 0)]
    snapshot: u64,
    /// Fading realization index of the generated instance
    #[arg(long, default_value_t = 0)]
    realization: u64,
    /// Write the per-iteration convergence trace (CSV) to this path
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML configuration file; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Result file path
    #[arg(long, default_value = "results.csv")]
    output: PathBuf,
    /// Result format: csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trial execution (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct DemoArgs {
    /// Result file path
    #[arg(long, default_value = "demo-results.csv")]
    output: PathBuf,
    /// Result format: csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trial execution (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

/// Error anywhere in the user-supplied configuration (exit 2), as opposed to
/// a runtime/solver failure (exit 1).
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args, cli.verbose),
        Command::Bench(args) => cmd_bench(args, cli.verbose),
        Command::SweepDemo(args) => cmd_sweep_demo(args, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_config(path: &Option<PathBuf>) -> Result<BenchConfig, CliError> {
    match path {
        Some(p) => load_config(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(BenchConfig::default()),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, CliError> {
    s.parse().map_err(|e: irsbeam_sim::SimError| CliError::Config(e.to_string()))
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    builder.build().map_err(|e| CliError::Runtime(e.to_string()))
}

fn cmd_solve(args: &SolveArgs, verbose: u8) -> Result<(), CliError> {
    let mut cfg = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let fs_str = args
        .feasible_set
        .clone()
        .or_else(|| cfg.feasible_sets.first().cloned())
        .unwrap_or_else(|| "continuous".into());
    let fs: FeasibleSet = fs_str
        .parse()
        .map_err(|e: irsbeam_core::Error| CliError::Config(format!("--feasible-set: {e}")))?;
    let solver_str = args
        .rc_solver
        .clone()
        .or_else(|| cfg.rc_solvers.first().cloned())
        .unwrap_or_else(|| "icu".into());
    let solver: RcSolver = solver_str
        .parse()
        .map_err(|e: irsbeam_core::Error| CliError::Config(format!("--rc-solver: {e}")))?;

    let policy = RngSeedPolicy {
        master_seed: cfg.master_seed,
        snapshot_index: args.snapshot,
        realization_index: args.realization,
    };
    if verbose > 0 {
        eprintln!(
            "solving one instance: M={} K={} N={} P_T={} dBm, {fs} / {solver}, seed {}",
            cfg.scenario.m, cfg.scenario.k, cfg.scenario.n, cfg.scenario.p_t_dbm, cfg.master_seed
        );
    }
    let inst = gen_instance(&cfg.scenario, &policy).map_err(|e| CliError::Config(e.to_string()))?;
    let opts = OptimizeOpts {
        max_outer_iter: cfg.max_outer_iter,
        rel_tol: cfg.rel_tol,
        rc_solver: solver,
        seed: irsbeam_sim::trial_seed(&policy),
        ..OptimizeOpts::default()
    };
    let out = irsbeam_core::optimize(&inst, fs, &opts)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    println!("feasible set:  {fs}");
    println!("rc solver:     {solver}");
    println!("sum rate:      {:.6} bits/s/Hz", out.final_wsr());
    if let Some(last) = out.trace.iters.last() {
        for (k, g) in last.sinr.iter().enumerate() {
            println!("sinr[{k}]:       {:.6} ({:.2} dB)", g, 10.0 * g.log10());
        }
    }
    println!("iterations:    {}", out.total_iterations());
    println!("converged:     {}", out.converged);

    if let Some(path) = &args.trace_out {
        write_trace(path, &out).map_err(|e| CliError::Runtime(e))?;
        if verbose > 0 {
            eprintln!("trace written to {}", path.display());
        }
    }
    if !out.converged {
        return Err(CliError::Runtime("optimizer hit the iteration cap".into()));
    }
    Ok(())
}

fn write_trace(path: &Path, out: &irsbeam_core::OptimizeOutcome) -> Result<(), String> {
    let mut text = String::from("phase,iter,f1a,wsr,theta_accepted\n");
    if let Some(warm) = &out.warm_trace {
        for (i, rec) in warm.iters.iter().enumerate() {
            text.push_str(&format!(
                "warm,{},{},{},{}\n",
                i,
                rec.f1a,
                rec.wsr,
                rec.theta_accepted.map(|b| b.to_string()).unwrap_or_default()
            ));
        }
    }
    for (i, rec) in out.trace.iters.iter().enumerate() {
        text.push_str(&format!(
            "main,{},{},{},{}\n",
            i,
            rec.f1a,
            rec.wsr,
            rec.theta_accepted.map(|b| b.to_string()).unwrap_or_default()
        ));
    }
    std::fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn cmd_bench(args: &BenchArgs, verbose: u8) -> Result<(), CliError> {
    let mut cfg = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let format = parse_format(&args.format)?;
    run_and_emit(&cfg, format, &args.output, args.jobs, verbose)
}

fn cmd_sweep_demo(args: &DemoArgs, verbose: u8) -> Result<(), CliError> {
    // Reduced-scale sweep over transmit power with both baselines, the
    // continuous phase shifter and a 2-bit quantizer.
    let mut cfg = BenchConfig {
        sweeps: SweepGrid { p_t_dbm: Some(vec![-5.0, 0.0, 5.0]), ..Default::default() },
        feasible_sets: vec!["continuous".into(), "discrete:4".into()],
        rc_solvers: vec!["icu".into()],
        snapshots: 5,
        realizations_per_snapshot: 2,
        ..Default::default()
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let format = parse_format(&args.format)?;
    run_and_emit(&cfg, format, &args.output, args.jobs, verbose)
}

fn run_and_emit(
    cfg: &BenchConfig,
    format: OutputFormat,
    output: &Path,
    jobs: Option<usize>,
    verbose: u8,
) -> Result<(), CliError> {
    let pool = build_pool(jobs)?;
    if verbose > 0 {
        let trials = cfg.grid().len()
            * cfg.methods().map_err(|e| CliError::Config(e.to_string()))?.len()
            * cfg.snapshots
            * cfg.realizations_per_snapshot;
        eprintln!("running {trials} trials on {} workers", pool.current_num_threads());
    }
    let result = pool
        .install(|| run_bench(cfg))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    emit_results(&result, format, output).map_err(|e| CliError::Runtime(e.to_string()))?;
    print_summary(&result);
    let total_ok: usize = result
        .cells
        .iter()
        .map(|c| c.stats.n_trials - c.stats.n_failures)
        .sum();
    if total_ok == 0 {
        return Err(CliError::Runtime("every trial failed".into()));
    }
    Ok(())
}

fn print_summary(result: &BenchResult) {
    println!(
        "{:>8} {:>4} {:>6} {:>6}  {:<10} {:<11} {:>12} {:>10} {:>6} {:>6}",
        "p_t_dbm", "n", "xi_db", "l_i", "method", "fset", "rate_bpshz", "stderr", "fail", "iters"
    );
    for c in &result.cells {
        println!(
            "{:>8} {:>4} {:>6} {:>6}  {:<10} {:<11} {:>12} {:>10} {:>6} {:>6}",
            c.grid.p_t_dbm,
            c.grid.n,
            c.grid.xi_db,
            c.grid.l_i,
            c.method,
            c.feasible_set,
            c.stats.mean_rate_bpshz.map(|x| format!("{x:.4}")).unwrap_or_default(),
            c.stats.stderr.map(|x| format!("{x:.4}")).unwrap_or_default(),
            c.stats.n_failures,
            c.stats.mean_iters.map(|x| format!("{x:.1}")).unwrap_or_default(),
        );
    }
    println!("results written for {} cells ({})", result.cells.len(), result.version);
}
