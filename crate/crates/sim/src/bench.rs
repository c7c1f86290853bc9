//! Monte Carlo benchmark driver and result serialization.
//!
//! A benchmark runs a grid of scenario variants (sweeps over transmit power,
//! IRS size, reflection gain, IRS position) times a set of methods: the
//! no-IRS baseline, the random-phase baseline, and joint beamforming for
//! each configured solver × feasible set. Per grid point the driver executes
//! `snapshots × realizations` trials; snapshot substreams fix the user drop,
//! realization substreams the fading, so results are bit-reproducible for a
//! fixed master seed regardless of how many workers execute the trials.
//!
//! Failed trials are excluded from the aggregates but counted, never
//! silently dropped. Wall times are reported for qualitative complexity
//! comparisons only — they are the one field that cannot be deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use irsbeam_core::{
    optimize, optimize_frozen_theta, FeasibleSet, OptimizeOpts, RcSolver,
};

use crate::error::{Result, SimError};
use crate::scenario::{baseline_theta, gen_instance, trial_seed, RngSeedPolicy, ScenarioConfig};

/// Sweep axes; an omitted axis keeps the scenario's single value.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub p_t_dbm: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub xi_db: Option<Vec<f64>>,
    pub l_i: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineFlags {
    /// Transmit-only optimization with the IRS removed.
    pub no_irs: bool,
    /// Frozen random unit-modulus phases, transmit-only optimization.
    pub random_theta: bool,
}

impl Default for BaselineFlags {
    fn default() -> Self {
        Self { no_irs: true, random_theta: true }
    }
}

/// Full benchmark description; mirrors the TOML configuration file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: ScenarioConfig,
    pub sweeps: SweepGrid,
    /// Feasible sets for the joint methods: `"ideal"`, `"continuous"`,
    /// `"discrete:<levels>"`.
    pub feasible_sets: Vec<String>,
    /// RC solvers for the joint methods: `"icu"`, `"admm"`, `"npp"`,
    /// `"npp:<inner>"`.
    pub rc_solvers: Vec<String>,
    pub baselines: BaselineFlags,
    /// User drops per grid point.
    pub snapshots: usize,
    /// Independent fading realizations per snapshot.
    pub realizations_per_snapshot: usize,
    pub master_seed: u64,
    /// Outer-iteration cap forwarded to the optimizer.
    pub max_outer_iter: usize,
    /// Convergence tolerance forwarded to the optimizer.
    pub rel_tol: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            sweeps: SweepGrid::default(),
            feasible_sets: vec!["continuous".into()],
            rc_solvers: vec!["icu".into()],
            baselines: BaselineFlags::default(),
            snapshots: 20,
            realizations_per_snapshot: 10,
            master_seed: 1,
            max_outer_iter: 500,
            rel_tol: 1e-5,
        }
    }
}

/// Reads a TOML benchmark configuration.
pub fn load_config(path: &Path) -> Result<BenchConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io { path: path.display().to_string(), source: e })?;
    let cfg: BenchConfig =
        toml::from_str(&text).map_err(|e| SimError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.snapshots == 0 || self.realizations_per_snapshot == 0 {
            return Err(SimError::Config(
                "snapshots and realizations_per_snapshot must be positive".into(),
            ));
        }
        for axis in [&self.sweeps.p_t_dbm.as_ref().map(Vec::len), &self.sweeps.xi_db.as_ref().map(Vec::len)] {
            if axis.map_or(false, |l| l == 0) {
                return Err(SimError::Config("sweep axes must be nonempty when given".into()));
            }
        }
        if self.sweeps.n.as_ref().map_or(false, |v| v.is_empty())
            || self.sweeps.l_i.as_ref().map_or(false, |v| v.is_empty())
        {
            return Err(SimError::Config("sweep axes must be nonempty when given".into()));
        }
        self.methods()?;
        Ok(())
    }

    /// Grid points in deterministic order (p_t, then n, then ξ, then l_i).
    pub fn grid(&self) -> Vec<GridPoint> {
        let p = self.sweeps.p_t_dbm.clone().unwrap_or_else(|| vec![self.scenario.p_t_dbm]);
        let n = self.sweeps.n.clone().unwrap_or_else(|| vec![self.scenario.n]);
        let xi = self.sweeps.xi_db.clone().unwrap_or_else(|| vec![self.scenario.xi_db]);
        let li = self.sweeps.l_i.clone().unwrap_or_else(|| vec![self.scenario.l_i]);
        let mut out = Vec::new();
        for &pv in &p {
            for &nv in &n {
                for &xv in &xi {
                    for &lv in &li {
                        out.push(GridPoint { p_t_dbm: pv, n: nv, xi_db: xv, l_i: lv });
                    }
                }
            }
        }
        out
    }

    /// Methods in deterministic order: baselines first, then
    /// solver × feasible-set joint methods.
    pub fn methods(&self) -> Result<Vec<MethodSpec>> {
        let mut out = Vec::new();
        if self.baselines.no_irs {
            out.push(MethodSpec::Baseline1);
        }
        if self.baselines.random_theta {
            out.push(MethodSpec::Baseline2);
        }
        for s in &self.rc_solvers {
            let solver: RcSolver = s
                .parse()
                .map_err(|e| SimError::Config(format!("rc_solvers: {e}")))?;
            for f in &self.feasible_sets {
                let fs: FeasibleSet = f
                    .parse()
                    .map_err(|e| SimError::Config(format!("feasible_sets: {e}")))?;
                out.push(MethodSpec::Joint { solver, fs });
            }
        }
        if out.is_empty() {
            return Err(SimError::Config(
                "no methods selected: enable a baseline or give rc_solvers × feasible_sets".into(),
            ));
        }
        Ok(out)
    }

    fn scenario_at(&self, g: &GridPoint) -> ScenarioConfig {
        ScenarioConfig {
            p_t_dbm: g.p_t_dbm,
            n: g.n,
            xi_db: g.xi_db,
            l_i: g.l_i,
            ..self.scenario.clone()
        }
    }

    fn opts(&self, solver: RcSolver, seed: u64) -> OptimizeOpts {
        OptimizeOpts {
            max_outer_iter: self.max_outer_iter,
            rel_tol: self.rel_tol,
            rc_solver: solver,
            seed,
            ..OptimizeOpts::default()
        }
    }
}

/// One grid point of the sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridPoint {
    pub p_t_dbm: f64,
    pub n: usize,
    pub xi_db: f64,
    pub l_i: f64,
}

/// One benchmarked method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSpec {
    Baseline1,
    Baseline2,
    Joint { solver: RcSolver, fs: FeasibleSet },
}

impl MethodSpec {
    /// Method label used in result files.
    pub fn method_label(&self) -> String {
        match self {
            MethodSpec::Baseline1 => "baseline1".into(),
            MethodSpec::Baseline2 => "baseline2".into(),
            MethodSpec::Joint { solver, .. } => solver.to_string(),
        }
    }

    /// Feasible-set label used in result files (`"none"` for baselines).
    pub fn feasible_label(&self) -> String {
        match self {
            MethodSpec::Joint { fs, .. } => fs.to_string(),
            _ => "none".into(),
        }
    }
}

/// Aggregates of one grid point × method cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellStats {
    /// Mean sum rate in bits/s/Hz over successful trials (`None` if all
    /// trials failed).
    pub mean_rate_bpshz: Option<f64>,
    /// Standard error of the mean (0 for a single trial).
    pub stderr: Option<f64>,
    pub n_trials: usize,
    pub n_failures: usize,
    pub mean_iters: Option<f64>,
    /// Mean wall time per trial in milliseconds; informational only.
    pub mean_ms: Option<f64>,
    /// Per-snapshot mean rates, sorted ascending (empirical CDF samples).
    pub snapshot_means: Vec<f64>,
}

/// One result cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BenchCell {
    pub grid: GridPoint,
    pub method: String,
    pub feasible_set: String,
    pub stats: CellStats,
}

/// Full benchmark output: configuration, code version, and all cells.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub version: String,
    pub cells: Vec<BenchCell>,
}

impl BenchResult {
    /// Convenience lookup by method/feasible-set labels.
    pub fn cell(&self, g: &GridPoint, method: &str, feasible: &str) -> Option<&BenchCell> {
        self.cells.iter().find(|c| {
            c.method == method && c.feasible_set == feasible && c.grid == *g
        })
    }
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    rate: Option<f64>,
    iterations: usize,
    ms: f64,
}

fn run_trial(cfg: &BenchConfig, g: &GridPoint, method: &MethodSpec, policy: &RngSeedPolicy) -> TrialOutcome {
    let sc = cfg.scenario_at(g);
    let t0 = Instant::now();
    let inst = match gen_instance(&sc, policy) {
        Ok(i) => i,
        Err(_) => return TrialOutcome { rate: None, iterations: 0, ms: 0.0 },
    };
    let seed = trial_seed(policy);
    let outcome = match method {
        MethodSpec::Baseline1 => {
            optimize(&inst.without_irs(), FeasibleSet::Ideal, &cfg.opts(RcSolver::Icu, seed))
        }
        MethodSpec::Baseline2 => {
            let theta = baseline_theta(&sc, policy);
            optimize_frozen_theta(&inst, &theta, &cfg.opts(RcSolver::Icu, seed))
        }
        MethodSpec::Joint { solver, fs } => optimize(&inst, *fs, &cfg.opts(*solver, seed)),
    };
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(out) => TrialOutcome {
            rate: Some(out.final_wsr()),
            iterations: out.total_iterations(),
            ms,
        },
        Err(_) => TrialOutcome { rate: None, iterations: 0, ms },
    }
}

/// Runs the full benchmark. Trials execute in parallel on the current rayon
/// pool; aggregation happens in a fixed order, so the numerical output is
/// identical for any worker count.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let grid = cfg.grid();
    let methods = cfg.methods()?;
    let snaps = cfg.snapshots;
    let reals = cfg.realizations_per_snapshot;

    // Flat task list in deterministic order.
    let mut tasks = Vec::with_capacity(grid.len() * methods.len() * snaps * reals);
    for (gi, g) in grid.iter().enumerate() {
        for (mi, m) in methods.iter().enumerate() {
            for s in 0..snaps {
                for r in 0..reals {
                    tasks.push((gi, mi, s as u64, r as u64, *g, *m));
                }
            }
        }
    }
    let outcomes: Vec<TrialOutcome> = tasks
        .par_iter()
        .map(|(_, _, s, r, g, m)| {
            let policy = RngSeedPolicy {
                master_seed: cfg.master_seed,
                snapshot_index: *s,
                realization_index: *r,
            };
            run_trial(cfg, g, m, &policy)
        })
        .collect();

    let mut cells = Vec::with_capacity(grid.len() * methods.len());
    let mut cursor = 0usize;
    for g in &grid {
        for m in &methods {
            let block = &outcomes[cursor..cursor + snaps * reals];
            cursor += snaps * reals;
            cells.push(BenchCell {
                grid: *g,
                method: m.method_label(),
                feasible_set: m.feasible_label(),
                stats: aggregate(block, snaps, reals),
            });
        }
    }
    Ok(BenchResult {
        config: cfg.clone(),
        version: format!("irsbeam {}", env!("CARGO_PKG_VERSION")),
        cells,
    })
}

fn aggregate(block: &[TrialOutcome], snaps: usize, reals: usize) -> CellStats {
    let n_trials = block.len();
    let ok: Vec<&TrialOutcome> = block.iter().filter(|t| t.rate.is_some()).collect();
    let n_failures = n_trials - ok.len();
    if ok.is_empty() {
        return CellStats {
            mean_rate_bpshz: None,
            stderr: None,
            n_trials,
            n_failures,
            mean_iters: None,
            mean_ms: None,
            snapshot_means: Vec::new(),
        };
    }
    let n = ok.len() as f64;
    let mean = ok.iter().map(|t| t.rate.unwrap()).sum::<f64>() / n;
    let var = if ok.len() > 1 {
        ok.iter().map(|t| (t.rate.unwrap() - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let stderr = (var / n).sqrt();
    let mean_iters = ok.iter().map(|t| t.iterations as f64).sum::<f64>() / n;
    let mean_ms = ok.iter().map(|t| t.ms).sum::<f64>() / n;
    let mut snapshot_means = Vec::with_capacity(snaps);
    for s in 0..snaps {
        let rates: Vec<f64> = block[s * reals..(s + 1) * reals]
            .iter()
            .filter_map(|t| t.rate)
            .collect();
        if !rates.is_empty() {
            snapshot_means.push(rates.iter().sum::<f64>() / rates.len() as f64);
        }
    }
    snapshot_means.sort_by(f64::total_cmp);
    CellStats {
        mean_rate_bpshz: Some(mean),
        stderr: Some(stderr),
        n_trials,
        n_failures,
        mean_iters: Some(mean_iters),
        mean_ms: Some(mean_ms),
        snapshot_means,
    }
}

/// Output format for [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(SimError::Config(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

/// CSV rendering: one row per grid point × method.
pub fn to_csv_string(result: &BenchResult) -> String {
    let mut out = String::from(
        "p_t_dbm,n,xi_db,l_i,method,feasible_set,mean_rate_bpshz,stderr,n_trials,n_failures,mean_iters,mean_ms\n",
    );
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.grid.p_t_dbm,
            c.grid.n,
            c.grid.xi_db,
            c.grid.l_i,
            c.method,
            c.feasible_set,
            fmt_opt(c.stats.mean_rate_bpshz),
            fmt_opt(c.stats.stderr),
            c.stats.n_trials,
            c.stats.n_failures,
            fmt_opt(c.stats.mean_iters),
            fmt_opt(c.stats.mean_ms),
        ));
    }
    out
}

/// Writes the result as CSV (aggregates only) or JSON (config, version, and
/// raw per-snapshot samples included).
pub fn emit_results(result: &BenchResult, format: OutputFormat, path: &Path) -> Result<()> {
    let io_err = |e: std::io::Error| SimError::Io { path: path.display().to_string(), source: e };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    match format {
        OutputFormat::Csv => {
            file.write_all(to_csv_string(result).as_bytes()).map_err(io_err)?;
        }
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(result)
                .map_err(|e| SimError::Serde(e.to_string()))?;
            file.write_all(text.as_bytes()).map_err(io_err)?;
            file.write_all(b"\n").map_err(io_err)?;
        }
    }
    Ok(())
}

/// Reads back a JSON result document.
pub fn load_results_json(path: &Path) -> Result<BenchResult> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io { path: path.display().to_string(), source: e })?;
    serde_json::from_str(&text).map_err(|e| SimError::Serde(e.to_string()))
}

/// No-IRS baseline on one instance: transmit-only optimization with the
/// surface removed.
pub fn run_baseline_no_irs(
    inst: &irsbeam_core::SystemInstance,
    opts: &OptimizeOpts,
) -> Result<f64> {
    Ok(optimize(&inst.without_irs(), FeasibleSet::Ideal, opts)?.final_wsr())
}

/// Random passive beamforming baseline: frozen seeded unit-modulus phases,
/// transmit-only optimization.
pub fn run_baseline_random_theta(
    inst: &irsbeam_core::SystemInstance,
    opts: &OptimizeOpts,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let theta = irsbeam_core::CVector::from_fn(inst.irs_elements(), |_, _| {
        num_complex::Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
    });
    Ok(optimize_frozen_theta(inst, &theta, opts)?.final_wsr())
}
