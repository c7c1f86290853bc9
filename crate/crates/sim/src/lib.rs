//! Monte Carlo simulation and benchmarking for the IRS-aided MISO downlink
//! optimizer: scenario geometry and link budget, seeded Rayleigh channel
//! generation, the two reference baselines, and a deterministic parallel
//! benchmark driver with CSV/JSON output.

pub mod bench;
pub mod error;
pub mod scenario;

pub use bench::{
    emit_results, load_config, load_results_json, run_baseline_no_irs,
    run_baseline_random_theta, run_bench, to_csv_string, BaselineFlags, BenchCell, BenchConfig,
    BenchResult, CellStats, GridPoint, MethodSpec, OutputFormat, SweepGrid,
};
pub use error::{Result, SimError};
pub use scenario::{
    baseline_theta, db_to_linear, gen_instance, linear_to_db, noise_power, noise_power_dbm,
    path_loss_direct, path_loss_irs, substream, trial_seed, user_positions, RngSeedPolicy,
    ScenarioConfig,
};
