use irsbeam_sim::{gen_instance, RngSeedPolicy, ScenarioConfig, trial_seed};
use irsbeam_core::{optimize, FeasibleSet, OptimizeOpts};

fn main() {
    let cfg = ScenarioConfig::default();
    let mut worst = (0u64, 0.0f64);
    for trial in 0..100u64 {
        let policy = RngSeedPolicy { master_seed: 4_000, snapshot_index: trial / 10, realization_index: trial % 10 };
        let inst = gen_instance(&cfg, &policy).unwrap();
        let seed = trial_seed(&policy);
        let deep = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts { rel_tol: 1e-9, max_outer_iter: 5000, seed, ..Default::default() }).unwrap();
        let fast = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts { rel_tol: 1e-5, max_outer_iter: 500, seed, ..Default::default() }).unwrap();
        let loss = (deep.final_wsr() - fast.final_wsr()) / deep.final_wsr();
        if loss > worst.1 { worst = (trial, loss); }
    }
    println!("worst trial {} loss {:.3e}", worst.0, worst.1);
    let policy = RngSeedPolicy { master_seed: 4_000, snapshot_index: worst.0 / 10, realization_index: worst.0 % 10 };
    let inst = gen_instance(&cfg, &policy).unwrap();
    let deep = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts { rel_tol: 1e-9, max_outer_iter: 5000, seed: trial_seed(&policy), ..Default::default() }).unwrap();
    let it = &deep.trace.iters;
    println!("deep run: {} iters, final {:.6}", it.len(), deep.final_wsr());
    let mut i = 1;
    while i < it.len() {
        let imp = (it[i].wsr - it[i-1].wsr) / it[i-1].wsr.max(1.0);
        if i < 40 || i % 100 == 0 || imp > 1e-4 {
            println!("iter {i}: wsr {:.6} rel_imp {:.2e}", it[i].wsr, imp);
        }
        i += 1;
    }
}
