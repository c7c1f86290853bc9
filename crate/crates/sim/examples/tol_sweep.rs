use irsbeam_sim::{gen_instance, RngSeedPolicy, ScenarioConfig, trial_seed};
use irsbeam_core::{optimize, FeasibleSet, OptimizeOpts, RcSolver};

fn main() {
    let cfg = ScenarioConfig::default();
    // deep-converged reference vs rel_tol=1e-5 stopping, icu/ideal (worst案 combo)
    let mut max_iters_1e5 = 0usize;
    let mut worst_loss = 0.0f64;
    let mut over500 = 0;
    for trial in 0..100u64 {
        let policy = RngSeedPolicy { master_seed: 4_000, snapshot_index: trial / 10, realization_index: trial % 10 };
        let inst = gen_instance(&cfg, &policy).unwrap();
        let seed = trial_seed(&policy);
        let deep = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts {
            rel_tol: 1e-9, max_outer_iter: 5000, seed, ..Default::default()
        }).unwrap();
        let fast = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts {
            rel_tol: 1e-5, max_outer_iter: 500, seed, ..Default::default()
        }).unwrap();
        if !fast.converged { over500 += 1; }
        max_iters_1e5 = max_iters_1e5.max(fast.trace.len());
        let loss = (deep.final_wsr() - fast.final_wsr()) / deep.final_wsr();
        worst_loss = worst_loss.max(loss);
    }
    println!("icu/ideal rel_tol=1e-5: max iters {max_iters_1e5}, runs>500 {over500}, worst relative loss {worst_loss:.2e}");

    // iteration counts across all 9 combos at rel_tol=1e-5
    for solver in [RcSolver::Icu, RcSolver::Admm, RcSolver::npp()] {
        for fs in [FeasibleSet::Ideal, FeasibleSet::ContinuousPhase, FeasibleSet::discrete(4).unwrap()] {
            let mut max_it = 0; let mut fails = 0;
            for trial in 0..100u64 {
                let policy = RngSeedPolicy { master_seed: 4_000, snapshot_index: trial / 10, realization_index: trial % 10 };
                let inst = gen_instance(&cfg, &policy).unwrap();
                let out = optimize(&inst, fs, &OptimizeOpts {
                    rel_tol: 1e-5, rc_solver: solver, seed: trial_seed(&policy), ..Default::default()
                }).unwrap();
                if !out.converged { fails += 1; }
                max_it = max_it.max(out.trace.len());
                if let Some(w) = &out.warm_trace { max_it = max_it.max(w.len()); }
            }
            println!("{solver}/{fs}: max phase iters {max_it}, non-converged {fails}");
        }
    }
}
