use irsbeam_sim::{gen_instance, RngSeedPolicy, ScenarioConfig, trial_seed};
use irsbeam_core::{optimize, FeasibleSet, OptimizeOpts};

fn main() {
    let cfg40 = ScenarioConfig { n: 40, ..Default::default() };
    for r in 0..5 {
        let policy = RngSeedPolicy { master_seed: 1, snapshot_index: 0, realization_index: r };
        let inst = gen_instance(&cfg40, &policy).unwrap();
        let opts = OptimizeOpts { seed: trial_seed(&policy), ..Default::default() };
        let out = optimize(&inst, FeasibleSet::ContinuousPhase, &opts).unwrap();
        println!("N=40 r={r}: rate {:.3}, iters {} (warm {}), converged {}",
            out.final_wsr(), out.total_iterations(),
            out.warm_trace.as_ref().map_or(0, |t| t.len()), out.converged);
    }
}
