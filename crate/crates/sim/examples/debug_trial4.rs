use irsbeam_sim::{gen_instance, RngSeedPolicy, ScenarioConfig, trial_seed};
use irsbeam_core::{optimize, FeasibleSet, OptimizeOpts, RcSolver};

fn main() {
    let cfg = ScenarioConfig::default();
    let policy = RngSeedPolicy { master_seed: 4_000, snapshot_index: 0, realization_index: 4 };
    let inst = gen_instance(&cfg, &policy).unwrap();
    let opts = OptimizeOpts {
        rc_solver: RcSolver::Icu,
        seed: trial_seed(&policy),
        max_outer_iter: 3000,
        ..Default::default()
    };
    let out = optimize(&inst, FeasibleSet::Ideal, &opts).unwrap();
    println!("converged {} after {} iters, final {}", out.converged, out.trace.len(), out.final_wsr());
    let it = &out.trace.iters;
    for i in (0..it.len()).step_by(50) {
        let imp = if i > 0 { it[i].wsr - it[i-1].wsr } else { f64::NAN };
        println!("iter {i}: wsr {:.9} improvement {:.3e} accepted {:?}", it[i].wsr, imp, it[i].theta_accepted);
    }
    let tail = &it[it.len().saturating_sub(5)..];
    for (j, r) in tail.iter().enumerate() {
        println!("tail {j}: wsr {:.12}", r.wsr);
    }
}
