use irsbeam_sim::{gen_instance, RngSeedPolicy, ScenarioConfig, trial_seed};
use irsbeam_core::{optimize, FeasibleSet, OptimizeOpts};

fn main() {
    let cfg = ScenarioConfig::default();
    let (mut sum5, mut sum6, mut worst_rel) = (0.0, 0.0, 0.0f64);
    for trial in 0..100u64 {
        let policy = RngSeedPolicy { master_seed: 4_000, snapshot_index: trial / 10, realization_index: trial % 10 };
        let inst = gen_instance(&cfg, &policy).unwrap();
        let seed = trial_seed(&policy);
        let a = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts { rel_tol: 1e-5, seed, ..Default::default() }).unwrap();
        let b = optimize(&inst, FeasibleSet::Ideal, &OptimizeOpts { rel_tol: 1e-6, max_outer_iter: 2000, seed, ..Default::default() }).unwrap();
        sum5 += a.final_wsr(); sum6 += b.final_wsr();
        worst_rel = worst_rel.max((b.final_wsr() - a.final_wsr()).abs() / b.final_wsr());
    }
    println!("mean rate rel_tol=1e-5: {:.6}", sum5 / 100.0);
    println!("mean rate rel_tol=1e-6 (cap 2000): {:.6}", sum6 / 100.0);
    println!("relative mean gap: {:.3e}", (sum6 - sum5).abs() / sum6);
    println!("worst per-instance relative gap: {:.3e}", worst_rel);
}
