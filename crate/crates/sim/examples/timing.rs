use std::time::Instant;
use irsbeam_sim::{gen_instance, RngSeedPolicy, ScenarioConfig, trial_seed};
use irsbeam_core::{optimize, FeasibleSet, OptimizeOpts, RcSolver, solve_ldd, SolverOpts};

fn main() {
    // time joint optimize at §V-A scale
    let cfg = ScenarioConfig::default();
    for fs in [FeasibleSet::Ideal, FeasibleSet::ContinuousPhase] {
        let t0 = Instant::now();
        let mut iters = 0;
        for r in 0..20 {
            let policy = RngSeedPolicy { master_seed: 1, snapshot_index: 0, realization_index: r };
            let inst = gen_instance(&cfg, &policy).unwrap();
            let opts = OptimizeOpts { seed: trial_seed(&policy), ..Default::default() };
            let out = optimize(&inst, fs, &opts).unwrap();
            iters += out.total_iterations();
        }
        println!("optimize {fs}: {:.1} ms/run, avg iters {}", t0.elapsed().as_secs_f64()*1e3/20.0, iters/20);
    }
    // time ADMM-based joint
    let t0 = Instant::now();
    for r in 0..10 {
        let policy = RngSeedPolicy { master_seed: 1, snapshot_index: 0, realization_index: r };
        let inst = gen_instance(&cfg, &policy).unwrap();
        let opts = OptimizeOpts { rc_solver: RcSolver::Admm, seed: trial_seed(&policy), ..Default::default() };
        optimize(&inst, FeasibleSet::ContinuousPhase, &opts).unwrap();
    }
    println!("optimize admm cont: {:.1} ms/run", t0.elapsed().as_secs_f64()*1e3/10.0);
    // time N=40 ICU joint
    let cfg40 = ScenarioConfig { n: 40, ..Default::default() };
    let t0 = Instant::now();
    for r in 0..10 {
        let policy = RngSeedPolicy { master_seed: 1, snapshot_index: 0, realization_index: r };
        let inst = gen_instance(&cfg40, &policy).unwrap();
        let opts = OptimizeOpts { seed: trial_seed(&policy), ..Default::default() };
        optimize(&inst, FeasibleSet::ContinuousPhase, &opts).unwrap();
    }
    println!("optimize N=40 cont: {:.1} ms/run", t0.elapsed().as_secs_f64()*1e3/10.0);
    // time LDD at N=32 on physical-ish data
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use num_complex::Complex64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t0 = Instant::now();
    let mut total_iters = 0usize;
    for trial in 0..10 {
        let n = 32; let k = 4;
        let cfg32 = ScenarioConfig { n, ..Default::default() };
        let policy = RngSeedPolicy { master_seed: 2, snapshot_index: trial, realization_index: 0 };
        let inst = gen_instance(&cfg32, &policy).unwrap();
        let m = inst.bs_antennas();
        let scale = (inst.p_t() / (m as f64 * k as f64)).sqrt();
        let w = irsbeam_core::CMatrix::from_fn(m, k, |_, _| Complex64::new(rng.gen::<f64>()-0.5, rng.gen::<f64>()-0.5) * 2.0 * scale);
        let lt = irsbeam_core::link_terms(&inst, &w).unwrap();
        let theta = irsbeam_core::CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.gen::<f64>()*std::f64::consts::TAU));
        let at: Vec<f64> = (0..k).map(|_| 1.0 + rng.gen::<f64>()*10.0).collect();
        let eps = irsbeam_core::fp::update_epsilon(&lt, &theta, &at, inst.sigma2());
        let q = irsbeam_core::build_qcqp(&lt, &eps, &at, inst.sigma2());
        let rep = solve_ldd(&q, &SolverOpts::default()).unwrap();
        total_iters += rep.iterations;
        assert!(rep.converged, "trial {trial} not converged");
    }
    println!("solve_ldd N=32: {:.1} ms/run, avg ellipsoid iters {}", t0.elapsed().as_secs_f64()*1e3/10.0, total_iters/10);
}
