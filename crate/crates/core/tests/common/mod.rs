//! Shared generators for the integration tests.

use irsbeam_core::{CMatrix, CVector, FeasibleSet, QcqpData, SystemInstance};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn cplx(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    m: usize,
    k: usize,
    n: usize,
    p_t: f64,
) -> SystemInstance {
    let h_d = (0..k)
        .map(|_| {
            let v: Vec<Complex64> = (0..m).map(|_| cplx(rng)).collect();
            CVector::from_vec(v)
        })
        .collect();
    let g_data: Vec<Complex64> = (0..n * m).map(|_| cplx(rng)).collect();
    let g = CMatrix::from_vec(n, m, g_data);
    let h_r = (0..k)
        .map(|_| {
            let v: Vec<Complex64> = (0..n).map(|_| cplx(rng)).collect();
            CVector::from_vec(v)
        })
        .collect();
    SystemInstance::new(h_d, g, h_r, vec![1.0; k], p_t, 0.5, 0.8).unwrap()
}

/// QCQP data assembled the way the optimizer does it: from a random
/// instance, random beams, and the closed-form `ε` at a random RC vector.
pub fn physical_qcqp(rng: &mut ChaCha8Rng, n: usize, k: usize) -> QcqpData {
    let m = 4;
    let inst = random_instance(rng, m, k, n, 10.0);
    let w_data: Vec<Complex64> = (0..m * k).map(|_| cplx(rng)).collect();
    let w = CMatrix::from_vec(m, k, w_data);
    let lt = irsbeam_core::link_terms(&inst, &w).unwrap();
    let theta = random_phases(rng, n);
    let at: Vec<f64> = (0..k).map(|_| 0.5 + rng.gen::<f64>() * 2.0).collect();
    let eps = irsbeam_core::fp::update_epsilon(&lt, &theta, &at, inst.sigma2());
    irsbeam_core::build_qcqp(&lt, &eps, &at, inst.sigma2())
}

pub fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.gen::<f64>() * TAU))
}

pub fn random_feasible(rng: &mut ChaCha8Rng, n: usize, fs: FeasibleSet) -> CVector {
    let p = random_phases(rng, n);
    CVector::from_fn(n, |i, _| fs.project(p[i]))
}
