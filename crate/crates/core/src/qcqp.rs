//! Passive-beamforming subproblem data.
//!
//! For fixed transmit beams the per-user received amplitudes are affine in
//! the RC vector: with `a_{i,k} = √η diag(h_{r,k}ᴴ) G w_i` and
//! `b_{i,k} = h_{d,k}ᴴ w_i`,
//!
//! ```text
//! (h_{d,k}ᴴ + h_{r,k}ᴴ Θᴴ G) w_i = b_{i,k} + θᴴ a_{i,k}.
//! ```
//!
//! Substituting the optimal reflection-side auxiliary `ε` collapses the
//! quadratic-transform surrogate `f3a(θ, ε)` into the concave quadratic
//!
//! ```text
//! f4(θ) = −θᴴ U θ + 2 Re{θᴴ ν} + C,
//! ```
//!
//! with `U` a Hermitian PSD sum of outer products. The constant `C` is
//! carried explicitly so `f4` traces stay comparable across outer iterations
//! even though the RC solvers ignore it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CMatrix, CVector, SystemInstance};

/// Affine link terms `a_{i,k}` (length `N`) and `b_{i,k}` for every
/// beam `i` / user `k` pair.
#[derive(Debug, Clone)]
pub struct LinkTerms {
    k: usize,
    n: usize,
    /// Row-major on (i, k): entry `i * K + k`.
    a: Vec<CVector>,
    b: Vec<Complex64>,
}

impl LinkTerms {
    /// Reflected-path term `a_{i,k}`.
    pub fn a(&self, i: usize, k: usize) -> &CVector {
        &self.a[i * self.k + k]
    }

    /// Direct-path term `b_{i,k}`.
    pub fn b(&self, i: usize, k: usize) -> Complex64 {
        self.b[i * self.k + k]
    }

    /// Received amplitude `b_{i,k} + θᴴ a_{i,k}` of beam `i` at user `k`.
    pub fn received(&self, i: usize, k: usize, theta: &CVector) -> Complex64 {
        self.b(i, k) + theta.dotc(self.a(i, k))
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn elements(&self) -> usize {
        self.n
    }
}

/// Builds the link terms for the current transmit beams.
pub fn link_terms(inst: &SystemInstance, w: &CMatrix) -> Result<LinkTerms> {
    if w.nrows() != inst.bs_antennas() || w.ncols() != inst.users() {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, instance needs {}x{}",
            w.nrows(),
            w.ncols(),
            inst.bs_antennas(),
            inst.users()
        )));
    }
    let kk = inst.users();
    let n = inst.irs_elements();
    let sqrt_eta = inst.eta().sqrt();
    let mut a = Vec::with_capacity(kk * kk);
    let mut b = Vec::with_capacity(kk * kk);
    // Gw_i is shared by all users for a given beam.
    let gw: Vec<CVector> = (0..kk).map(|i| inst.g() * w.column(i)).collect();
    for i in 0..kk {
        for k in 0..kk {
            let aik = CVector::from_fn(n, |e, _| sqrt_eta * inst.h_r(k)[e].conj() * gw[i][e]);
            a.push(aik);
            b.push(inst.h_d(k).dotc(&w.column(i)));
        }
    }
    Ok(LinkTerms { k: kk, n, a, b })
}

/// The quadratic program data: maximize `−θᴴUθ + 2Re{θᴴν} + C` over the
/// per-element RC constraints.
#[derive(Debug, Clone)]
pub struct QcqpData {
    /// Hermitian PSD matrix `U` (`N×N`).
    pub u: CMatrix,
    /// Linear term `ν` (length `N`).
    pub nu: CVector,
    /// Constant term, irrelevant to the argmax.
    pub c: f64,
}

impl QcqpData {
    pub fn elements(&self) -> usize {
        self.nu.len()
    }
}

/// Assembles `(U, ν, C)` from link terms and the reflection auxiliaries:
///
/// ```text
/// U = Σ_k |ε_k|² Σ_i a_{i,k} a_{i,k}ᴴ
/// ν = Σ_k ( √ᾱ_k ε_k* a_{k,k} − |ε_k|² Σ_i b_{i,k}* a_{i,k} )
/// C = Σ_k ( 2√ᾱ_k Re{ε_k* b_{k,k}} − |ε_k|² (σ₀² + Σ_i |b_{i,k}|²) )
/// ```
///
/// `U` is re-symmetrized after assembly and checked to be PSD; both are
/// structural facts of the sum-of-outer-products form, so a violation
/// indicates a bug upstream.
pub fn build_qcqp(
    lt: &LinkTerms,
    epsilon: &[Complex64],
    alpha_tilde: &[f64],
    sigma2: f64,
) -> QcqpData {
    let kk = lt.users();
    let n = lt.elements();
    assert_eq!(epsilon.len(), kk);
    assert_eq!(alpha_tilde.len(), kk);
    let mut u = CMatrix::zeros(n, n);
    let mut nu = CVector::zeros(n);
    let mut c = 0.0;
    for k in 0..kk {
        let e = epsilon[k];
        let e2 = e.norm_sqr();
        let root_at = alpha_tilde[k].sqrt();
        let mut b_sq = 0.0;
        for i in 0..kk {
            let aik = lt.a(i, k);
            let bik = lt.b(i, k);
            b_sq += bik.norm_sqr();
            if e2 > 0.0 {
                for r in 0..n {
                    let lhs = e2 * aik[r];
                    for col in 0..n {
                        u[(r, col)] += lhs * aik[col].conj();
                    }
                }
                nu -= aik * Complex64::new(e2, 0.0) * bik.conj();
            }
        }
        nu += lt.a(k, k) * (root_at * e.conj());
        c += 2.0 * root_at * (e.conj() * lt.b(k, k)).re - e2 * (sigma2 + b_sq);
    }
    // Purge round-off asymmetry so downstream factorizations see an exactly
    // Hermitian matrix.
    let u = (&u + u.adjoint()) * Complex64::new(0.5, 0.0);
    let data = QcqpData { u, nu, c };
    debug_assert!(psd_check(&data.u).is_ok());
    data
}

/// Verifies `U = Uᴴ` (to 1e−12) and min eigenvalue ≥ −1e−10·‖U‖₂.
pub fn psd_check(u: &CMatrix) -> Result<()> {
    let n = u.nrows();
    for r in 0..n {
        for c in 0..n {
            if (u[(r, c)] - u[(c, r)].conj()).norm() > 1e-12 {
                return Err(Error::InternalConsistency("U not Hermitian".into()));
            }
        }
    }
    if n > 0 {
        let eig = u.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * max.max(1e-30) {
            return Err(Error::InternalConsistency(format!(
                "U not PSD: min eigenvalue {min}, spectral norm {max}"
            )));
        }
    }
    Ok(())
}

/// Quadratic objective `f4(θ) = −θᴴUθ + 2Re{θᴴν} + C`.
pub fn f4(q: &QcqpData, theta: &CVector) -> f64 {
    let ut = &q.u * theta;
    let quad = theta.dotc(&ut).re;
    let lin = theta.dotc(&q.nu).re;
    -quad + 2.0 * lin + q.c
}

/// Conjugate-sense gradient `∂f4/∂θ* = ν − Uθ`; the unconstrained maximizer
/// is any `θ` with `Uθ = ν`.
pub fn f4_grad(q: &QcqpData, theta: &CVector) -> CVector {
    &q.nu - &q.u * theta
}

/// Reflection-side quadratic-transform surrogate `f3a(θ, ε)`.
pub fn f3a(
    lt: &LinkTerms,
    theta: &CVector,
    epsilon: &[Complex64],
    alpha_tilde: &[f64],
    sigma2: f64,
) -> f64 {
    let kk = lt.users();
    let mut acc = 0.0;
    for k in 0..kk {
        let e = epsilon[k];
        let sig = theta.dotc(lt.a(k, k)) + lt.b(k, k);
        let denom: f64 =
            (0..kk).map(|i| lt.received(i, k, theta).norm_sqr()).sum::<f64>() + sigma2;
        acc += 2.0 * alpha_tilde[k].sqrt() * (e.conj() * sig).re - e.norm_sqr() * denom;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::update_epsilon;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn random_instance(
        rng: &mut ChaCha8Rng,
        m: usize,
        k: usize,
        n: usize,
    ) -> SystemInstance {
        let mut draw =
            |_: ()| c((rng.gen::<f64>() - 0.5) * 2.0, (rng.gen::<f64>() - 0.5) * 2.0);
        let h_d = (0..k).map(|_| CVector::from_fn(m, |_, _| draw(()))).collect();
        let g = CMatrix::from_fn(n, m, |_, _| draw(()));
        let h_r = (0..k).map(|_| CVector::from_fn(n, |_, _| draw(()))).collect();
        SystemInstance::new(h_d, g, h_r, vec![1.0; k], 10.0, 1.0, 0.8).unwrap()
    }

    fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| {
            Complex64::from_polar(rng.gen::<f64>(), rng.gen::<f64>() * std::f64::consts::TAU)
        })
    }

    #[test]
    fn link_terms_zero_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let h_d: Vec<CVector> = (0..2)
            .map(|_| CVector::from_fn(2, |_, _| c(rng.gen(), rng.gen())))
            .collect();
        let inst = SystemInstance::new(
            h_d.clone(),
            CMatrix::zeros(3, 2),
            (0..2).map(|_| CVector::from_fn(3, |_, _| c(rng.gen(), rng.gen()))).collect(),
            vec![1.0; 2],
            10.0,
            1.0,
            0.8,
        )
        .unwrap();
        let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(lt.a(i, k).norm(), 0.0);
                assert_relative_eq!(
                    (lt.b(i, k) - h_d[k].dotc(&w.column(i))).norm(),
                    0.0,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn link_terms_zero_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let inst = random_instance(&mut rng, 2, 2, 3);
        let lt = link_terms(&inst, &CMatrix::zeros(2, 2)).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(lt.a(i, k).norm(), 0.0);
                assert_eq!(lt.b(i, k).norm(), 0.0);
            }
        }
    }

    #[test]
    fn link_terms_received_identity() {
        // |b + θᴴa|² must equal |(h_dᴴ + h_rᴴΘᴴG)w|² for every θ.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let inst = random_instance(&mut rng, 2, 2, 3);
            let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
            let lt = link_terms(&inst, &w).unwrap();
            let theta = random_theta(&mut rng, 3);
            let h = crate::model::combined_channel(&inst, &theta).unwrap();
            for i in 0..2 {
                for k in 0..2 {
                    let direct = h[k].dotc(&w.column(i)).norm_sqr();
                    let via_terms = lt.received(i, k, &theta).norm_sqr();
                    assert_relative_eq!(direct, via_terms, max_relative = 1e-12, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn build_qcqp_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inst = random_instance(&mut rng, 2, 2, 3);
        let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        let q = build_qcqp(&lt, &[c(0.0, 0.0); 2], &[1.0; 2], 1.0);
        assert_eq!(q.u.norm(), 0.0);
        assert_eq!(q.nu.norm(), 0.0);
        assert_eq!(q.c, 0.0);
    }

    #[test]
    fn build_qcqp_scalar_expansion() {
        // K = N = 1 with scalar a, b, ε, ᾱ.
        let a0 = c(0.7, -0.2);
        let b0 = c(0.3, 0.4);
        let eps = c(0.5, 0.1);
        let at = 1.7;
        let sigma2 = 0.9;
        let lt = LinkTerms { k: 1, n: 1, a: vec![CVector::from_vec(vec![a0])], b: vec![b0] };
        let q = build_qcqp(&lt, &[eps], &[at], sigma2);
        let e2 = eps.norm_sqr();
        assert_relative_eq!(q.u[(0, 0)].re, e2 * a0.norm_sqr(), max_relative = 1e-14);
        assert_abs_diff_eq!(q.u[(0, 0)].im, 0.0, epsilon = 1e-16);
        let expect_nu = at.sqrt() * eps.conj() * a0 - e2 * b0.conj() * a0;
        assert_relative_eq!((q.nu[0] - expect_nu).norm(), 0.0, epsilon = 1e-14);
        let expect_c = 2.0 * at.sqrt() * (eps.conj() * b0).re - e2 * (sigma2 + b0.norm_sqr());
        assert_relative_eq!(q.c, expect_c, max_relative = 1e-14);
    }

    #[test]
    fn f4_matches_f3a_at_optimal_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..10 {
            let inst = random_instance(&mut rng, 2, 2, 4);
            let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
            let lt = link_terms(&inst, &w).unwrap();
            let at = [1.3, 0.8];
            let theta0 = random_theta(&mut rng, 4);
            let eps = update_epsilon(&lt, &theta0, &at, inst.sigma2());
            let q = build_qcqp(&lt, &eps, &at, inst.sigma2());
            for _ in 0..10 {
                let theta = random_theta(&mut rng, 4);
                let lhs = f4(&q, &theta);
                let rhs = f3a(&lt, &theta, &eps, &at, inst.sigma2());
                assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn f4_at_zero_is_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let inst = random_instance(&mut rng, 2, 2, 4);
        let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        let eps = [c(0.3, 0.2), c(-0.1, 0.4)];
        let q = build_qcqp(&lt, &eps, &[1.0, 1.0], 1.0);
        assert_relative_eq!(f4(&q, &CVector::zeros(4)), q.c, max_relative = 1e-14);
    }

    #[test]
    fn f4_unconstrained_max_completes_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let inst = random_instance(&mut rng, 3, 3, 3);
        let w = CMatrix::from_fn(3, 3, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        let eps = [c(0.3, 0.2), c(-0.1, 0.4), c(0.2, 0.0)];
        let q = build_qcqp(&lt, &eps, &[1.0; 3], 1.0);
        let chol = nalgebra::linalg::Cholesky::new(q.u.clone()).expect("U nonsingular here");
        let theta_star = chol.solve(&q.nu);
        let expect = q.nu.dotc(&theta_star).re + q.c;
        assert_relative_eq!(f4(&q, &theta_star), expect, max_relative = 1e-9);
        // and the gradient vanishes there
        assert!(f4_grad(&q, &theta_star).norm() < 1e-9 * q.nu.norm().max(1.0));
    }

    #[test]
    fn f4_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let inst = random_instance(&mut rng, 2, 2, 4);
        let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        let eps = [c(0.3, 0.2), c(-0.1, 0.4)];
        let q = build_qcqp(&lt, &eps, &[1.0, 1.0], 1.0);
        let h = 1e-5;
        for _ in 0..20 {
            let theta = random_theta(&mut rng, 4);
            let g = f4_grad(&q, &theta);
            for e in 0..4 {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[e] += c(h, 0.0);
                tm[e] -= c(h, 0.0);
                let d_re = (f4(&q, &tp) - f4(&q, &tm)) / (2.0 * h);
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[e] += c(0.0, h);
                tm[e] -= c(0.0, h);
                let d_im = (f4(&q, &tp) - f4(&q, &tm)) / (2.0 * h);
                // f4(θ+δ) − f4(θ) ≈ 2 Re{gᴴ δ}
                assert_relative_eq!(d_re, 2.0 * g[e].re, max_relative = 1e-6, epsilon = 1e-8);
                assert_relative_eq!(d_im, 2.0 * g[e].im, max_relative = 1e-6, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn f4_is_concave_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let inst = random_instance(&mut rng, 2, 3, 5);
        let w = CMatrix::from_fn(2, 3, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        let eps = [c(0.3, 0.2), c(-0.1, 0.4), c(0.05, -0.3)];
        let q = build_qcqp(&lt, &eps, &[1.0; 3], 1.0);
        for _ in 0..50 {
            let t1 = random_theta(&mut rng, 5);
            let t2 = random_theta(&mut rng, 5);
            let t: f64 = rng.gen();
            let mid = &t1 * c(t, 0.0) + &t2 * c(1.0 - t, 0.0);
            let lhs = f4(&q, &mid);
            let rhs = t * f4(&q, &t1) + (1.0 - t) * f4(&q, &t2);
            assert!(lhs >= rhs - 1e-10, "concavity violated: {lhs} < {rhs}");
        }
    }

    #[test]
    fn update_epsilon_scalar_cases() {
        // θ = 0, K=1, ᾱ=1, b=1, σ² = 1 → ε = 1/2.
        let lt = LinkTerms {
            k: 1,
            n: 1,
            a: vec![CVector::from_vec(vec![c(0.4, 0.0)])],
            b: vec![c(1.0, 0.0)],
        };
        let eps = update_epsilon(&lt, &CVector::zeros(1), &[1.0], 1.0);
        assert_relative_eq!(eps[0].re, 0.5, max_relative = 1e-15);
        // all b = 0, θ = 0 → ε = 0.
        let lt0 = LinkTerms {
            k: 1,
            n: 1,
            a: vec![CVector::from_vec(vec![c(0.4, 0.0)])],
            b: vec![c(0.0, 0.0)],
        };
        let eps = update_epsilon(&lt0, &CVector::zeros(1), &[1.0], 1.0);
        assert_eq!(eps[0], c(0.0, 0.0));
    }

    #[test]
    fn update_epsilon_maximizes_f3a_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let inst = random_instance(&mut rng, 2, 2, 4);
        let w = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
        let lt = link_terms(&inst, &w).unwrap();
        let at = [1.1, 0.9];
        let theta = random_theta(&mut rng, 4);
        let eps = update_epsilon(&lt, &theta, &at, inst.sigma2());
        let best = f3a(&lt, &theta, &eps, &at, inst.sigma2());
        let step = 1e-3;
        for user in 0..2 {
            for dr in [-step, 0.0, step] {
                for di in [-step, 0.0, step] {
                    if dr == 0.0 && di == 0.0 {
                        continue;
                    }
                    let mut e2 = eps.clone();
                    e2[user] += c(dr, di);
                    let v = f3a(&lt, &theta, &e2, &at, inst.sigma2());
                    assert!(v <= best + 1e-12);
                }
            }
        }
    }
}
