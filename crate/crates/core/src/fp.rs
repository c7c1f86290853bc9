//! Fractional-programming update rules for the transmit side.
//!
//! The weighted sum rate is first decoupled by the Lagrangian dual transform,
//! which introduces a nominal SINR `α_k` per user and the surrogate
//!
//! ```text
//! f1a(W, θ, α) = (1/ln 2) Σ_k ω_k [ ln(1+α_k) − α_k + (1+α_k)γ_k/(1+γ_k) ]
//! ```
//!
//! whose maximizer over `α` is `α_k = γ_k`, at which point `f1a` equals the
//! weighted sum rate exactly. For fixed `α` the remaining sum-of-ratios
//! objective `f2(W) = Σ_k ᾱ_k γ_k/(1+γ_k)` (with `ᾱ_k = ω_k(1+α_k)`) is
//! handled by the quadratic transform: auxiliaries `β_k` linearize the
//! ratios, and the optimal beamformer solves a regularized least-squares
//! system with a water-level dual variable `λ₀` enforcing the power budget.
//!
//! `λ₀` is found by bisection on the monotone map
//! `λ₀ ↦ Σ_k ‖w_k(λ₀)‖²`, using one Hermitian eigendecomposition of the
//! system matrix shared across users and bisection steps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{combined_channel, CMatrix, CVector, SystemInstance};
use crate::qcqp::LinkTerms;

const LN2: f64 = std::f64::consts::LN_2;

/// Options for the power-constraint bisection inside [`update_w`].
#[derive(Debug, Clone)]
pub struct PowerBisectionOpts {
    /// Relative tolerance on `Σ‖w_k‖²` versus `P_T`.
    pub tol: f64,
    /// Maximum bisection iterations.
    pub max_iter: usize,
}

impl Default for PowerBisectionOpts {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

/// Optimal nominal SINR update: `α_k = γ_k`.
pub fn update_alpha(gammas: &[f64]) -> Vec<f64> {
    gammas.to_vec()
}

/// Weighted auxiliaries `ᾱ_k = ω_k (1 + α_k)`.
pub fn alpha_tilde(omega: &[f64], alpha: &[f64]) -> Vec<f64> {
    omega.iter().zip(alpha).map(|(&w, &a)| w * (1.0 + a)).collect()
}

/// Dual-transform surrogate objective; equals the weighted sum rate at `α = γ`.
pub fn f1a(inst: &SystemInstance, w: &CMatrix, theta: &CVector, alpha: &[f64]) -> Result<f64> {
    let gammas = crate::model::sinr(inst, w, theta)?;
    let mut acc = 0.0;
    for k in 0..inst.users() {
        let a = alpha[k];
        let g = gammas[k];
        acc += inst.omega()[k] * ((1.0 + a).ln() - a + (1.0 + a) * g / (1.0 + g));
    }
    Ok(acc / LN2)
}

/// The sum-of-ratios objective `f2(W) = Σ_k ᾱ_k γ_k / (1 + γ_k)`.
pub fn f2(inst: &SystemInstance, w: &CMatrix, theta: &CVector, alpha_tilde: &[f64]) -> Result<f64> {
    let gammas = crate::model::sinr(inst, w, theta)?;
    Ok(alpha_tilde
        .iter()
        .zip(&gammas)
        .map(|(&at, &g)| at * g / (1.0 + g))
        .sum())
}

/// Quadratic-transform surrogate of `f2` in `(W, β)`.
pub fn f2a(
    inst: &SystemInstance,
    w: &CMatrix,
    theta: &CVector,
    beta: &[Complex64],
    alpha_tilde: &[f64],
) -> Result<f64> {
    let h = combined_channel(inst, theta)?;
    let kk = inst.users();
    let mut acc = 0.0;
    for k in 0..kk {
        let hw_k = h[k].dotc(&w.column(k));
        let denom: f64 = (0..kk).map(|i| h[k].dotc(&w.column(i)).norm_sqr()).sum::<f64>()
            + inst.sigma2();
        acc += 2.0 * alpha_tilde[k].sqrt() * (beta[k].conj() * hw_k).re
            - beta[k].norm_sqr() * denom;
    }
    Ok(acc)
}

/// Optimal quadratic-transform auxiliary for fixed `W`:
/// `β_k = √ᾱ_k h_kᴴw_k / (Σ_i |h_kᴴw_i|² + σ₀²)`.
pub fn update_beta(
    inst: &SystemInstance,
    w: &CMatrix,
    theta: &CVector,
    alpha_tilde: &[f64],
) -> Result<Vec<Complex64>> {
    let h = combined_channel(inst, theta)?;
    let kk = inst.users();
    let mut beta = Vec::with_capacity(kk);
    for k in 0..kk {
        let hw_k = h[k].dotc(&w.column(k));
        let denom: f64 = (0..kk).map(|i| h[k].dotc(&w.column(i)).norm_sqr()).sum::<f64>()
            + inst.sigma2();
        beta.push(alpha_tilde[k].sqrt() * hw_k / denom);
    }
    Ok(beta)
}

/// Shared factorization of `B = Σ_i |β_i|² h_i h_iᴴ` used to evaluate the
/// beamformer and its transmit power for any dual value `λ₀` in `O(KM)`.
struct WaterFillFactors {
    /// Eigenvalues of `B`, clamped to be nonnegative.
    eigvals: Vec<f64>,
    /// Eigenvector basis `Q` of `B`.
    q: CMatrix,
    /// Channels in the eigenbasis, `Qᴴ h_k`.
    h_tilde: Vec<CVector>,
    /// Per-user scale factors `√ᾱ_k β_k`.
    scale: Vec<Complex64>,
}

impl WaterFillFactors {
    fn new(h: &[CVector], beta: &[Complex64], alpha_tilde: &[f64], m: usize) -> Self {
        let mut b = CMatrix::zeros(m, m);
        for (hi, bi) in h.iter().zip(beta) {
            let w = bi.norm_sqr();
            if w > 0.0 {
                // b += |β_i|² h_i h_iᴴ
                for r in 0..m {
                    for c in 0..m {
                        b[(r, c)] += w * hi[r] * hi[c].conj();
                    }
                }
            }
        }
        let eig = b.symmetric_eigen();
        let eigvals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        let q = eig.eigenvectors;
        let h_tilde = h.iter().map(|hk| q.adjoint() * hk).collect();
        let scale = alpha_tilde
            .iter()
            .zip(beta)
            .map(|(&at, &bk)| at.sqrt() * bk)
            .collect();
        Self { eigvals, q, h_tilde, scale }
    }

    /// `Σ_k ‖w_k(λ₀)‖²`. At `λ₀ = 0` rank-deficient directions of `B` are
    /// treated in the pseudo-inverse sense (they carry no beam energy because
    /// every `h_k` with `β_k ≠ 0` lies in the range of `B`).
    fn power(&self, lambda: f64) -> f64 {
        let floor = self.eig_floor(lambda);
        let mut total = 0.0;
        for (ht, s) in self.h_tilde.iter().zip(&self.scale) {
            let a = s.norm_sqr();
            if a == 0.0 {
                continue;
            }
            let mut nsq = 0.0;
            for (c, &ev) in ht.iter().zip(&self.eigvals) {
                let d = lambda + ev;
                if d > floor {
                    nsq += c.norm_sqr() / (d * d);
                }
            }
            total += a * nsq;
        }
        total
    }

    fn beamformer(&self, lambda: f64, m: usize) -> CMatrix {
        let floor = self.eig_floor(lambda);
        let kk = self.h_tilde.len();
        let mut w = CMatrix::zeros(m, kk);
        for k in 0..kk {
            if self.scale[k].norm_sqr() == 0.0 {
                continue;
            }
            let coeffs = CVector::from_fn(m, |i, _| {
                let d = lambda + self.eigvals[i];
                if d > floor {
                    self.h_tilde[k][i] / d
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let col = &self.q * coeffs * self.scale[k];
            w.set_column(k, &col);
        }
        w
    }

    /// Null-space cutoff. For `λ₀ > 0` the shifted system is nonsingular and
    /// nothing is dropped; only the `λ₀ = 0` evaluation needs pseudo-inverse
    /// semantics on the numerically zero eigenvalues of `B`.
    fn eig_floor(&self, lambda: f64) -> f64 {
        if lambda > 0.0 {
            return 0.0;
        }
        let max = self.eigvals.iter().cloned().fold(0.0, f64::max);
        1e-12 * max
    }
}

/// Beamformer for an explicit dual value, plus its transmit power.
///
/// Exposed so the monotonicity of `λ₀ ↦ Σ‖w_k(λ₀)‖²` can be checked directly.
pub fn w_given_dual(
    inst: &SystemInstance,
    theta: &CVector,
    beta: &[Complex64],
    alpha_tilde: &[f64],
    lambda: f64,
) -> Result<(CMatrix, f64)> {
    let h = combined_channel(inst, theta)?;
    let f = WaterFillFactors::new(&h, beta, alpha_tilde, inst.bs_antennas());
    Ok((f.beamformer(lambda, inst.bs_antennas()), f.power(lambda)))
}

/// Optimal transmit beamformer for fixed `β`:
/// `w_k = √ᾱ_k β_k (λ₀ I + Σ_i |β_i|² h_i h_iᴴ)⁻¹ h_k`, with `λ₀` the
/// smallest nonnegative dual value meeting the power budget.
///
/// If the unconstrained solution (`λ₀ = 0`) is feasible it is returned;
/// otherwise `λ₀` is bracketed by doubling and resolved by bisection until
/// `Σ‖w_k‖² = P_T` within `opts.tol` relative.
pub fn update_w(
    inst: &SystemInstance,
    theta: &CVector,
    beta: &[Complex64],
    alpha_tilde: &[f64],
    opts: &PowerBisectionOpts,
) -> Result<CMatrix> {
    if beta.len() != inst.users() || alpha_tilde.len() != inst.users() {
        return Err(Error::DimensionMismatch("beta/alpha_tilde length".into()));
    }
    let h = combined_channel(inst, theta)?;
    let m = inst.bs_antennas();
    let f = WaterFillFactors::new(&h, beta, alpha_tilde, m);
    let p_t = inst.p_t();

    if f.power(0.0) <= p_t {
        return Ok(f.beamformer(0.0, m));
    }

    // Bracket: power(λ) is continuous and nonincreasing, → 0 as λ → ∞.
    let mut hi = 1.0;
    let mut grow = 0;
    while f.power(hi) > p_t {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::SolverFailure(
                "power bisection could not bracket the dual variable".into(),
            ));
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };

    // Narrow until the interval is numerically exhausted; `hi` stays on the
    // feasible side throughout, so the returned beamformer never exceeds the
    // budget.
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.power(mid) > p_t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = f.power(hi);
    if (p - p_t).abs() > opts.tol * p_t {
        return Err(Error::SolverFailure(format!(
            "power bisection stalled at {p} vs budget {p_t} after {} iterations",
            opts.max_iter
        )));
    }
    Ok(f.beamformer(hi, m))
}

/// Optimal reflection-side auxiliary for fixed `θ`:
/// `ε_k = √ᾱ_k (b_{k,k} + θᴴ a_{k,k}) / (Σ_i |b_{i,k} + θᴴ a_{i,k}|² + σ₀²)`.
pub fn update_epsilon(
    lt: &LinkTerms,
    theta: &CVector,
    alpha_tilde: &[f64],
    sigma2: f64,
) -> Vec<Complex64> {
    let kk = lt.users();
    let mut eps = Vec::with_capacity(kk);
    for k in 0..kk {
        let num = lt.received(k, k, theta);
        let denom: f64 =
            (0..kk).map(|i| lt.received(i, k, theta).norm_sqr()).sum::<f64>() + sigma2;
        eps.push(alpha_tilde[k].sqrt() * num / denom);
    }
    eps
}
