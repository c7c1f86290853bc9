//! Reflection-coefficient solvers for the concave QCQP
//! `max −θᴴUθ + 2Re{θᴴν}` under per-element RC constraints.
//!
//! Three interchangeable methods, all applicable to the unit ball, the unit
//! circle and the discrete phase grid:
//!
//! * **LDD / NPP** — Lagrange dual decomposition of the convex (unit-ball)
//!   problem. For a dual vector `λ ≥ 0` the inner maximizer is
//!   `θ(λ) = (U + diag(λ))⁻¹ ν`; the dual is minimized by the ellipsoid
//!   method with subgradient `g_n = 1 − |θ_n(λ)|²`. Non-convex sets are then
//!   reached by nearest-point projection. Cost is dominated by one `O(N³)`
//!   solve per ellipsoid step.
//! * **ICU** — cyclic exact maximization of one coefficient at a time. With
//!   `A_{1,n} = u_{nn}` and `A_{2,n} = ν_n − Σ_{j≠n} u_{nj} θ_j` the
//!   single-element objective is `−A_{1,n}|θ_n|² + 2Re{θ_n* A_{2,n}}`, whose
//!   constrained argmax is closed-form for all three sets. A running copy of
//!   `Uθ` keeps one sweep at `O(N²)`.
//! * **ADMM** — splitting `θ = q` with penalty `μ`. Iterates
//!   `θ ← Pj_F(q − λ̄/μ)`, `q ← (2U + μI)⁻¹(2ν + λ̄ + μθ)`,
//!   `λ̄ ← λ̄ − μ(q − θ)`; the `q`-system is factorized once. Convergence on
//!   the non-convex sets is guaranteed when `μ/2·I − U ≻ 0`, which the
//!   `μ = ι‖U‖₂` rule enforces; the iteration then ascends the Lyapunov
//!   function exposed as [`lyapunov`].

use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CMatrix, CVector, FeasibleSet};
use crate::qcqp::{f4, QcqpData};

/// Shared knobs for the RC solvers.
#[derive(Debug, Clone)]
pub struct SolverOpts {
    /// Iteration cap (ADMM iterations / ICU sweeps; the ellipsoid method
    /// derives its own budget from `ellipsoid_tol` and never uses less).
    pub max_iter: usize,
    /// Relative objective-improvement threshold used as the stop rule.
    pub tol: f64,
    /// Duality-gap / localization tolerance of the ellipsoid method.
    pub ellipsoid_tol: f64,
    /// Override for the ADMM penalty; `None` applies the `ι‖U‖₂` rule.
    pub admm_mu_override: Option<f64>,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self { max_iter: 2000, tol: 1e-8, ellipsoid_tol: 1e-7, admm_mu_override: None }
    }
}

/// Outcome of one RC solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Solution, feasible for the requested set.
    pub theta: CVector,
    /// `f4` at `theta` (constant term included).
    pub f4_value: f64,
    /// Iterations consumed (sweeps for ICU, steps for ADMM, ellipsoid cuts
    /// for LDD).
    pub iterations: usize,
    /// Whether the stopping rule was met before the iteration cap.
    pub converged: bool,
    /// `f4` evaluations along the run (per sweep / step; best-so-far for the
    /// dual method).
    pub trace: Vec<f64>,
    /// Dual variables at the reported solution (LDD only).
    pub dual_lambda: Option<Vec<f64>>,
}

impl SolveReport {
    fn empty() -> Self {
        Self {
            theta: CVector::zeros(0),
            f4_value: 0.0,
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            dual_lambda: None,
        }
    }
}

/// Spectral norm of a Hermitian PSD matrix (its largest eigenvalue).
pub fn spectral_norm(u: &CMatrix) -> f64 {
    if u.nrows() == 0 {
        return 0.0;
    }
    u.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
}

/// ADMM penalty rule: `μ = ι‖U‖₂` with `ι ≥ 1` the smallest integer making
/// `μ/2·I − U` strictly positive definite (`ι = 3` for any nonzero PSD `U`).
/// Falls back to `μ = 1` for `U = 0`, where the objective is linear.
pub fn select_mu(u: &CMatrix) -> f64 {
    let lmax = spectral_norm(u);
    if lmax <= 0.0 {
        return 1.0;
    }
    for iota in 1..=4u32 {
        let mu = f64::from(iota) * lmax;
        if 0.5 * mu - lmax > 0.0 {
            return mu;
        }
    }
    4.0 * lmax
}

// ---------------------------------------------------------------------------
// ICU
// ---------------------------------------------------------------------------

/// Exact single-element argmax given `A_1 = u_{nn}` and `A_2`.
///
/// `A_2 = 0` leaves the previous value in place: on the phase sets every
/// feasible point scores the same, and keeping the iterate deterministic
/// preserves monotonicity.
fn icu_point(a1: f64, a2: Complex64, prev: Complex64, fs: FeasibleSet) -> Complex64 {
    if a2 == Complex64::new(0.0, 0.0) {
        return prev;
    }
    match fs {
        FeasibleSet::Ideal => {
            let mag = a2.norm();
            let r = if a1 > 0.0 { (mag / a1).min(1.0) } else { 1.0 };
            a2 / mag * r
        }
        FeasibleSet::ContinuousPhase => a2 / a2.norm(),
        FeasibleSet::DiscretePhase { .. } => fs.project(a2),
    }
}

/// One coordinate update of the ICU method: returns the optimizer of `f4`
/// over `θ_n ∈ F` with all other coefficients held at `theta`.
pub fn icu_element(q: &QcqpData, theta: &CVector, n: usize, fs: FeasibleSet) -> Complex64 {
    let row_dot: Complex64 = (0..q.elements())
        .filter(|&j| j != n)
        .map(|j| q.u[(n, j)] * theta[j])
        .sum();
    let a1 = q.u[(n, n)].re;
    let a2 = q.nu[n] - row_dot;
    icu_point(a1, a2, theta[n], fs)
}

/// Cyclic exact coordinate ascent over the RC vector, sweeping `n = 1..N`
/// until a full sweep improves `f4` by less than `opts.tol` (relative).
///
/// Monotone by construction; the output is element-wise optimal for `F`.
pub fn solve_icu(
    q: &QcqpData,
    theta_init: &CVector,
    fs: FeasibleSet,
    opts: &SolverOpts,
) -> SolveReport {
    let n = q.elements();
    if n == 0 {
        return SolveReport::empty();
    }
    let mut theta = theta_init.clone();
    let mut s = &q.u * &theta; // running Uθ, refreshed each sweep
    let mut f_prev = f4_from_cache(q, &theta, &s);
    let mut trace = vec![f_prev];
    let mut converged = false;
    let mut sweeps = 0;
    for _ in 0..opts.max_iter {
        sweeps += 1;
        for idx in 0..n {
            let diag = q.u[(idx, idx)];
            let a2 = q.nu[idx] - (s[idx] - diag * theta[idx]);
            let new = icu_point(diag.re, a2, theta[idx], fs);
            let delta = new - theta[idx];
            if delta != Complex64::new(0.0, 0.0) {
                // rank-one refresh of s = Uθ
                let col = q.u.column(idx);
                for r in 0..n {
                    s[r] += col[r] * delta;
                }
                theta[idx] = new;
            }
        }
        s = &q.u * &theta;
        let f = f4_from_cache(q, &theta, &s);
        trace.push(f);
        let improvement = f - f_prev;
        f_prev = f;
        if improvement <= opts.tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    SolveReport {
        theta,
        f4_value: f_prev,
        iterations: sweeps,
        converged,
        trace,
        dual_lambda: None,
    }
}

fn f4_from_cache(q: &QcqpData, theta: &CVector, u_theta: &CVector) -> f64 {
    -theta.dotc(u_theta).re + 2.0 * theta.dotc(&q.nu).re + q.c
}

// ---------------------------------------------------------------------------
// ADMM
// ---------------------------------------------------------------------------

/// Explicit ADMM iteration state, exposed so callers can observe the
/// per-step Lyapunov value and the dual identity `λ̄ = 2Uq − 2ν`.
#[derive(Debug, Clone)]
pub struct AdmmIter {
    fs: FeasibleSet,
    mu: f64,
    factor: Cholesky<Complex64, Dyn>,
    /// Projected (feasible) iterate.
    pub theta: CVector,
    /// Unconstrained splitting variable.
    pub q: CVector,
    /// Scaled dual variable `λ̄`.
    pub lambda: CVector,
}

impl AdmmIter {
    /// Standard initialization: `q⁰ = θ⁰ = theta_init`, `λ̄⁰ = 2Uq⁰ − 2ν`,
    /// which keeps the dual identity valid from the very first step.
    pub fn new(data: &QcqpData, theta_init: &CVector, fs: FeasibleSet, mu: f64) -> Self {
        let lambda = (&data.u * theta_init - &data.nu) * Complex64::new(2.0, 0.0);
        Self::from_state(data, fs, mu, theta_init.clone(), theta_init.clone(), lambda)
    }

    /// Initialization from explicit state, used when a caller wants a
    /// specific `λ̄⁰`.
    pub fn from_state(
        data: &QcqpData,
        fs: FeasibleSet,
        mu: f64,
        theta: CVector,
        q: CVector,
        lambda: CVector,
    ) -> Self {
        let n = data.elements();
        let mut sys = data.u.clone() * Complex64::new(2.0, 0.0);
        for i in 0..n {
            sys[(i, i)] += Complex64::new(mu, 0.0);
        }
        // 2U + μI is Hermitian positive definite for μ > 0; retry with a
        // ridge only if round-off says otherwise.
        let factor = Cholesky::new(sys.clone()).unwrap_or_else(|| {
            let mut r = sys;
            let bump = 1e-12 * (1.0 + mu);
            for i in 0..n {
                r[(i, i)] += Complex64::new(bump, 0.0);
            }
            Cholesky::new(r).expect("2U + uI must be positive definite")
        });
        Self { fs, mu, factor, theta, q, lambda }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// One full iteration: θ-projection, q-solve, dual update.
    pub fn step(&mut self, data: &QcqpData) {
        let n = data.elements();
        for i in 0..n {
            self.theta[i] = self.fs.project(self.q[i] - self.lambda[i] / self.mu);
        }
        let rhs = &data.nu * Complex64::new(2.0, 0.0)
            + &self.lambda
            + &self.theta * Complex64::new(self.mu, 0.0);
        self.q = self.factor.solve(&rhs);
        self.lambda -= (&self.q - &self.theta) * Complex64::new(self.mu, 0.0);
    }
}

/// Merit function of the ADMM iteration (the constant-free part; the
/// feasible-set indicator is zero for feasible `θ`):
///
/// ```text
/// V(q, θ) = −qᴴ(μ/2·I − U)q − μ/2·θᴴθ + Re{2νᴴθ − 2qᴴUθ + μθᴴq}
/// ```
///
/// Nondecreasing along the iteration whenever `μ/2·I − U ≻ 0`.
pub fn lyapunov(data: &QcqpData, mu: f64, q: &CVector, theta: &CVector) -> f64 {
    let uq = &data.u * q;
    let q_uq = q.dotc(&uq).re;
    let u_theta = &data.u * theta;
    -(0.5 * mu) * q.norm_squared() + q_uq - (0.5 * mu) * theta.norm_squared()
        + 2.0 * data.nu.dotc(theta).re
        - 2.0 * q.dotc(&u_theta).re
        + mu * theta.dotc(q).re
}

/// ADMM on the split `(θ, q)`; stops when `‖q − θ‖∞ < tol` and the `f4`
/// improvement falls below `tol` (relative), or at `max_iter` with the best
/// feasible iterate.
pub fn solve_admm(
    data: &QcqpData,
    theta_init: &CVector,
    fs: FeasibleSet,
    opts: &SolverOpts,
) -> SolveReport {
    let n = data.elements();
    if n == 0 {
        return SolveReport::empty();
    }
    let mu = opts.admm_mu_override.unwrap_or_else(|| select_mu(&data.u));
    let mut it = AdmmIter::new(data, theta_init, fs, mu);
    let mut f_prev = f4(data, &it.theta);
    let mut best_f = f_prev;
    let mut best_theta = it.theta.clone();
    let mut trace = vec![f_prev];
    let mut converged = false;
    let mut steps = 0;
    for _ in 0..opts.max_iter {
        steps += 1;
        it.step(data);
        let f = f4(data, &it.theta);
        trace.push(f);
        if f > best_f {
            best_f = f;
            best_theta = it.theta.clone();
        }
        let split_gap = inf_norm(&(&it.q - &it.theta));
        let improved = (f - f_prev).abs();
        f_prev = f;
        if split_gap < opts.tol && improved <= opts.tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let (theta, f4_value) = if converged {
        let f = f4(data, &it.theta);
        (it.theta, f)
    } else {
        (best_theta, best_f)
    };
    SolveReport { theta, f4_value, iterations: steps, converged, trace, dual_lambda: None }
}

// ---------------------------------------------------------------------------
// LDD (ellipsoid method on the dual of the unit-ball problem)
// ---------------------------------------------------------------------------

/// Solves the convex unit-ball problem by Lagrange dual decomposition.
///
/// The dual `L(λ) = max_θ f4a(θ) − Σ λ_n(|θ_n|² − 1)` is minimized over
/// `λ ≥ 0` by the ellipsoid method (central cuts, constraint cuts for
/// `λ_n < 0`), starting from a ball of radius `max(10, 10‖ν‖)` at the
/// origin. Iteration stops once the certified duality gap between the best
/// dual value and the best projected primal iterate drops below
/// `ellipsoid_tol` (relative), or the ellipsoid volume metric falls below
/// `ellipsoid_tol`; if the initial ball turns out too small the radius is
/// grown and the method restarted. Intended for `N ≤ 64` — the per-cut
/// `O(N³)` solve makes this the reference method, not the fast path.
pub fn solve_ldd(data: &QcqpData, opts: &SolverOpts) -> Result<SolveReport> {
    let n = data.elements();
    if n == 0 {
        return Ok(SolveReport::empty());
    }
    let u_norm = spectral_norm(&data.u);

    // Linear objective (U = 0): the maximum sits on the boundary in every
    // coordinate with ν_n ≠ 0, with dual λ_n = |ν_n| by stationarity.
    if u_norm <= 0.0 {
        let theta = CVector::from_fn(n, |i, _| {
            let v = data.nu[i];
            if v == Complex64::new(0.0, 0.0) {
                v
            } else {
                v / v.norm()
            }
        });
        let lambda: Vec<f64> = data.nu.iter().map(|v| v.norm()).collect();
        let fv = f4(data, &theta);
        return Ok(SolveReport {
            theta,
            f4_value: fv,
            iterations: 0,
            converged: true,
            trace: vec![fv],
            dual_lambda: Some(lambda),
        });
    }

    if n == 1 {
        return Ok(ldd_scalar(data));
    }

    let ridge = 1e-10 * (1.0 + u_norm);
    let nf = n as f64;
    let step_logdet = nf * (nf * nf / (nf * nf - 1.0)).ln() + ((nf - 1.0) / (nf + 1.0)).ln();

    let mut radius = 10.0f64.max(10.0 * data.nu.norm());
    let mut total_iters = 0usize;
    let mut last: Option<(f64, CVector, Vec<f64>, Vec<f64>)> = None;

    for _attempt in 0..3 {
        let budget = ((2.0 * nf * nf * (radius / opts.ellipsoid_tol).max(10.0).ln()).ceil()
            as usize)
            .clamp(opts.max_iter, 200_000);
        let mut center = DVector::<f64>::zeros(n);
        let mut shape = DMatrix::<f64>::identity(n, n) * (radius * radius);
        let mut logdet = 2.0 * nf * radius.ln();

        let mut dual_best = f64::INFINITY;
        let mut lambda_best = vec![0.0; n];
        let mut primal_best = f64::NEG_INFINITY;
        let mut theta_best = CVector::zeros(n);
        let mut trace: Vec<f64> = Vec::new();
        let mut converged = false;

        for _ in 0..budget {
            total_iters += 1;
            let worst = (0..n)
                .min_by(|&a, &b| center[a].total_cmp(&center[b]))
                .expect("n >= 2 here");
            let mut cut = DVector::<f64>::zeros(n);
            // Deep-cut depth: how far past the center the kept half-space
            // boundary sits, in units of the cut's ellipsoid norm.
            let depth;
            if center[worst] < 0.0 {
                // constraint cut for λ_n ≥ 0: everything with λ_n < 0 goes
                cut[worst] = -1.0;
                depth = -center[worst];
            } else {
                let theta = solve_shifted(data, center.as_slice(), ridge)?;
                let f4a_val = f4a(data, &theta);
                let dual_val = f4a_val
                    + (0..n)
                        .map(|i| center[i] * (1.0 - theta[i].norm_sqr()))
                        .sum::<f64>();
                if dual_val < dual_best {
                    dual_best = dual_val;
                    lambda_best = center.as_slice().to_vec();
                }
                let clamped = CVector::from_fn(n, |i, _| FeasibleSet::Ideal.project(theta[i]));
                let p = f4a(data, &clamped);
                if p > primal_best {
                    primal_best = p;
                    theta_best = clamped;
                }
                trace.push(primal_best + data.c);
                if dual_best - primal_best <= opts.ellipsoid_tol * dual_best.abs().max(1.0) {
                    converged = true;
                    break;
                }
                for i in 0..n {
                    cut[i] = 1.0 - theta[i].norm_sqr();
                }
                // objective deep cut: the minimizer satisfies
                // L(λ) ≥ L(c) + gᵀ(λ−c), so gᵀ(λ−c) ≤ dual_best − L(c) ≤ 0
                depth = dual_val - dual_best;
            }

            // deep-cut ellipsoid update
            let pg = &shape * &cut;
            let gpg = cut.dot(&pg);
            if gpg <= 0.0 || !gpg.is_finite() {
                break; // shape matrix degenerated numerically
            }
            let gnorm = gpg.sqrt();
            let alpha = depth / gnorm;
            if alpha >= 1.0 {
                // the whole ellipsoid sits past the cut: localization done
                break;
            }
            let step = (1.0 + nf * alpha) / (nf + 1.0);
            center -= &pg * (step / gnorm);
            let coef = nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0);
            let downdate = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
            let outer = &pg * pg.transpose();
            shape = (shape - outer * (downdate / gpg)) * coef;
            for r in 0..n {
                for c in (r + 1)..n {
                    let avg = 0.5 * (shape[(r, c)] + shape[(c, r)]);
                    shape[(r, c)] = avg;
                    shape[(c, r)] = avg;
                }
            }
            logdet += step_logdet
                + nf * (1.0 - alpha * alpha).ln()
                + ((1.0 - alpha) / (1.0 + alpha)).ln();
            if (logdet / (2.0 * nf)).exp() < opts.ellipsoid_tol {
                break; // dual localized to an ellipsoid_tol-sized ball
            }
        }

        if primal_best.is_finite() {
            last = Some((primal_best, theta_best.clone(), lambda_best.clone(), trace.clone()));
        }
        if converged {
            let (p, theta, lambda, trace) = last.unwrap();
            return Ok(SolveReport {
                theta,
                f4_value: p + data.c,
                iterations: total_iters,
                converged: true,
                trace,
                dual_lambda: Some(lambda),
            });
        }
        radius *= 10.0;
    }

    match last {
        Some((p, theta, lambda, trace)) => Ok(SolveReport {
            theta,
            f4_value: p + data.c,
            iterations: total_iters,
            converged: false,
            trace,
            dual_lambda: Some(lambda),
        }),
        None => Err(Error::SolverFailure(
            "ellipsoid method produced no feasible dual iterate".into(),
        )),
    }
}

fn ldd_scalar(data: &QcqpData) -> SolveReport {
    let u = data.u[(0, 0)].re.max(0.0);
    let v = data.nu[0];
    let vn = v.norm();
    let (theta0, lambda) = if vn == 0.0 {
        (Complex64::new(0.0, 0.0), 0.0)
    } else if u > 0.0 && vn <= u {
        (v / u, 0.0)
    } else {
        (v / vn, vn - u)
    };
    let theta = CVector::from_vec(vec![theta0]);
    let fv = f4(data, &theta);
    SolveReport {
        theta,
        f4_value: fv,
        iterations: 1,
        converged: true,
        trace: vec![fv],
        dual_lambda: Some(vec![lambda]),
    }
}

/// `(U + diag(λ))⁻¹ ν`, adding the ridge only when the plain factorization
/// fails (U can be rank-deficient when K < N).
fn solve_shifted(data: &QcqpData, lambda: &[f64], ridge: f64) -> Result<CVector> {
    let n = data.elements();
    let mut m = data.u.clone();
    for i in 0..n {
        m[(i, i)] += Complex64::new(lambda[i], 0.0);
    }
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok(ch.solve(&data.nu));
    }
    for i in 0..n {
        m[(i, i)] += Complex64::new(ridge, 0.0);
    }
    Cholesky::new(m)
        .map(|ch| ch.solve(&data.nu))
        .ok_or_else(|| Error::SolverFailure("shifted system not positive definite".into()))
}

/// Entrywise max modulus.
fn inf_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `f4` without the constant term.
fn f4a(data: &QcqpData, theta: &CVector) -> f64 {
    let ut = &data.u * theta;
    -theta.dotc(&ut).re + 2.0 * theta.dotc(&data.nu).re
}

// ---------------------------------------------------------------------------
// NPP
// ---------------------------------------------------------------------------

/// Convex solver choice for the first stage of NPP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnerConvex {
    Ldd,
    Icu,
    Admm,
}

impl std::fmt::Display for InnerConvex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InnerConvex::Ldd => write!(f, "ldd"),
            InnerConvex::Icu => write!(f, "icu"),
            InnerConvex::Admm => write!(f, "admm"),
        }
    }
}

/// Nearest-point projection: solve the unit-ball relaxation with the chosen
/// convex method, then project each coefficient onto the requested set.
/// For the unit ball itself this is exactly the inner solve.
pub fn solve_npp(
    data: &QcqpData,
    fs: FeasibleSet,
    inner: InnerConvex,
    theta_init: &CVector,
    opts: &SolverOpts,
) -> Result<SolveReport> {
    let n = data.elements();
    if n == 0 {
        return Ok(SolveReport::empty());
    }
    let ball_init = CVector::from_fn(n, |i, _| FeasibleSet::Ideal.project(theta_init[i]));
    let inner_report = match inner {
        InnerConvex::Ldd => solve_ldd(data, opts)?,
        InnerConvex::Icu => solve_icu(data, &ball_init, FeasibleSet::Ideal, opts),
        InnerConvex::Admm => solve_admm(data, &ball_init, FeasibleSet::Ideal, opts),
    };
    if fs == FeasibleSet::Ideal {
        return Ok(inner_report);
    }
    let theta = CVector::from_fn(n, |i, _| fs.project(inner_report.theta[i]));
    let f4_value = f4(data, &theta);
    let mut trace = inner_report.trace;
    trace.push(f4_value);
    Ok(SolveReport {
        theta,
        f4_value,
        iterations: inner_report.iterations,
        converged: inner_report.converged,
        trace,
        dual_lambda: inner_report.dual_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random PSD quadratic data with controllable rank.
    fn random_qcqp(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> QcqpData {
        let a = CMatrix::from_fn(rank, n, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let u = a.adjoint() * &a;
        let u = (&u + u.adjoint()) * c(0.5, 0.0);
        let nu = CVector::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        QcqpData { u, nu, c: rng.gen::<f64>() - 0.5 }
    }

    fn random_feasible(rng: &mut ChaCha8Rng, n: usize, fs: FeasibleSet) -> CVector {
        CVector::from_fn(n, |_, _| {
            fs.project(Complex64::from_polar(1.0, rng.gen::<f64>() * 2.0 * PI))
        })
    }

    #[test]
    fn select_mu_examples() {
        // λmax = 1 → μ = 3 (ι = 2 gives exactly 0, not strict).
        let u = CMatrix::from_fn(2, 2, |i, j| if i == j && i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert_relative_eq!(select_mu(&u), 3.0, max_relative = 1e-12);
        let u = CMatrix::from_fn(1, 1, |_, _| c(0.4, 0.0));
        assert_relative_eq!(select_mu(&u), 1.2, max_relative = 1e-12);
        assert_eq!(select_mu(&CMatrix::zeros(3, 3)), 1.0);
    }

    #[test]
    fn icu_element_trivial_cases() {
        // A2 = 0 on a phase set keeps the previous value.
        let q = QcqpData {
            u: CMatrix::from_fn(1, 1, |_, _| c(2.0, 0.0)),
            nu: CVector::zeros(1),
            c: 0.0,
        };
        let prev = Complex64::from_polar(1.0, 1.0);
        let theta = CVector::from_vec(vec![prev]);
        assert_eq!(icu_element(&q, &theta, 0, FeasibleSet::ContinuousPhase), prev);

        // Ideal, A1 = 2, A2 = 1 → interior stationary point 0.5.
        let q = QcqpData {
            u: CMatrix::from_fn(1, 1, |_, _| c(2.0, 0.0)),
            nu: CVector::from_vec(vec![c(1.0, 0.0)]),
            c: 0.0,
        };
        let theta = CVector::zeros(1);
        let out = icu_element(&q, &theta, 0, FeasibleSet::Ideal);
        assert_relative_eq!(out.re, 0.5, max_relative = 1e-15);

        // Discrete τ=2, ∠A2 = 0.4π: circular distance 0.4π to phase 0 beats
        // 0.6π to phase π.
        let q = QcqpData {
            u: CMatrix::from_fn(1, 1, |_, _| c(1.0, 0.0)),
            nu: CVector::from_vec(vec![Complex64::from_polar(1.0, 0.4 * PI)]),
            c: 0.0,
        };
        let out = icu_element(&q, &CVector::zeros(1), 0, FeasibleSet::discrete(2).unwrap());
        assert_eq!(out, FeasibleSet::discrete_point(2, 0));
    }

    #[test]
    fn icu_monotone_per_element_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for fs in [
            FeasibleSet::Ideal,
            FeasibleSet::ContinuousPhase,
            FeasibleSet::discrete(4).unwrap(),
        ] {
            for _ in 0..20 {
                let q = random_qcqp(&mut rng, 6, 4);
                let mut theta = random_feasible(&mut rng, 6, fs);
                let mut f_prev = f4(&q, &theta);
                for _ in 0..3 {
                    for n in 0..6 {
                        theta[n] = icu_element(&q, &theta, n, fs);
                        let f = f4(&q, &theta);
                        assert!(
                            f >= f_prev - 1e-10 * f_prev.abs().max(1.0),
                            "element update decreased f4: {f} < {f_prev}"
                        );
                        f_prev = f;
                    }
                }
            }
        }
    }

    #[test]
    fn icu_fixed_point_unchanged_after_one_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let q = random_qcqp(&mut rng, 5, 5);
        let fs = FeasibleSet::discrete(4).unwrap();
        let start = random_feasible(&mut rng, 5, fs);
        let first = solve_icu(&q, &start, fs, &SolverOpts::default());
        assert!(first.converged);
        let second = solve_icu(&q, &first.theta, fs, &SolverOpts::default());
        assert_eq!(second.iterations, 1);
        assert_eq!(second.theta, first.theta);
    }

    #[test]
    fn ldd_interior_optimum() {
        // Well-conditioned U with tiny ν: unconstrained max is feasible and
        // the first dual iterate λ = 0 certifies it immediately.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut q = random_qcqp(&mut rng, 4, 4);
        for i in 0..4 {
            q.u[(i, i)] += c(1.0, 0.0);
        }
        q.nu *= c(1e-3, 0.0);
        let rep = solve_ldd(&q, &SolverOpts::default()).unwrap();
        assert!(rep.converged);
        let chol = Cholesky::new(q.u.clone()).unwrap();
        let direct = chol.solve(&q.nu);
        assert!(direct.iter().all(|z| z.norm() <= 1.0));
        assert_relative_eq!(rep.f4_value, f4(&q, &direct), max_relative = 1e-8);
        let lam = rep.dual_lambda.unwrap();
        assert!(lam.iter().all(|&l| l.abs() < 1e-6));
    }

    #[test]
    fn ldd_scalar_radial_clamp() {
        // N=1: θ = ν/u if inside the ball, else the unit-modulus direction.
        let q = QcqpData {
            u: CMatrix::from_fn(1, 1, |_, _| c(2.0, 0.0)),
            nu: CVector::from_vec(vec![c(1.0, 0.0)]),
            c: 0.0,
        };
        let rep = solve_ldd(&q, &SolverOpts::default()).unwrap();
        assert_relative_eq!(rep.theta[0].re, 0.5, max_relative = 1e-12);

        let q = QcqpData {
            u: CMatrix::from_fn(1, 1, |_, _| c(0.5, 0.0)),
            nu: CVector::from_vec(vec![Complex64::from_polar(2.0, 1.1)]),
            c: 0.0,
        };
        let rep = solve_ldd(&q, &SolverOpts::default()).unwrap();
        assert_relative_eq!(rep.theta[0].norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(rep.theta[0].arg(), 1.1, max_relative = 1e-12);
        // complementary slackness: λ = |ν| − u on the boundary
        assert_relative_eq!(rep.dual_lambda.unwrap()[0], 1.5, max_relative = 1e-12);
    }

    #[test]
    fn convex_case_three_solvers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let opts = SolverOpts::default();
        for _ in 0..10 {
            let q = random_qcqp(&mut rng, 8, 4);
            let start = random_feasible(&mut rng, 8, FeasibleSet::ContinuousPhase);
            let ldd = solve_ldd(&q, &opts).unwrap();
            let icu = solve_icu(&q, &start, FeasibleSet::Ideal, &opts);
            let admm = solve_admm(&q, &start, FeasibleSet::Ideal, &opts);
            let scale = ldd.f4_value.abs().max(1.0);
            assert!(
                (ldd.f4_value - icu.f4_value).abs() <= 1e-5 * scale,
                "LDD {} vs ICU {}",
                ldd.f4_value,
                icu.f4_value
            );
            assert!(
                (ldd.f4_value - admm.f4_value).abs() <= 1e-5 * scale,
                "LDD {} vs ADMM {}",
                ldd.f4_value,
                admm.f4_value
            );
        }
    }

    #[test]
    fn admm_scalar_iteration_matches_hand_computation() {
        // U = 0 (fallback μ = 1), ν = 1, all state zero: the first q-update
        // gives q = 2ν/μ = 2, and the next projection clamps θ to 1.
        let data = QcqpData {
            u: CMatrix::zeros(1, 1),
            nu: CVector::from_vec(vec![c(1.0, 0.0)]),
            c: 0.0,
        };
        let mu = select_mu(&data.u);
        assert_eq!(mu, 1.0);
        let mut it = AdmmIter::from_state(
            &data,
            FeasibleSet::Ideal,
            mu,
            CVector::zeros(1),
            CVector::zeros(1),
            CVector::zeros(1),
        );
        it.step(&data);
        // θ¹ = Pj(0 − 0) = 0; q¹ = (2·0 + 1)⁻¹(2·1 + 0 + 0) = 2
        assert_eq!(it.theta[0], c(0.0, 0.0));
        assert_relative_eq!(it.q[0].re, 2.0, max_relative = 1e-14);
        // λ̄¹ = 0 − 1·(2 − 0) = −2, which equals 2Uq¹ − 2ν
        assert_relative_eq!(it.lambda[0].re, -2.0, max_relative = 1e-14);
        it.step(&data);
        // θ² = Pj(2 − (−2)/1) = Pj(4) → 1
        assert_relative_eq!(it.theta[0].re, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn admm_dual_identity_and_lyapunov_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for fs in [FeasibleSet::ContinuousPhase, FeasibleSet::discrete(4).unwrap()] {
            for _ in 0..10 {
                let data = random_qcqp(&mut rng, 6, 4);
                let mu = select_mu(&data.u);
                let start = random_feasible(&mut rng, 6, fs);
                let mut it = AdmmIter::new(&data, &start, fs, mu);
                let mut v_prev = lyapunov(&data, mu, &it.q, &it.theta);
                for _ in 0..200 {
                    it.step(&data);
                    let ident = (&data.u * &it.q) * c(2.0, 0.0) - &data.nu * c(2.0, 0.0);
                    let err = inf_norm(&(&it.lambda - ident));
                    assert!(
                        err <= 1e-10 * (1.0 + inf_norm(&it.lambda)),
                        "dual identity violated: {err}"
                    );
                    let v = lyapunov(&data, mu, &it.q, &it.theta);
                    assert!(
                        v >= v_prev - 1e-8 * v_prev.abs().max(1.0),
                        "Lyapunov decreased: {v} < {v_prev}"
                    );
                    v_prev = v;
                }
            }
        }
    }

    #[test]
    fn npp_identity_on_unit_ball_and_phase_preservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let q = random_qcqp(&mut rng, 6, 4);
        let opts = SolverOpts::default();
        let start = random_feasible(&mut rng, 6, FeasibleSet::ContinuousPhase);
        let inner = solve_icu(&q, &start, FeasibleSet::Ideal, &opts);
        let npp_f1 =
            solve_npp(&q, FeasibleSet::Ideal, InnerConvex::Icu, &start, &opts).unwrap();
        assert_eq!(npp_f1.theta, inner.theta);
        let npp_f2 =
            solve_npp(&q, FeasibleSet::ContinuousPhase, InnerConvex::Icu, &start, &opts)
                .unwrap();
        for i in 0..6 {
            assert_relative_eq!(npp_f2.theta[i].norm(), 1.0, max_relative = 1e-12);
            if inner.theta[i].norm() > 1e-12 {
                let d = (npp_f2.theta[i].arg() - inner.theta[i].arg()).abs();
                assert!(d < 1e-9 || (d - 2.0 * PI).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn npp_discrete_then_icu_only_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let fs = FeasibleSet::discrete(4).unwrap();
        let opts = SolverOpts::default();
        for _ in 0..10 {
            let q = random_qcqp(&mut rng, 6, 4);
            let start = random_feasible(&mut rng, 6, fs);
            let npp = solve_npp(&q, fs, InnerConvex::Icu, &start, &opts).unwrap();
            let refined = solve_icu(&q, &npp.theta, fs, &opts);
            assert!(refined.f4_value >= npp.f4_value - 1e-10 * npp.f4_value.abs().max(1.0));
        }
    }

    #[test]
    fn solver_outputs_land_in_feasible_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let opts = SolverOpts::default();
        for fs in [
            FeasibleSet::Ideal,
            FeasibleSet::ContinuousPhase,
            FeasibleSet::discrete(3).unwrap(),
        ] {
            let q = random_qcqp(&mut rng, 5, 3);
            let start = random_feasible(&mut rng, 5, fs);
            for rep in [
                solve_icu(&q, &start, fs, &opts),
                solve_admm(&q, &start, fs, &opts),
                solve_npp(&q, fs, InnerConvex::Icu, &start, &opts).unwrap(),
            ] {
                for i in 0..5 {
                    assert!(fs.contains(rep.theta[i], crate::model::PROJ_TOL));
                    if let FeasibleSet::DiscretePhase { levels } = fs {
                        // grid membership is bit-exact
                        let l = FeasibleSet::nearest_level(levels, rep.theta[i]);
                        assert_eq!(rep.theta[i], FeasibleSet::discrete_point(levels, l));
                    }
                }
            }
        }
    }
}
