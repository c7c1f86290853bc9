//! System model for the IRS-aided multiuser MISO downlink.
//!
//! A base station with `M` antennas serves `K` single-antenna users, assisted
//! by an intelligent reflecting surface (IRS) with `N` passive elements. Each
//! element multiplies the incident signal by a reflection coefficient (RC)
//! `θ_n`, and the surface as a whole acts as the diagonal response
//! `Θ = √η · diag(θ)`. The effective downlink channel of user `k` is
//!
//! ```text
//! h_k = h_{d,k} + Gᴴ Θ h_{r,k}
//! ```
//!
//! where `h_{d,k}` is the direct BS→user channel, `G` the BS→IRS channel and
//! `h_{r,k}` the IRS→user channel. This module holds the instance data, the
//! SINR / weighted sum-rate evaluation, and the per-element projections onto
//! the three RC feasible sets (unit ball, unit circle, τ-level phase grid).
//!
//! All quantities are linear: powers in milliwatts, channel entries as
//! amplitude gains. dB conversions happen only at configuration and
//! reporting boundaries.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type CVector = nalgebra::DVector<Complex64>;
pub type CMatrix = nalgebra::DMatrix<Complex64>;

/// Relative slack on the transmit power budget when validating a state.
pub const POWER_TOL: f64 = 1e-9;
/// Absolute slack on RC feasible-set membership when validating a state.
pub const PROJ_TOL: f64 = 1e-9;

/// One realization of the downlink problem: channels, weights and budgets.
///
/// Immutable after construction; `new` validates all structural invariants.
#[derive(Debug, Clone)]
pub struct SystemInstance {
    m: usize,
    k: usize,
    n: usize,
    h_d: Vec<CVector>,
    g: CMatrix,
    h_r: Vec<CVector>,
    omega: Vec<f64>,
    p_t: f64,
    sigma2: f64,
    eta: f64,
}

impl SystemInstance {
    /// Builds an instance from raw channel data.
    ///
    /// `h_d` holds one length-`M` vector per user, `g` is `N×M`, and `h_r`
    /// one length-`N` vector per user. `N = 0` (no IRS) is allowed, in which
    /// case `g` must have zero rows and every `h_r` entry length zero.
    pub fn new(
        h_d: Vec<CVector>,
        g: CMatrix,
        h_r: Vec<CVector>,
        omega: Vec<f64>,
        p_t: f64,
        sigma2: f64,
        eta: f64,
    ) -> Result<Self> {
        let k = h_d.len();
        if k == 0 {
            return Err(Error::InvalidInstance("need at least one user".into()));
        }
        let m = h_d[0].len();
        if m == 0 {
            return Err(Error::InvalidInstance("need at least one BS antenna".into()));
        }
        if h_d.iter().any(|h| h.len() != m) {
            return Err(Error::InvalidInstance("direct channels differ in length".into()));
        }
        let n = g.nrows();
        if g.ncols() != m {
            return Err(Error::InvalidInstance(format!(
                "BS-IRS channel has {} columns, expected {}",
                g.ncols(),
                m
            )));
        }
        if h_r.len() != k || h_r.iter().any(|h| h.len() != n) {
            return Err(Error::InvalidInstance(
                "IRS-user channels inconsistent with G and user count".into(),
            ));
        }
        if omega.len() != k {
            return Err(Error::InvalidInstance("weight count must equal user count".into()));
        }
        if omega.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInstance("user weights must be positive".into()));
        }
        if !(p_t > 0.0) || !p_t.is_finite() {
            return Err(Error::InvalidInstance("transmit budget must be positive".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidInstance("noise power must be positive".into()));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidInstance("reflection efficiency must lie in (0,1]".into()));
        }
        Ok(Self { m, k, n, h_d, g, h_r, omega, p_t, sigma2, eta })
    }

    /// BS antenna count `M`.
    pub fn bs_antennas(&self) -> usize {
        self.m
    }

    /// User count `K`.
    pub fn users(&self) -> usize {
        self.k
    }

    /// IRS element count `N` (zero means no IRS).
    pub fn irs_elements(&self) -> usize {
        self.n
    }

    /// Direct channel `h_{d,k}`.
    pub fn h_d(&self, k: usize) -> &CVector {
        &self.h_d[k]
    }

    /// BS→IRS channel `G` (`N×M`).
    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    /// IRS→user channel `h_{r,k}`.
    pub fn h_r(&self, k: usize) -> &CVector {
        &self.h_r[k]
    }

    /// User priority weights `ω`.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Transmit power budget `P_T` in linear milliwatts.
    pub fn p_t(&self) -> f64 {
        self.p_t
    }

    /// Receiver noise power `σ₀²` in linear milliwatts.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Reflection efficiency `η ∈ (0,1]`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// A copy of this instance with the IRS removed (`N = 0`).
    pub fn without_irs(&self) -> Self {
        Self {
            m: self.m,
            k: self.k,
            n: 0,
            h_d: self.h_d.clone(),
            g: CMatrix::zeros(0, self.m),
            h_r: vec![CVector::zeros(0); self.k],
            omega: self.omega.clone(),
            p_t: self.p_t,
            sigma2: self.sigma2,
            eta: self.eta,
        }
    }
}

/// Constraint regime for the reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibleSet {
    /// `|θ_n| ≤ 1`: amplitude and phase both adjustable (convex).
    Ideal,
    /// `|θ_n| = 1` with arbitrary phase.
    ContinuousPhase,
    /// `|θ_n| = 1` with phase on the grid `{2πl/τ : l = 0..τ-1}`, `τ ≥ 2`.
    DiscretePhase {
        levels: u32,
    },
}

impl FeasibleSet {
    /// Builds the discrete variant, rejecting `τ < 2`.
    pub fn discrete(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidInstance(format!(
                "discrete phase set needs at least 2 levels, got {levels}"
            )));
        }
        Ok(FeasibleSet::DiscretePhase { levels })
    }

    /// The grid point `e^{j·2πl/τ}`.
    pub fn discrete_point(levels: u32, idx: u32) -> Complex64 {
        let phi = 2.0 * PI * f64::from(idx % levels) / f64::from(levels);
        Complex64::new(phi.cos(), phi.sin())
    }

    /// Nearest grid level to `z` under circular phase distance.
    ///
    /// Ties break towards the smaller phase, and `z = 0` maps to level 0.
    pub fn nearest_level(levels: u32, z: Complex64) -> u32 {
        if z == Complex64::new(0.0, 0.0) {
            return 0;
        }
        let tau = f64::from(levels);
        let mut phi = z.arg();
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        // t in [0, tau]; the endpoints both denote level 0.
        let t = phi * tau / (2.0 * PI);
        let lo = t.floor();
        let frac = t - lo;
        let level = if frac < 0.5 {
            lo
        } else if frac > 0.5 {
            lo + 1.0
        } else {
            // exact midpoint: the smaller phase wins, and level τ wraps to 0
            if lo as u32 + 1 >= levels {
                0.0
            } else {
                lo
            }
        };
        (level as u32) % levels
    }

    /// Projects a complex scalar onto this set.
    ///
    /// * `Ideal`: radial clamp onto the unit ball.
    /// * `ContinuousPhase`: keep the phase, force unit modulus.
    /// * `DiscretePhase`: unit modulus at the circularly nearest grid phase.
    ///
    /// `z = 0` has no preferred phase; it maps to 0 under `Ideal` and to
    /// phase 0 under both phase sets, keeping the operation deterministic.
    pub fn project(&self, z: Complex64) -> Complex64 {
        match *self {
            FeasibleSet::Ideal => {
                let r = z.norm();
                if r <= 1.0 {
                    z
                } else {
                    z / r
                }
            }
            FeasibleSet::ContinuousPhase => {
                let r = z.norm();
                if r == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    z / r
                }
            }
            FeasibleSet::DiscretePhase { levels } => {
                debug_assert!(levels >= 2);
                Self::discrete_point(levels, Self::nearest_level(levels, z))
            }
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        match *self {
            FeasibleSet::Ideal => z.norm() <= 1.0 + tol,
            FeasibleSet::ContinuousPhase => (z.norm() - 1.0).abs() <= tol,
            FeasibleSet::DiscretePhase { levels } => {
                let p = Self::discrete_point(levels, Self::nearest_level(levels, z));
                (z - p).norm() <= tol
            }
        }
    }
}

impl std::fmt::Display for FeasibleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeasibleSet::Ideal => write!(f, "ideal"),
            FeasibleSet::ContinuousPhase => write!(f, "continuous"),
            FeasibleSet::DiscretePhase { levels } => write!(f, "discrete{levels}"),
        }
    }
}

impl std::str::FromStr for FeasibleSet {
    type Err = Error;

    /// Parses `"ideal"`, `"continuous"` or `"discrete:<levels>"`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(FeasibleSet::Ideal),
            "continuous" => Ok(FeasibleSet::ContinuousPhase),
            other => {
                if let Some(tau) = other.strip_prefix("discrete:") {
                    let levels: u32 = tau.parse().map_err(|_| {
                        Error::InvalidInstance(format!("bad discrete level count '{tau}'"))
                    })?;
                    FeasibleSet::discrete(levels)
                } else {
                    Err(Error::InvalidInstance(format!(
                        "unknown feasible set '{other}' (expected ideal, continuous or discrete:<levels>)"
                    )))
                }
            }
        }
    }
}

/// Current iterate of the joint optimization.
#[derive(Debug, Clone)]
pub struct BeamformerState {
    /// Transmit beamforming matrix, columns `w_k` (`M×K`).
    pub w: CMatrix,
    /// Reflection coefficient vector `θ` (length `N`).
    pub theta: CVector,
    /// Nominal SINR auxiliaries `α_k`.
    pub alpha: Vec<f64>,
    /// Quadratic-transform auxiliaries `β_k` for the transmit step.
    pub beta: Vec<Complex64>,
    /// Quadratic-transform auxiliaries `ε_k` for the reflection step.
    pub epsilon: Vec<Complex64>,
}

impl BeamformerState {
    /// A zero state with the right shapes.
    pub fn zero(inst: &SystemInstance) -> Self {
        Self {
            w: CMatrix::zeros(inst.m, inst.k),
            theta: CVector::zeros(inst.n),
            alpha: vec![0.0; inst.k],
            beta: vec![Complex64::new(0.0, 0.0); inst.k],
            epsilon: vec![Complex64::new(0.0, 0.0); inst.k],
        }
    }

    /// Total transmit power `Σ_k ‖w_k‖²`.
    pub fn transmit_power(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Checks the power budget and RC feasibility invariants.
    pub fn validate(&self, inst: &SystemInstance, fs: FeasibleSet) -> Result<()> {
        check_w_dims(inst, &self.w)?;
        check_theta_dims(inst, &self.theta)?;
        let p = self.transmit_power();
        if p > inst.p_t * (1.0 + POWER_TOL) {
            return Err(Error::InternalConsistency(format!(
                "transmit power {p} exceeds budget {}",
                inst.p_t
            )));
        }
        for (i, &t) in self.theta.iter().enumerate() {
            if !fs.contains(t, PROJ_TOL) {
                return Err(Error::InternalConsistency(format!(
                    "theta[{i}] = {t} outside feasible set {fs}"
                )));
            }
        }
        Ok(())
    }
}

fn check_theta_dims(inst: &SystemInstance, theta: &CVector) -> Result<()> {
    if theta.len() != inst.n {
        return Err(Error::DimensionMismatch(format!(
            "theta has length {}, instance has {} IRS elements",
            theta.len(),
            inst.n
        )));
    }
    Ok(())
}

fn check_w_dims(inst: &SystemInstance, w: &CMatrix) -> Result<()> {
    if w.nrows() != inst.m || w.ncols() != inst.k {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, instance needs {}x{}",
            w.nrows(),
            w.ncols(),
            inst.m,
            inst.k
        )));
    }
    Ok(())
}

/// Combined channels `h_k = h_{d,k} + Gᴴ Θ h_{r,k}` with `Θ = √η diag(θ)`.
///
/// Reduces to the direct channels when `N = 0` or `θ = 0`.
pub fn combined_channel(inst: &SystemInstance, theta: &CVector) -> Result<Vec<CVector>> {
    check_theta_dims(inst, theta)?;
    let sqrt_eta = inst.eta.sqrt();
    let mut out = Vec::with_capacity(inst.k);
    for k in 0..inst.k {
        let mut h = inst.h_d[k].clone();
        if inst.n > 0 {
            // Gᴴ (√η θ ⊙ h_r): scale the reflected field per element first.
            let scaled = CVector::from_fn(inst.n, |i, _| sqrt_eta * theta[i] * inst.h_r[k][i]);
            h += inst.g.adjoint() * scaled;
        }
        out.push(h);
    }
    Ok(out)
}

/// Per-user decoding SINR `γ_k` for the state `(W, θ)`.
pub fn sinr(inst: &SystemInstance, w: &CMatrix, theta: &CVector) -> Result<Vec<f64>> {
    check_w_dims(inst, w)?;
    let h = combined_channel(inst, theta)?;
    let mut out = Vec::with_capacity(inst.k);
    for k in 0..inst.k {
        let mut signal = 0.0;
        let mut interference = 0.0;
        for i in 0..inst.k {
            let p = h[k].dotc(&w.column(i)).norm_sqr();
            if i == k {
                signal = p;
            } else {
                interference += p;
            }
        }
        out.push(signal / (interference + inst.sigma2));
    }
    Ok(out)
}

/// Weighted sum rate `Σ_k ω_k log₂(1 + γ_k)` in bits/s/Hz.
pub fn wsr(inst: &SystemInstance, w: &CMatrix, theta: &CVector) -> Result<f64> {
    let gammas = sinr(inst, w, theta)?;
    Ok(wsr_from_sinr(inst.omega(), &gammas))
}

/// Weighted sum rate from precomputed SINRs.
pub fn wsr_from_sinr(omega: &[f64], gammas: &[f64]) -> f64 {
    omega
        .iter()
        .zip(gammas)
        .map(|(&w, &g)| w * (1.0 + g).log2())
        .sum()
}
