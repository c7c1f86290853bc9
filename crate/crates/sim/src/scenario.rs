//! Benchmark scenario: geometry, link budget, and seeded channel draws.
//!
//! The BS sits at the origin, the IRS at `(L_I, 50 m)`, and the users are
//! dropped uniformly in a 10 m disk around `(200 m, 0)`. Large-scale gains
//! follow two power laws:
//!
//! ```text
//! κ_D = C_ref · d_D^(−ρ_D)                    (direct link)
//! κ_I = C_ref² · ξ² · (d_G · d_r)^(−ρ_I)      (BS→IRS→user, double fading)
//! ```
//!
//! with `C_ref` the reference loss at 1 m (−30 dB by default) and `ξ` the
//! reflection gain of an IRS element relative to the terminal antenna gains.
//! Small-scale fading is i.i.d. Rayleigh on every link. All draws come from
//! counter-based substreams of a master seed: user positions depend only on
//! the snapshot index, fades on the realization index, so trials can run in
//! parallel and stay bit-reproducible.

use irsbeam_core::{CMatrix, CVector, SystemInstance};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// IRS height coordinate (the surface sits at `(l_i, 50 m)`).
pub const IRS_Y: f64 = 50.0;
/// Center of the user cluster.
pub const CLUSTER_CENTER: (f64, f64) = (200.0, 0.0);
/// Radius of the user cluster in meters.
pub const CLUSTER_RADIUS: f64 = 10.0;

/// Scenario parameters; defaults reproduce the benchmark setup.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// BS antenna count.
    pub m: usize,
    /// User count.
    pub k: usize,
    /// IRS element count (0 disables the surface).
    pub n: usize,
    /// IRS x-coordinate in meters.
    pub l_i: f64,
    /// Transmit budget in dBm.
    pub p_t_dbm: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    /// Transmission bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Reference path loss at 1 m in dB (covers the terminal antenna gains).
    pub ref_loss_db: f64,
    /// Direct-link path-loss exponent.
    pub rho_d: f64,
    /// IRS-link path-loss exponent.
    pub rho_i: f64,
    /// Relative reflection gain ξ of one IRS element, in dB.
    pub xi_db: f64,
    /// Reflection efficiency η.
    pub eta: f64,
    /// Per-user priority weights; `None` means all ones.
    pub omega: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 4,
            k: 4,
            n: 10,
            l_i: 100.0,
            p_t_dbm: 0.0,
            noise_psd_dbm_hz: -170.0,
            bandwidth_hz: 2e5,
            ref_loss_db: -30.0,
            rho_d: 3.5,
            rho_i: 2.0,
            xi_db: 10.0,
            eta: 0.8,
            omega: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(SimError::Config("m and k must be positive".into()));
        }
        if !(self.l_i > 0.0) {
            return Err(SimError::Config("l_i must be positive".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(SimError::Config("bandwidth_hz must be positive".into()));
        }
        if self.rho_d < 2.0 || self.rho_i < 2.0 {
            return Err(SimError::Config("path-loss exponents must be >= 2".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(SimError::Config("eta must lie in (0, 1]".into()));
        }
        if let Some(w) = &self.omega {
            if w.len() != self.k {
                return Err(SimError::Config(format!(
                    "omega has {} entries, k = {}",
                    w.len(),
                    self.k
                )));
            }
            if w.iter().any(|&x| !(x > 0.0)) {
                return Err(SimError::Config("omega entries must be positive".into()));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        self.omega.clone().unwrap_or_else(|| vec![1.0; self.k])
    }
}

/// Addressing of one Monte Carlo trial within the seeded stream hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeedPolicy {
    pub master_seed: u64,
    pub snapshot_index: u64,
    pub realization_index: u64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn clamp_distance(d: f64) -> f64 {
    if d < 1.0 {
        eprintln!("warning: distance {d} m below the 1 m reference, clamped (near field excluded)");
        1.0
    } else {
        d
    }
}

/// Direct-link power gain `C_ref · d^(−ρ_D)` (linear).
pub fn path_loss_direct(d: f64, cfg: &ScenarioConfig) -> f64 {
    let d = clamp_distance(d);
    db_to_linear(cfg.ref_loss_db) * d.powf(-cfg.rho_d)
}

/// Concatenated IRS-link power gain `C_ref² ξ² (d_G d_r)^(−ρ_I)` (linear).
pub fn path_loss_irs(d_g: f64, d_r: f64, cfg: &ScenarioConfig) -> f64 {
    let d_g = clamp_distance(d_g);
    let d_r = clamp_distance(d_r);
    db_to_linear(2.0 * cfg.ref_loss_db + 2.0 * cfg.xi_db) * (d_g * d_r).powf(-cfg.rho_i)
}

/// Receiver noise power in dBm: `PSD + 10 log₁₀(bandwidth)`.
pub fn noise_power_dbm(cfg: &ScenarioConfig) -> f64 {
    cfg.noise_psd_dbm_hz + 10.0 * cfg.bandwidth_hz.log10()
}

/// Receiver noise power in linear milliwatts.
pub fn noise_power(cfg: &ScenarioConfig) -> f64 {
    db_to_linear(noise_power_dbm(cfg))
}

// Domain tags keep the substreams of one master seed disjoint.
const TAG_POSITIONS: u64 = 1;
const TAG_FADES: u64 = 2;
const TAG_BASELINE_THETA: u64 = 3;
const TAG_OPT_INIT: u64 = 4;

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic substream keyed by an integer tuple.
pub fn substream(parts: &[u64]) -> ChaCha8Rng {
    let mut state = 0x243f_6a88_85a3_08d3u64; // arbitrary nonzero start
    for &p in parts {
        state = mix64(state ^ mix64(p));
    }
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&mix64(state.wrapping_add(1 + i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// A `u64` seed for the optimizer's own RC initialization, paired per trial.
pub fn trial_seed(policy: &RngSeedPolicy) -> u64 {
    mix64(
        mix64(policy.master_seed ^ mix64(TAG_OPT_INIT))
            ^ mix64(policy.snapshot_index)
            ^ mix64(policy.realization_index.wrapping_add(0x5bd1)),
    )
}

/// Standard circular complex Gaussian, unit variance in total.
fn cn01(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// User drop for one snapshot: uniform over the cluster disk
/// (radius × √u keeps the area density exact).
pub fn user_positions(cfg: &ScenarioConfig, master_seed: u64, snapshot: u64) -> Vec<(f64, f64)> {
    let mut rng = substream(&[master_seed, TAG_POSITIONS, snapshot]);
    (0..cfg.k)
        .map(|_| {
            let r = CLUSTER_RADIUS * rng.gen::<f64>().sqrt();
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            (CLUSTER_CENTER.0 + r * phi.cos(), CLUSTER_CENTER.1 + r * phi.sin())
        })
        .collect()
}

/// Unit-modulus random phases for the random-RC baseline, fresh per
/// realization.
pub fn baseline_theta(cfg: &ScenarioConfig, policy: &RngSeedPolicy) -> CVector {
    let mut rng = substream(&[
        policy.master_seed,
        TAG_BASELINE_THETA,
        policy.snapshot_index,
        policy.realization_index,
    ]);
    CVector::from_fn(cfg.n, |_, _| {
        Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
    })
}

/// One channel realization: positions from the snapshot substream, Rayleigh
/// fades from the realization substream, path loss applied per link.
///
/// The direct channels are drawn before the IRS links, so they are identical
/// across configurations that differ only in `n`.
pub fn gen_instance(cfg: &ScenarioConfig, policy: &RngSeedPolicy) -> Result<SystemInstance> {
    cfg.validate()?;
    let positions = user_positions(cfg, policy.master_seed, policy.snapshot_index);
    let mut rng = substream(&[
        policy.master_seed,
        TAG_FADES,
        policy.snapshot_index,
        policy.realization_index,
    ]);

    let bs = (0.0, 0.0);
    let irs = (cfg.l_i, IRS_Y);
    let d_g = dist(bs, irs);

    // Per-link split of the concatenated budget: each hop carries the
    // reference loss plus the element gain once, so the product matches the
    // double-fading law exactly.
    let kappa_hop = |d: f64| db_to_linear(cfg.ref_loss_db + cfg.xi_db) * clamp_distance(d).powf(-cfg.rho_i);

    let h_d: Vec<CVector> = positions
        .iter()
        .map(|&p| {
            let amp = path_loss_direct(dist(bs, p), cfg).sqrt();
            CVector::from_fn(cfg.m, |_, _| cn01(&mut rng) * amp)
        })
        .collect();

    let g = if cfg.n > 0 {
        let amp = kappa_hop(d_g).sqrt();
        CMatrix::from_fn(cfg.n, cfg.m, |_, _| cn01(&mut rng) * amp)
    } else {
        CMatrix::zeros(0, cfg.m)
    };

    let h_r: Vec<CVector> = positions
        .iter()
        .map(|&p| {
            if cfg.n == 0 {
                return CVector::zeros(0);
            }
            let amp = kappa_hop(dist(irs, p)).sqrt();
            CVector::from_fn(cfg.n, |_, _| cn01(&mut rng) * amp)
        })
        .collect();

    Ok(SystemInstance::new(
        h_d,
        g,
        h_r,
        cfg.weights(),
        db_to_linear(cfg.p_t_dbm),
        noise_power(cfg),
        cfg.eta,
    )?)
}
