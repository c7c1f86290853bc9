//! Joint active and passive beamforming for an IRS-aided multiuser MISO
//! downlink.
//!
//! The library maximizes the weighted sum rate over the BS transmit matrix
//! `W` and the IRS reflection coefficients `θ` by alternating optimization:
//! fractional-programming closed forms for the transmit side and three
//! interchangeable solvers (nearest-point projection over a dual
//! decomposition, cyclic coordinate updates, and ADMM) for the reflection
//! side, under ideal, continuous-phase and discrete-phase element
//! constraints.
//!
//! Modules:
//! * [`model`] — instance data, SINR / sum-rate evaluation, feasible-set
//!   projections.
//! * [`fp`] — dual-transform and quadratic-transform update rules for
//!   `α, β, W, ε`.
//! * [`qcqp`] — assembly of the concave quadratic `f4(θ)` solved in the
//!   reflection step.
//! * [`solvers`] — the RC solvers (LDD/ellipsoid, ICU, ADMM, NPP).
//! * [`optimizer`] — the outer alternating loop with its monotonicity guard
//!   and initialization strategies.

pub mod error;
pub mod fp;
pub mod model;
pub mod optimizer;
pub mod qcqp;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{
    combined_channel, sinr, wsr, BeamformerState, CMatrix, CVector, FeasibleSet, SystemInstance,
};
pub use optimizer::{
    init_state, optimize, optimize_frozen_theta, OptimizeOpts, OptimizeOutcome, OptimizeTrace,
    RcSolver,
};
pub use qcqp::{build_qcqp, f4, f4_grad, link_terms, LinkTerms, QcqpData};
pub use solvers::{
    icu_element, lyapunov, select_mu, solve_admm, solve_icu, solve_ldd, solve_npp, AdmmIter,
    InnerConvex, SolveReport, SolverOpts,
};
