//! Exact tabular machinery for studying how imitation error turns into
//! policy value loss.
//!
//! Everything here is finite and closed-form: occupancy measures come from
//! dense linear solves, adversarial objectives from a dense simplex LP, and
//! suprema over discriminator classes from enumeration. That makes each
//! value-gap inequality (behavioral cloning, adversarial occupancy matching,
//! learned transition models) checkable to solver precision instead of by
//! Monte-Carlo eyeballing.
//!
//! Module map:
//! - [`mdp`]: tabular MDPs, policies, occupancy measures, exact samplers,
//!   and the dual construction that turns a transition model into a policy.
//! - [`lp`]: the shared dense tableau simplex solver.
//! - [`divergences`]: f-divergences, discriminator-class (IPM) distances,
//!   Wasserstein-1, empirical Rademacher complexity, compatible coefficients.
//! - [`imitators`]: behavioral cloning, DAgger, occupancy-matching fits
//!   (LP and gradient variants), and the alternating Wasserstein-style loop.
//! - [`env_learning`]: transition-model imitation and evaluation in learned
//!   models.
//! - [`bounds`]: one `BoundReport` per inequality, with exact LHS/RHS.
//! - [`worstcase`]: the three-state hard instance with closed-form values.
//! - [`lab`]: config-driven experiment campaigns and CSV/JSON report output.

pub mod bounds;
pub mod divergences;
pub mod env_learning;
mod error;
pub mod imitators;
pub mod lab;
pub mod lp;
pub mod mdp;
pub mod tol;
pub mod worstcase;

pub use error::{Error, Result};
