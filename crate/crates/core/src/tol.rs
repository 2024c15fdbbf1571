//! Numeric tolerances used across the crate.
//!
//! Construction-time probability checks are near machine precision; anything
//! downstream of a linear solve gets a looser budget for accumulated rounding.

/// Probability rows/vectors handed to constructors must sum to 1 within this.
pub const PROB_INPUT: f64 = 1e-12;

/// Occupancy vectors produced by linear solves: sum-to-one and marginal
/// consistency.
pub const OCCUPANCY: f64 = 1e-9;

/// Residual of the stationarity (flow) identity for a solved occupancy.
pub const FLOW_RESIDUAL: f64 = 1e-8;

/// Cross-check between the two policy-value routes (occupancy inner product
/// vs. value-function solve).
pub const VALUE_CROSS_CHECK: f64 = 1e-8;

/// Simplex feasibility / pivot eligibility threshold.
pub const LP_FEASIBILITY: f64 = 1e-9;

/// Reported primal/dual gap for the transport LP.
pub const TRANSPORT_DUALITY_GAP: f64 = 1e-7;

/// Reconstruction residual for compatible-coefficient certificates.
pub const SPAN_RESIDUAL: f64 = 1e-7;

/// Slack tolerance when deciding whether an analytic inequality held.
pub const BOUND_SLACK: f64 = 1e-9;
