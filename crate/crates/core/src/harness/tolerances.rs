//! Every pass/fail threshold used by the verification suites.

/// Two-sided band, in standard errors, for Monte Carlo means.
pub const Z_BAND_STRICT: f64 = 3.0;
pub const Z_BAND_LOOSE: f64 = 4.0;
/// Family-wise level for hypothesis tests (after Holm correction).
pub const TEST_LEVEL: f64 = 1e-3;
/// Minimum importance-sampling effective sample size.
pub const MIN_ESS: f64 = 100.0;

pub const GFF_VARIANCE_REL: f64 = 0.05;
pub const RENORM_GROWTH_REL: f64 = 0.05;
pub const SCALING_REL: f64 = 0.15;
pub const SCALING_LEBESGUE_ABS: f64 = 0.05;
pub const KERNEL_ORACLE_ABS: f64 = 1e-8;
pub const GN1_BAND_MAX: f64 = 1.5;
pub const SIGN_INVARIANT_SLACK: f64 = 1e-6;
pub const FROZEN_ODE_ABS: f64 = 1e-6;
pub const LINEAR_FLOW_ABS: f64 = 1e-12;
pub const SPLIT_DIRECT_REL: f64 = 1e-3;
pub const DT_HALVING_MIN_FACTOR: f64 = 1.7;
pub const GREEN_BAND_MAX: f64 = 1.0;
/// Step sizes of the deterministic solver oracles.
pub const FROZEN_ODE_DT: f64 = 2e-6;
pub const SPLIT_DIRECT_DT: f64 = 1e-3;
