//! Ensemble samplers with objective-adaptive volatility.
//!
//! The dynamics rescale Langevin drift and noise by h(x) = f((F(x) - c)^+) + 1,
//! where f is a bounded bump activation and c is the smallest objective value
//! the chain ensemble has seen. High ground is traversed with large steps and
//! hot noise; near the running minimum the dynamics relax to plain Langevin.
//!
//! - [`objective`]: the objective trait plus the test functions used
//!   throughout (shifted Rastrigin, quadratic, double well).
//! - [`diffusion`]: the activation, the scalar coefficient h and its
//!   gradient, drift assembly, and a stationarity (detailed balance) check.
//! - [`diagnostics`]: quadrature checks of the supporting theory (Gibbs
//!   densities, histogram KL, the per-step KL contraction inequality on its
//!   Gaussian channel, the gradient-moment bound, delta-series summaries).
//! - [`samplers`]: the ensemble methods (adaptive volatility, fixed
//!   threshold, Langevin, landscape modification, driftless) and run loops.
//! - [`grid`]: uniform grids, trapezoid quadrature, boundary-mass checks.
//! - [`rng`]: per-chain deterministic stream construction.

pub mod diagnostics;
pub mod diffusion;
pub mod grid;
pub mod objective;
pub mod rng;
pub mod samplers;

pub use diagnostics::{
    DeltaSummary, DiagnosticsError, HistogramDensity, LemmaReport, TheoremProbe, TheoryConstants,
};
pub use diffusion::{ActivationParams, BalanceReport, DiffusionCoefficients, DiffusionError};
pub use objective::{DoubleWell, FnObjective, Objective, ObjectiveError, Quadratic, ShiftedRastrigin};
pub use samplers::{
    run, run_strided, ChainEnsemble, ConfigError, Method, RunError, RunOutput, SamplerConfig,
    TrajectoryRecord,
};
