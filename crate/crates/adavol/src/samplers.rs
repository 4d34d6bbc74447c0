//! Ensemble Euler-Maruyama samplers.
//!
//! All methods advance M chains in lockstep. The adaptive-volatility method
//! rescales both drift and noise by h(x) = f((F(x) - c_j)^+) + 1, where c_j
//! is the smallest objective value any chain has visited; every chain uses
//! the pre-step threshold within an iteration and the minimum is taken after
//! all chains have moved. Comparators: plain Langevin, a noise-only
//! landscape modification, and a gradient-free purely diffusive scheme.
//!
//! Chains own independent random streams keyed by (seed, chain index), so
//! results are bitwise reproducible and independent of the worker count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{
    self, coefficient_gradient_factor, scalar_coefficient, ActivationParams, DiffusionError,
};
use crate::objective::Objective;
use crate::rng::chain_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "adavol")]
    AdaVol,
    #[serde(rename = "adavol_fixed_c")]
    AdaVolFixedC,
    #[serde(rename = "langevin")]
    Langevin,
    #[serde(rename = "landscape_mod")]
    LandscapeMod,
    #[serde(rename = "driftless")]
    Driftless,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AdaVol => "adavol",
            Method::AdaVolFixedC => "adavol_fixed_c",
            Method::Langevin => "langevin",
            Method::LandscapeMod => "landscape_mod",
            Method::Driftless => "driftless",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("eta must be > 0 and finite, got {0}")]
    InvalidEta(f64),
    #[error("beta must be > 0 and finite, got {0}")]
    InvalidBeta(f64),
    #[error("chains must be >= 1")]
    NoChains,
    #[error("epsilon must be > 0 and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("init_cov_scale must be > 0 and finite, got {0}")]
    InvalidInitCovScale(f64),
    #[error("init_mean entries must be finite")]
    NonFiniteInitMean,
    #[error("init_mean has length {got} but the objective has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Activation(#[from] DiffusionError),
    #[error("fixed-threshold runs need c above the known optimum {optimum}, got c = {c}")]
    ThresholdBelowOptimum { c: f64, optimum: f64 },
    #[error("gamma_exponent must be >= dimension/2 = {min} for driftless runs, got {got}")]
    GammaTooSmall { got: f64, min: f64 },
}

/// Full description of one sampler run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: Method,
    pub eta: f64,
    pub beta: f64,
    pub iterations: u64,
    pub chains: usize,
    pub seed: u64,
    pub activation: ActivationParams,
    /// Noise floor for landscape_mod and driftless.
    pub epsilon: f64,
    /// Exponent on the objective excess for driftless; must be >= dim/2.
    pub gamma_exponent: f64,
    pub init_mean: Vec<f64>,
    /// Isotropic initial covariance is init_cov_scale * identity.
    pub init_cov_scale: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            method: Method::Langevin,
            eta: 1e-3,
            beta: 1.0,
            iterations: 1000,
            chains: 1,
            seed: 0,
            activation: ActivationParams::flat(),
            epsilon: 1.0,
            gamma_exponent: 1.0,
            init_mean: vec![0.0],
            init_cov_scale: 1.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, f: &dyn Objective) -> Result<(), ConfigError> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(ConfigError::InvalidEta(self.eta));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(ConfigError::InvalidBeta(self.beta));
        }
        if self.chains == 0 {
            return Err(ConfigError::NoChains);
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(ConfigError::InvalidEpsilon(self.epsilon));
        }
        if !(self.init_cov_scale > 0.0) || !self.init_cov_scale.is_finite() {
            return Err(ConfigError::InvalidInitCovScale(self.init_cov_scale));
        }
        if self.init_mean.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::NonFiniteInitMean);
        }
        if self.init_mean.len() != f.dimension() {
            return Err(ConfigError::DimensionMismatch {
                expected: f.dimension(),
                got: self.init_mean.len(),
            });
        }
        ActivationParams::new(self.activation.lambda, self.activation.theta, self.activation.c)?;
        if self.method == Method::AdaVolFixedC {
            if let Some(optimum) = f.known_optimum() {
                if self.activation.c <= optimum {
                    return Err(ConfigError::ThresholdBelowOptimum {
                        c: self.activation.c,
                        optimum,
                    });
                }
            }
        }
        if self.method == Method::Driftless {
            let min = f.dimension() as f64 / 2.0;
            if !(self.gamma_exponent >= min) || !self.gamma_exponent.is_finite() {
                return Err(ConfigError::GammaTooSmall {
                    got: self.gamma_exponent,
                    min,
                });
            }
        }
        Ok(())
    }
}

/// The M parallel chains plus the bookkeeping the methods share.
#[derive(Debug, Clone)]
pub struct ChainEnsemble {
    dim: usize,
    /// Row-major chains x dim.
    positions: Vec<f64>,
    /// Cached F at the current positions, one per chain.
    objective_values: Vec<f64>,
    /// Smallest objective value observed by any chain so far.
    threshold: f64,
    /// Completed steps.
    iteration: u64,
    rngs: Vec<ChaCha8Rng>,
    grad_scratch: Vec<f64>,
}

impl ChainEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chains(&self) -> usize {
        self.objective_values.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn chain_position(&self, chain: usize) -> &[f64] {
        &self.positions[chain * self.dim..(chain + 1) * self.dim]
    }

    pub fn objective_values(&self) -> &[f64] {
        &self.objective_values
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Coordinate-wise mean over chains; the ensemble's point estimate.
    pub fn mean_position(&self) -> Vec<f64> {
        let m = self.chains() as f64;
        let mut mean = vec![0.0; self.dim];
        for chunk in self.positions.chunks_exact(self.dim) {
            for (acc, &v) in mean.iter_mut().zip(chunk) {
                *acc += v;
            }
        }
        for acc in &mut mean {
            *acc /= m;
        }
        mean
    }

    fn min_objective(&self) -> f64 {
        self.objective_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    fn mean_objective(&self) -> f64 {
        self.objective_values.iter().sum::<f64>() / self.chains() as f64
    }
}

/// Draws the initial ensemble from N(init_mean, init_cov_scale * I) using
/// each chain's own stream, and seeds the threshold with the minimum
/// objective value across chains.
pub fn init_ensemble(cfg: &SamplerConfig, f: &dyn Objective) -> Result<ChainEnsemble, ConfigError> {
    cfg.validate(f)?;
    let dim = f.dimension();
    let std = cfg.init_cov_scale.sqrt();
    let mut positions = Vec::with_capacity(cfg.chains * dim);
    let mut objective_values = Vec::with_capacity(cfg.chains);
    let mut rngs = Vec::with_capacity(cfg.chains);
    for chain in 0..cfg.chains {
        let mut rng = chain_rng(cfg.seed, chain as u64);
        let start = positions.len();
        for d in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            positions.push(cfg.init_mean[d] + std * z);
        }
        objective_values.push(f.eval(&positions[start..]));
        rngs.push(rng);
    }
    let threshold = objective_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(ChainEnsemble {
        dim,
        positions,
        objective_values,
        threshold,
        iteration: 0,
        rngs,
        grad_scratch: vec![0.0; cfg.chains * dim],
    })
}

/// A chain left the domain of finite floats.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("chain {chain} diverged at iteration {iteration}: non-finite position or objective value")]
pub struct DivergenceError {
    pub chain: usize,
    pub iteration: u64,
}

/// Per-step summary the run loop folds into trajectory records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Mean over chains of the squared diffusion coefficient used this step.
    pub delta_hat: f64,
}

/// Chains below this count are advanced serially; the split changes nothing
/// observable because every chain owns its stream.
const PARALLEL_MIN_CHAINS: usize = 64;

struct ChainState<'a> {
    position: &'a mut [f64],
    fval: &'a mut f64,
    rng: &'a mut ChaCha8Rng,
    scratch: &'a mut [f64],
}

/// Applies `kernel` to every chain and returns the per-chain diffusion
/// coefficients, or the first chain index that produced a non-finite state.
fn for_each_chain<K>(ens: &mut ChainEnsemble, kernel: K) -> Result<Vec<f64>, usize>
where
    K: Fn(ChainState<'_>) -> Result<f64, ()> + Sync,
{
    let dim = ens.dim;
    let outcomes: Vec<Result<f64, ()>> = if ens.chains() >= PARALLEL_MIN_CHAINS {
        ens.positions
            .par_chunks_exact_mut(dim)
            .zip(ens.objective_values.par_iter_mut())
            .zip(ens.rngs.par_iter_mut())
            .zip(ens.grad_scratch.par_chunks_exact_mut(dim))
            .map(|(((position, fval), rng), scratch)| {
                kernel(ChainState {
                    position,
                    fval,
                    rng,
                    scratch,
                })
            })
            .collect()
    } else {
        ens.positions
            .chunks_exact_mut(dim)
            .zip(ens.objective_values.iter_mut())
            .zip(ens.rngs.iter_mut())
            .zip(ens.grad_scratch.chunks_exact_mut(dim))
            .map(|(((position, fval), rng), scratch)| {
                kernel(ChainState {
                    position,
                    fval,
                    rng,
                    scratch,
                })
            })
            .collect()
    };
    let mut coefficients = Vec::with_capacity(outcomes.len());
    for (chain, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(coeff) => coefficients.push(coeff),
            Err(()) => return Err(chain),
        }
    }
    Ok(coefficients)
}

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|v| v.is_finite())
}

/// Shared post-step bookkeeping: threshold ratchet, iteration count, stats.
fn finish_step(
    ens: &mut ChainEnsemble,
    moved: Result<Vec<f64>, usize>,
) -> Result<StepStats, DivergenceError> {
    let step_index = ens.iteration + 1;
    match moved {
        Err(chain) => Err(DivergenceError {
            chain,
            iteration: step_index,
        }),
        Ok(coefficients) => {
            ens.threshold = ens.threshold.min(ens.min_objective());
            ens.iteration = step_index;
            let delta_hat = coefficients.iter().map(|&h| h * h).sum::<f64>()
                / coefficients.len() as f64;
            Ok(StepStats { delta_hat })
        }
    }
}

/// One adaptive-volatility update of every chain:
/// x <- x - eta * (h grad F - beta^-1 f'((F-c)^+) grad F)
///        + sqrt(2 eta beta^-1 h) z.
/// With `Method::AdaVolFixedC` the configured threshold is used instead of
/// the running minimum, and it never moves.
pub fn adavol_step(
    ens: &mut ChainEnsemble,
    cfg: &SamplerConfig,
    f: &dyn Objective,
) -> Result<StepStats, DivergenceError> {
    let c_eff = match cfg.method {
        Method::AdaVolFixedC => cfg.activation.c,
        _ => ens.threshold,
    };
    let p = cfg.activation.at_threshold(c_eff);
    let eta = cfg.eta;
    let beta_inv = 1.0 / cfg.beta;
    let moved = for_each_chain(ens, |state| {
        let h = scalar_coefficient(&p, *state.fval);
        let s = coefficient_gradient_factor(&p, *state.fval);
        f.grad(state.position, state.scratch);
        let noise_scale = (2.0 * eta * beta_inv * h).sqrt();
        for (x, &g) in state.position.iter_mut().zip(state.scratch.iter()) {
            let z: f64 = state.rng.sample(StandardNormal);
            let drift = h * g - beta_inv * (s * g);
            *x = *x - eta * drift + noise_scale * z;
        }
        *state.fval = f.eval(state.position);
        if !all_finite(state.position) || !state.fval.is_finite() {
            return Err(());
        }
        Ok(h)
    });
    finish_step(ens, moved)
}

/// One unadjusted Langevin update: x <- x - eta grad F + sqrt(2 eta/beta) z.
/// The threshold keeps tracking the observed minimum for reporting, but the
/// dynamics ignore it.
pub fn langevin_step(
    ens: &mut ChainEnsemble,
    cfg: &SamplerConfig,
    f: &dyn Objective,
) -> Result<StepStats, DivergenceError> {
    let eta = cfg.eta;
    let beta_inv = 1.0 / cfg.beta;
    let moved = for_each_chain(ens, |state| {
        f.grad(state.position, state.scratch);
        let noise_scale = (2.0 * eta * beta_inv).sqrt();
        for (x, &g) in state.position.iter_mut().zip(state.scratch.iter()) {
            let z: f64 = state.rng.sample(StandardNormal);
            let drift = g;
            *x = *x - eta * drift + noise_scale * z;
        }
        *state.fval = f.eval(state.position);
        if !all_finite(state.position) || !state.fval.is_finite() {
            return Err(());
        }
        Ok(1.0)
    });
    finish_step(ens, moved)
}

/// Langevin drift with amplified noise only:
/// x <- x - eta grad F + sqrt(2 eta beta^-1 (f((F-c)^+) + epsilon)) z,
/// with the adaptive threshold c.
pub fn landscape_mod_step(
    ens: &mut ChainEnsemble,
    cfg: &SamplerConfig,
    f: &dyn Objective,
) -> Result<StepStats, DivergenceError> {
    let p = cfg.activation.at_threshold(ens.threshold);
    let eta = cfg.eta;
    let beta_inv = 1.0 / cfg.beta;
    let epsilon = cfg.epsilon;
    let moved = for_each_chain(ens, |state| {
        let boost = diffusion::excess_activation(&p, *state.fval) + epsilon;
        f.grad(state.position, state.scratch);
        let noise_scale = (2.0 * eta * beta_inv * boost).sqrt();
        for (x, &g) in state.position.iter_mut().zip(state.scratch.iter()) {
            let z: f64 = state.rng.sample(StandardNormal);
            let drift = g;
            *x = *x - eta * drift + noise_scale * z;
        }
        *state.fval = f.eval(state.position);
        if !all_finite(state.position) || !state.fval.is_finite() {
            return Err(());
        }
        Ok(boost)
    });
    finish_step(ens, moved)
}

/// Pure diffusion, no gradient evaluations:
/// x <- x + sqrt(2 eta (((F - c*)^+)^gamma + epsilon)) z,
/// where c* is the known optimum when the objective declares one and the
/// adaptive threshold otherwise.
pub fn driftless_step(
    ens: &mut ChainEnsemble,
    cfg: &SamplerConfig,
    f: &dyn Objective,
) -> Result<StepStats, DivergenceError> {
    let c_star = f.known_optimum().unwrap_or(ens.threshold);
    let eta = cfg.eta;
    let gamma = cfg.gamma_exponent;
    let epsilon = cfg.epsilon;
    let moved = for_each_chain(ens, |state| {
        let excess = (*state.fval - c_star).max(0.0);
        let coeff = excess.powf(gamma) + epsilon;
        let noise_scale = (2.0 * eta * coeff).sqrt();
        for x in state.position.iter_mut() {
            let z: f64 = state.rng.sample(StandardNormal);
            *x += noise_scale * z;
        }
        *state.fval = f.eval(state.position);
        if !all_finite(state.position) || !state.fval.is_finite() {
            return Err(());
        }
        Ok(coeff)
    });
    finish_step(ens, moved)
}

/// Advances the ensemble by one iteration of the configured method.
pub fn step(
    ens: &mut ChainEnsemble,
    cfg: &SamplerConfig,
    f: &dyn Objective,
) -> Result<StepStats, DivergenceError> {
    match cfg.method {
        Method::AdaVol | Method::AdaVolFixedC => adavol_step(ens, cfg, f),
        Method::Langevin => langevin_step(ens, cfg, f),
        Method::LandscapeMod => landscape_mod_step(ens, cfg, f),
        Method::Driftless => driftless_step(ens, cfg, f),
    }
}

/// One row of a trajectory: ensemble summary after a completed iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: u64,
    pub min_objective: f64,
    pub mean_objective: f64,
    /// Threshold in effect for the dynamics (running minimum, configured c,
    /// or known optimum, depending on the method).
    pub threshold: f64,
    /// Mean squared diffusion coefficient of the step that produced this row.
    pub delta_hat: f64,
    pub mean_position: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    /// Coordinate-wise chain mean at the final iteration.
    pub estimate: Vec<f64>,
    pub ensemble: ChainEnsemble,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{source}")]
    Diverged {
        source: DivergenceError,
        /// Records accumulated before the failure.
        records: Vec<TrajectoryRecord>,
    },
}

fn effective_threshold(cfg: &SamplerConfig, f: &dyn Objective, ens: &ChainEnsemble) -> f64 {
    match cfg.method {
        Method::AdaVolFixedC => cfg.activation.c,
        Method::Driftless => f.known_optimum().unwrap_or(ens.threshold),
        _ => ens.threshold,
    }
}

fn make_record(
    cfg: &SamplerConfig,
    f: &dyn Objective,
    ens: &ChainEnsemble,
    stats: StepStats,
) -> TrajectoryRecord {
    TrajectoryRecord {
        iteration: ens.iteration(),
        min_objective: ens.min_objective(),
        mean_objective: ens.mean_objective(),
        threshold: effective_threshold(cfg, f, ens),
        delta_hat: stats.delta_hat,
        mean_position: ens.mean_position(),
    }
}

/// Runs the configured method, recording every iteration.
pub fn run(cfg: &SamplerConfig, f: &dyn Objective) -> Result<RunOutput, RunError> {
    run_strided(cfg, f, 1)
}

/// Runs the configured method, recording every `stride`-th iteration plus
/// the final one. On divergence the records collected so far are returned
/// inside the error.
pub fn run_strided(
    cfg: &SamplerConfig,
    f: &dyn Objective,
    stride: u64,
) -> Result<RunOutput, RunError> {
    let mut ens = init_ensemble(cfg, f)?;
    if let Some(l) = f.smoothness_bound() {
        // Sufficient (not necessary) step bound for the contraction theory;
        // exceeding it is allowed but worth flagging.
        let bound = 1.0 / ((cfg.activation.lambda + 2.0).powi(2) * l);
        if cfg.eta > bound {
            log::warn!(
                "eta = {} exceeds the sufficient step bound {:.3e} for this objective",
                cfg.eta,
                bound
            );
        }
    }
    let stride = stride.max(1);
    let mut records = Vec::new();
    for k in 1..=cfg.iterations {
        match step(&mut ens, cfg, f) {
            Ok(stats) => {
                if k % stride == 0 || k == cfg.iterations {
                    records.push(make_record(cfg, f, &ens, stats));
                }
            }
            Err(source) => return Err(RunError::Diverged { source, records }),
        }
    }
    Ok(RunOutput {
        records,
        estimate: ens.mean_position(),
        ensemble: ens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{eval_gradient, CallCounter, Quadratic, ShiftedRastrigin};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn rastrigin_cfg(method: Method) -> SamplerConfig {
        SamplerConfig {
            method,
            eta: 1e-3,
            beta: 5.0,
            iterations: 100,
            chains: 8,
            seed: 11,
            activation: ActivationParams::new(0.0, 0.0, 0.0).unwrap(),
            epsilon: 1.0,
            gamma_exponent: 1.0,
            init_mean: vec![4.0, 4.0],
            init_cov_scale: 1.0,
        }
    }

    fn bits(xs: &[f64]) -> Vec<u64> {
        xs.iter().map(|v| v.to_bits()).collect()
    }

    fn record_bits(r: &TrajectoryRecord) -> Vec<u64> {
        let mut b = vec![
            r.iteration,
            r.min_objective.to_bits(),
            r.mean_objective.to_bits(),
            r.threshold.to_bits(),
            r.delta_hat.to_bits(),
        ];
        b.extend(bits(&r.mean_position));
        b
    }

    #[test]
    fn init_is_deterministic() {
        let f = ShiftedRastrigin::new(2);
        let cfg = rastrigin_cfg(Method::Langevin);
        let a = init_ensemble(&cfg, &f).unwrap();
        let b = init_ensemble(&cfg, &f).unwrap();
        assert_eq!(bits(a.positions()), bits(b.positions()));
        assert_eq!(a.threshold(), b.threshold());
        assert_eq!(a.iteration(), 0);
    }

    #[test]
    fn init_threshold_is_ensemble_minimum() {
        let f = ShiftedRastrigin::new(2);
        let cfg = SamplerConfig {
            chains: 100,
            init_mean: vec![1e3, 1e3],
            init_cov_scale: 10.0,
            seed: 3,
            ..rastrigin_cfg(Method::AdaVol)
        };
        let ens = init_ensemble(&cfg, &f).unwrap();
        let recomputed = (0..ens.chains())
            .map(|i| f.eval(ens.chain_position(i)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(ens.threshold(), recomputed);
        // The minimum of 100 draws sits below F(mean) by a few spread
        // lengths; the spread of F under the init law is roughly
        // |grad F(mean)| * sqrt(scale * dim).
        let f_mean = f.eval(&cfg.init_mean);
        let grad_norm = eval_gradient(&f, &cfg.init_mean)
            .unwrap()
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        let spread = grad_norm * (cfg.init_cov_scale * 2.0).sqrt();
        assert!(ens.threshold() < f_mean);
        assert!(
            ens.threshold() > f_mean - 6.0 * spread,
            "threshold {} implausibly far below F(mean) {}",
            ens.threshold(),
            f_mean
        );
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let f = ShiftedRastrigin::new(2);
        let ok = rastrigin_cfg(Method::AdaVol);
        assert!(ok.validate(&f).is_ok());
        let cases = vec![
            (
                SamplerConfig { eta: 0.0, ..ok.clone() },
                ConfigError::InvalidEta(0.0),
            ),
            (
                SamplerConfig { beta: -1.0, ..ok.clone() },
                ConfigError::InvalidBeta(-1.0),
            ),
            (
                SamplerConfig { chains: 0, ..ok.clone() },
                ConfigError::NoChains,
            ),
            (
                SamplerConfig { epsilon: 0.0, ..ok.clone() },
                ConfigError::InvalidEpsilon(0.0),
            ),
            (
                SamplerConfig { init_cov_scale: 0.0, ..ok.clone() },
                ConfigError::InvalidInitCovScale(0.0),
            ),
            (
                SamplerConfig { init_mean: vec![0.0], ..ok.clone() },
                ConfigError::DimensionMismatch { expected: 2, got: 1 },
            ),
            (
                SamplerConfig { init_mean: vec![f64::NAN, 0.0], ..ok.clone() },
                ConfigError::NonFiniteInitMean,
            ),
        ];
        for (cfg, want) in cases {
            assert_eq!(cfg.validate(&f).unwrap_err(), want);
        }

        let fixed = SamplerConfig {
            method: Method::AdaVolFixedC,
            activation: ActivationParams::new(1.0, 1.0, -0.5).unwrap(),
            ..ok.clone()
        };
        assert_eq!(
            fixed.validate(&f).unwrap_err(),
            ConfigError::ThresholdBelowOptimum { c: -0.5, optimum: 0.0 }
        );

        let driftless = SamplerConfig {
            method: Method::Driftless,
            gamma_exponent: 0.5,
            ..ok
        };
        assert_eq!(
            driftless.validate(&f).unwrap_err(),
            ConfigError::GammaTooSmall { got: 0.5, min: 1.0 }
        );
    }

    #[test]
    fn flat_activation_reproduces_langevin_bitwise() {
        let f = ShiftedRastrigin::new(2);
        for seed in [1u64, 99] {
            let base = SamplerConfig { seed, ..rastrigin_cfg(Method::Langevin) };
            let lan = run(&base, &f).unwrap();
            for (lambda, theta) in [(0.0, 1.0), (1e4, 0.0)] {
                let ada = SamplerConfig {
                    method: Method::AdaVol,
                    activation: ActivationParams::new(lambda, theta, 0.0).unwrap(),
                    ..base.clone()
                };
                let got = run(&ada, &f).unwrap();
                assert_eq!(
                    bits(got.ensemble.positions()),
                    bits(lan.ensemble.positions()),
                    "positions differ for lambda={lambda} theta={theta}"
                );
                assert_eq!(got.records.len(), lan.records.len());
                for (a, b) in got.records.iter().zip(&lan.records) {
                    assert_eq!(record_bits(a), record_bits(b));
                }
            }
        }
    }

    #[test]
    fn zero_eta_step_leaves_positions_fixed() {
        let f = ShiftedRastrigin::new(2);
        let cfg = rastrigin_cfg(Method::AdaVol);
        let mut ens = init_ensemble(&cfg, &f).unwrap();
        let before = bits(ens.positions());
        let frozen = SamplerConfig { eta: 0.0, ..cfg };
        adavol_step(&mut ens, &frozen, &f).unwrap();
        assert_eq!(bits(ens.positions()), before);
        assert_eq!(ens.iteration(), 1);
    }

    #[test]
    fn saturated_step_is_rescaled_descent() {
        // h saturates at lambda + 1 = 10, so one step from (1, 0) moves by
        // eta * h * grad F = 0.1 toward the origin; beta = 1e12 makes the
        // noise and the divergence correction negligible.
        let f = Quadratic::new(2, 1.0);
        let cfg = SamplerConfig {
            method: Method::AdaVolFixedC,
            eta: 0.01,
            beta: 1e12,
            chains: 1,
            seed: 5,
            activation: ActivationParams::new(9.0, 1e6, 0.25).unwrap(),
            init_mean: vec![1.0, 0.0],
            init_cov_scale: 1e-30,
            ..rastrigin_cfg(Method::AdaVolFixedC)
        };
        let mut ens = init_ensemble(&cfg, &f).unwrap();
        adavol_step(&mut ens, &cfg, &f).unwrap();
        let x = ens.chain_position(0);
        assert_abs_diff_eq!(x[0], 0.9, epsilon = 1e-3);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-3);
    }

    #[test]
    fn adavol_is_a_time_change_of_langevin_drift() {
        // At negligible temperature one update must match a gradient step
        // with eta replaced by eta * h(x).
        let f = Quadratic::new(2, 1.0);
        let cfg = SamplerConfig {
            method: Method::AdaVolFixedC,
            eta: 1e-3,
            beta: 1e12,
            chains: 1,
            seed: 17,
            activation: ActivationParams::new(5.0, 1.0, 0.5).unwrap(),
            init_mean: vec![2.0, 1.0],
            init_cov_scale: 1e-30,
            ..rastrigin_cfg(Method::AdaVolFixedC)
        };
        let mut ens = init_ensemble(&cfg, &f).unwrap();
        let x0 = ens.chain_position(0).to_vec();
        let h = scalar_coefficient(&cfg.activation, f.eval(&x0));
        let g = eval_gradient(&f, &x0).unwrap();
        adavol_step(&mut ens, &cfg, &f).unwrap();
        let x1 = ens.chain_position(0);
        for d in 0..2 {
            let expected = x0[d] - cfg.eta * h * g[d];
            assert_relative_eq!(x1[d], expected, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn landscape_mod_scales_langevin_noise() {
        // Same seed, same drift; with the activation inactive the noise of
        // landscape_mod is exactly sqrt(epsilon) times the Langevin noise.
        let f = Quadratic::new(2, 1.0);
        let base = SamplerConfig {
            eta: 1e-3,
            beta: 2.0,
            chains: 4,
            seed: 23,
            init_mean: vec![3.0, -1.0],
            init_cov_scale: 1e-30,
            ..rastrigin_cfg(Method::Langevin)
        };
        let mut lan = init_ensemble(&base, &f).unwrap();
        let x0 = lan.positions().to_vec();
        langevin_step(&mut lan, &base, &f).unwrap();

        let modded = SamplerConfig {
            method: Method::LandscapeMod,
            epsilon: 0.25,
            activation: ActivationParams::new(1.0, 1.0, 0.0).unwrap(),
            ..base.clone()
        };
        let mut lm = init_ensemble(&modded, &f).unwrap();
        landscape_mod_step(&mut lm, &modded, &f).unwrap();

        for chain in 0..4 {
            let g = eval_gradient(&f, &x0[chain * 2..chain * 2 + 2]).unwrap();
            for d in 0..2 {
                let idx = chain * 2 + d;
                let drifted = x0[idx] - base.eta * g[d];
                let lan_noise = lan.positions()[idx] - drifted;
                let lm_noise = lm.positions()[idx] - drifted;
                assert_relative_eq!(lm_noise, 0.5 * lan_noise, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn driftless_never_evaluates_gradients() {
        let f = ShiftedRastrigin::new(2);
        let counted = CallCounter::new(&f);
        let cfg = SamplerConfig {
            method: Method::Driftless,
            iterations: 50,
            chains: 8,
            epsilon: 0.1,
            gamma_exponent: 1.0,
            ..rastrigin_cfg(Method::Driftless)
        };
        let out = run(&cfg, &counted).unwrap();
        assert_eq!(counted.grads(), 0, "driftless must not touch gradients");
        assert_eq!(counted.evals(), 8 * (50 + 1));
        // The known optimum is the reported threshold surrogate.
        assert!(out.records.iter().all(|r| r.threshold == 0.0));
    }

    #[test]
    fn driftless_noise_scales_with_epsilon() {
        // Chains start at the optimum, so the excess term vanishes and the
        // displacement is sqrt(2 eta epsilon) z; quadrupling epsilon must
        // exactly double it under a shared seed.
        let f = Quadratic::new(2, 1.0);
        let base = SamplerConfig {
            method: Method::Driftless,
            eta: 1e-3,
            chains: 4,
            seed: 29,
            init_mean: vec![0.0, 0.0],
            init_cov_scale: 1e-30,
            epsilon: 0.01,
            gamma_exponent: 1.0,
            ..rastrigin_cfg(Method::Driftless)
        };
        let mut small = init_ensemble(&base, &f).unwrap();
        let x0 = small.positions().to_vec();
        driftless_step(&mut small, &base, &f).unwrap();
        let big_cfg = SamplerConfig { epsilon: 0.04, ..base };
        let mut big = init_ensemble(&big_cfg, &f).unwrap();
        driftless_step(&mut big, &big_cfg, &f).unwrap();
        for i in 0..x0.len() {
            let ds = small.positions()[i] - x0[i];
            let db = big.positions()[i] - x0[i];
            assert_relative_eq!(db, 2.0 * ds, max_relative = 1e-9);
        }
    }

    #[test]
    fn adavol_gradient_call_budget_is_exact() {
        let f = ShiftedRastrigin::new(2);
        let counted = CallCounter::new(&f);
        let cfg = SamplerConfig {
            method: Method::AdaVol,
            iterations: 40,
            chains: 8,
            activation: ActivationParams::new(10.0, 1.0, 0.0).unwrap(),
            ..rastrigin_cfg(Method::AdaVol)
        };
        run(&cfg, &counted).unwrap();
        assert_eq!(counted.grads(), 8 * 40, "one gradient per chain per step");
        assert_eq!(counted.evals(), 8 * (40 + 1), "init plus one eval per move");
    }

    #[test]
    fn threshold_ratchets_and_delta_stays_above_one() {
        let f = ShiftedRastrigin::new(1);
        let cfg = SamplerConfig {
            method: Method::AdaVol,
            iterations: 500,
            chains: 16,
            beta: 5.0,
            activation: ActivationParams::new(10.0, 1.0, 0.0).unwrap(),
            init_mean: vec![5.0],
            init_cov_scale: 1.0,
            ..rastrigin_cfg(Method::AdaVol)
        };
        let out = run(&cfg, &f).unwrap();
        let mut prev = f64::INFINITY;
        for r in &out.records {
            assert!(r.threshold <= prev, "threshold must be non-increasing");
            assert!(r.threshold <= r.min_objective + 1e-15);
            assert!(r.delta_hat >= 1.0, "delta_hat {} below 1", r.delta_hat);
            assert!(r.min_objective <= r.mean_objective);
            assert!(r.min_objective >= f.known_optimum().unwrap());
            prev = r.threshold;
        }
    }

    #[test]
    fn langevin_delta_is_identically_one() {
        let f = ShiftedRastrigin::new(2);
        let out = run(&rastrigin_cfg(Method::Langevin), &f).unwrap();
        assert!(out.records.iter().all(|r| r.delta_hat == 1.0));
    }

    #[test]
    fn runs_are_reproducible_and_strides_thin_records() {
        let f = ShiftedRastrigin::new(2);
        let cfg = rastrigin_cfg(Method::AdaVol);
        let a = run(&cfg, &f).unwrap();
        let b = run(&cfg, &f).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(record_bits(x), record_bits(y));
        }
        assert_eq!(bits(&a.estimate), bits(&b.estimate));

        let thin = run_strided(&cfg, &f, 7).unwrap();
        let expect: Vec<u64> = (1..=100u64)
            .filter(|k| k % 7 == 0 || *k == 100)
            .collect();
        let got: Vec<u64> = thin.records.iter().map(|r| r.iteration).collect();
        assert_eq!(got, expect);
        // Thinning only drops rows; the retained ones are unchanged.
        for r in &thin.records {
            let full = &a.records[(r.iteration - 1) as usize];
            assert_eq!(record_bits(r), record_bits(full));
        }
    }

    #[test]
    fn zero_iteration_run_reports_initial_ensemble() {
        let f = ShiftedRastrigin::new(2);
        let cfg = SamplerConfig { iterations: 0, ..rastrigin_cfg(Method::AdaVol) };
        let out = run(&cfg, &f).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.estimate, out.ensemble.mean_position());
        assert_eq!(out.ensemble.iteration(), 0);
    }

    #[test]
    fn langevin_matches_ar1_stationary_variance() {
        // For F = x^2/2 the chain is exactly AR(1) with stationary variance
        // 2 / (beta * L * (2 - eta * L)); time-average x^2 once relaxed.
        let f = Quadratic::new(1, 1.0);
        let cfg = SamplerConfig {
            method: Method::Langevin,
            eta: 0.05,
            beta: 2.0,
            iterations: 0,
            chains: 128,
            seed: 41,
            init_mean: vec![0.0],
            init_cov_scale: 0.5,
            ..rastrigin_cfg(Method::Langevin)
        };
        let mut ens = init_ensemble(&cfg, &f).unwrap();
        let mut sum_sq = 0.0;
        let mut samples = 0u64;
        for k in 0..1000 {
            langevin_step(&mut ens, &cfg, &f).unwrap();
            if k >= 400 {
                sum_sq += ens.positions().iter().map(|x| x * x).sum::<f64>();
                samples += ens.chains() as u64;
            }
        }
        let measured = sum_sq / samples as f64;
        let expected = 2.0 / (cfg.beta * (2.0 - cfg.eta));
        assert_relative_eq!(measured, expected, max_relative = 0.05);
    }

    #[test]
    fn divergence_names_chain_and_iteration() {
        // eta * L = 3 makes the deterministic part of the update expand by
        // a factor of 2 per step, so the objective overflows quickly.
        let f = Quadratic::new(1, 1.0);
        let cfg = SamplerConfig {
            method: Method::Langevin,
            eta: 3.0,
            beta: 1.0,
            iterations: 600,
            chains: 2,
            seed: 31,
            init_mean: vec![1e150],
            init_cov_scale: 1.0,
            ..rastrigin_cfg(Method::Langevin)
        };
        match run(&cfg, &f) {
            Err(RunError::Diverged { source, records }) => {
                assert!(source.iteration >= 1);
                assert!(!records.is_empty());
                assert_eq!(records.last().unwrap().iteration, source.iteration - 1);
                let msg = source.to_string();
                assert!(msg.contains("chain"), "message should name the chain: {msg}");
                assert!(
                    msg.contains("iteration"),
                    "message should name the iteration: {msg}"
                );
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
