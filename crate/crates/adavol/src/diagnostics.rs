//! Desk-scale numerical checks of the theory behind the samplers.
//!
//! Everything here is 1-D and quadrature-backed: Gibbs densities on grids,
//! histogram KL against the Gibbs measure, the per-step KL contraction
//! inequality on its exactly solvable Gaussian channel, the gradient-moment
//! bound, and summaries of the delta series that the samplers report.

use serde::Serialize;
use thiserror::Error;

use crate::grid::{check_boundary_negligible, trapezoid, uniform_grid, validate_uniform, GridError};
use crate::objective::{eval_gradient, Objective, Quadratic};
use crate::samplers::{ConfigError, Method, SamplerConfig, TrajectoryRecord};

/// Default histogram resolution for KL estimation.
pub const DEFAULT_BINS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("objective must be one-dimensional, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("beta must be > 0 and finite, got {0}")]
    InvalidBeta(f64),
    #[error("smoothness constant must be > 0 and finite, got {0}")]
    InvalidSmoothness(f64),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("histogram support needs hi > lo, got [{lo}, {hi}]")]
    EmptySupport { lo: f64, hi: f64 },
    #[error("no samples provided")]
    NoSamples,
    #[error("samples must be finite, got {0}")]
    NonFiniteSample(f64),
    #[error("sample {value} outside histogram support [{lo}, {hi}]")]
    SampleOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("bin masses must be nonnegative and sum to 1, got sum {0}")]
    BadMasses(f64),
    #[error("no interval with negligible Gibbs boundary mass found; objective looks unconfined")]
    UnconfinedObjective,
    #[error("contraction check requires method = langevin, got {0}")]
    NotLangevin(Method),
    #[error("invalid theory constants: {0}")]
    InvalidConstants(&'static str),
}

/// Constants the contraction theory is phrased in: the log-Sobolev constant
/// of the Gibbs measure, the smoothness constant of the objective, the
/// inverse temperature, and the volatility gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub alpha: f64,
    pub l: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl TheoryConstants {
    pub fn new(alpha: f64, l: f64, beta: f64, lambda: f64) -> Result<Self, DiagnosticsError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(DiagnosticsError::InvalidConstants("alpha must be > 0"));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(DiagnosticsError::InvalidConstants("l must be > 0"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(DiagnosticsError::InvalidConstants("beta must be > 0"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(DiagnosticsError::InvalidConstants("lambda must be >= 0"));
        }
        Ok(Self {
            alpha,
            l,
            beta,
            lambda,
        })
    }

    /// For F = (L/2) x^2 the Gibbs measure is N(0, 1/(beta L)), whose
    /// log-Sobolev constant is exactly beta * L.
    pub fn for_quadratic(f: &Quadratic, beta: f64, lambda: f64) -> Result<Self, DiagnosticsError> {
        let l = f.curvature();
        Self::new(beta * l, l, beta, lambda)
    }
}

/// Admissible step ceiling, both branches. The theory joins them with a
/// maximum; the second branch is the binding one at large beta, so both are
/// surfaced for callers that want the conservative minimum instead.
pub fn step_size_branches(tc: &TheoryConstants, gamma_k: f64, delta_k: f64) -> (f64, f64) {
    let lp2 = tc.lambda + 2.0;
    let first = delta_k / (lp2 * lp2 * tc.l);
    let second = tc.alpha * gamma_k.sqrt() / (4.0 * tc.beta * lp2.powf(1.5) * tc.l * tc.l);
    (first, second)
}

/// max of the two admissible-step branches with the given per-step factors.
pub fn step_size_bound(tc: &TheoryConstants, gamma_k: f64, delta_k: f64) -> f64 {
    let (first, second) = step_size_branches(tc, gamma_k, delta_k);
    first.max(second)
}

fn require_1d(f: &dyn Objective) -> Result<(), DiagnosticsError> {
    if f.dimension() != 1 {
        return Err(DiagnosticsError::NotOneDimensional(f.dimension()));
    }
    Ok(())
}

fn require_beta(beta: f64) -> Result<(), DiagnosticsError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(DiagnosticsError::InvalidBeta(beta));
    }
    Ok(())
}

/// Normalized Gibbs density e^{-beta F} / Z on a uniform grid. The grid must
/// extend far enough that the boundary weights are negligible; otherwise the
/// truncated normalization would silently misrepresent the measure.
pub fn gibbs_density_1d(
    f: &dyn Objective,
    beta: f64,
    grid: &[f64],
) -> Result<Vec<f64>, DiagnosticsError> {
    require_1d(f)?;
    require_beta(beta)?;
    let spacing = validate_uniform(grid)?;
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(&[x])).collect();
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(DiagnosticsError::Grid(GridError::NotFinite(idx)));
    }
    let fmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = values.iter().map(|&v| (-beta * (v - fmin)).exp()).collect();
    check_boundary_negligible(&weights)?;
    let z = trapezoid(&weights, spacing);
    for w in &mut weights {
        *w /= z;
    }
    Ok(weights)
}

/// Splits the Gibbs mass of a 1-D objective at the grid point nearest to
/// `split`, returning (mass left of split, mass right of split), normalized.
pub fn gibbs_mass_split(
    f: &dyn Objective,
    beta: f64,
    grid: &[f64],
    split: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    let density = gibbs_density_1d(f, beta, grid)?;
    let spacing = validate_uniform(grid)?;
    let idx = grid
        .iter()
        .position(|&x| x >= split)
        .unwrap_or(grid.len() - 1)
        .clamp(1, grid.len() - 2);
    let below = trapezoid(&density[..=idx], spacing);
    let above = trapezoid(&density[idx..], spacing);
    let total = below + above;
    Ok((below / total, above / total))
}

/// Normalized bin-mass histogram on [lo, hi]; the empirical surrogate for a
/// chain ensemble's law in the 1-D KL diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramDensity {
    lo: f64,
    hi: f64,
    bin_width: f64,
    mass: Vec<f64>,
}

impl HistogramDensity {
    pub fn from_samples(
        samples: &[f64],
        lo: f64,
        hi: f64,
        bins: usize,
    ) -> Result<Self, DiagnosticsError> {
        if samples.is_empty() {
            return Err(DiagnosticsError::NoSamples);
        }
        if bins == 0 {
            return Err(DiagnosticsError::NoBins);
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(DiagnosticsError::EmptySupport { lo, hi });
        }
        let mut counts = vec![0u64; bins];
        let scale = bins as f64 / (hi - lo);
        for &x in samples {
            if !x.is_finite() {
                return Err(DiagnosticsError::NonFiniteSample(x));
            }
            if x < lo || x > hi {
                return Err(DiagnosticsError::SampleOutOfRange { value: x, lo, hi });
            }
            let b = (((x - lo) * scale) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let total = samples.len() as f64;
        let mass = counts.iter().map(|&c| c as f64 / total).collect();
        Ok(Self {
            lo,
            hi,
            bin_width: (hi - lo) / bins as f64,
            mass,
        })
    }

    /// Support taken from the sample range itself (padded when degenerate).
    pub fn from_samples_auto(samples: &[f64], bins: usize) -> Result<Self, DiagnosticsError> {
        if samples.is_empty() {
            return Err(DiagnosticsError::NoSamples);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in samples {
            if !x.is_finite() {
                return Err(DiagnosticsError::NonFiniteSample(x));
            }
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        Self::from_samples(samples, lo, hi, bins)
    }

    /// Builds directly from bin masses (e.g. a binned analytic density).
    /// The masses must already sum to 1 within 1e-9; they are renormalized
    /// to remove the residual.
    pub fn from_masses(lo: f64, hi: f64, mass: Vec<f64>) -> Result<Self, DiagnosticsError> {
        if mass.is_empty() {
            return Err(DiagnosticsError::NoBins);
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(DiagnosticsError::EmptySupport { lo, hi });
        }
        let sum: f64 = mass.iter().sum();
        if mass.iter().any(|&m| !(m >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(DiagnosticsError::BadMasses(sum));
        }
        let bins = mass.len();
        let mass = mass.into_iter().map(|m| m / sum).collect();
        Ok(Self {
            lo,
            hi,
            bin_width: (hi - lo) / bins as f64,
            mass,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn bin_range(&self, b: usize) -> (f64, f64) {
        (
            self.lo + b as f64 * self.bin_width,
            self.lo + (b + 1) as f64 * self.bin_width,
        )
    }
}

/// Sub-quadrature resolution used for per-bin Gibbs masses.
const BIN_QUADRATURE_POINTS: usize = 65;

/// Unnormalized-weight quadrature context over an interval wide enough that
/// the Gibbs boundary mass is negligible.
struct GibbsQuadrature {
    fmin: f64,
    z: f64,
}

impl GibbsQuadrature {
    /// Expands [lo, hi] outward until both boundary weights drop below the
    /// negligibility threshold, then fixes the normalizer by dense trapezoid.
    fn bracket(
        f: &dyn Objective,
        beta: f64,
        mut lo: f64,
        mut hi: f64,
    ) -> Result<Self, DiagnosticsError> {
        require_1d(f)?;
        require_beta(beta)?;
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let mut extension = 0.5 * (hi - lo);
        let mut ok = false;
        for _ in 0..80 {
            let scan = uniform_grid(lo, hi, 4097);
            let scanned: Vec<f64> = scan.iter().map(|&x| f.eval(&[x])).collect();
            if let Some(idx) = scanned.iter().position(|v| !v.is_finite()) {
                return Err(DiagnosticsError::Grid(GridError::NotFinite(idx)));
            }
            let fmin = scanned.iter().cloned().fold(f64::INFINITY, f64::min);
            let w_lo = (-beta * (f.eval(&[lo]) - fmin)).exp();
            let w_hi = (-beta * (f.eval(&[hi]) - fmin)).exp();
            if w_lo < 1e-12 && w_hi < 1e-12 {
                ok = true;
                break;
            }
            if w_lo >= 1e-12 {
                lo -= extension;
            }
            if w_hi >= 1e-12 {
                hi += extension;
            }
            extension *= 1.5;
        }
        if !ok {
            return Err(DiagnosticsError::UnconfinedObjective);
        }
        let grid = uniform_grid(lo, hi, 32769);
        let values: Vec<f64> = grid.iter().map(|&x| f.eval(&[x])).collect();
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(DiagnosticsError::Grid(GridError::NotFinite(idx)));
        }
        let fmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = values.iter().map(|&v| (-beta * (v - fmin)).exp()).collect();
        let spacing = (hi - lo) / 32768.0;
        let z = trapezoid(&weights, spacing);
        Ok(Self { fmin, z })
    }

    /// Gibbs mass of [a, b] by local trapezoid against the shared normalizer.
    fn interval_mass(&self, f: &dyn Objective, beta: f64, a: f64, b: f64) -> f64 {
        let grid = uniform_grid(a, b, BIN_QUADRATURE_POINTS);
        let weights: Vec<f64> = grid
            .iter()
            .map(|&x| (-beta * (f.eval(&[x]) - self.fmin)).exp())
            .collect();
        trapezoid(&weights, (b - a) / (BIN_QUADRATURE_POINTS - 1) as f64) / self.z
    }
}

/// KL divergence of a histogram from the Gibbs measure of `f` at inverse
/// temperature `beta`: sum over occupied bins of p_b log(p_b / q_b) with q_b
/// the Gibbs bin mass by quadrature. Tiny negative results in (-1e-9, 0),
/// pure discretization artifacts, are clamped to zero with a warning. The
/// result is +inf when an occupied bin carries numerically zero Gibbs mass.
pub fn kl_vs_gibbs(
    hist: &HistogramDensity,
    f: &dyn Objective,
    beta: f64,
) -> Result<f64, DiagnosticsError> {
    let quad = GibbsQuadrature::bracket(f, beta, hist.lo(), hist.hi())?;
    let mut kl = 0.0;
    for (b, &p) in hist.mass().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (a, c) = hist.bin_range(b);
        let q = quad.interval_mass(f, beta, a, c);
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += p * (p / q).ln();
    }
    if kl < 0.0 && kl > -1e-9 {
        log::warn!("clamping KL discretization residual {kl:e} to 0");
        kl = 0.0;
    }
    Ok(kl)
}

/// Total variation distance between a histogram and the Gibbs measure:
/// half the absolute bin-mass differences plus the Gibbs mass outside the
/// histogram support.
pub fn total_variation_vs_gibbs(
    hist: &HistogramDensity,
    f: &dyn Objective,
    beta: f64,
) -> Result<f64, DiagnosticsError> {
    let quad = GibbsQuadrature::bracket(f, beta, hist.lo(), hist.hi())?;
    let mut abs_diff = 0.0;
    let mut covered = 0.0;
    for (b, &p) in hist.mass().iter().enumerate() {
        let (a, c) = hist.bin_range(b);
        let q = quad.interval_mass(f, beta, a, c);
        abs_diff += (p - q).abs();
        covered += q;
    }
    Ok(0.5 * (abs_diff + (1.0 - covered).max(0.0)))
}

/// One probed step of the KL contraction inequality on the Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremProbe {
    pub k: u64,
    /// H(rho_k | nu), closed form.
    pub kl_before: f64,
    /// H(rho_{k+1} | nu), closed form; the inequality's left side.
    pub kl_after: f64,
    /// e^{-alpha eta / beta} H(rho_k | nu) + 8 eta^2 n L^2.
    pub bound: f64,
    pub pass: bool,
}

/// KL of N(m, s2) relative to the Gibbs measure N(0, 1/(beta L)).
fn gaussian_kl_to_gibbs(m: f64, s2: f64, beta: f64, l: f64) -> f64 {
    0.5 * (beta * l * (m * m + s2) - 1.0 - (beta * l * s2).ln())
}

/// Checks the per-step KL inequality for unadjusted Langevin on a 1-D
/// quadratic, where the iterate law stays Gaussian and every KL value is
/// available in closed form: the mean contracts by (1 - eta L) and the
/// variance obeys s2 <- (1 - eta L)^2 s2 + 2 eta / beta. The initial law is
/// N(init_mean, init_cov_scale) from the sampler config. gamma = delta = 1.
pub fn theorem_step_inequality_check(
    f: &Quadratic,
    cfg: &SamplerConfig,
    probes: &[u64],
) -> Result<Vec<TheoremProbe>, DiagnosticsError> {
    require_1d(f)?;
    if cfg.method != Method::Langevin {
        return Err(DiagnosticsError::NotLangevin(cfg.method));
    }
    cfg.validate(f)?;
    let l = f.curvature();
    let tc = TheoryConstants::for_quadratic(f, cfg.beta, 0.0)?;
    let decay = (-tc.alpha * cfg.eta / cfg.beta).exp();
    let slack = 8.0 * cfg.eta * cfg.eta * l * l;
    let max_k = probes.iter().copied().max().unwrap_or(0);
    let a = 1.0 - cfg.eta * l;
    let mut kl = Vec::with_capacity(max_k as usize + 2);
    let mut m = cfg.init_mean[0];
    let mut s2 = cfg.init_cov_scale;
    for _ in 0..=max_k + 1 {
        kl.push(gaussian_kl_to_gibbs(m, s2, cfg.beta, l));
        m *= a;
        s2 = a * a * s2 + 2.0 * cfg.eta / cfg.beta;
    }
    Ok(probes
        .iter()
        .map(|&k| {
            let kl_before = kl[k as usize];
            let kl_after = kl[k as usize + 1];
            let bound = decay * kl_before + slack;
            TheoremProbe {
                k,
                kl_before,
                kl_after,
                bound,
                pass: kl_after <= bound * (1.0 + 1e-12) + 1e-300,
            }
        })
        .collect())
}

/// Quadrature check of the stationary gradient-moment bound
/// E_nu |F'|^2 <= L n / beta (n = 1 here).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lhs: f64,
    pub rhs: f64,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-6)
    }
}

pub fn lemma_a1_check(
    f: &dyn Objective,
    beta: f64,
    l: f64,
    grid: &[f64],
) -> Result<LemmaReport, DiagnosticsError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(DiagnosticsError::InvalidSmoothness(l));
    }
    let density = gibbs_density_1d(f, beta, grid)?;
    let spacing = validate_uniform(grid)?;
    let integrand: Vec<f64> = grid
        .iter()
        .zip(&density)
        .map(|(&x, &nu)| {
            let g = eval_gradient(f, &[x]).expect("dimension checked above");
            g[0] * g[0] * nu
        })
        .collect();
    Ok(LemmaReport {
        lhs: trapezoid(&integrand, spacing),
        rhs: l / beta,
    })
}

/// Head/tail view of the reported mean squared diffusion coefficients; on
/// converging adaptive runs the head exceeds the tail, exhibiting that the
/// discretization-error inflation is transient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub count: usize,
    pub min: f64,
    /// Mean over the first max(1, count/10) records.
    pub head_mean: f64,
    /// Mean over the last max(1, count/10) records.
    pub tail_mean: f64,
}

impl DeltaSummary {
    pub fn all_at_least_one(&self) -> bool {
        self.min >= 1.0
    }
}

pub fn delta_series(records: &[TrajectoryRecord]) -> Option<DeltaSummary> {
    if records.is_empty() {
        return None;
    }
    let deltas: Vec<f64> = records.iter().map(|r| r.delta_hat).collect();
    let span = (deltas.len() / 10).max(1);
    let head_mean = deltas[..span].iter().sum::<f64>() / span as f64;
    let tail_mean = deltas[deltas.len() - span..].iter().sum::<f64>() / span as f64;
    Some(DeltaSummary {
        count: deltas.len(),
        min: deltas.iter().cloned().fold(f64::INFINITY, f64::min),
        head_mean,
        tail_mean,
    })
}
