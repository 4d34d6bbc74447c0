//! Objective functions the samplers and diagnostics operate on.
//!
//! Everything implements [`Objective`], which exposes the value, a gradient
//! (analytic where available, central differences otherwise), and optional
//! metadata: the known global minimum value and a global smoothness bound L
//! with |F''| <= L wherever one exists.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

/// Central-difference step used by the gradient fallback.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: objective expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

pub trait Objective: Sync + Send {
    fn dimension(&self) -> usize;

    /// Objective value; `x.len()` must equal `dimension()`.
    fn eval(&self, x: &[f64]) -> f64;

    /// Gradient written into `out`; falls back to central differences.
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        fd_grad_into(self, x, DEFAULT_FD_STEP, out);
    }

    /// Global minimum value, when known in closed form.
    fn known_optimum(&self) -> Option<f64> {
        None
    }

    /// Global bound L with |F''| <= L, when one exists.
    fn smoothness_bound(&self) -> Option<f64> {
        None
    }
}

fn check_dim(f: &(impl Objective + ?Sized), x: &[f64]) -> Result<(), ObjectiveError> {
    if x.len() != f.dimension() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: f.dimension(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Checked objective evaluation.
pub fn eval_objective(f: &dyn Objective, x: &[f64]) -> Result<f64, ObjectiveError> {
    check_dim(f, x)?;
    Ok(f.eval(x))
}

/// Checked gradient evaluation.
pub fn eval_gradient(f: &dyn Objective, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
    check_dim(f, x)?;
    let mut out = vec![0.0; x.len()];
    f.grad(x, &mut out);
    Ok(out)
}

fn fd_grad_into(f: &(impl Objective + ?Sized), x: &[f64], h: f64, out: &mut [f64]) {
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let plus = f.eval(&probe);
        probe[k] = x[k] - h;
        let minus = f.eval(&probe);
        probe[k] = x[k];
        out[k] = (plus - minus) / (2.0 * h);
    }
}

/// Central-difference gradient with explicit step `h`.
pub fn finite_difference_gradient(
    f: &dyn Objective,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    check_dim(f, x)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(ObjectiveError::InvalidStep(h));
    }
    let mut out = vec![0.0; x.len()];
    fd_grad_into(f, x, h, &mut out);
    Ok(out)
}

/// Rastrigin landscape translated so the global minimum sits at `shift` in
/// every coordinate, with value exactly zero there:
/// F(x) = a*n + sum_k (x_k - s)^2 - a*cos(2*pi*(x_k - s)).
#[derive(Debug, Clone)]
pub struct ShiftedRastrigin {
    dimension: usize,
    shift: f64,
    amplitude: f64,
}

impl ShiftedRastrigin {
    /// Standard instance: shift 2, cosine amplitude 5.
    pub fn new(dimension: usize) -> Self {
        Self::with_params(dimension, 2.0, 5.0)
    }

    pub fn with_params(dimension: usize, shift: f64, amplitude: f64) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        assert!(
            amplitude >= 0.0 && amplitude.is_finite() && shift.is_finite(),
            "shift and amplitude must be finite, amplitude nonnegative"
        );
        Self {
            dimension,
            shift,
            amplitude,
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

impl Objective for ShiftedRastrigin {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        let mut acc = self.amplitude * self.dimension as f64;
        for &xi in x {
            let u = xi - self.shift;
            acc += u * u - self.amplitude * (TAU * u).cos();
        }
        acc
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension);
        for (o, &xi) in out.iter_mut().zip(x) {
            let u = xi - self.shift;
            *o = 2.0 * u + self.amplitude * TAU * (TAU * u).sin();
        }
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }

    fn smoothness_bound(&self) -> Option<f64> {
        // |F''| = |2 + a*(2*pi)^2*cos(..)| <= 2 + a*(2*pi)^2.
        Some(2.0 + self.amplitude * TAU * TAU)
    }
}

/// Isotropic quadratic F(x) = (curvature/2) * |x|^2.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dimension: usize,
    curvature: f64,
}

impl Quadratic {
    pub fn new(dimension: usize, curvature: f64) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        assert!(
            curvature > 0.0 && curvature.is_finite(),
            "curvature must be positive and finite"
        );
        Self {
            dimension,
            curvature,
        }
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

impl Objective for Quadratic {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        0.5 * self.curvature * x.iter().map(|&v| v * v).sum::<f64>()
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.curvature * xi;
        }
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }

    fn smoothness_bound(&self) -> Option<f64> {
        Some(self.curvature)
    }
}

/// One-dimensional double well F(x) = x^4/4 - x^2/2 + tilt*x.
///
/// `tilt = 0` gives the symmetric well with minima at +-1; a small positive
/// tilt makes the left basin the deeper one. No global smoothness bound
/// exists (F'' is unbounded), so `smoothness_bound` stays `None`.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    tilt: f64,
    left_min: f64,
    right_min: f64,
    barrier: f64,
}

impl DoubleWell {
    pub fn symmetric() -> Self {
        Self::tilted(0.0)
    }

    pub fn tilted(tilt: f64) -> Self {
        // Two minima exist iff |tilt| < 2/(3*sqrt(3)).
        assert!(
            tilt.abs() < 2.0 / (3.0 * 3.0f64.sqrt()),
            "tilt {tilt} leaves a single basin"
        );
        let left_min = newton_critical_point(-1.2, tilt);
        let right_min = newton_critical_point(1.2, tilt);
        let barrier = newton_critical_point(0.0, tilt);
        debug_assert!(left_min < barrier && barrier < right_min);
        Self {
            tilt,
            left_min,
            right_min,
            barrier,
        }
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    /// Locations of the two local minima (left, right).
    pub fn minima(&self) -> (f64, f64) {
        (self.left_min, self.right_min)
    }

    /// Location of the local maximum separating the basins.
    pub fn barrier(&self) -> f64 {
        self.barrier
    }

    /// Location of the deeper minimum.
    pub fn deeper_minimum(&self) -> f64 {
        let fl = self.eval(&[self.left_min]);
        let fr = self.eval(&[self.right_min]);
        if fl <= fr {
            self.left_min
        } else {
            self.right_min
        }
    }
}

/// Newton iteration on F'(x) = x^3 - x + tilt from a basin-selecting start.
fn newton_critical_point(start: f64, tilt: f64) -> f64 {
    let mut x = start;
    for _ in 0..128 {
        let fp = x * x * x - x + tilt;
        let fpp = 3.0 * x * x - 1.0;
        let next = x - fp / fpp;
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

impl Objective for DoubleWell {
    fn dimension(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), 1);
        let v = x[0];
        0.25 * v.powi(4) - 0.5 * v * v + self.tilt * v
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), 1);
        let v = x[0];
        out[0] = v * v * v - v + self.tilt;
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.eval(&[self.deeper_minimum()]))
    }
}

/// Objective defined by closures; the gradient closure is optional and the
/// central-difference fallback applies when it is absent.
pub struct FnObjective {
    dimension: usize,
    value: Box<dyn Fn(&[f64]) -> f64 + Sync + Send>,
    gradient: Option<Box<dyn Fn(&[f64], &mut [f64]) + Sync + Send>>,
    known_optimum: Option<f64>,
    smoothness_bound: Option<f64>,
}

impl FnObjective {
    pub fn new(dimension: usize, value: impl Fn(&[f64]) -> f64 + Sync + Send + 'static) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        Self {
            dimension,
            value: Box::new(value),
            gradient: None,
            known_optimum: None,
            smoothness_bound: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64], &mut [f64]) + Sync + Send + 'static,
    ) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }

    pub fn with_known_optimum(mut self, v: f64) -> Self {
        self.known_optimum = Some(v);
        self
    }

    pub fn with_smoothness_bound(mut self, l: f64) -> Self {
        self.smoothness_bound = Some(l);
        self
    }
}

impl Objective for FnObjective {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(x, out),
            None => fd_grad_into(self, x, DEFAULT_FD_STEP, out),
        }
    }

    fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    fn smoothness_bound(&self) -> Option<f64> {
        self.smoothness_bound
    }
}

/// Wrapper that counts value and gradient calls going through it; useful for
/// verifying per-iteration call budgets.
pub struct CallCounter<'a> {
    inner: &'a dyn Objective,
    evals: AtomicU64,
    grads: AtomicU64,
}

impl<'a> CallCounter<'a> {
    pub fn new(inner: &'a dyn Objective) -> Self {
        Self {
            inner,
            evals: AtomicU64::new(0),
            grads: AtomicU64::new(0),
        }
    }

    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn grads(&self) -> u64 {
        self.grads.load(Ordering::Relaxed)
    }
}

impl Objective for CallCounter<'_> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.grad(x, out)
    }

    fn known_optimum(&self) -> Option<f64> {
        self.inner.known_optimum()
    }

    fn smoothness_bound(&self) -> Option<f64> {
        self.inner.smoothness_bound()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    fn test_rng() -> rand_chacha::ChaCha8Rng {
        crate::rng::chain_rng(0xB1ED_CAFE, 0)
    }

    #[test]
    fn rastrigin_vanishes_at_optimum() {
        let f = ShiftedRastrigin::new(2);
        assert_eq!(f.eval(&[2.0, 2.0]), 0.0);
        let g = eval_gradient(&f, &[2.0, 2.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rastrigin_value_at_origin_1d() {
        // 5 + (0-2)^2 - 5*cos(-4*pi) = 5 + 4 - 5 = 4.
        let f = ShiftedRastrigin::new(1);
        assert_relative_eq!(f.eval(&[0.0]), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn rastrigin_gradient_quarter_offset() {
        // At x = 2.25: 2*0.25 + 10*pi*sin(pi/2) = 0.5 + 10*pi.
        let f = ShiftedRastrigin::new(1);
        let g = eval_gradient(&f, &[2.25]).unwrap();
        assert_relative_eq!(g[0], 0.5 + 10.0 * std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn rastrigin_nonnegative_and_symmetric() {
        let f = ShiftedRastrigin::new(2);
        let mut rng = test_rng();
        for _ in 0..1000 {
            let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let v = f.eval(&x);
            assert!(v >= 0.0, "rastrigin must be nonnegative, got {v} at {x:?}");
            // Reflection through the optimum leaves the value unchanged.
            let mirrored = [4.0 - x[0], 4.0 - x[1]];
            assert_relative_eq!(v, f.eval(&mirrored), max_relative = 1e-9);
        }
    }

    #[test]
    fn known_optimum_is_a_lower_bound() {
        let fns: Vec<Box<dyn Objective>> = vec![
            Box::new(ShiftedRastrigin::new(2)),
            Box::new(Quadratic::new(2, 1.0)),
            Box::new(DoubleWell::tilted(0.05)),
        ];
        let mut rng = test_rng();
        for f in &fns {
            let opt = f.known_optimum().unwrap();
            for _ in 0..500 {
                let x: Vec<f64> = (0..f.dimension()).map(|_| rng.gen_range(-6.0..6.0)).collect();
                assert!(f.eval(&x) >= opt - 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_identity_gradient() {
        let f = Quadratic::new(2, 1.0);
        assert_eq!(eval_gradient(&f, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        assert_eq!(f.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn finite_difference_matches_analytic() {
        let mut rng = test_rng();
        let fns: Vec<Box<dyn Objective>> = vec![
            Box::new(ShiftedRastrigin::new(3)),
            Box::new(Quadratic::new(3, 2.5)),
        ];
        for f in &fns {
            for _ in 0..200 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let fd = finite_difference_gradient(f.as_ref(), &x, 1e-5).unwrap();
                let an = eval_gradient(f.as_ref(), &x).unwrap();
                for k in 0..3 {
                    assert_relative_eq!(fd[k], an[k], max_relative = 1e-5, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn finite_difference_quadratic_exactish() {
        let f = Quadratic::new(2, 1.0);
        let fd = finite_difference_gradient(&f, &[1.0, 0.0], 1e-5).unwrap();
        assert_abs_diff_eq!(fd[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fd[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn checked_calls_reject_bad_arguments() {
        let f = Quadratic::new(2, 1.0);
        assert_eq!(
            eval_objective(&f, &[1.0]),
            Err(ObjectiveError::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
        assert!(eval_gradient(&f, &[1.0, 2.0, 3.0]).is_err());
        assert_eq!(
            finite_difference_gradient(&f, &[1.0, 2.0], 0.0),
            Err(ObjectiveError::InvalidStep(0.0))
        );
        assert!(finite_difference_gradient(&f, &[1.0, 2.0], -1e-3).is_err());
    }

    #[test]
    fn rastrigin_curvature_stays_below_bound() {
        let f = ShiftedRastrigin::new(1);
        let l = f.smoothness_bound().unwrap();
        let mut rng = test_rng();
        let h = 1e-4;
        for _ in 0..2000 {
            let x = rng.gen_range(-8.0..8.0);
            let second =
                (f.eval(&[x + h]) - 2.0 * f.eval(&[x]) + f.eval(&[x - h])) / (h * h);
            assert!(
                second.abs() <= l + 1e-6,
                "second difference {second} exceeds smoothness bound {l} at x={x}"
            );
        }
    }

    #[test]
    fn double_well_critical_points() {
        let sym = DoubleWell::symmetric();
        let (l, r) = sym.minima();
        assert_relative_eq!(l, -1.0, max_relative = 1e-12);
        assert_relative_eq!(r, 1.0, max_relative = 1e-12);
        assert_abs_diff_eq!(sym.barrier(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(sym.known_optimum().unwrap(), -0.25, max_relative = 1e-12);

        let tilted = DoubleWell::tilted(0.05);
        let (l, r) = tilted.minima();
        // Gradient vanishes at all three critical points.
        for x in [l, r, tilted.barrier()] {
            let g = eval_gradient(&tilted, &[x]).unwrap();
            assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-12);
        }
        // Positive tilt lowers the left basin.
        assert_eq!(tilted.deeper_minimum(), l);
        assert!(tilted.eval(&[l]) < tilted.eval(&[r]));
        assert!(tilted.eval(&[tilted.barrier()]) > tilted.eval(&[r]));
    }

    #[test]
    fn fn_objective_uses_fallback_gradient() {
        let f = FnObjective::new(1, |x| 0.5 * x[0] * x[0] + 0.1 * x[0].cos())
            .with_smoothness_bound(1.1);
        let g = eval_gradient(&f, &[0.7]).unwrap();
        assert_relative_eq!(g[0], 0.7 - 0.1 * 0.7f64.sin(), max_relative = 1e-7);
        assert_eq!(f.smoothness_bound(), Some(1.1));
    }

    #[test]
    fn call_counter_counts() {
        let f = Quadratic::new(2, 1.0);
        let counted = CallCounter::new(&f);
        let mut g = [0.0; 2];
        counted.eval(&[1.0, 2.0]);
        counted.eval(&[1.0, 2.0]);
        counted.grad(&[1.0, 2.0], &mut g);
        assert_eq!(counted.evals(), 2);
        assert_eq!(counted.grads(), 1);
    }
}
