//! Uniform 1-D grids and trapezoid quadrature shared by the stationarity
//! diagnostics.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid must contain at least two points, got {0}")]
    TooShort(usize),
    #[error("grid must be strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("grid must be uniform: spacing at index {index} is {found}, expected {expected}")]
    NotUniform {
        index: usize,
        found: f64,
        expected: f64,
    },
    #[error("grid point at index {0} is not finite")]
    NotFinite(usize),
    #[error(
        "density at grid boundary is not negligible (ratio {ratio:.3e} >= 1e-12); \
         widen the grid so exp(-beta*F) decays below 1e-12 of its maximum"
    )]
    BoundaryMass { ratio: f64 },
}

/// Relative spacing slack tolerated before a grid is rejected as non-uniform.
const UNIFORMITY_TOL: f64 = 1e-9;

/// Evenly spaced points on [lo, hi], endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two points");
    assert!(hi > lo, "grid bounds must satisfy hi > lo");
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Validates uniform spacing and returns it.
pub fn validate_uniform(grid: &[f64]) -> Result<f64, GridError> {
    if grid.len() < 2 {
        return Err(GridError::TooShort(grid.len()));
    }
    for (i, &x) in grid.iter().enumerate() {
        if !x.is_finite() {
            return Err(GridError::NotFinite(i));
        }
    }
    let spacing = grid[1] - grid[0];
    if spacing <= 0.0 {
        return Err(GridError::NotIncreasing(1));
    }
    for i in 1..grid.len() {
        let d = grid[i] - grid[i - 1];
        if d <= 0.0 {
            return Err(GridError::NotIncreasing(i));
        }
        if (d - spacing).abs() > UNIFORMITY_TOL * spacing.abs() {
            return Err(GridError::NotUniform {
                index: i,
                found: d,
                expected: spacing,
            });
        }
    }
    Ok(spacing)
}

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    debug_assert!(values.len() >= 2);
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    spacing * (interior + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Rejects grids whose endpoints still carry non-negligible Gibbs mass.
///
/// Truncating a density whose boundary values exceed 1e-12 of its peak biases
/// the quadrature-based checks, so such grids are an error rather than a
/// silent inaccuracy.
pub fn check_boundary_negligible(weights: &[f64]) -> Result<(), GridError> {
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max > 0.0);
    let edge = weights[0].max(weights[weights.len() - 1]);
    let ratio = edge / max;
    if ratio >= 1e-12 {
        return Err(GridError::BoundaryMass { ratio });
    }
    Ok(())
}
