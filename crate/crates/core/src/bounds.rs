//! Closed-form spectral sandwich for the Dirichlet gap of the sub-Laplacian
//! on the unit homogeneous ball of an H-type group with layer dimensions
//! `(m, n)`: the lower bound is the Euclidean eigenvalue `lambda_1^(m)`, the
//! upper bound is the infimum over `x in (0, 1)` of
//! `f(x) = lambda_m / sqrt(1-x) + lambda_n sqrt(1-x) / (4x)`, attained at a
//! closed-form minimizer `x*`.

use serde::Serialize;
use thiserror::Error;

use crate::clifford::{admissible, hurwitz_radon};
use crate::eigen::{lambda1_euclidean, EigenError};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("objective argument x = {x} outside (0, 1)")]
    Domain { x: f64 },
    #[error("eigenvalue inputs must be positive, got ({lambda_m}, {lambda_n})")]
    NonpositiveEigenvalue { lambda_m: f64, lambda_n: f64 },
    #[error("pair (m={m}, n={n}) is not admissible: requires n < rho(m) = {rho}")]
    NotAdmissible { m: usize, n: usize, rho: usize },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Sandwich data for one `(m, n)`: the true gap is only ever represented by
/// the interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapBoundResult<F> {
    pub m: usize,
    pub n: usize,
    pub lambda_m: F,
    pub lambda_n: F,
    /// Eigenvalue ratio `lambda_n / lambda_m`.
    pub c: F,
    pub x_star: F,
    /// `lambda_m`.
    pub lower: F,
    /// `f(x_star)`.
    pub upper: F,
}

fn check_positive<F: Real>(lambda_m: F, lambda_n: F) -> Result<(), BoundsError> {
    if lambda_m > F::zero() && lambda_n > F::zero() {
        Ok(())
    } else {
        Err(BoundsError::NonpositiveEigenvalue {
            lambda_m: lambda_m.to_f64_lossy(),
            lambda_n: lambda_n.to_f64_lossy(),
        })
    }
}

/// Objective `f(x) = lambda_m (1-x)^(-1/2) + lambda_n (1-x)^(1/2) / (4x)`
/// on `0 < x < 1`.
pub fn f_objective<F: Real>(lambda_m: F, lambda_n: F, x: F) -> Result<F, BoundsError> {
    check_positive(lambda_m, lambda_n)?;
    if x.is_nan() || x <= F::zero() || x >= F::one() {
        return Err(BoundsError::Domain {
            x: x.to_f64_lossy(),
        });
    }
    let one_minus = F::one() - x;
    Ok(lambda_m / one_minus.sqrt() + lambda_n * one_minus.sqrt() / (F::of(4.0) * x))
}

/// Closed-form minimizer
/// `x* = (sqrt(lambda_n^2 + 32 lambda_n lambda_m) - 3 lambda_n) / (2 (4 lambda_m - lambda_n))`.
///
/// When `|4 lambda_m - lambda_n|` is below `1e-12` the quadratic stationarity
/// condition degenerates to the linear one, whose root is exactly `2/3`; that
/// value is returned instead of evaluating the ill-conditioned closed form.
pub fn x_star<F: Real>(lambda_m: F, lambda_n: F) -> Result<F, BoundsError> {
    check_positive(lambda_m, lambda_n)?;
    let denom = F::of(4.0) * lambda_m - lambda_n;
    if denom.abs() < F::of(1e-12) {
        return Ok(F::of(2.0) / F::of(3.0));
    }
    let disc = (lambda_n * lambda_n + F::of(32.0) * lambda_n * lambda_m).sqrt();
    Ok((disc - F::of(3.0) * lambda_n) / (F::of(2.0) * denom))
}

/// Upper bound `c(lambda_m, lambda_n) = f(x*) = inf_(0<x<1) f(x)`.
pub fn upper_bound<F: Real>(lambda_m: F, lambda_n: F) -> Result<F, BoundsError> {
    let xs = x_star(lambda_m, lambda_n)?;
    f_objective(lambda_m, lambda_n, xs)
}

/// Assembles the full sandwich for an admissible `(m, n)`, with both
/// eigenvalues computed from the Bessel-zero reduction (never from the
/// displayed large-`d` asymptotic expression).
pub fn gap_bounds<F: Real>(m: usize, n: usize) -> Result<GapBoundResult<F>, BoundsError> {
    if !admissible(m, n) {
        return Err(BoundsError::NotAdmissible {
            m,
            n,
            rho: hurwitz_radon(m),
        });
    }
    let lambda_m = lambda1_euclidean::<F>(m)?;
    let lambda_n = lambda1_euclidean::<F>(n)?;
    let xs = x_star(lambda_m, lambda_n)?;
    let upper = f_objective(lambda_m, lambda_n, xs)?;
    Ok(GapBoundResult {
        m,
        n,
        lambda_m,
        lambda_n,
        c: lambda_n / lambda_m,
        x_star: xs,
        lower: lambda_m,
        upper,
    })
}

/// One row of the large-`m` ratio table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioRow<F> {
    pub m: usize,
    pub n: usize,
    pub lambda_m: F,
    pub lambda_n: F,
    pub c: F,
    pub x_star: F,
    pub lower: F,
    pub upper: F,
    /// `upper / lambda_m >= 1`; tends to 1 as `m` grows.
    pub ratio: F,
}

/// Ratio `upper(m, n) / lambda_1^(m)` for each `m` in the list.
pub fn ratio_asymptotics<F: Real>(
    m_list: &[usize],
    n: usize,
) -> Result<Vec<RatioRow<F>>, BoundsError> {
    m_list
        .iter()
        .map(|&m| {
            let b = gap_bounds::<F>(m, n)?;
            Ok(RatioRow {
                m,
                n,
                lambda_m: b.lambda_m,
                lambda_n: b.lambda_n,
                c: b.c,
                x_star: b.x_star,
                lower: b.lower,
                upper: b.upper,
                ratio: b.upper / b.lambda_m,
            })
        })
        .collect()
}
