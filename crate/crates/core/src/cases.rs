//! Closed-form oracles for the four benchmark cases, plus builders that
//! materialize their problem data on a grid. Oracle values are hand-coded
//! from the closed forms and never computed by the modules under test; the
//! normal distribution here uses its own series-based erf, independent of
//! the chi-distribution route in `gaussian`.

use crate::error::{CoreError, Result};
use crate::pde::{ControlField, Grid, ObjectiveSpec, ProblemData};

/// Benchmark case identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseId {
    /// Trig instance on (0, 2pi)^2 whose restricted probability curve is
    /// Phi(1 - |tau|): smooth data, nonsmooth probability.
    SquareSine,
    /// Polynomial instance on (0,1)^2 with known optimal control zero,
    /// known gradient factor, and known multiplier.
    UnitSquare,
    /// Scalar chance constraint with triangular density and closed-form
    /// solution/multiplier for every level.
    ScalarDensity,
    /// 1D instance with a source discontinuous in the parameter:
    /// almost-surely feasible at zero control, robustly infeasible.
    Discontinuous,
}

impl CaseId {
    pub fn parse(s: &str) -> Option<CaseId> {
        match s {
            "square_sine" => Some(CaseId::SquareSine),
            "unit_square" => Some(CaseId::UnitSquare),
            "scalar_density" => Some(CaseId::ScalarDensity),
            "discontinuous" => Some(CaseId::Discontinuous),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseId::SquareSine => "square_sine",
            CaseId::UnitSquare => "unit_square",
            CaseId::ScalarDensity => "scalar_density",
            CaseId::Discontinuous => "discontinuous",
        }
    }
}

/// Grid/resolution parameters for reproducing a case.
#[derive(Clone, Debug)]
pub struct CaseSpec {
    pub id: CaseId,
    /// Mesh intervals per axis; kept a multiple of 4 so the distinguished
    /// points (centers, quarter points) are exact nodes.
    pub intervals: usize,
}

impl CaseSpec {
    pub fn new(id: CaseId, intervals: usize) -> Result<Self> {
        if intervals < 4 || intervals % 4 != 0 {
            return Err(CoreError::Invalid(format!(
                "case grids use a positive multiple of 4 intervals, got {intervals}"
            )));
        }
        Ok(CaseSpec { id, intervals })
    }
}

// ---------------------------------------------------------------------------
// Standard normal helpers (series erf; accurate to ~1e-13 for |x| <= 6).

/// Standard normal CDF.
pub fn norm_cdf(t: f64) -> f64 {
    0.5 * (1.0 + erf_series(t / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn norm_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn erf_series(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_series(-x);
    }
    if x > 6.0 {
        return 1.0;
    }
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^{2n+1} / (n! (2n+1))
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Chi density with one degree of freedom at t: sqrt(2/pi) e^{-t^2/2}.
fn chi1_pdf(t: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * t * t).exp()
}

// ---------------------------------------------------------------------------
// Oracles.

/// Restricted probability curve of the square_sine case and its one-sided
/// slopes at zero: value Phi(1 - |tau|), slopes (+pdf(1), -pdf(1)).
pub fn oracle_square_sine(tau: f64) -> Result<(f64, (f64, f64))> {
    if tau.abs() >= 1.0 {
        return Err(CoreError::Invalid(format!("tau must satisfy |tau| < 1, got {tau}")));
    }
    let value = norm_cdf(1.0 - tau.abs());
    let f1 = norm_pdf(1.0);
    Ok((value, (f1, -f1)))
}

/// Constants of the unit_square case.
#[derive(Clone, Debug)]
pub struct UnitSquareOracle {
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// Physical coordinates of the unique active point.
    pub active: (f64, f64),
    /// The probability gradient is `grad_factor` times the evaluation
    /// representer at the active point.
    pub grad_factor: f64,
    /// Probability of the zero control; also the constraint level.
    pub p: f64,
    /// Multiplier magnitude in the convention with a leading minus on the
    /// spherical integral: 1 / (4 chi(1)).
    pub lambda: f64,
}

pub fn oracle_unit_square() -> UnitSquareOracle {
    let chi1 = chi1_pdf(1.0);
    UnitSquareOracle {
        rho_plus: 1.0,
        rho_minus: f64::INFINITY,
        active: (0.5, 0.5),
        grad_factor: -8.0 * chi1,
        p: norm_cdf(1.0),
        lambda: 1.0 / (4.0 * chi1),
    }
}

/// Closed forms of the scalar_density case at level p.
#[derive(Clone, Debug)]
pub struct ScalarOracle {
    pub u_star: f64,
    pub lambda: f64,
}

pub fn oracle_scalar(p: f64) -> Result<ScalarOracle> {
    if !(0.0 < p && p < 1.0) {
        return Err(CoreError::BadProbabilityLevel { p });
    }
    Ok(ScalarOracle { u_star: 1.0 - (1.0 - p).sqrt(), lambda: 1.0 / (2.0 * (1.0 - p).sqrt()) })
}

/// Probability curve of the scalar case: 2u - u^2 on [0,1], clamped outside.
pub fn oracle_scalar_phi(u: f64) -> f64 {
    if u < 0.0 {
        0.0
    } else if u > 1.0 {
        1.0
    } else {
        2.0 * u - u * u
    }
}

/// Constants of the discontinuous case.
#[derive(Clone, Debug)]
pub struct DiscontinuousOracle {
    pub as_feasible_at_zero: bool,
    pub robust_feasible_at_zero: bool,
    pub witness: (f64, f64),
    pub witness_value: f64,
}

pub fn oracle_discontinuous() -> DiscontinuousOracle {
    DiscontinuousOracle {
        as_feasible_at_zero: true,
        robust_feasible_at_zero: false,
        witness: (0.5, 0.5),
        witness_value: 1.25,
    }
}

// ---------------------------------------------------------------------------
// Case data builders.

/// unit_square: D = (0,1)^2, alpha = 1/16, one basis load whose solution is
/// x(1-x)y(1-y), unit variance, level Phi(1), and an objective tracking the
/// center representer.
pub fn unit_square_data(spec: &CaseSpec) -> Result<ProblemData> {
    let n = spec.intervals + 1;
    let grid = Grid::rectangle(n, n, (0.0, 1.0), (0.0, 1.0))?;
    let phi = ControlField::from_fn(&grid, |x, y| 2.0 * (x * (1.0 - x) + y * (1.0 - y)));
    let center = grid.nearest_node(0.5, 0.5);
    ProblemData::new(
        grid.clone(),
        ControlField::zeros(&grid),
        vec![phi],
        1.0 / 16.0,
        vec![1.0],
        norm_cdf(1.0),
        ObjectiveSpec::AffineTracking { node: center },
    )
}

/// square_sine: D = (0, 2pi)^2, alpha = 1, basis load with solution
/// sin^2(x) sin^2(y), unit variance. The probability level is only used by
/// solver paths; evaluations ignore it.
pub fn square_sine_data(spec: &CaseSpec) -> Result<ProblemData> {
    let n = spec.intervals + 1;
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = Grid::rectangle(n, n, (0.0, two_pi), (0.0, two_pi))?;
    let phi = ControlField::from_fn(&grid, |x, y| {
        let (sx, cx) = x.sin_cos();
        let (sy, cy) = y.sin_cos();
        2.0 * sx * sx * (sy * sy - cy * cy) + 2.0 * sy * sy * (sx * sx - cx * cx)
    });
    ProblemData::new(
        grid.clone(),
        ControlField::zeros(&grid),
        vec![phi],
        1.0,
        vec![1.0],
        0.5,
        ObjectiveSpec::Tikhonov,
    )
}

/// Control 2 tau sin(x) sin(y) restricting the square_sine probability to a
/// line through zero.
pub fn square_sine_control(grid: &Grid, tau: f64) -> ControlField {
    ControlField::from_fn(grid, |x, y| 2.0 * tau * x.sin() * y.sin())
}

/// discontinuous: D = (0,1), source 2 f(z) with f = 4 away from z = 0.5 and
/// 5 at it, threshold 1. Returns the interior right-hand side per parameter.
pub fn discontinuous_rhs(grid: &Grid) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    let n = grid.num_interior();
    move |z: &[f64]| {
        let f = if z[0] == 0.5 { 5.0 } else { 4.0 };
        vec![2.0 * f; n]
    }
}

/// Scalar violation functional of the discontinuous case at zero control:
/// h(z) = max_x y(x, z) - 1 = f(z)/4 - 1.
pub fn discontinuous_h(z: &[f64]) -> f64 {
    let f = if z[0] == 0.5 { 5.0 } else { 4.0 };
    f / 4.0 - 1.0
}
