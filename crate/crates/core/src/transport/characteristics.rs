//! Exact solution of the linear problem along backward characteristics.
//!
//! For an interior point `x` at time `t`, the characteristic `ẋ = u(τ, x)`
//! through `(t, x)` is integrated backward with RK4. If it reaches `τ = 0`
//! inside Ω, then `r(t, x) = r₀(X(0)) · exp(−∫₀ᵗ div u(τ, X(τ)) dτ)`; if it
//! leaves Ω first, the value comes from the zero boundary datum.

use rayon::prelude::*;

use super::{LinearIBVP, VelocityField};
use crate::field::ScalarField;
use crate::geometry::Domain;
use crate::{Error, Result, Vec2};

/// Maximum number of RK4 steps per characteristic.
pub const STEP_CAP: usize = 1_000_000;

/// Relative resolution of the boundary-crossing bisection, as a fraction of
/// one step.
const CROSSING_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Origin {
    /// The characteristic reaches `τ = 0` inside Ω.
    InitialData,
    /// The characteristic enters Ω through the boundary at time `tau`.
    Boundary { tau: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPath {
    /// `(τ, X(τ))`, from `τ = t` backward.
    pub samples: Vec<(f64, Vec2)>,
    /// `∫ div u(τ, X(τ)) dτ` over the traced part of the path.
    pub divergence_integral: f64,
    pub origin: Origin,
}

impl CharacteristicPath {
    /// The last traced point: `X(0)` or the boundary entry point.
    pub fn foot(&self) -> Vec2 {
        self.samples.last().map(|s| s.1).unwrap_or(Vec2::ZERO)
    }
}

/// `δτ = min(h / (2 max|u|), t / 32)`.
pub fn default_step(problem: &LinearIBVP, t: f64) -> f64 {
    let speed = problem.max_speed();
    let by_time = t / 32.0;
    if speed > 0.0 {
        (problem.grid.h() / (2.0 * speed)).min(by_time)
    } else {
        by_time
    }
}

pub fn trace_characteristic(problem: &LinearIBVP, t: f64, x: Vec2) -> Result<CharacteristicPath> {
    let step = default_step(problem, t);
    trace_characteristic_with_step(problem, t, x, step)
}

pub fn trace_characteristic_with_step(
    problem: &LinearIBVP,
    t: f64,
    x: Vec2,
    step: f64,
) -> Result<CharacteristicPath> {
    trace(problem.velocity.as_ref(), &problem.domain, t, x, step)
}

/// One backward RK4 step of length `delta` for the augmented state
/// `(X, ∫div u)`, starting at time `tau`.
fn rk4_backward(u: &dyn VelocityField, tau: f64, x: Vec2, delta: f64) -> (Vec2, f64) {
    let h = -delta;
    let f = |s: f64, p: Vec2| (u.velocity(s, p), u.divergence(s, p));
    let (k1, d1) = f(tau, x);
    let (k2, d2) = f(tau + 0.5 * h, x + k1 * (0.5 * h));
    let (k3, d3) = f(tau + 0.5 * h, x + k2 * (0.5 * h));
    let (k4, d4) = f(tau + h, x + k3 * h);
    let dx = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let di = (d1 + 2.0 * d2 + 2.0 * d3 + d4) * (h / 6.0);
    (x + dx, di)
}

fn trace(
    u: &dyn VelocityField,
    domain: &Domain,
    t: f64,
    x: Vec2,
    step: f64,
) -> Result<CharacteristicPath> {
    if !domain.inside(x) {
        return Err(Error::OutsideDomain { x: x.x, y: x.y });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    let mut samples = vec![(t, x)];
    if t == 0.0 {
        return Ok(CharacteristicPath {
            samples,
            divergence_integral: 0.0,
            origin: Origin::InitialData,
        });
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let n = (t / step * (1.0 - 1e-12)).ceil().max(1.0);
    if n > STEP_CAP as f64 {
        return Err(Error::StepCap { cap: STEP_CAP });
    }
    let n = n as usize;
    let delta = t / n as f64;

    // Backward accumulation of ∫ div u: `integral` holds ∫_τ^t div u.
    let mut integral = 0.0;
    let mut pos = x;
    for k in 0..n {
        let tau = t - k as f64 * delta;
        let (next, di) = rk4_backward(u, tau, pos, delta);
        if !next.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "characteristic through ({}, {}) diverged",
                x.x, x.y
            )));
        }
        if !domain.inside(next) {
            // Bisect on the fraction of the step at which the path leaves Ω.
            let (mut lo, mut hi) = (0.0, 1.0);
            while hi - lo > CROSSING_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                if domain.inside(rk4_backward(u, tau, pos, mid * delta).0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (entry, di) = rk4_backward(u, tau, pos, hi * delta);
            samples.push((tau - hi * delta, entry));
            return Ok(CharacteristicPath {
                samples,
                divergence_integral: integral - di,
                origin: Origin::Boundary {
                    tau: tau - hi * delta,
                },
            });
        }
        integral -= di;
        pos = next;
        let tau_next = if k + 1 == n { 0.0 } else { tau - delta };
        samples.push((tau_next, pos));
    }
    Ok(CharacteristicPath {
        samples,
        divergence_integral: integral,
        origin: Origin::InitialData,
    })
}

/// Exact solution at time `t` on the interior cell centers, with the
/// default step.
pub fn exact_solution(problem: &LinearIBVP, t: f64) -> Result<ScalarField> {
    exact_solution_with_step(problem, t, None)
}

pub fn exact_solution_with_step(
    problem: &LinearIBVP,
    t: f64,
    step: Option<f64>,
) -> Result<ScalarField> {
    let step = step.unwrap_or_else(|| default_step(problem, t));
    let grid = problem.grid;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !problem.mask.is_interior(k) {
                return Ok(0.0);
            }
            let (i, j) = grid.coords(k);
            let path = trace_characteristic_with_step(problem, t, grid.center(i, j), step)?;
            Ok(match path.origin {
                Origin::InitialData => {
                    problem.initial_value(path.foot()) * (-path.divergence_integral).exp()
                }
                Origin::Boundary { .. } => 0.0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::new(grid, values)
}
