//! The frozen-coefficient linear problem
//!
//! ```text
//! ∂t r + div(r u(t, x)) = 0   in Ω,     r(0) = r₀,     r = 0 on the inflow boundary,
//! ```
//!
//! solved exactly along characteristics ([`exact_solution`]) and
//! approximately by a Lax–Friedrichs finite-volume step ([`lf_step`]).

mod characteristics;
mod diagnostics;
mod lax_friedrichs;
mod velocity;

pub use characteristics::{
    default_step, exact_solution, exact_solution_with_step, trace_characteristic,
    trace_characteristic_with_step, CharacteristicPath, Origin, STEP_CAP,
};
pub use diagnostics::{discrete_diagnostics, discrete_divergence, Diagnostics};
pub use lax_friedrichs::{cfl_dt, lf_step, lf_step_with_fluxes, LfOutcome, CFL_EPSILON};
pub use velocity::{
    LinearContraction, RigidRotation, UniformVelocity, VelocityField, ZeroVelocity,
};

use std::fmt;
use std::sync::Arc;

use crate::field::{ScalarField, VectorField};
use crate::geometry::{build_grid, CellMask, Domain, Grid};
use crate::{Error, Result, Vec2};

/// Initial datum of a linear problem.
#[derive(Clone)]
pub enum InitialDatum {
    /// Cell-centered samples, read back through a mask-aware bilinear
    /// interpolant.
    Sampled(ScalarField),
    Analytic(Arc<dyn Fn(Vec2) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Sampled(field) => f.debug_tuple("Sampled").field(field.grid()).finish(),
            InitialDatum::Analytic(_) => f.write_str("Analytic(..)"),
        }
    }
}

/// A linear initial-boundary value problem on a gridded domain.
#[derive(Debug, Clone)]
pub struct LinearIBVP {
    pub velocity: Arc<dyn VelocityField>,
    pub initial: InitialDatum,
    pub domain: Domain,
    pub grid: Grid,
    pub mask: CellMask,
    pub horizon: f64,
}

impl LinearIBVP {
    pub fn new(
        domain: Domain,
        h: f64,
        velocity: Arc<dyn VelocityField>,
        initial: InitialDatum,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        let (grid, mask) = build_grid(&domain, h)?;
        if let InitialDatum::Sampled(field) = &initial {
            if *field.grid() != grid {
                return Err(Error::ShapeMismatch);
            }
        }
        Ok(LinearIBVP {
            velocity,
            initial,
            domain,
            grid,
            mask,
            horizon,
        })
    }

    /// `r₀` at an arbitrary point.
    pub fn initial_value(&self, p: Vec2) -> f64 {
        match &self.initial {
            InitialDatum::Analytic(f) => f(p),
            InitialDatum::Sampled(field) => interpolate(field, &self.mask, p),
        }
    }

    /// `r₀` at the interior cell centers.
    pub fn initial_field(&self) -> ScalarField {
        match &self.initial {
            InitialDatum::Sampled(field) => {
                let mut out = field.clone();
                out.apply_mask(&self.mask);
                out
            }
            InitialDatum::Analytic(f) => ScalarField::from_fn(self.grid, &self.mask, |p| f(p)),
        }
    }

    /// `u(t, ·)` at the interior cell centers.
    pub fn velocity_field(&self, t: f64) -> VectorField {
        VectorField::from_fn(self.grid, &self.mask, |p| self.velocity.velocity(t, p))
    }

    /// Largest speed sampled at cell centers at the start, middle and end of
    /// the horizon.
    pub fn max_speed(&self) -> f64 {
        [0.0, 0.5 * self.horizon, self.horizon]
            .iter()
            .map(|&t| self.velocity_field(t).max_norm())
            .fold(0.0, f64::max)
    }
}

/// Bilinear interpolation of cell-centered data that only uses interior
/// cells, renormalizing the weights of the corners it keeps. Falls back to
/// the containing cell when no corner carries weight.
pub fn interpolate(field: &ScalarField, mask: &CellMask, p: Vec2) -> f64 {
    let g = field.grid();
    let fx = (p.x - g.origin.x) / g.dx - 0.5;
    let fy = (p.y - g.origin.y) / g.dy - 0.5;
    let (i0, j0) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - i0, fy - j0);
    let (i0, j0) = (i0 as i64, j0 as i64);
    let mut num = 0.0;
    let mut den = 0.0;
    for (di, wx) in [(0, 1.0 - tx), (1, tx)] {
        for (dj, wy) in [(0, 1.0 - ty), (1, ty)] {
            let (i, j) = (i0 + di, j0 + dj);
            if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
                continue;
            }
            let k = g.index(i as usize, j as usize);
            if !mask.is_interior(k) {
                continue;
            }
            let w = wx * wy;
            num += w * field.values()[k];
            den += w;
        }
    }
    if den > 0.0 {
        return num / den;
    }
    match g.locate(p) {
        Some((i, j)) if mask.is_interior(g.index(i, j)) => field.get(i, j),
        _ => 0.0,
    }
}
