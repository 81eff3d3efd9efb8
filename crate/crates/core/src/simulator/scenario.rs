use std::sync::Arc;

use super::config::{DomainConfig, InitialConfig, LinearVelocityConfig, RunConfig, ScenarioKind};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{build_grid, CellMask, Domain, Grid, Rect, Segment};
use crate::models::{build_desired_field, eval_velocities, ModelSpec, PopulationModel, SpeedLaw};
use crate::nonlocal::{assemble_nonlocal, CouplingSpec};
use crate::transport::{
    InitialDatum, LinearContraction, LinearIBVP, RigidRotation, UniformVelocity, VelocityField,
};
use crate::{Error, Result, Vec2};

/// Time, step counter and one density per population.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub densities: Vec<ScalarField>,
}

/// Crowd model bound to its grid, with the kernels precomputed.
#[derive(Debug, Clone)]
pub struct CrowdScenario {
    pub domain: Domain,
    pub grid: Grid,
    pub mask: CellMask,
    pub model: ModelSpec,
    pub coupling: CouplingSpec,
}

#[derive(Debug, Clone)]
pub struct LinearScenario {
    pub problem: LinearIBVP,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Crowd(CrowdScenario),
    Linear(LinearScenario),
}

impl Scenario {
    pub fn grid(&self) -> &Grid {
        match self {
            Scenario::Crowd(c) => &c.grid,
            Scenario::Linear(l) => &l.problem.grid,
        }
    }

    pub fn mask(&self) -> &CellMask {
        match self {
            Scenario::Crowd(c) => &c.mask,
            Scenario::Linear(l) => &l.problem.mask,
        }
    }

    pub fn domain(&self) -> &Domain {
        match self {
            Scenario::Crowd(c) => &c.domain,
            Scenario::Linear(l) => &l.problem.domain,
        }
    }

    pub fn populations(&self) -> usize {
        match self {
            Scenario::Crowd(c) => c.model.n(),
            Scenario::Linear(_) => 1,
        }
    }

    /// Velocity of every population, frozen at the given densities.
    pub fn velocities(&self, t: f64, densities: &[ScalarField]) -> Result<Vec<VectorField>> {
        match self {
            Scenario::Crowd(c) => {
                let eval = assemble_nonlocal(densities, &c.coupling)?;
                eval_velocities(&c.model, &c.mask, &eval)
            }
            Scenario::Linear(l) => Ok(vec![l.problem.velocity_field(t)]),
        }
    }

    /// A bound on every speed the scenario can produce.
    pub fn speed_bound(&self) -> f64 {
        match self {
            Scenario::Crowd(c) => c.model.max_speed_bound(),
            Scenario::Linear(l) => l.problem.max_speed(),
        }
    }
}

fn rect(r: &[f64; 4]) -> Result<Rect> {
    Rect::new(r[0], r[1], r[2], r[3])
}

fn segment(s: &[f64; 4]) -> Segment {
    Segment::new(Vec2::new(s[0], s[1]), Vec2::new(s[2], s[3]))
}

pub fn build_domain(config: &DomainConfig) -> Result<Domain> {
    match config {
        DomainConfig::Rectangle {
            outer,
            obstacles,
            exits,
            interior_radius,
        } => Domain::rectangle(
            rect(outer)?,
            obstacles.iter().map(rect).collect::<Result<_>>()?,
            exits.iter().map(segment).collect(),
            *interior_radius,
        ),
        DomainConfig::Disc {
            center,
            radius,
            exits,
            interior_radius,
        } => Domain::disc(
            Vec2::new(center[0], center[1]),
            *radius,
            exits.iter().map(segment).collect(),
            *interior_radius,
        ),
    }
}

fn bump(center: [f64; 2], radius: f64, amplitude: f64) -> impl Fn(Vec2) -> f64 + Send + Sync {
    let c = Vec2::new(center[0], center[1]);
    move |p: Vec2| {
        let s = (p - c).norm_squared() / (radius * radius);
        if s < 1.0 {
            let q = 1.0 - s;
            amplitude * q * q * q
        } else {
            0.0
        }
    }
}

/// Cell-centered initial density; zero outside the interior.
pub fn initial_density(
    config: &InitialConfig,
    domain: &Domain,
    grid: &Grid,
    mask: &CellMask,
) -> Result<ScalarField> {
    let field = match config {
        InitialConfig::Zero => ScalarField::zeros(*grid),
        InitialConfig::Constant { value } => ScalarField::from_fn(*grid, mask, |_| *value),
        InitialConfig::Bump {
            center,
            radius,
            amplitude,
        } => {
            if !(*radius > 0.0) {
                return Err(Error::Config(format!("bump radius must be positive, got {radius}")));
            }
            ScalarField::from_fn(*grid, mask, bump(*center, *radius, *amplitude))
        }
        InitialConfig::RampY {
            low,
            high,
            reversed,
        } => {
            let (y_lo, y_hi) = interior_y_range(grid, mask);
            let span = y_hi - y_lo;
            ScalarField::from_fn(*grid, mask, |p| {
                let s = if span > 0.0 { (p.y - y_lo) / span } else { 0.0 };
                let s = if *reversed { 1.0 - s } else { s };
                low + (high - low) * s
            })
        }
        InitialConfig::Quadrants { counts } => {
            if counts.iter().any(|c| !(*c >= 0.0)) {
                return Err(Error::Config("quadrant counts must be non-negative".into()));
            }
            let bb = domain.bounding_box();
            let (xm, ym) = (0.5 * (bb.x_min + bb.x_max), 0.5 * (bb.y_min + bb.y_max));
            let area = 0.25 * bb.width() * bb.height();
            // Clockwise from the top left.
            let quadrant = |p: Vec2| match (p.x < xm, p.y >= ym) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            let raw = ScalarField::from_fn(*grid, mask, |p| counts[quadrant(p)] / area);
            let mass = raw.values().iter().sum::<f64>() * grid.cell_area();
            let people: f64 = counts.iter().sum();
            if mass > 0.0 {
                let scale = people / mass;
                let values = raw.values().iter().map(|v| v * scale).collect();
                ScalarField::new(*grid, values)?
            } else {
                raw
            }
        }
    };
    Ok(field)
}

fn interior_y_range(grid: &Grid, mask: &CellMask) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..grid.len() {
        if mask.is_interior(k) {
            let (i, j) = grid.coords(k);
            let y = grid.center(i, j).y;
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    (lo, hi)
}

fn linear_velocity(config: &LinearVelocityConfig) -> Arc<dyn VelocityField> {
    match config {
        LinearVelocityConfig::Rotation { center, omega } => Arc::new(RigidRotation {
            center: Vec2::new(center[0], center[1]),
            angular_speed: *omega,
        }),
        LinearVelocityConfig::Contraction { center, rate } => Arc::new(LinearContraction {
            center: Vec2::new(center[0], center[1]),
            rate: *rate,
        }),
        LinearVelocityConfig::Uniform { velocity } => {
            Arc::new(UniformVelocity(Vec2::new(velocity[0], velocity[1])))
        }
    }
}

/// Builds the scenario described by `config` and its initial state.
pub fn init_scenario(config: &RunConfig) -> Result<(Scenario, SimState)> {
    config.validate()?;
    let domain = build_domain(&config.domain)?;
    let h = config.numerics.h;
    let scenario = match config.scenario {
        ScenarioKind::CustomLinear => {
            let linear = config
                .linear
                .as_ref()
                .ok_or_else(|| Error::Config("missing [linear] table".into()))?;
            let velocity = linear_velocity(&linear.velocity);
            let initial = match &linear.initial {
                InitialConfig::Bump {
                    center,
                    radius,
                    amplitude,
                } => InitialDatum::Analytic(Arc::new(bump(*center, *radius, *amplitude))),
                InitialConfig::Constant { value } => {
                    let v = *value;
                    InitialDatum::Analytic(Arc::new(move |_| v))
                }
                InitialConfig::Zero => InitialDatum::Analytic(Arc::new(|_| 0.0)),
                other => {
                    let (grid, mask) = build_grid(&domain, h)?;
                    InitialDatum::Sampled(initial_density(other, &domain, &grid, &mask)?)
                }
            };
            let problem = LinearIBVP::new(domain, h, velocity, initial, config.numerics.t_final)?;
            Scenario::Linear(LinearScenario { problem })
        }
        ScenarioKind::Evacuation | ScenarioKind::Corridor => {
            let (grid, mask) = build_grid(&domain, h)?;
            let all_exits: Vec<Segment> = config.domain.exits().iter().map(segment).collect();
            let populations = config
                .populations
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let targets: Vec<Segment> = match &p.targets {
                        Some(t) => t.iter().map(|&e| all_exits[e]).collect(),
                        None => all_exits.clone(),
                    };
                    let desired = build_desired_field(
                        &grid,
                        &mask,
                        &targets,
                        p.discomfort.amplitude,
                        config.discomfort_range(i),
                    )?;
                    Ok(PopulationModel {
                        speed: SpeedLaw::new(p.speed_law.a, p.speed_law.b)?,
                        desired,
                        average_support: p.kernels.l1,
                        avoidance_supports: p.kernels.l2.clone(),
                        betas: p.betas.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let model = ModelSpec::new(config.numerics.kernel_family.into(), populations)?;
            let coupling = model.coupling(&grid, &mask, config.numerics.kernel_floor)?;
            Scenario::Crowd(CrowdScenario {
                domain,
                grid,
                mask,
                model,
                coupling,
            })
        }
    };
    let densities = match &scenario {
        Scenario::Linear(l) => vec![l.problem.initial_field()],
        Scenario::Crowd(c) => config
            .populations
            .iter()
            .map(|p| initial_density(&p.initial, &c.domain, &c.grid, &c.mask))
            .collect::<Result<Vec<_>>>()?,
    };
    let state = SimState {
        t: 0.0,
        step: 0,
        densities,
    };
    Ok((scenario, state))
}
