use super::config::{NumericsConfig, RunConfig};
use super::scenario::{init_scenario, Scenario, SimState};
use crate::field::ScalarField;
use crate::transport::{cfl_dt, discrete_diagnostics, discrete_divergence, lf_step_with_fluxes};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub cfl: f64,
    pub theta: f64,
    /// Use this step instead of the CFL-limited one.
    pub fixed_dt: Option<f64>,
}

impl StepOptions {
    pub fn from_numerics(n: &NumericsConfig) -> Self {
        StepOptions {
            cfl: n.cfl,
            theta: n.theta,
            fixed_dt: None,
        }
    }
}

/// What one step did, per population.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub exit_outflux: Vec<f64>,
    pub wall_flux: Vec<f64>,
    /// Largest face-based `|div u|` over populations and cells.
    pub max_divergence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PopulationRecord {
    pub mass: f64,
    pub sup: f64,
    pub min: f64,
    pub tv: f64,
    /// Mass that left through exits since the start.
    pub outflux: f64,
    /// Mass carried across walls since the start; zero by construction.
    pub wall_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    /// Step that led here; zero for the initial record.
    pub dt: f64,
    pub max_divergence: f64,
    pub populations: Vec<PopulationRecord>,
}

/// Advances every population by one step with velocities frozen at the
/// current densities. The step is shortened so as not to pass `t_limit`.
pub fn step(
    scenario: &Scenario,
    state: &SimState,
    options: &StepOptions,
    t_limit: Option<f64>,
) -> Result<(SimState, StepReport)> {
    let grid = scenario.grid();
    let mask = scenario.mask();
    let next_step = state.step + 1;
    let velocities = scenario.velocities(state.t, &state.densities)?;
    for (i, u) in velocities.iter().enumerate() {
        if !u.is_finite() {
            return Err(Error::NonFinite {
                step: next_step,
                population: i,
            });
        }
    }
    let mut dt = match options.fixed_dt {
        Some(dt) => dt,
        None => velocities
            .iter()
            .map(|u| cfl_dt(u, grid, options.cfl))
            .fold(f64::INFINITY, f64::min),
    };
    let mut t_next = state.t + dt;
    if let Some(limit) = t_limit {
        // Snap to the limit rather than leaving a sliver of a step behind.
        if t_next >= limit - 1e-12 * limit.abs().max(1.0) {
            dt = limit - state.t;
            t_next = limit;
        }
    }
    let max_divergence = velocities
        .iter()
        .map(|u| discrete_divergence(u, mask).sup_norm())
        .fold(0.0, f64::max);

    let mut densities = Vec::with_capacity(velocities.len());
    let mut exit_outflux = Vec::with_capacity(velocities.len());
    let mut wall_flux = Vec::with_capacity(velocities.len());
    for (i, (rho, u)) in state.densities.iter().zip(&velocities).enumerate() {
        let out = lf_step_with_fluxes(rho, u, dt, grid, mask, options.theta)?;
        if !out.density.is_finite() {
            return Err(Error::NonFinite {
                step: next_step,
                population: i,
            });
        }
        densities.push(out.density);
        exit_outflux.push(out.exit_outflux);
        wall_flux.push(out.wall_flux);
    }
    Ok((
        SimState {
            t: t_next,
            step: next_step,
            densities,
        },
        StepReport {
            dt,
            exit_outflux,
            wall_flux,
            max_divergence,
        },
    ))
}

/// A scenario together with its evolving state and diagnostics series.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    state: SimState,
    options: StepOptions,
    series: Vec<DiagnosticsRecord>,
}

impl Simulation {
    pub fn new(scenario: Scenario, state: SimState, options: StepOptions) -> Self {
        let populations = state
            .densities
            .iter()
            .map(|rho| record(rho, &scenario, 0.0, 0.0))
            .collect();
        let first = DiagnosticsRecord {
            t: state.t,
            step: state.step,
            dt: 0.0,
            max_divergence: 0.0,
            populations,
        };
        Simulation {
            scenario,
            state,
            options,
            series: vec![first],
        }
    }

    pub fn from_config(config: &RunConfig) -> Result<Self> {
        let (scenario, state) = init_scenario(config)?;
        Ok(Self::new(scenario, state, StepOptions::from_numerics(&config.numerics)))
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn options(&self) -> &StepOptions {
        &self.options
    }

    pub fn set_options(&mut self, options: StepOptions) {
        self.options = options;
    }

    pub fn series(&self) -> &[DiagnosticsRecord] {
        &self.series
    }

    pub fn last_record(&self) -> &DiagnosticsRecord {
        self.series.last().expect("series starts with the initial record")
    }

    pub fn step(&mut self, t_limit: Option<f64>) -> Result<StepReport> {
        let (next, report) = step(&self.scenario, &self.state, &self.options, t_limit)?;
        let previous = self.last_record();
        let populations = next
            .densities
            .iter()
            .enumerate()
            .map(|(i, rho)| {
                let before = previous.populations[i];
                record(
                    rho,
                    &self.scenario,
                    before.outflux + report.exit_outflux[i],
                    before.wall_flux + report.wall_flux[i],
                )
            })
            .collect();
        self.series.push(DiagnosticsRecord {
            t: next.t,
            step: next.step,
            dt: report.dt,
            max_divergence: report.max_divergence,
            populations,
        });
        self.state = next;
        Ok(report)
    }

    /// Steps until `t_end`, the last step landing on it exactly.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut on_step: impl FnMut(&Simulation) -> Result<()>,
    ) -> Result<()> {
        let eps = 1e-12 * t_end.abs().max(1.0);
        while self.state.t < t_end - eps {
            self.step(Some(t_end))?;
            on_step(self)?;
        }
        Ok(())
    }
}

fn record(rho: &ScalarField, scenario: &Scenario, outflux: f64, wall_flux: f64) -> PopulationRecord {
    let d = discrete_diagnostics(rho, scenario.mask());
    PopulationRecord {
        mass: d.mass,
        sup: d.sup_norm,
        min: rho.min(),
        tv: d.total_variation,
        outflux,
        wall_flux,
    }
}

/// Densities of every population at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub densities: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub series: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
}

/// Runs `config` to its final time, taking snapshots at the configured
/// times and cadence (plus the initial and final states).
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let mut sim = Simulation::from_config(config)?;
    let t_final = config.numerics.t_final;
    let mut stops: Vec<f64> = config
        .output
        .times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_final)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(t_final);

    let snapshot = |sim: &Simulation| Snapshot {
        t: sim.state.t,
        step: sim.state.step,
        densities: sim.state.densities.clone(),
    };
    let mut snapshots = vec![snapshot(&sim)];
    let cadence = config.output.cadence;
    for stop in stops {
        sim.run_until(stop, |s| {
            if cadence > 0 && s.state.step % cadence == 0 {
                snapshots.push(snapshot(s));
            }
            Ok(())
        })?;
        if snapshots.last().map(|s| s.step) != Some(sim.state.step) {
            snapshots.push(snapshot(&sim));
        }
    }
    Ok(RunOutput {
        series: sim.series,
        snapshots,
        final_state: sim.state,
        scenario: sim.scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::models::{DesiredField, ModelSpec, SpeedLaw};
    use crate::simulator::config::{corridor_eq20, room_eq25};
    use crate::simulator::scenario::CrowdScenario;
    use crate::transport::lf_step;
    use crate::Vec2;

    fn desk_room() -> RunConfig {
        let mut c = room_eq25();
        c.numerics.h = 0.125;
        c.numerics.t_final = 1.0;
        c.output.times.clear();
        c
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let mut config = desk_room();
        config.populations[0].initial = crate::simulator::config::InitialConfig::Zero;
        let mut sim = Simulation::from_config(&config).unwrap();
        let before = sim.state().clone();
        let report = sim.step(None).unwrap();
        assert!(report.dt.is_finite() && report.dt > 0.0);
        assert_eq!(sim.state().densities, before.densities);
    }

    #[test]
    fn pure_advection_matches_a_direct_step() {
        let config = desk_room();
        let (scenario, state) = init_scenario(&config).unwrap();
        let Scenario::Crowd(crowd) = scenario else {
            panic!("crowd scenario expected")
        };
        let w = VectorField::from_fn(crowd.grid, &crowd.mask, |_| Vec2::new(0.7, -0.2));
        // With a huge capacity the speed factor is exactly 1.
        let mut population = crowd.model.populations[0].clone();
        population.desired = DesiredField::prescribed(w.clone());
        population.betas = vec![0.0];
        population.speed = SpeedLaw::new(1.0, 1e300).unwrap();
        let model = ModelSpec::new(crowd.model.family, vec![population]).unwrap();
        let coupling = model.coupling(&crowd.grid, &crowd.mask, 4.0).unwrap();
        let scenario = Scenario::Crowd(CrowdScenario {
            model,
            coupling,
            ..crowd
        });
        let options = StepOptions {
            cfl: 0.5,
            theta: 1.0,
            fixed_dt: None,
        };
        let (next, report) = step(&scenario, &state, &options, None).unwrap();
        let direct = lf_step(&state.densities[0], &w, report.dt, scenario.grid(), scenario.mask(), 1.0).unwrap();
        assert_eq!(next.densities[0], direct);
    }

    #[test]
    fn ledger_balances_every_step() {
        let mut config = corridor_eq20();
        config.numerics.h = 0.125;
        config.numerics.kernel_floor = 1.5;
        config.numerics.t_final = 1.0;
        config.output.times.clear();
        let mut sim = Simulation::from_config(&config).unwrap();
        sim.run_until(1.0, |_| Ok(())).unwrap();
        assert_eq!(sim.state().t, 1.0);
        let series = sim.series();
        for pair in series.windows(2) {
            for i in 0..2 {
                let (a, b) = (pair[0].populations[i], pair[1].populations[i]);
                let spent = b.outflux - a.outflux;
                assert!(((a.mass - b.mass) - spent).abs() <= 1e-10 * a.mass);
                assert_eq!(b.wall_flux, 0.0);
                assert!(b.min >= -1e-12);
            }
        }
    }

    #[test]
    fn run_lands_on_snapshot_times() {
        let mut config = desk_room();
        config.output.times = vec![0.25, 0.5];
        config.output.cadence = 0;
        let out = run(&config).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(out.series.last().unwrap().t, 1.0);
        let m: Vec<f64> = out.series.iter().map(|r| r.populations[0].mass).collect();
        assert!(m.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
