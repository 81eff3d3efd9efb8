//! Crowd-dynamics velocity laws built on the non-local channels.

pub mod desired;
pub mod speed;
pub mod velocity;

pub use desired::{
    build_desired_field, DesiredField, DEFAULT_DISCOMFORT_AMPLITUDE, DEFAULT_DISCOMFORT_RANGE_CELLS,
};
pub use speed::{eval_speed, SpeedLaw};
pub use velocity::{
    eval_velocities, eval_velocity_evacuation, eval_velocity_two_population, ModelSpec, PopulationModel,
};
