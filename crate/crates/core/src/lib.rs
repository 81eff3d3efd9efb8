//! Non-local conservation laws on bounded planar domains.
//!
//! The crate solves systems of the form
//!
//! ```text
//! ∂t ρⁱ + div(ρⁱ Vⁱ(t, x, (𝒥ⁱρ)(x))) = 0     in Ω,
//! ρⁱ = 0                                     on the inflow part of ∂Ω,
//! ```
//!
//! where the non-local operator 𝒥 is built from a boundary-aware convolution
//! `ρ ∗_Ω η = (1/z) ∫_Ω ρ(y) η(x − y) dy` with `z(x) = ∫_Ω η(x − y) dy`.
//!
//! Building blocks, bottom-up:
//!
//! * [`geometry`]: domains, uniform grids, cell and face classification.
//! * [`kernels`]: radial averaging kernels and their discrete stencils.
//! * [`nonlocal`]: the boundary-aware convolution, its normalizer and gradient.
//! * [`transport`]: the frozen-coefficient linear problem, solved exactly along
//!   characteristics and approximately with a Lax–Friedrichs finite-volume step.
//! * [`models`]: crowd velocity laws (speed law, desired direction, avoidance).
//! * [`simulator`]: scenarios, the coupled time loop, Picard iteration and output.
//!
//! The guide in `book/` walks through each of these with runnable snippets.

pub mod error;
pub mod field;
pub mod geometry;
pub mod kernels;
pub mod models;
pub mod nonlocal;
pub mod simulator;
pub mod transport;
pub mod vec2;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use vec2::Vec2;

// The book chapters are compiled as doctests so their snippets stay in sync
// with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/bounded-convolution.md")]
    mod bounded_convolution {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
}
