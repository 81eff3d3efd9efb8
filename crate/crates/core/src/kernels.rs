//! Radial averaging kernels `η(x) = η̃(‖x‖)` and their discrete stencils.
//!
//! Both constructors build the quartic profile
//!
//! ```text
//! η̃(ξ) = 315 / (128 π ℓ²) · (1 − (ξ/ℓ)⁴)⁴   on [0, ℓ],   0 beyond,
//! ```
//!
//! which has unit mass in the plane, `η̃′ ≤ 0`, `η̃′(0) = 0` and is C³ at the
//! edge of its support. The room constructor evaluates the algebraically equal
//! form `315 / (128 π ℓ¹⁸) · (ℓ⁴ − ξ⁴)⁴`.

use std::f64::consts::PI;

use crate::geometry::Grid;
use crate::{Error, Result, Vec2};

/// Smallest `ℓ_η / h` accepted by [`KernelStencil::build`].
pub const DEFAULT_RESOLUTION_FLOOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `c (ℓ⁴ − ξ⁴)⁴` with `c = 315 / (128 π ℓ¹⁸)`.
    QuarticRoom,
    /// `c (1 − (ξ/ℓ)⁴)⁴` with `c = 315 / (128 π ℓ²)`.
    QuarticCorridor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialKernel {
    support: f64,
    family: KernelFamily,
    coefficient: f64,
}

impl RadialKernel {
    pub fn quartic_room(l: f64) -> Result<Self> {
        Self::with_family(KernelFamily::QuarticRoom, l)
    }

    pub fn quartic_corridor(l: f64) -> Result<Self> {
        Self::with_family(KernelFamily::QuarticCorridor, l)
    }

    pub fn with_family(family: KernelFamily, l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel support must be positive, got {l}"
            )));
        }
        let coefficient = match family {
            KernelFamily::QuarticRoom => 315.0 / (128.0 * PI * l.powi(18)),
            KernelFamily::QuarticCorridor => 315.0 / (128.0 * PI * l * l),
        };
        Ok(RadialKernel {
            support: l,
            family,
            coefficient,
        })
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// `η̃(ξ)`.
    pub fn profile(&self, xi: f64) -> f64 {
        let l = self.support;
        if xi.abs() >= l {
            return 0.0;
        }
        let c = self.coefficient;
        match self.family {
            KernelFamily::QuarticRoom => {
                let q = l.powi(4) - xi.powi(4);
                c * q.powi(4)
            }
            KernelFamily::QuarticCorridor => {
                let q = 1.0 - (xi / l).powi(4);
                c * q.powi(4)
            }
        }
    }

    /// `η̃′(ξ)`.
    pub fn profile_derivative(&self, xi: f64) -> f64 {
        let l = self.support;
        if xi.abs() >= l {
            return 0.0;
        }
        let c = self.coefficient;
        match self.family {
            KernelFamily::QuarticRoom => {
                let q = l.powi(4) - xi.powi(4);
                -16.0 * c * xi.powi(3) * q.powi(3)
            }
            KernelFamily::QuarticCorridor => {
                let s = xi / l;
                let q = 1.0 - s.powi(4);
                -16.0 * c * s.powi(3) * q.powi(3) / l
            }
        }
    }

    /// `η̃″(ξ)`.
    pub fn profile_second_derivative(&self, xi: f64) -> f64 {
        let l = self.support;
        if xi.abs() >= l {
            return 0.0;
        }
        let c = self.coefficient;
        match self.family {
            KernelFamily::QuarticRoom => {
                let l4 = l.powi(4);
                let x4 = xi.powi(4);
                -48.0 * c * xi * xi * (l4 - x4).powi(2) * (l4 - 5.0 * x4)
            }
            KernelFamily::QuarticCorridor => {
                let s = xi / l;
                let s4 = s.powi(4);
                -48.0 * c * s * s * (1.0 - s4).powi(2) * (1.0 - 5.0 * s4) / (l * l)
            }
        }
    }

    /// `η(x)`.
    pub fn eval(&self, x: Vec2) -> f64 {
        self.profile(x.norm())
    }

    /// `∇η(x) = η̃′(‖x‖) x / ‖x‖`, and zero at the origin.
    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let r = x.norm();
        if r == 0.0 || r >= self.support {
            return Vec2::ZERO;
        }
        x * (self.profile_derivative(r) / r)
    }

    /// `‖η‖∞ = η̃(0)`.
    pub fn sup_norm(&self) -> f64 {
        self.profile(0.0)
    }
}

/// One row of a stencil: offsets `(di_first..=di_last, dj)` stored
/// contiguously from `start` in the flat arrays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilRow {
    pub dj: i64,
    pub di_first: i64,
    pub di_last: i64,
    pub start: usize,
}

/// Midpoint-rule discretization of a kernel on a grid.
///
/// Offsets are the integer displacements whose physical length is strictly
/// below the support, in row-major order (`dj` outer, `di` inner).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelStencil {
    pub offsets: Vec<(i64, i64)>,
    /// `η(o·h)·h²`.
    pub weights: Vec<f64>,
    /// `∇η(o·h)·h²`.
    pub gradient_weights: Vec<Vec2>,
    pub rows: Vec<StencilRow>,
    pub radius_cells: i64,
    kernel: RadialKernel,
}

impl KernelStencil {
    pub fn build(kernel: &RadialKernel, grid: &Grid) -> Result<Self> {
        Self::build_with_floor(kernel, grid, DEFAULT_RESOLUTION_FLOOR)
    }

    /// Like [`build`](Self::build), requiring `ℓ_η / h ≥ min_ratio` instead
    /// of the default floor.
    pub fn build_with_floor(kernel: &RadialKernel, grid: &Grid, min_ratio: f64) -> Result<Self> {
        let spacing = grid.dx.max(grid.dy);
        let l = kernel.support();
        if l < min_ratio * spacing * (1.0 - 1e-12) {
            return Err(Error::UnderResolvedKernel {
                support: l,
                spacing,
                min_ratio,
            });
        }
        let radius_cells = (l / grid.dx.min(grid.dy)).ceil() as i64;
        let area = grid.cell_area();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut gradient_weights = Vec::new();
        let mut rows = Vec::new();
        for dj in -radius_cells..=radius_cells {
            let start = offsets.len();
            let mut first = None;
            let mut last = 0;
            for di in -radius_cells..=radius_cells {
                let x = Vec2::new(di as f64 * grid.dx, dj as f64 * grid.dy);
                if x.norm() >= l {
                    continue;
                }
                first.get_or_insert(di);
                last = di;
                offsets.push((di, dj));
                weights.push(kernel.eval(x) * area);
                gradient_weights.push(kernel.gradient(x) * area);
            }
            if let Some(di_first) = first {
                rows.push(StencilRow {
                    dj,
                    di_first,
                    di_last: last,
                    start,
                });
            }
        }
        Ok(KernelStencil {
            offsets,
            weights,
            gradient_weights,
            rows,
            radius_cells,
            kernel: *kernel,
        })
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn gradient_weight_sum(&self) -> Vec2 {
        self.gradient_weights
            .iter()
            .fold(Vec2::ZERO, |acc, &g| acc + g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [a, b] with n (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    fn grid_with(h: f64) -> Grid {
        Grid::new(8, 8, h, h, Vec2::ZERO).unwrap()
    }

    #[test]
    fn room_profile_at_origin() {
        let k = RadialKernel::quartic_room(0.625).unwrap();
        let expected = 315.0 / (128.0 * PI * 0.625 * 0.625);
        assert!((k.profile(0.0) - expected).abs() < 1e-12);
        assert!((k.profile(0.0) - 2.00535).abs() < 1e-5);
        assert_eq!(k.profile(0.625), 0.0);
        assert_eq!(k.profile(1.0), 0.0);
    }

    #[test]
    fn profiles_have_unit_planar_mass() {
        for l in [0.625, 1.5, 0.1875, 0.5] {
            for k in [
                RadialKernel::quartic_room(l).unwrap(),
                RadialKernel::quartic_corridor(l).unwrap(),
            ] {
                let mass = 2.0 * PI * simpson(|xi| xi * k.profile(xi), 0.0, l, 2000);
                assert!((mass - 1.0).abs() < 1e-10, "l = {l}, mass = {mass}");
            }
        }
    }

    #[test]
    fn room_and_corridor_agree() {
        for l in [0.1875, 0.5, 0.625, 1.5] {
            let room = RadialKernel::quartic_room(l).unwrap();
            let corridor = RadialKernel::quartic_corridor(l).unwrap();
            for k in 0..=100 {
                let xi = l * k as f64 / 100.0;
                let (a, b) = (room.profile(xi), corridor.profile(xi));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "l={l} xi={xi}");
            }
        }
    }

    #[test]
    fn corridor_half_support_value() {
        let l = 0.5;
        let k = RadialKernel::quartic_corridor(l).unwrap();
        let expected = 315.0 / (128.0 * PI * l * l) * (15.0f64 / 16.0).powi(4);
        assert!((k.profile(l / 2.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_support_rejected() {
        assert!(RadialKernel::quartic_room(0.0).is_err());
        assert!(RadialKernel::quartic_corridor(-1.0).is_err());
        assert!(RadialKernel::quartic_room(f64::NAN).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for k in [
            RadialKernel::quartic_room(0.625).unwrap(),
            RadialKernel::quartic_corridor(1.5).unwrap(),
        ] {
            let l = k.support();
            let delta = 1e-5 * l;
            for n in 1..40 {
                let xi = l * n as f64 / 40.0;
                let fd1 = (k.profile(xi + delta) - k.profile(xi - delta)) / (2.0 * delta);
                let fd2 = (k.profile_derivative(xi + delta) - k.profile_derivative(xi - delta))
                    / (2.0 * delta);
                let scale = k.sup_norm() / l;
                assert!((fd1 - k.profile_derivative(xi)).abs() < 1e-7 * scale);
                assert!((fd2 - k.profile_second_derivative(xi)).abs() < 1e-7 * scale / l);
            }
            assert_eq!(k.profile_derivative(0.0), 0.0);
        }
    }

    #[test]
    fn profile_is_monotone() {
        let k = RadialKernel::quartic_room(1.5).unwrap();
        let values: Vec<f64> = (0..=300).map(|n| k.profile(1.6 * n as f64 / 300.0)).collect();
        assert!(values.windows(2).all(|w| w[0] >= w[1]));
        assert!((0..=300).all(|n| k.profile_derivative(1.5 * n as f64 / 300.0) <= 0.0));
    }

    #[test]
    fn gradient_basics() {
        let k = RadialKernel::quartic_corridor(0.5).unwrap();
        assert_eq!(k.gradient(Vec2::ZERO), Vec2::ZERO);
        assert_eq!(k.gradient(Vec2::new(0.5, 0.0)), Vec2::ZERO);
        assert_eq!(k.gradient(Vec2::new(0.4, 0.4)), Vec2::ZERO);
        let x = Vec2::new(0.12, -0.07);
        let g = k.gradient(x);
        for angle in [0.3, 1.0, 2.5, -4.0] {
            let rotated = k.gradient(x.rotated(angle));
            let expected = g.rotated(angle);
            assert!((rotated - expected).norm() < 1e-12 * g.norm().max(1.0));
        }
        // Points inward: the profile decreases.
        assert!(g.dot(x) < 0.0);
    }

    #[test]
    fn stencil_weight_sum_at_scenario_mesh() {
        let k = RadialKernel::quartic_room(0.625).unwrap();
        let stencil = KernelStencil::build(&k, &grid_with(0.03125)).unwrap();
        assert_eq!(stencil.radius_cells, 20);
        assert!(stencil.offsets.iter().all(|&(i, j)| i.abs() <= 20 && j.abs() <= 20));
        assert!((stencil.weight_sum() - 1.0).abs() <= 0.01);
        let g = stencil.gradient_weight_sum();
        assert!(g.x.abs() < 1e-12 && g.y.abs() < 1e-12);
    }

    #[test]
    fn resolution_floor() {
        let l = 0.6;
        let k = RadialKernel::quartic_corridor(l).unwrap();
        assert!(KernelStencil::build(&k, &grid_with(l / 4.0)).is_ok());
        assert!(matches!(
            KernelStencil::build(&k, &grid_with(l / 3.0)),
            Err(Error::UnderResolvedKernel { .. })
        ));
        assert!(KernelStencil::build_with_floor(&k, &grid_with(l / 3.0), 3.0).is_ok());
    }

    #[test]
    fn stencil_structure() {
        let k = RadialKernel::quartic_room(0.5).unwrap();
        let h = 0.05;
        let s = KernelStencil::build(&k, &grid_with(h)).unwrap();
        // Offsets are exactly the displacements strictly inside the support.
        let r = s.radius_cells;
        let mut expected = Vec::new();
        for dj in -r..=r {
            for di in -r..=r {
                if ((di as f64 * h).hypot(dj as f64 * h)) < 0.5 {
                    expected.push((di, dj));
                }
            }
        }
        assert_eq!(s.offsets, expected);
        for (n, &(di, dj)) in s.offsets.iter().enumerate() {
            assert!(s.weights[n] >= 0.0);
            let m = s.offsets.iter().position(|&o| o == (-di, -dj)).unwrap();
            assert_eq!(s.gradient_weights[m], -s.gradient_weights[n]);
        }
        // Rows cover the offsets contiguously.
        let covered: usize = s
            .rows
            .iter()
            .map(|row| (row.di_last - row.di_first + 1) as usize)
            .sum();
        assert_eq!(covered, s.len());
        for row in &s.rows {
            assert_eq!(s.offsets[row.start], (row.di_first, row.dj));
        }
    }
}
