//! Grid-aligned scalar and vector samples.

use crate::geometry::{CellMask, Grid};
use crate::{Error, Result, Vec2};

/// Cell-centered scalar samples (densities, averages, normalizers).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch);
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at the centers of interior cells; every other cell is 0.
    pub fn from_fn(grid: Grid, mask: &CellMask, mut f: impl FnMut(Vec2) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                if mask.is_interior(k) {
                    let (i, j) = grid.coords(k);
                    f(grid.center(i, j))
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = value;
    }

    /// Sets every non-interior cell to zero.
    pub fn apply_mask(&mut self, mask: &CellMask) {
        for (k, v) in self.values.iter_mut().enumerate() {
            if !mask.is_interior(k) {
                *v = 0.0;
            }
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L¹ norm `dx·dy·Σ|ρ|`.
    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn l1_distance(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch);
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(self.grid.cell_area() * sum)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `a·self + b·other`, cell by cell.
    pub fn linear_combination(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }

    /// Mirror image under `x ↦ x_min + x_max − x`.
    pub fn mirrored_x(&self) -> ScalarField {
        let g = self.grid;
        let mut values = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                values[g.index(g.nx - 1 - i, j)] = self.values[g.index(i, j)];
            }
        }
        ScalarField { grid: g, values }
    }
}

/// Cell-centered 2-vectors (velocities, gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<Vec2>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch);
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            values: vec![Vec2::ZERO; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mask: &CellMask, mut f: impl FnMut(Vec2) -> Vec2) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                if mask.is_interior(k) {
                    let (i, j) = grid.coords(k);
                    f(grid.center(i, j))
                } else {
                    Vec2::ZERO
                }
            })
            .collect();
        VectorField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Vec2] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Vec2 {
        self.values[self.grid.index(i, j)]
    }

    /// Largest `|u₁|` and `|u₂|` over the field.
    pub fn max_abs_components(&self) -> (f64, f64) {
        self.values.iter().fold((0.0, 0.0), |(mx, my), v| {
            (f64::max(mx, v.x.abs()), f64::max(my, v.y.abs()))
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Mirror image under `x ↦ x_min + x_max − x`: positions are reflected
    /// and the first component changes sign.
    pub fn mirrored_x(&self) -> VectorField {
        let g = self.grid;
        let mut values = vec![Vec2::ZERO; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = self.values[g.index(i, j)];
                values[g.index(g.nx - 1 - i, j)] = Vec2::new(-v.x, v.y);
            }
        }
        VectorField { grid: g, values }
    }
}
