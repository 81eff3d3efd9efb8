//! Boundary-aware convolution and the non-local operator built from it.
//!
//! For a density `ρ` supported in Ω,
//!
//! ```text
//! (ρ ∗_Ω η)(x) = (1/z(x)) ∫_Ω ρ(y) η(x − y) dy,     z(x) = ∫_Ω η(x − y) dy,
//! ∇(ρ ∗_Ω η)   = ((ρχ_Ω) ∗ ∇η) / z − (χ_Ω ∗ ∇η) ((ρχ_Ω) ∗ η) / z².
//! ```
//!
//! Discretely every integral is the midpoint sum of a [`KernelStencil`] over
//! interior cells. `z` and `∇z = χ_Ω ∗ ∇η` only depend on the domain and the
//! kernel, so [`BoundedConvolution`] computes them once.
//!
//! All sums run over the stencil in its fixed row-major order and are
//! parallelized over output cells only, so results do not depend on the
//! number of threads.

use rayon::prelude::*;

use crate::field::{ScalarField, VectorField};
use crate::geometry::{CellMask, Grid};
use crate::kernels::{KernelStencil, RadialKernel, DEFAULT_RESOLUTION_FLOOR};
use crate::{Error, Result, Vec2};

/// `Σ_k w_k v(cell − o_k)` at every interior cell (zero elsewhere).
fn stencil_sum(values: &[f64], grid: &Grid, mask: &CellMask, stencil: &KernelStencil) -> Vec<f64> {
    let (nx, ny) = (grid.nx as i64, grid.ny as i64);
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !mask.is_interior(k) {
                return 0.0;
            }
            let (i, j) = grid.coords(k);
            let (i, j) = (i as i64, j as i64);
            let mut acc = 0.0;
            for row in &stencil.rows {
                let jj = j - row.dj;
                if jj < 0 || jj >= ny {
                    continue;
                }
                let lo = row.di_first.max(i - nx + 1);
                let hi = row.di_last.min(i);
                let base = (jj * nx) as usize;
                for di in lo..=hi {
                    let w = stencil.weights[row.start + (di - row.di_first) as usize];
                    acc += w * values[base + (i - di) as usize];
                }
            }
            acc
        })
        .collect()
}

/// `Σ_k g_k v(cell − o_k)` at every interior cell (zero elsewhere).
fn stencil_gradient_sum(
    values: &[f64],
    grid: &Grid,
    mask: &CellMask,
    stencil: &KernelStencil,
) -> Vec<Vec2> {
    let (nx, ny) = (grid.nx as i64, grid.ny as i64);
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !mask.is_interior(k) {
                return Vec2::ZERO;
            }
            let (i, j) = grid.coords(k);
            let (i, j) = (i as i64, j as i64);
            let (mut ax, mut ay) = (0.0, 0.0);
            for row in &stencil.rows {
                let jj = j - row.dj;
                if jj < 0 || jj >= ny {
                    continue;
                }
                let lo = row.di_first.max(i - nx + 1);
                let hi = row.di_last.min(i);
                let base = (jj * nx) as usize;
                for di in lo..=hi {
                    let g = stencil.gradient_weights[row.start + (di - row.di_first) as usize];
                    let v = values[base + (i - di) as usize];
                    ax += g.x * v;
                    ay += g.y * v;
                }
            }
            Vec2::new(ax, ay)
        })
        .collect()
}

fn masked_values(rho: &ScalarField, mask: &CellMask) -> Vec<f64> {
    rho.values()
        .iter()
        .enumerate()
        .map(|(k, &v)| if mask.is_interior(k) { v } else { 0.0 })
        .collect()
}

fn check_shapes(grid: &Grid, mask: &CellMask, fields: &[&Grid]) -> Result<()> {
    if mask.cells.len() != grid.len() || fields.iter().any(|g| *g != grid) {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

/// The normalizer `z(x) = ∫_Ω η(x − y) dy` at interior cells.
pub fn compute_z(grid: &Grid, mask: &CellMask, stencil: &KernelStencil) -> ScalarField {
    let values = stencil_sum(&mask.indicator(), grid, mask, stencil);
    ScalarField::new(*grid, values).expect("stencil sum has one value per cell")
}

/// `∇z = χ_Ω ∗ ∇η` at interior cells.
pub fn compute_z_gradient(grid: &Grid, mask: &CellMask, stencil: &KernelStencil) -> VectorField {
    let values = stencil_gradient_sum(&mask.indicator(), grid, mask, stencil);
    VectorField::new(*grid, values).expect("stencil sum has one value per cell")
}

fn positive_z(z: &ScalarField, mask: &CellMask) -> Result<()> {
    let grid = z.grid();
    for (k, &value) in z.values().iter().enumerate() {
        if mask.is_interior(k) && !(value > 0.0) {
            let (i, j) = grid.coords(k);
            return Err(Error::DegenerateNormalizer { i, j });
        }
    }
    Ok(())
}

/// `ρ ∗_Ω η` at interior cells. Values of `rho` on non-interior cells are
/// ignored.
pub fn convolve_bounded(
    rho: &ScalarField,
    stencil: &KernelStencil,
    z: &ScalarField,
    mask: &CellMask,
) -> Result<ScalarField> {
    let grid = rho.grid();
    check_shapes(grid, mask, &[z.grid()])?;
    positive_z(z, mask)?;
    let mut values = stencil_sum(&masked_values(rho, mask), grid, mask, stencil);
    for (k, v) in values.iter_mut().enumerate() {
        if mask.is_interior(k) {
            *v /= z.values()[k];
        }
    }
    ScalarField::new(*grid, values)
}

/// `∇(ρ ∗_Ω η)` at interior cells through the quotient rule, given `z` and
/// `∇z`.
pub fn gradient_convolve_bounded(
    rho: &ScalarField,
    stencil: &KernelStencil,
    z: &ScalarField,
    grad_z: &VectorField,
    mask: &CellMask,
) -> Result<VectorField> {
    let grid = rho.grid();
    check_shapes(grid, mask, &[z.grid(), grad_z.grid()])?;
    positive_z(z, mask)?;
    let masked = masked_values(rho, mask);
    let sums = stencil_sum(&masked, grid, mask, stencil);
    let gradient_sums = stencil_gradient_sum(&masked, grid, mask, stencil);
    let values = (0..grid.len())
        .map(|k| {
            if !mask.is_interior(k) {
                return Vec2::ZERO;
            }
            let zk = z.values()[k];
            gradient_sums[k] / zk - grad_z.values()[k] * (sums[k] / (zk * zk))
        })
        .collect();
    VectorField::new(*grid, values)
}

/// A kernel bound to a grid and mask, with `z` and `∇z` cached.
#[derive(Debug, Clone)]
pub struct BoundedConvolution {
    grid: Grid,
    mask: CellMask,
    stencil: KernelStencil,
    z: ScalarField,
    grad_z: VectorField,
}

impl BoundedConvolution {
    pub fn new(kernel: &RadialKernel, grid: &Grid, mask: &CellMask) -> Result<Self> {
        Self::with_floor(kernel, grid, mask, DEFAULT_RESOLUTION_FLOOR)
    }

    pub fn with_floor(
        kernel: &RadialKernel,
        grid: &Grid,
        mask: &CellMask,
        min_ratio: f64,
    ) -> Result<Self> {
        check_shapes(grid, mask, &[])?;
        let stencil = KernelStencil::build_with_floor(kernel, grid, min_ratio)?;
        let z = compute_z(grid, mask, &stencil);
        positive_z(&z, mask)?;
        let grad_z = compute_z_gradient(grid, mask, &stencil);
        Ok(BoundedConvolution {
            grid: *grid,
            mask: mask.clone(),
            stencil,
            z,
            grad_z,
        })
    }

    pub fn kernel(&self) -> &RadialKernel {
        self.stencil.kernel()
    }

    pub fn stencil(&self) -> &KernelStencil {
        &self.stencil
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn z(&self) -> &ScalarField {
        &self.z
    }

    pub fn grad_z(&self) -> &VectorField {
        &self.grad_z
    }

    /// Smallest `z` over interior cells: the discrete lower bound `c`.
    pub fn min_z(&self) -> f64 {
        self.z
            .values()
            .iter()
            .enumerate()
            .filter(|(k, _)| self.mask.is_interior(*k))
            .fold(f64::INFINITY, |m, (_, &v)| m.min(v))
    }

    pub fn convolve(&self, rho: &ScalarField) -> Result<ScalarField> {
        convolve_bounded(rho, &self.stencil, &self.z, &self.mask)
    }

    pub fn gradient(&self, rho: &ScalarField) -> Result<VectorField> {
        gradient_convolve_bounded(rho, &self.stencil, &self.z, &self.grad_z, &self.mask)
    }
}

/// One declared channel of the non-local operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Channel {
    /// `(Σ_{p ∈ populations} ρᵖ) ∗_Ω η_kernel`: one scalar component.
    Average { populations: Vec<usize>, kernel: usize },
    /// `∇(ρ^population ∗_Ω η_kernel)`: two scalar components.
    Gradient { population: usize, kernel: usize },
}

impl Channel {
    pub fn components(&self) -> usize {
        match self {
            Channel::Average { .. } => 1,
            Channel::Gradient { .. } => 2,
        }
    }
}

/// Kernels bound to one grid plus the ordered list of channels to evaluate.
#[derive(Debug, Clone)]
pub struct CouplingSpec {
    pub operators: Vec<BoundedConvolution>,
    pub channels: Vec<Channel>,
}

impl CouplingSpec {
    /// Number of scalar components `m`.
    pub fn m(&self) -> usize {
        self.channels.iter().map(Channel::components).sum()
    }

    fn validate(&self, populations: usize) -> Result<()> {
        let kernels = self.operators.len();
        let check_kernel = |kernel: usize| {
            if kernel >= kernels {
                Err(Error::MissingKernel {
                    kernel,
                    available: kernels,
                })
            } else {
                Ok(())
            }
        };
        let check_population = |population: usize| {
            if population >= populations {
                Err(Error::MissingPopulation {
                    population,
                    available: populations,
                })
            } else {
                Ok(())
            }
        };
        for channel in &self.channels {
            match channel {
                Channel::Average {
                    populations: ps,
                    kernel,
                } => {
                    check_kernel(*kernel)?;
                    ps.iter().try_for_each(|&p| check_population(p))?;
                }
                Channel::Gradient { population, kernel } => {
                    check_kernel(*kernel)?;
                    check_population(*population)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelValue {
    Scalar(ScalarField),
    Vector(VectorField),
}

/// Evaluated channels, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalEval {
    pub channels: Vec<ChannelValue>,
}

impl NonlocalEval {
    pub fn m(&self) -> usize {
        self.channels
            .iter()
            .map(|c| match c {
                ChannelValue::Scalar(_) => 1,
                ChannelValue::Vector(_) => 2,
            })
            .sum()
    }

    pub fn scalar(&self, channel: usize) -> Option<&ScalarField> {
        match self.channels.get(channel) {
            Some(ChannelValue::Scalar(f)) => Some(f),
            _ => None,
        }
    }

    pub fn vector(&self, channel: usize) -> Option<&VectorField> {
        match self.channels.get(channel) {
            Some(ChannelValue::Vector(f)) => Some(f),
            _ => None,
        }
    }

    /// The flattened components `A₁ … A_m` at one cell.
    pub fn components_at(&self, cell: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m());
        for c in &self.channels {
            match c {
                ChannelValue::Scalar(f) => out.push(f.values()[cell]),
                ChannelValue::Vector(f) => {
                    let v = f.values()[cell];
                    out.push(v.x);
                    out.push(v.y);
                }
            }
        }
        out
    }
}

/// Evaluates every channel of `coupling` for the given population densities.
/// Channels that repeat an earlier computation reuse its result.
pub fn assemble_nonlocal(rho_all: &[ScalarField], coupling: &CouplingSpec) -> Result<NonlocalEval> {
    coupling.validate(rho_all.len())?;
    let grid = match rho_all.first() {
        Some(rho) => *rho.grid(),
        None => {
            return Ok(NonlocalEval {
                channels: Vec::new(),
            })
        }
    };
    if rho_all.iter().any(|r| *r.grid() != grid) {
        return Err(Error::ShapeMismatch);
    }

    let mut done: Vec<(&Channel, ChannelValue)> = Vec::new();
    for channel in &coupling.channels {
        if let Some((_, value)) = done.iter().find(|(c, _)| *c == channel) {
            let value = value.clone();
            done.push((channel, value));
            continue;
        }
        let value = match channel {
            Channel::Average {
                populations,
                kernel,
            } => {
                let mut total = ScalarField::zeros(grid);
                for &p in populations {
                    total = total.linear_combination(1.0, &rho_all[p], 1.0)?;
                }
                ChannelValue::Scalar(coupling.operators[*kernel].convolve(&total)?)
            }
            Channel::Gradient { population, kernel } => {
                ChannelValue::Vector(coupling.operators[*kernel].gradient(&rho_all[*population])?)
            }
        };
        done.push((channel, value));
    }
    Ok(NonlocalEval {
        channels: done.into_iter().map(|(_, v)| v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box_domain(side: f64) -> Domain {
        let outer = Rect::new(0.0, side, 0.0, side).unwrap();
        Domain::rectangle(outer, vec![], vec![], 0.1).unwrap()
    }

    fn setup(side: f64, h: f64, l: f64) -> (Grid, CellMask, BoundedConvolution) {
        let (grid, mask) = build_grid(&box_domain(side), h).unwrap();
        let kernel = RadialKernel::quartic_room(l).unwrap();
        let conv = BoundedConvolution::new(&kernel, &grid, &mask).unwrap();
        (grid, mask, conv)
    }

    fn dist_to_walls(p: Vec2, side: f64) -> f64 {
        p.x.min(p.y).min(side - p.x).min(side - p.y)
    }

    #[test]
    fn z_is_full_sum_deep_inside_and_bounded() {
        let side = 4.0;
        let (grid, _mask, conv) = setup(side, 0.0625, 0.5);
        let full = conv.stencil().weight_sum();
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            let z = conv.z().values()[k];
            if dist_to_walls(grid.center(i, j), side) > 0.5 {
                assert_eq!(z, full);
            }
            assert!(z > 0.0 && z <= 1.0 + 0.01);
        }
        assert!(conv.min_z() > 0.2);
    }

    #[test]
    fn z_near_corner_is_a_quarter() {
        let l = 0.625;
        let (grid, _, conv) = setup(4.0, l / 20.0, l);
        let z = conv.z().get(0, 0);
        assert!((z - 0.25).abs() < 0.05, "z = {z}");
        let _ = grid;
    }

    #[test]
    fn z_recomputation_is_bit_identical() {
        let (grid, mask, conv) = setup(2.0, 0.0625, 0.5);
        let again = compute_z(&grid, &mask, conv.stencil());
        assert_eq!(&again, conv.z());
    }

    #[test]
    fn constant_field_is_fixed() {
        let (grid, mask, conv) = setup(3.0, 0.0625, 0.5);
        let rho = ScalarField::from_fn(grid, &mask, |_| 2.5);
        let out = conv.convolve(&rho).unwrap();
        assert!(out.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        let grad = conv.gradient(&rho).unwrap();
        assert!(grad.values().iter().all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn convolution_is_linear() {
        let (grid, mask, conv) = setup(2.0, 0.0625, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = ScalarField::from_fn(grid, &mask, |_| rng.gen::<f64>());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = ScalarField::from_fn(grid, &mask, |_| rng.gen::<f64>());
        let combo = a.linear_combination(0.7, &b, -1.3).unwrap();
        let lhs = conv.convolve(&combo).unwrap();
        let rhs = conv
            .convolve(&a)
            .unwrap()
            .linear_combination(0.7, &conv.convolve(&b).unwrap(), -1.3)
            .unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn output_is_local_convex_combination() {
        let (grid, mask, conv) = setup(2.0, 0.0625, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = ScalarField::from_fn(grid, &mask, |_| rng.gen_range(0.0..5.0));
        let out = conv.convolve(&rho).unwrap();
        let s = conv.stencil();
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(di, dj) in &s.offsets {
                let (ii, jj) = (i as i64 - di, j as i64 - dj);
                if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                    continue;
                }
                let v = rho.get(ii as usize, jj as usize);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let v = out.values()[k];
            assert!(v >= lo * (1.0 - 1e-14) && v <= hi * (1.0 + 1e-14));
        }
    }

    #[test]
    fn gradient_of_linear_ramp_deep_inside() {
        let side = 4.0;
        let l = 0.5;
        let h = 0.03125;
        let (grid, mask, conv) = setup(side, h, l);
        let slope = 0.75;
        let rho = ScalarField::from_fn(grid, &mask, |p| 1.0 + slope * p.x);
        let grad = conv.gradient(&rho).unwrap();
        let avg = conv.convolve(&rho).unwrap();
        let sup = rho.sup_norm();
        for j in 0..grid.ny {
            for i in 1..grid.nx - 1 {
                let p = grid.center(i, j);
                if dist_to_walls(p, side) <= l + 2.0 * h {
                    continue;
                }
                let g = grad.get(i, j);
                // A radial average of a linear function reproduces it.
                assert!((g.x - slope).abs() < 1e-2 && g.y.abs() < 1e-9);
                let fd = (avg.get(i + 1, j) - avg.get(i - 1, j)) / (2.0 * h);
                assert!((g.x - fd).abs() < 5.0 * h * sup / l);
            }
        }
    }

    #[test]
    fn antisymmetric_field_has_vanishing_axial_gradient() {
        let side = 4.0;
        let h = 0.0625;
        let (grid, mask, conv) = setup(side, h, 0.5);
        // Axis: the vertical line through the centers of column `ia`.
        let ia = grid.nx / 2;
        let a = grid.center(ia, 0).x;
        let rho = ScalarField::from_fn(grid, &mask, |p| 3.0 + (p.x - a) * (1.0 + p.y * p.y));
        let grad = conv.gradient(&rho).unwrap();
        for j in 0..grid.ny {
            let along = grad.get(ia, j).y;
            assert!(along.abs() < 1e-10, "row {j}: {along}");
        }
    }

    #[test]
    fn assemble_layouts() {
        let (grid, mask, conv) = setup(2.0, 0.0625, 0.25);
        let rho = ScalarField::from_fn(grid, &mask, |p| p.x);
        let single = CouplingSpec {
            operators: vec![conv.clone()],
            channels: vec![
                Channel::Average {
                    populations: vec![0],
                    kernel: 0,
                },
                Channel::Gradient {
                    population: 0,
                    kernel: 0,
                },
            ],
        };
        assert_eq!(single.m(), 3);
        let eval = assemble_nonlocal(std::slice::from_ref(&rho), &single).unwrap();
        assert_eq!(eval.m(), 3);
        assert_eq!(eval.components_at(grid.index(5, 5)).len(), 3);

        let mut channels = vec![
            Channel::Average {
                populations: vec![0, 1],
                kernel: 0,
            },
            Channel::Average {
                populations: vec![0, 1],
                kernel: 0,
            },
        ];
        for _i in 0..2 {
            for j in 0..2 {
                channels.push(Channel::Gradient {
                    population: j,
                    kernel: 0,
                });
            }
        }
        let two = CouplingSpec {
            operators: vec![conv.clone()],
            channels,
        };
        assert_eq!(two.m(), 10);
        let zero = ScalarField::zeros(grid);
        let eval = assemble_nonlocal(&[zero.clone(), zero], &two).unwrap();
        assert_eq!(eval.m(), 10);
        for k in 0..grid.len() {
            assert!(eval.components_at(k).iter().all(|&v| v == 0.0));
        }

        let missing = CouplingSpec {
            operators: vec![conv],
            channels: vec![Channel::Gradient {
                population: 3,
                kernel: 0,
            }],
        };
        assert!(matches!(
            assemble_nonlocal(&[rho], &missing),
            Err(Error::MissingPopulation { population: 3, .. })
        ));
    }

    #[test]
    fn discrete_l1_bounds() {
        let (grid, mask, conv) = setup(2.0, 0.0625, 0.25);
        let c = conv.min_z();
        let eta_sup = conv.kernel().sup_norm();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = ScalarField::from_fn(grid, &mask, |_| rng.gen_range(0.0..3.0));
            let b = ScalarField::from_fn(grid, &mask, |_| rng.gen_range(0.0..3.0));
            let ca = conv.convolve(&a).unwrap();
            let cb = conv.convolve(&b).unwrap();
            assert!(ca.sup_norm() <= eta_sup / c * a.l1_norm());
            let diff = ca.linear_combination(1.0, &cb, -1.0).unwrap();
            assert!(diff.sup_norm() <= eta_sup / c * a.l1_distance(&b).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (grid, mask, conv) = setup(2.0, 0.0625, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = ScalarField::from_fn(grid, &mask, |_| rng.gen::<f64>());
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| (conv.convolve(&rho).unwrap(), conv.gradient(&rho).unwrap()))
        };
        assert_eq!(run(1), run(4));
    }
}
