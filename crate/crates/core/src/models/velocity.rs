use rayon::prelude::*;

use super::desired::DesiredField;
use super::speed::SpeedLaw;
use crate::field::{ScalarField, VectorField};
use crate::geometry::{CellMask, Grid};
use crate::kernels::{KernelFamily, RadialKernel};
use crate::nonlocal::{BoundedConvolution, Channel, CouplingSpec, NonlocalEval};
use crate::{Error, Result, Vec2};

/// Velocity law of one population:
///
/// ```text
/// Vⁱ = vⁱ((Σ_j ρʲ) ∗ η₁ⁱⁱ) · (wⁱ − Σ_j βᵢⱼ ∇(ρʲ ∗ η₂ⁱʲ) / √(1 + ‖∇(ρʲ ∗ η₂ⁱʲ)‖²))
/// ```
#[derive(Debug, Clone)]
pub struct PopulationModel {
    pub speed: SpeedLaw,
    pub desired: DesiredField,
    /// Support of the averaging kernel `η₁ⁱⁱ`.
    pub average_support: f64,
    /// Supports of the avoidance kernels `η₂ⁱʲ`, one per population `j`.
    pub avoidance_supports: Vec<f64>,
    /// Avoidance weights `βᵢⱼ`, one per population `j`.
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub family: KernelFamily,
    pub populations: Vec<PopulationModel>,
}

impl ModelSpec {
    pub fn new(family: KernelFamily, populations: Vec<PopulationModel>) -> Result<Self> {
        let spec = ModelSpec {
            family,
            populations,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.populations.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidParameter("at least one population is required".into()));
        }
        let grid = self.populations[0].desired.w().grid();
        for (i, p) in self.populations.iter().enumerate() {
            if p.betas.len() != n || p.avoidance_supports.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "population {i} needs {n} avoidance weights and supports"
                )));
            }
            if p.betas.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "population {i} has a negative or non-finite avoidance weight"
                )));
            }
            let supports = std::iter::once(&p.average_support).chain(&p.avoidance_supports);
            if supports.into_iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "population {i} has a non-positive kernel support"
                )));
            }
            if p.desired.w().grid() != grid {
                return Err(Error::ShapeMismatch);
            }
        }
        Ok(())
    }

    /// Channel index of the average feeding population `i`'s speed.
    pub fn average_channel(&self, i: usize) -> usize {
        i
    }

    /// Channel index of `∇(ρʲ ∗ η₂ⁱʲ)`.
    pub fn gradient_channel(&self, i: usize, j: usize) -> usize {
        self.n() + i * self.n() + j
    }

    /// Binds the kernels to a grid. Kernels with equal supports are shared.
    pub fn coupling(&self, grid: &Grid, mask: &CellMask, resolution_floor: f64) -> Result<CouplingSpec> {
        let n = self.n();
        let mut supports: Vec<f64> = Vec::new();
        let mut kernel_of = |l: f64| match supports.iter().position(|&s| s.to_bits() == l.to_bits()) {
            Some(k) => k,
            None => {
                supports.push(l);
                supports.len() - 1
            }
        };
        let mut channels = Vec::with_capacity(n + n * n);
        for p in &self.populations {
            channels.push(Channel::Average {
                populations: (0..n).collect(),
                kernel: kernel_of(p.average_support),
            });
        }
        for p in &self.populations {
            for (j, &l) in p.avoidance_supports.iter().enumerate() {
                channels.push(Channel::Gradient {
                    population: j,
                    kernel: kernel_of(l),
                });
            }
        }
        let operators = supports
            .iter()
            .map(|&l| {
                let kernel = RadialKernel::with_family(self.family, l)?;
                BoundedConvolution::with_floor(&kernel, grid, mask, resolution_floor)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CouplingSpec {
            operators,
            channels,
        })
    }

    /// Bound `aᵢ (max ‖wᵢ‖ + Σ_j βᵢⱼ)` on the speed of population `i`.
    pub fn speed_bound(&self, i: usize) -> f64 {
        let p = &self.populations[i];
        p.speed.amplitude * (p.desired.max_norm() + p.betas.iter().sum::<f64>())
    }

    pub fn max_speed_bound(&self) -> f64 {
        (0..self.n()).map(|i| self.speed_bound(i)).fold(0.0, f64::max)
    }

    /// The same model with populations listed in reverse order.
    pub fn swapped(&self) -> ModelSpec {
        let mut populations: Vec<PopulationModel> = self.populations.iter().rev().cloned().collect();
        for p in &mut populations {
            p.betas.reverse();
            p.avoidance_supports.reverse();
        }
        ModelSpec {
            family: self.family,
            populations,
        }
    }
}

/// Velocity fields `Vⁱ` of every population from evaluated channels laid out
/// as in [`ModelSpec::coupling`].
pub fn eval_velocities(spec: &ModelSpec, mask: &CellMask, nonlocal: &NonlocalEval) -> Result<Vec<VectorField>> {
    let n = spec.n();
    if nonlocal.channels.len() != n + n * n {
        return Err(Error::ShapeMismatch);
    }
    (0..n)
        .map(|i| {
            let p = &spec.populations[i];
            let average: &ScalarField = nonlocal
                .scalar(spec.average_channel(i))
                .ok_or(Error::ShapeMismatch)?;
            let gradients = (0..n)
                .map(|j| nonlocal.vector(spec.gradient_channel(i, j)).ok_or(Error::ShapeMismatch))
                .collect::<Result<Vec<&VectorField>>>()?;
            let grid = *average.grid();
            let w = p.desired.w().values();
            let values = (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    if !mask.is_interior(k) {
                        return Vec2::ZERO;
                    }
                    let mut dir = w[k];
                    for (g, &beta) in gradients.iter().zip(&p.betas) {
                        let a = g.values()[k];
                        dir -= a * (beta / (1.0 + a.norm_squared()).sqrt());
                    }
                    dir * p.speed.eval(average.values()[k])
                })
                .collect();
            VectorField::new(grid, values)
        })
        .collect()
}

/// Single-population room model.
pub fn eval_velocity_evacuation(spec: &ModelSpec, mask: &CellMask, nonlocal: &NonlocalEval) -> Result<VectorField> {
    if spec.n() != 1 {
        return Err(Error::InvalidParameter(format!(
            "evacuation model has one population, got {}",
            spec.n()
        )));
    }
    Ok(eval_velocities(spec, mask, nonlocal)?.remove(0))
}

/// Two-population corridor model.
pub fn eval_velocity_two_population(
    spec: &ModelSpec,
    mask: &CellMask,
    nonlocal: &NonlocalEval,
) -> Result<(VectorField, VectorField)> {
    if spec.n() != 2 {
        return Err(Error::InvalidParameter(format!(
            "two-population model expected, got {}",
            spec.n()
        )));
    }
    let mut v = eval_velocities(spec, mask, nonlocal)?;
    let second = v.remove(1);
    Ok((v.remove(0), second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Rect, Segment};
    use crate::models::desired::build_desired_field;
    use crate::nonlocal::assemble_nonlocal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn room() -> (Grid, CellMask, ModelSpec) {
        let outer = Rect::new(0.0, 8.0, -4.0, 4.0).unwrap();
        let columns = vec![
            Rect::new(6.0, 6.5, 0.75, 1.375).unwrap(),
            Rect::new(6.0, 6.5, -1.375, -0.75).unwrap(),
        ];
        let door = Segment::new(Vec2::new(8.0, -1.0), Vec2::new(8.0, 1.0));
        let d = Domain::rectangle(outer, columns, vec![door], 0.1).unwrap();
        let (grid, mask) = build_grid(&d, 0.125).unwrap();
        let w = build_desired_field(&grid, &mask, &[door], 0.3, 1.25).unwrap();
        let spec = ModelSpec::new(
            KernelFamily::QuarticRoom,
            vec![PopulationModel {
                speed: SpeedLaw::new(2.0, 4.0).unwrap(),
                desired: w,
                average_support: 0.625,
                avoidance_supports: vec![1.5],
                betas: vec![0.6],
            }],
        )
        .unwrap();
        (grid, mask, spec)
    }

    fn corridor() -> (Grid, CellMask, ModelSpec) {
        let outer = Rect::new(0.0, 16.0, -2.0, 2.0).unwrap();
        let left = Segment::new(Vec2::new(0.0, -2.0), Vec2::new(0.0, 2.0));
        let right = Segment::new(Vec2::new(16.0, -2.0), Vec2::new(16.0, 2.0));
        let d = Domain::rectangle(outer, vec![], vec![left, right], 0.04).unwrap();
        let (grid, mask) = build_grid(&d, 0.125).unwrap();
        let pop = |law: SpeedLaw, target: Segment| PopulationModel {
            speed: law,
            desired: build_desired_field(&grid, &mask, &[target], 0.3, 1.25).unwrap(),
            average_support: 0.5,
            avoidance_supports: vec![0.5, 0.5],
            betas: vec![0.2, 0.5],
        };
        let mut second = pop(SpeedLaw::new(1.5, 4.5).unwrap(), left);
        second.betas = vec![0.5, 0.2];
        let spec = ModelSpec::new(
            KernelFamily::QuarticCorridor,
            vec![pop(SpeedLaw::new(1.0, 4.5).unwrap(), right), second],
        )
        .unwrap();
        (grid, mask, spec)
    }

    #[test]
    fn zero_density_moves_at_free_speed() {
        let (grid, mask, spec) = room();
        let coupling = spec.coupling(&grid, &mask, 4.0).unwrap();
        assert_eq!(coupling.m(), 3);
        let eval = assemble_nonlocal(&[ScalarField::zeros(grid)], &coupling).unwrap();
        let v = eval_velocity_evacuation(&spec, &mask, &eval).unwrap();
        for k in 0..grid.len() {
            let expected = spec.populations[0].desired.w().values()[k] * 2.0;
            assert_eq!(v.values()[k], expected);
        }

        let (grid, mask, spec) = corridor();
        let coupling = spec.coupling(&grid, &mask, 4.0).unwrap();
        assert_eq!(coupling.m(), 10);
        assert_eq!(coupling.operators.len(), 1);
        let zero = ScalarField::zeros(grid);
        let eval = assemble_nonlocal(&[zero.clone(), zero], &coupling).unwrap();
        let (v1, v2) = eval_velocity_two_population(&spec, &mask, &eval).unwrap();
        for k in 0..grid.len() {
            assert_eq!(v1.values()[k], spec.populations[0].desired.w().values()[k]);
            assert_eq!(v2.values()[k], spec.populations[1].desired.w().values()[k] * 1.5);
        }
    }

    #[test]
    fn capacity_stops_everyone() {
        let (grid, mask, spec) = room();
        let coupling = spec.coupling(&grid, &mask, 4.0).unwrap();
        let rho = ScalarField::from_fn(grid, &mask, |_| 4.0);
        let eval = assemble_nonlocal(&[rho], &coupling).unwrap();
        let v = eval_velocity_evacuation(&spec, &mask, &eval).unwrap();
        // Deep interior: the average equals the constant exactly up to rounding.
        let (i, j) = grid.locate(Vec2::new(3.0, 0.0)).unwrap();
        assert!(v.get(i, j).norm() < 1e-9);

        let (grid, mask, spec) = corridor();
        let coupling = spec.coupling(&grid, &mask, 4.0).unwrap();
        let half = ScalarField::from_fn(grid, &mask, |_| 2.25);
        let eval = assemble_nonlocal(&[half.clone(), half], &coupling).unwrap();
        let (v1, v2) = eval_velocity_two_population(&spec, &mask, &eval).unwrap();
        let (i, j) = grid.locate(Vec2::new(8.0, 0.0)).unwrap();
        assert!(v1.get(i, j).norm() < 1e-9);
        assert!(v2.get(i, j).norm() < 1e-9);
    }

    #[test]
    fn speed_bound_holds() {
        let (grid, mask, spec) = room();
        let coupling = spec.coupling(&grid, &mask, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let rho = ScalarField::from_fn(grid, &mask, |_| rng.gen_range(0.0..6.0));
            let eval = assemble_nonlocal(&[rho], &coupling).unwrap();
            let v = eval_velocity_evacuation(&spec, &mask, &eval).unwrap();
            assert!(v.max_norm() <= spec.speed_bound(0) + 1e-12);
        }
    }

    #[test]
    fn swapping_populations_swaps_velocities() {
        let (grid, mask, spec) = corridor();
        let swapped = spec.swapped();
        let c = spec.coupling(&grid, &mask, 4.0).unwrap();
        let cs = swapped.coupling(&grid, &mask, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r1 = ScalarField::from_fn(grid, &mask, |_| rng.gen_range(0.0..3.0));
        let r2 = ScalarField::from_fn(grid, &mask, |_| rng.gen_range(0.0..3.0));
        let (v1, v2) = eval_velocity_two_population(&spec, &mask, &assemble_nonlocal(&[r1.clone(), r2.clone()], &c).unwrap()).unwrap();
        let (s1, s2) = eval_velocity_two_population(&swapped, &mask, &assemble_nonlocal(&[r2, r1], &cs).unwrap()).unwrap();
        // Equal up to the order in which the avoidance terms are summed.
        for (a, b) in [(&v1, &s2), (&v2, &s1)] {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((*x - *y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_inconsistent_specs() {
        let (_, _, spec) = room();
        let mut p = spec.populations[0].clone();
        p.betas = vec![-0.1];
        assert!(ModelSpec::new(KernelFamily::QuarticRoom, vec![p.clone()]).is_err());
        p.betas = vec![0.1, 0.2];
        assert!(ModelSpec::new(KernelFamily::QuarticRoom, vec![p.clone()]).is_err());
        p.betas = vec![0.1];
        p.average_support = 0.0;
        assert!(ModelSpec::new(KernelFamily::QuarticRoom, vec![p]).is_err());
        assert!(ModelSpec::new(KernelFamily::QuarticRoom, vec![]).is_err());
    }
}
