use std::fmt::Debug;

use crate::Vec2;

/// A velocity field `u(t, x)` with access to its spatial Jacobian.
pub trait VelocityField: Send + Sync + Debug {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2;

    /// `[[∂₁u₁, ∂₂u₁], [∂₁u₂, ∂₂u₂]]`.
    fn jacobian(&self, t: f64, x: Vec2) -> [[f64; 2]; 2];

    fn divergence(&self, t: f64, x: Vec2) -> f64 {
        let j = self.jacobian(t, x);
        j[0][0] + j[1][1]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroVelocity;

impl VelocityField for ZeroVelocity {
    fn velocity(&self, _t: f64, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }

    fn jacobian(&self, _t: f64, _x: Vec2) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformVelocity(pub Vec2);

impl VelocityField for UniformVelocity {
    fn velocity(&self, _t: f64, _x: Vec2) -> Vec2 {
        self.0
    }

    fn jacobian(&self, _t: f64, _x: Vec2) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

/// `u(x) = −rate·(x − center)`; divergence `−2·rate`.
#[derive(Debug, Clone, Copy)]
pub struct LinearContraction {
    pub center: Vec2,
    pub rate: f64,
}

impl VelocityField for LinearContraction {
    fn velocity(&self, _t: f64, x: Vec2) -> Vec2 {
        (x - self.center) * -self.rate
    }

    fn jacobian(&self, _t: f64, _x: Vec2) -> [[f64; 2]; 2] {
        [[-self.rate, 0.0], [0.0, -self.rate]]
    }
}

/// Counter-clockwise rigid rotation about `center`; divergence free.
#[derive(Debug, Clone, Copy)]
pub struct RigidRotation {
    pub center: Vec2,
    pub angular_speed: f64,
}

impl VelocityField for RigidRotation {
    fn velocity(&self, _t: f64, x: Vec2) -> Vec2 {
        let d = x - self.center;
        Vec2::new(-d.y, d.x) * self.angular_speed
    }

    fn jacobian(&self, _t: f64, _x: Vec2) -> [[f64; 2]; 2] {
        let w = self.angular_speed;
        [[0.0, -w], [w, 0.0]]
    }
}
