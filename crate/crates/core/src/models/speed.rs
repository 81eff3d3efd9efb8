/// Clamped cubic speed law `v(r) = a · min{1, max{0, (1 − (r/b)³)³}}`.
///
/// The outer `min` keeps `v ≤ a` for slightly negative averages, which the
/// scheme's rounding can produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLaw {
    pub amplitude: f64,
    pub capacity: f64,
}

impl SpeedLaw {
    pub fn new(amplitude: f64, capacity: f64) -> crate::Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) || !(capacity > 0.0 && capacity.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!(
                "speed law needs a ≥ 0 and b > 0, got a = {amplitude}, b = {capacity}"
            )));
        }
        Ok(SpeedLaw { amplitude, capacity })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let s = r / self.capacity;
        let c = 1.0 - s * s * s;
        self.amplitude * (c * c * c).clamp(0.0, 1.0)
    }
}

pub fn eval_speed(law: &SpeedLaw, r: f64) -> f64 {
    law.eval(r)
}
