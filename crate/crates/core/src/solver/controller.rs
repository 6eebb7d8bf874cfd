/// Proportional-integral step-size controller.
///
/// On acceptance the step is scaled by
/// `safety · err^(-0.7/(p̂+1)) · err_prev^(0.4/(p̂+1))`, on rejection by the
/// plain integral factor `safety · err^(-1/(p̂+1))`. Both are clamped to
/// `[min_factor, max_factor]`, and a step directly after a rejection is
/// never enlarged.
#[derive(Debug, Clone)]
pub struct PiController {
    safety: f64,
    min_factor: f64,
    max_factor: f64,
    alpha: f64,
    beta: f64,
    integral: f64,
    prev_norm: f64,
    after_reject: bool,
}

/// Smallest error norm fed to the power laws.
const NORM_FLOOR: f64 = 1e-10;

impl PiController {
    pub fn new(embedded_order: u32, safety: f64, min_factor: f64, max_factor: f64) -> Self {
        let k = embedded_order as f64 + 1.0;
        Self {
            safety,
            min_factor,
            max_factor,
            alpha: 0.7 / k,
            beta: 0.4 / k,
            integral: 1.0 / k,
            prev_norm: 1.0,
            after_reject: false,
        }
    }

    pub fn accept(&mut self, norm: f64) -> f64 {
        let n = norm.max(NORM_FLOOR);
        let raw = self.safety * n.powf(-self.alpha) * self.prev_norm.powf(self.beta);
        let upper = if self.after_reject { 1.0 } else { self.max_factor };
        self.prev_norm = n.max(1e-4);
        self.after_reject = false;
        raw.clamp(self.min_factor, upper.max(self.min_factor))
    }

    pub fn reject(&mut self, norm: f64) -> f64 {
        self.after_reject = true;
        if !norm.is_finite() {
            return self.min_factor;
        }
        let raw = self.safety * norm.max(NORM_FLOOR).powf(-self.integral);
        raw.clamp(self.min_factor, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_stay_within_clamps() {
        let mut c = PiController::new(4, 0.9, 0.2, 10.0);
        assert_eq!(c.accept(0.0), 10.0);
        assert!(c.reject(1e12) >= 0.2);
        assert_eq!(c.reject(f64::NAN), 0.2);
        // no growth right after a rejection
        assert!(c.accept(1e-8) <= 1.0);
        // a very small previous error damps the next growth
        let f = c.accept(0.5);
        assert!(f > 0.2 && f < 0.9, "{f}");
    }

    #[test]
    fn rejection_shrinks_steps() {
        let mut c = PiController::new(4, 0.9, 0.2, 10.0);
        let f = c.reject(2.0);
        assert!((f - 0.9 * 2f64.powf(-0.2)).abs() < 1e-15);
    }

    #[test]
    fn integral_part_at_unit_error_is_the_safety_factor() {
        let mut c = PiController::new(5, 0.9, 0.2, 10.0);
        assert!((c.accept(1.0) - 0.9).abs() < 1e-15);
    }
}
