//! Direction fields of two-component systems.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::solver::OdeSystem;

/// Below this `‖f‖₂` a sample is treated as stationary.
pub const STATIONARY_TOL: f64 = 1e-14;

/// Rectangular grid `[x_min, x_max] × [y_min, y_max]` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub step: f64,
}

impl Grid2 {
    pub fn square(min: f64, max: f64, step: f64) -> Self {
        Self {
            x: (min, max),
            y: (min, max),
            step,
        }
    }

    fn axis(&self, (lo, hi): (f64, f64)) -> Result<Vec<f64>, AnalysisError> {
        if !(self.step > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(AnalysisError::Domain(format!(
                "grid axis [{lo}, {hi}] with step {} is malformed",
                self.step
            )));
        }
        let count = ((hi - lo) / self.step).round() as usize + 1;
        Ok((0..count).map(|i| lo + i as f64 * self.step).collect())
    }

    /// Grid points, `x` varying slowest.
    pub fn points(&self) -> Result<Vec<(f64, f64)>, AnalysisError> {
        let (xs, ys) = (self.axis(self.x)?, self.axis(self.y)?);
        Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    /// Unit direction of `f`, zero at stationary points.
    pub dx: f64,
    pub dy: f64,
    /// Display length `√‖f‖₂`.
    pub len: f64,
    pub stationary: bool,
}

pub fn sample_vector_field(system: &OdeSystem<f64>, grid: &Grid2) -> Result<Vec<FieldSample>, AnalysisError> {
    if system.dim() != 2 {
        return Err(AnalysisError::UnsupportedDimension(system.dim()));
    }
    let mut f = [0.0; 2];
    grid.points()?
        .into_iter()
        .map(|(x, y)| {
            system.eval_into(&[x, y], &mut f);
            let norm = f[0].hypot(f[1]);
            if !norm.is_finite() {
                return Err(AnalysisError::NonFinite);
            }
            Ok(if norm <= STATIONARY_TOL {
                FieldSample {
                    x,
                    y,
                    dx: 0.0,
                    dy: 0.0,
                    len: 0.0,
                    stationary: true,
                }
            } else {
                FieldSample {
                    x,
                    y,
                    dx: f[0] / norm,
                    dy: f[1] / norm,
                    len: norm.sqrt(),
                    stationary: false,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{modified2_system, mutation2_system, proportions3_system, MutationParameter};

    fn a7() -> MutationParameter {
        MutationParameter::new(0.7).unwrap()
    }

    #[test]
    fn original_field_on_the_standard_grid() {
        let samples = sample_vector_field(&mutation2_system(a7()), &Grid2::square(0.0, 1.5, 0.1)).unwrap();
        assert_eq!(samples.len(), 256);
        let centre = samples.iter().find(|s| s.x == 0.5 && s.y == 0.5).unwrap();
        assert_eq!(centre.len, 0.0);
        assert!(centre.stationary);
        for s in samples.iter().filter(|s| !s.stationary) {
            assert!((s.dx.hypot(s.dy) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn modified_field_vanishes_on_the_diagonal() {
        let samples = sample_vector_field(&modified2_system(a7()), &Grid2::square(0.0, 1.5, 0.1)).unwrap();
        let diagonal: Vec<_> = samples.iter().filter(|s| s.x == s.y).collect();
        assert_eq!(diagonal.len(), 16);
        assert!(diagonal.iter().all(|s| s.len == 0.0));
    }

    #[test]
    fn single_point_grid_and_errors() {
        let one = Grid2::square(0.3, 0.3, 0.1);
        assert_eq!(
            sample_vector_field(&mutation2_system(a7()), &one).unwrap().len(),
            1
        );
        assert_eq!(
            sample_vector_field(&proportions3_system(), &one),
            Err(AnalysisError::UnsupportedDimension(3))
        );
        assert!(sample_vector_field(&mutation2_system(a7()), &Grid2::square(1.0, 0.0, 0.1)).is_err());
        assert!(sample_vector_field(&mutation2_system(a7()), &Grid2::square(0.0, 1.0, 0.0)).is_err());
    }
}
