//! Affine first and second integrals, and the reformulations that turn a
//! second integral into a first integral.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AnalysisError;
use crate::scalar::Scalar;
use crate::solver::OdeSystem;

/// `J(q) = g·q + β`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFunctional<T> {
    gradient: Vec<T>,
    offset: T,
}

impl<T: Scalar> AffineFunctional<T> {
    pub fn new(gradient: Vec<T>, offset: T) -> Self {
        assert!(!gradient.is_empty(), "affine functional needs a gradient");
        Self { gradient, offset }
    }

    /// `Σ q_i − 1`
    pub fn deviation(dim: usize) -> Self {
        Self::new(vec![T::one(); dim], -T::one())
    }

    pub fn gradient(&self) -> &[T] {
        &self.gradient
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    /// `g·v`
    pub fn directional(&self, v: &[T]) -> T {
        self.gradient
            .iter()
            .zip(v)
            .fold(T::zero(), |acc, (&g, &x)| acc + g * x)
    }

    pub fn eval(&self, q: &[T]) -> T {
        self.directional(q) + self.offset
    }

    fn gradient_norm_sq(&self) -> T {
        self.directional(&self.gradient)
    }
}

type FieldFn<T> = dyn Fn(&[T]) -> T + Send + Sync;

/// State-dependent coefficient `α(q)`.
#[derive(Clone)]
pub struct ScalarField<T> {
    f: Arc<FieldFn<T>>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// `α(q) = Σ q_i`
    pub fn sum() -> Self {
        Self::new(|q: &[T]| q.iter().fold(T::zero(), |acc, &x| acc + x))
    }

    pub fn zero() -> Self {
        Self::new(|_: &[T]| T::zero())
    }

    pub fn eval(&self, q: &[T]) -> T {
        (self.f)(q)
    }
}

impl<T> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

fn check_dims<T: Scalar>(
    system: &OdeSystem<T>,
    j: &AffineFunctional<T>,
    q: Option<&[T]>,
) -> Result<(), AnalysisError> {
    let got = q.map_or(j.dim(), <[T]>::len);
    if j.dim() != system.dim() || got != system.dim() {
        return Err(AnalysisError::DimensionMismatch {
            expected: system.dim(),
            got: if j.dim() != system.dim() { j.dim() } else { got },
        });
    }
    Ok(())
}

/// `J'(q)·f(q) = g·f(q)`; zero everywhere for a first integral.
pub fn first_integral_residual<T: Scalar>(
    system: &OdeSystem<T>,
    j: &AffineFunctional<T>,
    q: &[T],
) -> Result<T, AnalysisError> {
    check_dims(system, j, Some(q))?;
    Ok(j.directional(&system.eval(q)))
}

/// `g·f(q) − α(q) J(q)`; zero everywhere for a second integral.
pub fn second_integral_residual<T: Scalar>(
    system: &OdeSystem<T>,
    j: &AffineFunctional<T>,
    alpha: &ScalarField<T>,
    q: &[T],
) -> Result<T, AnalysisError> {
    Ok(first_integral_residual(system, j, q)? - alpha.eval(q) * j.eval(q))
}

/// `f̃(q) = f(q) − α(q) J(q) g/‖g‖²`, for which `J` is a first integral.
///
/// Returns the system unchanged (minus its Jacobian) when `g = 0`.
pub fn reformulate_projection<T: Scalar>(
    system: &OdeSystem<T>,
    j: &AffineFunctional<T>,
    alpha: &ScalarField<T>,
) -> Result<OdeSystem<T>, AnalysisError> {
    check_dims(system, j, None)?;
    let base = system.clone().without_jacobian();
    let norm_sq = j.gradient_norm_sq();
    if norm_sq == T::zero() {
        return Ok(base);
    }
    let name = format!("{}-projected", system.name());
    let unit: Vec<T> = j.gradient().iter().map(|&g| g / norm_sq).collect();
    let (j, alpha) = (j.clone(), alpha.clone());
    let inner = base.clone();
    Ok(OdeSystem::new(
        name,
        system.dim(),
        move |q: &[T], out: &mut [T]| {
            inner.eval_into(q, out);
            let k = alpha.eval(q) * j.eval(q);
            for (o, &u) in out.iter_mut().zip(&unit) {
                *o = *o - k * u;
            }
        },
    ))
}

/// Number of random states used to check `α(q) = g·q`.
pub const IDENTITY_SAMPLES: usize = 128;
const IDENTITY_TOL: f64 = 1e-10;
const IDENTITY_SEED: u64 = 0x5eed_0001;

/// `f̃(q) = f(q) − J(q) q`, valid when `α(q) = g·q`.
///
/// The identity is checked at [`IDENTITY_SAMPLES`] seeded random states in
/// `[-0.5, 2]ⁿ`; a violation is reported with the offending state.
pub fn reformulate_state_scaled<T: Scalar>(
    system: &OdeSystem<T>,
    j: &AffineFunctional<T>,
    alpha: &ScalarField<T>,
) -> Result<OdeSystem<T>, AnalysisError> {
    check_dims(system, j, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(IDENTITY_SEED);
    let mut q = vec![T::zero(); system.dim()];
    for _ in 0..IDENTITY_SAMPLES {
        for x in q.iter_mut() {
            *x = T::lit(rng.gen_range(-0.5..2.0));
        }
        let (a, gq) = (alpha.eval(&q).as_f64(), j.directional(&q).as_f64());
        if !((a - gq).abs() <= IDENTITY_TOL * gq.abs().max(1.0)) {
            return Err(AnalysisError::IdentityViolation {
                witness: q.iter().map(|x| x.as_f64()).collect(),
                alpha: a,
                expected: gq,
            });
        }
    }
    let name = format!("{}-state-scaled", system.name());
    let inner = system.clone().without_jacobian();
    let j = j.clone();
    Ok(OdeSystem::new(
        name,
        system.dim(),
        move |q: &[T], out: &mut [T]| {
            inner.eval_into(q, out);
            let k = j.eval(q);
            for (o, &x) in out.iter_mut().zip(q) {
                *o = *o - k * x;
            }
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{modified3_system, proportions3_system};

    #[test]
    fn residual_examples() {
        let j = AffineFunctional::<f64>::deviation(3);
        let q = [0.3, 0.3, 0.3];
        let r = first_integral_residual(&modified3_system(), &j, &q).unwrap();
        assert!(r.abs() <= 1e-15);
        let r = first_integral_residual(&proportions3_system(), &j, &q).unwrap();
        assert!((r + 0.09).abs() <= 1e-14);
        let trivial = AffineFunctional::new(vec![0.0; 3], 2.0);
        assert_eq!(
            first_integral_residual(&proportions3_system(), &trivial, &q).unwrap(),
            0.0
        );
    }

    #[test]
    fn dimension_checks() {
        let j = AffineFunctional::<f64>::deviation(2);
        assert!(matches!(
            first_integral_residual(&proportions3_system(), &j, &[0.1, 0.2, 0.3]),
            Err(AnalysisError::DimensionMismatch { .. })
        ));
        let j3 = AffineFunctional::<f64>::deviation(3);
        assert!(first_integral_residual(&proportions3_system(), &j3, &[0.1, 0.2]).is_err());
        assert!(reformulate_projection(&proportions3_system(), &j, &ScalarField::sum()).is_err());
    }

    #[test]
    fn zero_gradient_projection_is_identity() {
        let sys = proportions3_system::<f64>();
        let j = AffineFunctional::new(vec![0.0; 3], 1.0);
        let r = reformulate_projection(&sys, &j, &ScalarField::sum()).unwrap();
        let q = [0.2, 0.7, 1.1];
        assert_eq!(r.eval(&q), sys.eval(&q));
        assert!(!r.has_jacobian());
    }

    #[test]
    fn state_scaled_refuses_wrong_alpha() {
        let sys = proportions3_system::<f64>();
        let j = AffineFunctional::deviation(3);
        let shifted = ScalarField::new(|q: &[f64]| q.iter().sum::<f64>() + 1.0);
        match reformulate_state_scaled(&sys, &j, &shifted) {
            Err(AnalysisError::IdentityViolation {
                witness,
                alpha,
                expected,
            }) => {
                assert_eq!(witness.len(), 3);
                assert!((alpha - expected - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
