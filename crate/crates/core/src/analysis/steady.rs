//! Steady states of the inheritance systems and their linear stability.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use super::eigen::eigen_small;
use super::AnalysisError;
use crate::models::{MutationParameter, SystemId};
use crate::scalar::Scalar;
use crate::solver::OdeSystem;

/// Default band around zero for [`classify_stability`].
pub const STABILITY_TOL: f64 = 1e-9;
/// Largest `‖f(q)‖∞` accepted at a steady state.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    AsymptoticallyStable,
    StableNonhyperbolic,
    Unstable,
}

impl Stability {
    pub fn tag(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "asymptotically_stable",
            Stability::StableNonhyperbolic => "stable_nonhyperbolic",
            Stability::Unstable => "unstable",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// All real parts below `−tol`: asymptotically stable; any above `tol`:
/// unstable; otherwise non-hyperbolic but stable at linear order.
pub fn classify_stability(eigenvalues: &[Complex64], tol: f64) -> Stability {
    if eigenvalues.iter().all(|z| z.re < -tol) {
        Stability::AsymptoticallyStable
    } else if eigenvalues.iter().any(|z| z.re > tol) {
        Stability::Unstable
    } else {
        Stability::StableNonhyperbolic
    }
}

/// `(s, 2(√s − s), 1 + s − 2√s)` for `s ∈ [0, 1]`: the nonnegative steady
/// states of the original three-genotype system.
pub fn steady_state_family3<T: Scalar>(s: T) -> Result<[T; 3], AnalysisError> {
    if !(s >= T::zero() && s <= T::one()) {
        return Err(AnalysisError::Domain(format!(
            "family parameter must lie in [0, 1], got {:?}",
            s
        )));
    }
    let r = s.sqrt();
    let two = T::lit(2.0);
    Ok([s, two * (r - s), T::one() + s - two * r])
}

/// Steady state `(q₁, q₂, q₂²/(4q₁))` of the modified three-genotype system.
/// With `q₁ = q₂ = 0` the third component is free and taken from `q3`.
pub fn steady_state_modified3<T: Scalar>(q1: T, q2: T, q3: Option<T>) -> Result<[T; 3], AnalysisError> {
    if !(q1 >= T::zero() && q2 >= T::zero()) {
        return Err(AnalysisError::Domain(format!(
            "components must be nonnegative, got ({:?}, {:?})",
            q1, q2
        )));
    }
    if q1 == T::zero() {
        if q2 != T::zero() {
            return Err(AnalysisError::Domain(
                "q1 = 0 forces q2 = 0 at a steady state".into(),
            ));
        }
        let q3 = q3.unwrap_or(T::zero());
        if !(q3 >= T::zero()) {
            return Err(AnalysisError::Domain(format!(
                "q3 must be nonnegative, got {:?}",
                q3
            )));
        }
        return Ok([T::zero(), T::zero(), q3]);
    }
    Ok([q1, q2, (q2 * q2).div_p(T::lit(4.0) * q1)])
}

/// Limit of the modified three-genotype system from `q`: the steady state
/// with the same `S = Σq` and `p = q₁ + q₂/2`, namely
/// `(p²/S, 2p(S − p)/S, (S − p)²/S)`.
pub fn hardy_weinberg_limit<T: Scalar>(q: &[T; 3]) -> Result<[T; 3], AnalysisError> {
    let s = q[0] + q[1] + q[2];
    if !(s > T::zero()) {
        return Err(AnalysisError::Domain(format!("Σq must be positive, got {:?}", s)));
    }
    let p = q[0] + T::lit(0.5) * q[1];
    let r = s - p;
    Ok([(p * p).div_p(s), (T::lit(2.0) * p * r).div_p(s), (r * r).div_p(s)])
}

/// Limit `(S/2, S/2)` of the modified two-allele system, `S = q₁ + q₂ ≥ 0`.
pub fn modified2_limit<T: Scalar>(q: &[T; 2]) -> [T; 2] {
    let half = T::lit(0.5) * (q[0] + q[1]);
    [half, half]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateRecord {
    pub point: Vec<f64>,
    pub residual: f64,
    #[serde(serialize_with = "ser_complex")]
    pub eigenvalues: Vec<Complex64>,
    #[serde(serialize_with = "ser_vectors")]
    pub eigenvectors: Vec<Option<Vec<Complex64>>>,
    pub defective: bool,
    pub classification: Stability,
}

fn ser_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

fn ser_vectors<S: serde::Serializer>(v: &[Option<Vec<Complex64>>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|o| {
        o.as_ref()
            .map(|vec| vec.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
    }))
}

/// Eigen-decomposition and classification of `system` at a steady state.
/// Systems without a closed-form Jacobian use central differences.
pub fn analyze_steady_state(
    system: &OdeSystem<f64>,
    point: &[f64],
) -> Result<SteadyStateRecord, AnalysisError> {
    if point.len() != system.dim() {
        return Err(AnalysisError::DimensionMismatch {
            expected: system.dim(),
            got: point.len(),
        });
    }
    let residual = system.eval(point).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(residual <= STEADY_RESIDUAL_TOL) {
        return Err(AnalysisError::NotSteady {
            point: point.to_vec(),
            residual,
        });
    }
    let jac = system.jacobian_or_fd(point, FD_STEP);
    let eig = eigen_small(&jac)?;
    Ok(SteadyStateRecord {
        point: point.to_vec(),
        residual,
        classification: classify_stability(&eig.values, STABILITY_TOL),
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        defective: eig.defective,
    })
}

/// Representative steady states of a shipped system, analysed.
///
/// `samples` family members are taken at evenly spaced parameters in `[0, 1]`
/// (for the two-allele modified system, diagonal points `(c, c)`).
pub fn steady_state_catalog(
    id: SystemId,
    a: MutationParameter,
    samples: usize,
) -> Result<Vec<SteadyStateRecord>, AnalysisError> {
    let system = id.build::<f64>(a);
    let params: Vec<f64> = match samples {
        0 => vec![],
        1 => vec![0.5],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    };
    let points: Vec<Vec<f64>> = match id {
        SystemId::Orig2 => vec![vec![0.0, 0.0], vec![0.5, 0.5]],
        SystemId::Mod2 => {
            let mut pts = vec![vec![0.0, 0.0]];
            pts.extend(params.iter().filter(|&&c| c > 0.0).map(|&c| vec![c, c]));
            pts
        }
        SystemId::Orig3 => {
            let mut pts = vec![vec![0.0; 3]];
            for &s in &params {
                pts.push(steady_state_family3(s)?.to_vec());
            }
            pts
        }
        SystemId::Mod3 => {
            let mut pts = vec![vec![0.0; 3]];
            for &s in &params {
                // same parametrisation as the original family
                let f = steady_state_family3(s)?;
                pts.push(steady_state_modified3(f[0], f[1], Some(f[2]))?.to_vec());
            }
            pts
        }
        SystemId::Deviation => return Err(AnalysisError::UnsupportedDimension(1)),
        SystemId::Compartments => {
            return Err(AnalysisError::Domain(
                "the compartment model grows without bound and has no steady states".into(),
            ))
        }
    };
    points.iter().map(|p| analyze_steady_state(&system, p)).collect()
}
