//! Right-hand sides and Jacobians of the gene-inheritance systems.
//!
//! Genotypes XX, Xx, xx are indexed 1, 2, 3. The evaluators are defined on
//! all of ℝⁿ and never clamp their inputs: the interesting behaviour lives
//! off the simplex.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::solver::OdeSystem;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("closed form blows up at t* = {t_star}")]
    BlowUp { t_star: f64 },
}

/// Offspring distribution of the mating pairs: entry `(j, k)` of `w_i` is the
/// share of genotype `i` among the offspring of genotypes `j` and `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InheritanceMatrices<T> {
    pub w1: SquareMatrix<T>,
    pub w2: SquareMatrix<T>,
    pub w3: SquareMatrix<T>,
}

impl<T: Scalar> InheritanceMatrices<T> {
    pub fn standard() -> Self {
        let l = T::lit;
        Self {
            w1: SquareMatrix::from_rows(&[
                [l(1.0), l(0.5), l(0.0)],
                [l(0.5), l(0.25), l(0.0)],
                [l(0.0), l(0.0), l(0.0)],
            ]),
            w2: SquareMatrix::from_rows(&[
                [l(0.0), l(0.5), l(1.0)],
                [l(0.5), l(0.5), l(0.5)],
                [l(1.0), l(0.5), l(0.0)],
            ]),
            w3: SquareMatrix::from_rows(&[
                [l(0.0), l(0.0), l(0.0)],
                [l(0.0), l(0.25), l(0.5)],
                [l(0.0), l(0.5), l(1.0)],
            ]),
        }
    }

    pub fn as_array(&self) -> [&SquareMatrix<T>; 3] {
        [&self.w1, &self.w2, &self.w3]
    }

    /// `(qᵀW₁q, qᵀW₂q, qᵀW₃q)`
    pub fn quadratic_forms(&self, q: &[T; 3]) -> [T; 3] {
        self.as_array().map(|w| w.quadratic_form(q))
    }

    /// Symmetry, entries in `[0, 1]`, and `W₁ + W₂ + W₃ = 1` entrywise.
    pub fn check(&self) -> Result<(), ModelError> {
        for (k, w) in self.as_array().into_iter().enumerate() {
            if !w.is_symmetric() {
                return Err(ModelError::Domain(format!("W{} is not symmetric", k + 1)));
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let entries = self.as_array().map(|w| w[(i, j)]);
                if entries.iter().any(|&x| x < T::zero() || x > T::one()) {
                    return Err(ModelError::Domain(format!("entry ({i}, {j}) outside [0, 1]")));
                }
                if entries[0] + entries[1] + entries[2] != T::one() {
                    return Err(ModelError::Domain(format!(
                        "entry ({i}, {j}) of W1 + W2 + W3 is not 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for InheritanceMatrices<T> {
    fn default() -> Self {
        Self::standard()
    }
}

/// Total growth rate `g(c_sum)` of the compartment model.
#[derive(Clone)]
pub struct GrowthFunction<T> {
    g: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Scalar> GrowthFunction<T> {
    /// Wraps `g` after checking `g(s) ≥ 0` on a sample of `s ∈ [0, 100]`.
    pub fn new(g: impl Fn(T) -> T + Send + Sync + 'static) -> Result<Self, ModelError> {
        for i in 0..=1000 {
            let s = T::lit(i as f64 * 0.1);
            let v = g(s);
            if !(v >= T::zero()) {
                return Err(ModelError::Domain(format!(
                    "growth function is negative or undefined at s = {:?}",
                    s
                )));
            }
        }
        Ok(Self { g: Arc::new(g) })
    }

    /// `g(s) = s`
    pub fn exponential() -> Self {
        Self { g: Arc::new(|s| s) }
    }

    pub fn eval(&self, s: T) -> T {
        (self.g)(s)
    }
}

impl<T: Scalar> Default for GrowthFunction<T> {
    fn default() -> Self {
        Self::exponential()
    }
}

impl<T> fmt::Debug for GrowthFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GrowthFunction")
    }
}

/// Mutation parameter `a ∈ (0, 1)` of the two-allele model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationParameter(f64);

impl MutationParameter {
    pub fn new(a: f64) -> Result<Self, ModelError> {
        if a > 0.0 && a < 1.0 {
            Ok(Self(a))
        } else {
            Err(ModelError::Domain(format!(
                "mutation parameter must lie in (0, 1), got {a}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn sum<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x)
}

/// Genotype compartment sizes: `c_i' = g(c_sum)/c_sum² · cᵀW_i c`.
pub fn rhs_compartments<T: Scalar>(c: &[T; 3], g: &GrowthFunction<T>) -> Result<[T; 3], ModelError> {
    let s = sum(c);
    if !(s > T::zero()) {
        return Err(ModelError::Domain(format!(
            "total population must be positive, got {:?}",
            s
        )));
    }
    let scale = g.eval(s).div_p(s * s);
    let forms = InheritanceMatrices::<T>::standard().quadratic_forms(c);
    Ok(forms.map(|x| scale * x))
}

/// Original three-genotype proportions, polynomial form.
pub fn rhs_proportions3<T: Scalar>(q: &[T; 3]) -> [T; 3] {
    let [q1, q2, q3] = *q;
    let (half, quarter, two) = (T::lit(0.5), T::lit(0.25), T::lit(2.0));
    [
        q1 * q1 + q1 * q2 + quarter * q2 * q2 - q1,
        half * q2 * q2 + q1 * q2 + two * q1 * q3 + q2 * q3 - q2,
        quarter * q2 * q2 + q2 * q3 + q3 * q3 - q3,
    ]
}

/// Original three-genotype proportions as `qᵀW_i q − q_i`.
pub fn rhs_proportions3_matrix<T: Scalar>(q: &[T; 3], w: &InheritanceMatrices<T>) -> [T; 3] {
    let forms = w.quadratic_forms(q);
    [forms[0] - q[0], forms[1] - q[1], forms[2] - q[2]]
}

pub fn jac_proportions3<T: Scalar>(q: &[T; 3]) -> SquareMatrix<T> {
    let [q1, q2, q3] = *q;
    let (one, half, two, zero) = (T::one(), T::lit(0.5), T::lit(2.0), T::zero());
    SquareMatrix::from_rows(&[
        [-one + two * q1 + q2, q1 + half * q2, zero],
        [q2 + two * q3, -one + q1 + q2 + q3, two * q1 + q2],
        [zero, half * q2 + q3, -one + q2 + two * q3],
    ])
}

/// Two-allele model with mutation,
/// `q₁' = a q₁² + q₁q₂ + (1−a) q₂² − q₁` and symmetrically for `q₂`.
///
/// Evaluated as `a(q₁² − q₂²) + q₂(q₁ + q₂) − q₁`, which is exactly zero on
/// the whole diagonal `q₁ = q₂` that contains the steady state (1/2, 1/2).
pub fn rhs_mutation2<T: Scalar>(q: &[T; 2], a: MutationParameter) -> [T; 2] {
    let [q1, q2] = *q;
    let a = T::lit(a.value());
    let d = q1 * q1 - q2 * q2;
    let s = q1 + q2;
    [a * d + q2 * s - q1, q1 * s - a * d - q2]
}

pub fn jac_mutation2<T: Scalar>(q: &[T; 2], a: MutationParameter) -> SquareMatrix<T> {
    let [q1, q2] = *q;
    let a = T::lit(a.value());
    let (one, two) = (T::one(), T::lit(2.0));
    let b = one - a;
    SquareMatrix::from_rows(&[
        [two * a * q1 + q2 - one, q1 + two * b * q2],
        [two * b * q1 + q2, q1 + two * a * q2 - one],
    ])
}

/// Modified two-allele model; its components cancel exactly.
pub fn rhs_modified2<T: Scalar>(q: &[T; 2], a: MutationParameter) -> [T; 2] {
    let [q1, q2] = *q;
    let d = (T::one() - T::lit(a.value())) * (q2 * q2 - q1 * q1);
    [d, -d]
}

pub fn jac_modified2<T: Scalar>(q: &[T; 2], a: MutationParameter) -> SquareMatrix<T> {
    let [q1, q2] = *q;
    let k = T::lit(2.0) * (T::one() - T::lit(a.value()));
    SquareMatrix::from_rows(&[[-k * q1, k * q2], [k * q1, -k * q2]])
}

/// Modified three-genotype model `(x, −2x, x)` with `x = q₂²/4 − q₁q₃`.
pub fn rhs_modified3<T: Scalar>(q: &[T; 3]) -> [T; 3] {
    let [q1, q2, q3] = *q;
    let x = T::lit(0.25) * q2 * q2 - q1 * q3;
    [x, -(x + x), x]
}

pub fn jac_modified3<T: Scalar>(q: &[T; 3]) -> SquareMatrix<T> {
    let [q1, q2, q3] = *q;
    let (half, two) = (T::lit(0.5), T::lit(2.0));
    SquareMatrix::from_rows(&[
        [-q3, half * q2, -q1],
        [two * q3, -q2, two * q1],
        [-q3, half * q2, -q1],
    ])
}

/// `u' = (1 + u) u` for the deviation `u = Σq − 1` of the original models.
pub fn rhs_deviation<T: Scalar>(u: T) -> T {
    (T::one() + u) * u
}

/// Blow-up time `ln((1 + u₀)/u₀)` of the deviation ODE, `None` unless `u₀ > 0`.
pub fn deviation_blowup_time<T: Scalar>(u0: T) -> Option<T> {
    (u0 > T::zero()).then(|| (T::one() + u0).div_p(u0).ln_p())
}

/// `u(t) = u₀ / (e^{−t}(1 + u₀) − u₀)`
pub fn deviation_analytic<T: Scalar>(u0: T, t: T) -> Result<T, ModelError> {
    if !(t >= T::zero()) {
        return Err(ModelError::Domain(format!(
            "time must be nonnegative, got {:?}",
            t
        )));
    }
    if let Some(t_star) = deviation_blowup_time(u0) {
        if t >= t_star {
            return Err(ModelError::BlowUp {
                t_star: t_star.as_f64(),
            });
        }
    }
    if u0 == T::zero() {
        return Ok(T::zero());
    }
    let denom = (-t).exp_p() * (T::one() + u0) - u0;
    Ok(u0.div_p(denom))
}

/// The ODE systems shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemId {
    Orig2,
    Mod2,
    Orig3,
    Mod3,
    Compartments,
    Deviation,
}

impl SystemId {
    pub const ALL: [SystemId; 6] = [
        SystemId::Orig2,
        SystemId::Mod2,
        SystemId::Orig3,
        SystemId::Mod3,
        SystemId::Compartments,
        SystemId::Deviation,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SystemId::Orig2 => "orig2",
            SystemId::Mod2 => "mod2",
            SystemId::Orig3 => "orig3",
            SystemId::Mod3 => "mod3",
            SystemId::Compartments => "compartments",
            SystemId::Deviation => "deviation",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SystemId::Orig2 | SystemId::Mod2 => 2,
            SystemId::Orig3 | SystemId::Mod3 | SystemId::Compartments => 3,
            SystemId::Deviation => 1,
        }
    }

    /// Whether the system takes the mutation parameter.
    pub fn uses_mutation(self) -> bool {
        matches!(self, SystemId::Orig2 | SystemId::Mod2)
    }

    /// Builds the system with the exponential growth function where needed.
    pub fn build<T: Scalar>(self, a: MutationParameter) -> OdeSystem<T> {
        match self {
            SystemId::Orig2 => mutation2_system(a),
            SystemId::Mod2 => modified2_system(a),
            SystemId::Orig3 => proportions3_system(),
            SystemId::Mod3 => modified3_system(),
            SystemId::Compartments => compartments_system(GrowthFunction::exponential()),
            SystemId::Deviation => deviation_system(),
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SystemId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SystemId::ALL.into_iter().find(|id| id.tag() == s).ok_or_else(|| {
            let names: Vec<_> = SystemId::ALL.iter().map(|id| id.tag()).collect();
            format!("unknown system `{s}` (expected one of {})", names.join(", "))
        })
    }
}

fn arr2<T: Scalar>(q: &[T]) -> [T; 2] {
    [q[0], q[1]]
}

fn arr3<T: Scalar>(q: &[T]) -> [T; 3] {
    [q[0], q[1], q[2]]
}

pub fn mutation2_system<T: Scalar>(a: MutationParameter) -> OdeSystem<T> {
    OdeSystem::new("orig2", 2, move |q: &[T], out: &mut [T]| {
        out.copy_from_slice(&rhs_mutation2(&arr2(q), a))
    })
    .with_jacobian(move |q: &[T]| jac_mutation2(&arr2(q), a))
}

pub fn modified2_system<T: Scalar>(a: MutationParameter) -> OdeSystem<T> {
    OdeSystem::new("mod2", 2, move |q: &[T], out: &mut [T]| {
        out.copy_from_slice(&rhs_modified2(&arr2(q), a))
    })
    .with_jacobian(move |q: &[T]| jac_modified2(&arr2(q), a))
}

pub fn proportions3_system<T: Scalar>() -> OdeSystem<T> {
    OdeSystem::new("orig3", 3, |q: &[T], out: &mut [T]| {
        out.copy_from_slice(&rhs_proportions3(&arr3(q)))
    })
    .with_jacobian(|q: &[T]| jac_proportions3(&arr3(q)))
}

pub fn modified3_system<T: Scalar>() -> OdeSystem<T> {
    OdeSystem::new("mod3", 3, |q: &[T], out: &mut [T]| {
        out.copy_from_slice(&rhs_modified3(&arr3(q)))
    })
    .with_jacobian(|q: &[T]| jac_modified3(&arr3(q)))
}

/// Compartment sizes. A non-positive total population evaluates to NaN,
/// which the integrator reports as a blow-up.
pub fn compartments_system<T: Scalar>(g: GrowthFunction<T>) -> OdeSystem<T> {
    OdeSystem::new(
        "compartments",
        3,
        move |c: &[T], out: &mut [T]| match rhs_compartments(&arr3(c), &g) {
            Ok(v) => out.copy_from_slice(&v),
            Err(_) => out.fill(T::nan()),
        },
    )
}

pub fn deviation_system<T: Scalar>() -> OdeSystem<T> {
    OdeSystem::new("deviation", 1, |u: &[T], out: &mut [T]| {
        out[0] = rhs_deviation(u[0])
    })
    .with_jacobian(|u: &[T]| SquareMatrix::from_rows(&[[T::one() + u[0] + u[0]]]))
}
