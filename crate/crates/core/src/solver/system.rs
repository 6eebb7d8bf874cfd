use std::fmt;
use std::sync::Arc;

use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

type RhsFn<T> = dyn Fn(&[T], &mut [T]) + Send + Sync;
type JacFn<T> = dyn Fn(&[T]) -> SquareMatrix<T> + Send + Sync;

/// Autonomous ODE `q' = f(q)` with an optional closed-form Jacobian.
///
/// Evaluators are shared behind `Arc`, so cloning a system is cheap and
/// clones may be used from several threads at once.
#[derive(Clone)]
pub struct OdeSystem<T> {
    name: String,
    dim: usize,
    rhs: Arc<RhsFn<T>>,
    jac: Option<Arc<JacFn<T>>>,
}

impl<T: Scalar> OdeSystem<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        rhs: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "an ODE system needs at least one component");
        Self {
            name: name.into(),
            dim,
            rhs: Arc::new(rhs),
            jac: None,
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[T]) -> SquareMatrix<T> + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    /// Same system with the closed-form Jacobian dropped.
    pub fn without_jacobian(mut self) -> Self {
        self.jac = None;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    /// Writes `f(q)` into `out`. Both slices must have length `dim`.
    pub fn eval_into(&self, q: &[T], out: &mut [T]) {
        debug_assert_eq!(q.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.rhs)(q, out)
    }

    pub fn eval(&self, q: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(q, &mut out);
        out
    }

    /// Closed-form Jacobian, when the system carries one.
    pub fn jacobian(&self, q: &[T]) -> Option<SquareMatrix<T>> {
        self.jac.as_ref().map(|j| j(q))
    }

    /// Closed-form Jacobian if present, central differences with step `h`
    /// otherwise.
    pub fn jacobian_or_fd(&self, q: &[T], h: T) -> SquareMatrix<T> {
        self.jacobian(q)
            .unwrap_or_else(|| central_difference_jacobian(self, q, h))
    }
}

impl<T> fmt::Debug for OdeSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("jacobian", &self.jac.is_some())
            .finish()
    }
}

/// `J_ij ≈ (f_i(q + h e_j) - f_i(q - h e_j)) / 2h`
pub fn central_difference_jacobian<T: Scalar>(system: &OdeSystem<T>, q: &[T], h: T) -> SquareMatrix<T> {
    let n = system.dim();
    let mut jac = SquareMatrix::zeros(n);
    let mut probe = q.to_vec();
    let mut plus = vec![T::zero(); n];
    let mut minus = vec![T::zero(); n];
    let two_h = h + h;
    for j in 0..n {
        probe[j] = q[j] + h;
        system.eval_into(&probe, &mut plus);
        probe[j] = q[j] - h;
        system.eval_into(&probe, &mut minus);
        probe[j] = q[j];
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / two_h;
        }
    }
    jac
}
