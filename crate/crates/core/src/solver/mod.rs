//! Adaptive integration with embedded explicit Runge-Kutta pairs.

mod controller;
mod convergence;
mod system;

use serde::{Deserialize, Serialize};

pub use controller::PiController;
pub use convergence::{estimate_convergence_order, integrate_fixed_step, ConvergenceEstimate};
pub use system::{central_difference_jacobian, OdeSystem};

use crate::scalar::Scalar;
use crate::tableau::{ButcherTableau, RkCoefficients};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("state has length {got}, system `{system}` expects {expected}")]
    DimensionMismatch {
        system: String,
        expected: usize,
        got: usize,
    },
    #[error("error norm of an empty state")]
    EmptyState,
    #[error("right-hand side of `{system}` is not finite at the initial state")]
    Evaluation { system: String },
    #[error("fixed-step run with h = {h} produced non-finite values")]
    NonFiniteFixedStep { h: f64 },
    #[error("convergence estimate needs {0}")]
    Convergence(String),
}

/// Integration controls. Tolerances and times are plain `f64` for every
/// working precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub abstol: f64,
    pub reltol: f64,
    pub t0: f64,
    pub t_end: f64,
    /// Chosen automatically when absent.
    pub initial_step: Option<f64>,
    /// Limit on attempted (accepted + rejected) steps.
    pub max_steps: usize,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    /// Sup-norm bound beyond which an accepted state counts as blown up.
    pub blowup_threshold: f64,
    /// Defaults to `16 · eps · max(|t|, 1)` for the working precision.
    pub min_step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-8,
            reltol: 1e-8,
            t0: 0.0,
            t_end: 1.0,
            initial_step: None,
            max_steps: 10_000_000,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 10.0,
            blowup_threshold: 1e6,
            min_step: None,
        }
    }
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, abstol: f64, reltol: f64) -> Self {
        self.abstol = abstol;
        self.reltol = reltol;
        self
    }

    pub fn with_span(mut self, t0: f64, t_end: f64) -> Self {
        self.t0 = t0;
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.abstol > 0.0 && self.reltol > 0.0) {
            return bad(format!(
                "tolerances must be positive (abstol {}, reltol {})",
                self.abstol, self.reltol
            ));
        }
        if !(self.t0.is_finite() && self.t_end.is_finite() && self.t0 < self.t_end) {
            return bad(format!(
                "need finite t0 < t_end, got [{}, {}]",
                self.t0, self.t_end
            ));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("initial step must be positive, got {h}"));
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad(format!("safety factor must lie in (0, 1), got {}", self.safety));
        }
        if !(self.min_factor > 0.0 && self.min_factor < 1.0 && self.max_factor > 1.0) {
            return bad(format!(
                "need 0 < min_factor < 1 < max_factor, got {} and {}",
                self.min_factor, self.max_factor
            ));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blow-up threshold must be positive".into());
        }
        if let Some(h) = self.min_step {
            if !(h > 0.0) {
                return bad(format!("min_step must be positive, got {h}"));
            }
        }
        Ok(())
    }
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    /// Non-finite values or a state beyond the blow-up threshold.
    BlowUp {
        t: f64,
    },
    StepUnderflow {
        t: f64,
    },
    MaxSteps {
        t: f64,
    },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedTEnd => "reached_t_end",
            Termination::BlowUp { .. } => "blow_up",
            Termination::StepUnderflow { .. } => "step_underflow",
            Termination::MaxSteps { .. } => "max_steps",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            Termination::ReachedTEnd => None,
            Termination::BlowUp { t } | Termination::StepUnderflow { t } | Termination::MaxSteps { t } => {
                Some(t)
            }
        }
    }
}

/// Accepted step points of a run, starting with the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub dim: usize,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub n_rhs_evals: usize,
    pub termination: Termination,
}

impl<T: Scalar> Trajectory<T> {
    fn empty(dim: usize) -> Self {
        Self {
            dim,
            times: Vec::new(),
            states: Vec::new(),
            n_accepted: 0,
            n_rejected: 0,
            n_rhs_evals: 0,
            termination: Termination::ReachedTEnd,
        }
    }

    /// A trajectory for a run that failed before producing any state.
    pub fn failed_immediately(dim: usize, termination: Termination) -> Self {
        Self {
            termination,
            ..Self::empty(dim)
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[T]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn last_time(&self) -> Option<T> {
        self.times.last().copied()
    }

    /// `Σ_i q_i` at every stored point.
    pub fn sums(&self) -> Vec<T> {
        self.states
            .iter()
            .map(|q| q.iter().fold(T::zero(), |acc, &x| acc + x))
            .collect()
    }

    fn push(&mut self, t: T, q: &[T]) {
        self.times.push(t);
        self.states.push(q.to_vec());
    }
}

fn all_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// Mixed-tolerance weighted RMS norm
/// `sqrt(mean((err_i / (abstol + reltol · max(|y_old_i|, |y_new_i|)))²))`.
pub fn error_norm<T: Scalar>(
    err: &[T],
    y_old: &[T],
    y_new: &[T],
    abstol: f64,
    reltol: f64,
) -> Result<T, SolverError> {
    let n = err.len();
    if n == 0 {
        return Err(SolverError::EmptyState);
    }
    assert!(
        y_old.len() == n && y_new.len() == n,
        "error_norm: length mismatch"
    );
    let (atol, rtol) = (T::lit(abstol), T::lit(reltol));
    let sum = err
        .iter()
        .zip(y_old.iter().zip(y_new))
        .fold(T::zero(), |acc, (&e, (&a, &b))| {
            let ratio = e / (atol + rtol * a.abs().max(b.abs()));
            acc + ratio * ratio
        });
    Ok((sum / T::lit(n as f64)).sqrt())
}

/// Step returned by [`initial_step`] when the derivative scale is degenerate.
pub const INITIAL_STEP_FLOOR: f64 = 1e-6;

/// Starting step from the usual two-evaluation heuristic: compare the scaled
/// sizes of `q0` and `f(q0)`, take an explicit Euler probe, and measure the
/// scaled change of `f`. The result is capped at `span`.
///
/// When both `q0` and `f(q0)` are tiny on the tolerance scale (for example at
/// a steady state) the probe step is [`INITIAL_STEP_FLOOR`].
pub fn initial_step<T: Scalar>(
    system: &OdeSystem<T>,
    q0: &[T],
    abstol: f64,
    reltol: f64,
    order: u32,
    span: f64,
) -> Result<f64, SolverError> {
    check_dim(system, q0)?;
    let f0 = system.eval(q0);
    if !all_finite(&f0) {
        return Err(SolverError::Evaluation {
            system: system.name().to_string(),
        });
    }
    Ok(initial_step_from(system, q0, &f0, abstol, reltol, order, span))
}

fn initial_step_from<T: Scalar>(
    system: &OdeSystem<T>,
    q0: &[T],
    f0: &[T],
    abstol: f64,
    reltol: f64,
    order: u32,
    span: f64,
) -> f64 {
    let scaled_rms = |v: &[T]| -> f64 {
        let sum: f64 = v
            .iter()
            .zip(q0)
            .map(|(x, y)| {
                let r = x.as_f64() / (abstol + reltol * y.as_f64().abs());
                r * r
            })
            .sum();
        (sum / v.len() as f64).sqrt()
    };
    let d0 = scaled_rms(q0);
    let d1 = scaled_rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        INITIAL_STEP_FLOOR
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let hh = T::lit(h0);
    let probe: Vec<T> = q0.iter().zip(f0).map(|(&q, &f)| q + hh * f).collect();
    let f1 = system.eval(&probe);
    let diff: Vec<T> = f1.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = scaled_rms(&diff) / h0;
    let h1 = if !d2.is_finite() {
        h0
    } else if d1.max(d2) <= 1e-15 {
        INITIAL_STEP_FLOOR.max(h0 * 1e-3)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    (100.0 * h0).min(h1).min(span)
}

fn check_dim<T: Scalar>(system: &OdeSystem<T>, q: &[T]) -> Result<(), SolverError> {
    if q.len() != system.dim() {
        return Err(SolverError::DimensionMismatch {
            system: system.name().to_string(),
            expected: system.dim(),
            got: q.len(),
        });
    }
    Ok(())
}

/// Scratch space for one Runge-Kutta step.
struct StepWork<T> {
    k: Vec<Vec<T>>,
    stage: Vec<T>,
    y_new: Vec<T>,
    err: Vec<T>,
}

impl<T: Scalar> StepWork<T> {
    fn new(stages: usize, dim: usize) -> Self {
        Self {
            k: vec![vec![T::zero(); dim]; stages],
            stage: vec![T::zero(); dim],
            y_new: vec![T::zero(); dim],
            err: vec![T::zero(); dim],
        }
    }

    /// Evaluates stages 1.. (stage 0 must already hold `f(y)`), then forms the
    /// new solution and the local error estimate. Returns `false` as soon as
    /// any stage value or derivative is non-finite.
    fn attempt(
        &mut self,
        system: &OdeSystem<T>,
        co: &RkCoefficients<T>,
        y: &[T],
        h: T,
        evals: &mut usize,
    ) -> bool {
        let s = co.stages();
        let dim = y.len();
        for i in 1..s {
            for (d, (out, &yd)) in self.stage.iter_mut().zip(y).enumerate() {
                let incr = co.a[i]
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (j, &a)| acc + a * self.k[j][d]);
                *out = yd + h * incr;
            }
            if !all_finite(&self.stage) {
                return false;
            }
            system.eval_into(&self.stage, &mut self.k[i]);
            *evals += 1;
            if !all_finite(&self.k[i]) {
                return false;
            }
        }
        if co.fsal {
            // the last stage was evaluated at the new solution
            self.y_new.copy_from_slice(&self.stage);
        } else {
            for (d, (out, &yd)) in self.y_new.iter_mut().zip(y).enumerate() {
                let incr =
                    co.b.iter()
                        .enumerate()
                        .fold(T::zero(), |acc, (j, &b)| acc + b * self.k[j][d]);
                *out = yd + h * incr;
            }
        }
        for d in 0..dim {
            let e = co
                .err
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (j, &w)| acc + w * self.k[j][d]);
            self.err[d] = h * e;
        }
        all_finite(&self.y_new)
    }
}

/// Integrates `q' = f(q)` from `cfg.t0` to `cfg.t_end`.
///
/// Only accepted step points are recorded; the last step is shortened to
/// land exactly on `t_end`. Non-finite stage values, non-finite derivatives,
/// and accepted states beyond `cfg.blowup_threshold` end the run with
/// [`Termination::BlowUp`] at the last accepted time.
pub fn integrate<T: Scalar>(
    system: &OdeSystem<T>,
    q0: &[T],
    tbl: &ButcherTableau,
    cfg: &SolverConfig,
) -> Result<Trajectory<T>, SolverError> {
    cfg.validate()?;
    check_dim(system, q0)?;
    let co = tbl.coefficients::<T>();
    let dim = system.dim();
    let mut traj = Trajectory::empty(dim);

    if !all_finite(q0) {
        traj.termination = Termination::BlowUp { t: cfg.t0 };
        return Ok(traj);
    }
    let t0 = T::lit(cfg.t0);
    let t_end = T::lit(cfg.t_end);
    traj.push(t0, q0);

    let mut work = StepWork::new(co.stages(), dim);
    system.eval_into(q0, &mut work.k[0]);
    traj.n_rhs_evals += 1;
    if !all_finite(&work.k[0]) || sup_norm(q0).as_f64() > cfg.blowup_threshold {
        traj.termination = Termination::BlowUp { t: cfg.t0 };
        return Ok(traj);
    }

    let span = cfg.t_end - cfg.t0;
    let mut h = match cfg.initial_step {
        Some(h) => h.min(span),
        None => initial_step_from(system, q0, &work.k[0], cfg.abstol, cfg.reltol, co.order, span),
    };
    let mut controller = PiController::new(co.embedded_order, cfg.safety, cfg.min_factor, cfg.max_factor);
    let eps = T::unit_roundoff();
    let mut y = q0.to_vec();
    let mut t = t0;
    let mut attempts = 0usize;

    traj.termination = loop {
        if t >= t_end {
            break Termination::ReachedTEnd;
        }
        let t_f64 = t.as_f64();
        if attempts >= cfg.max_steps {
            break Termination::MaxSteps { t: t_f64 };
        }
        let min_step = cfg.min_step.unwrap_or(16.0 * eps * t_f64.abs().max(1.0));
        if !(h >= min_step) {
            break Termination::StepUnderflow { t: t_f64 };
        }
        let remaining = t_end - t;
        let (h_step, last) = if T::lit(h) >= remaining {
            (remaining, true)
        } else {
            (T::lit(h), false)
        };
        attempts += 1;

        if !work.attempt(system, &co, &y, h_step, &mut traj.n_rhs_evals) {
            break Termination::BlowUp { t: t_f64 };
        }
        let norm = error_norm(&work.err, &y, &work.y_new, cfg.abstol, cfg.reltol)?.as_f64();
        if norm <= 1.0 {
            t = if last { t_end } else { t + h_step };
            std::mem::swap(&mut y, &mut work.y_new);
            if co.fsal {
                let s = co.stages();
                work.k.swap(0, s - 1);
            } else {
                system.eval_into(&y, &mut work.k[0]);
                traj.n_rhs_evals += 1;
            }
            traj.push(t, &y);
            traj.n_accepted += 1;
            if sup_norm(&y).as_f64() > cfg.blowup_threshold || !all_finite(&work.k[0]) {
                break Termination::BlowUp { t: t.as_f64() };
            }
            h = h_step.as_f64() * controller.accept(norm);
        } else {
            traj.n_rejected += 1;
            h = h_step.as_f64() * controller.reject(norm);
        }
    };
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{tableau_dp5, tableau_tsit5, tableau_vern6};

    fn decay() -> OdeSystem<f64> {
        OdeSystem::new("decay", 1, |q: &[f64], out: &mut [f64]| out[0] = -q[0])
    }

    #[test]
    fn error_norm_examples() {
        assert_eq!(
            error_norm(&[0.0; 3], &[1.0, 2.0, 3.0], &[1.0; 3], 1e-3, 1e-3).unwrap(),
            0.0
        );
        let a = 3e-7;
        assert!((error_norm(&[a], &[0.0], &[0.0], a, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let v: f64 = error_norm(&[1e-8, 1e-8], &[1.0, 1.0], &[1.0, 1.0], 1e-8, 1e-8).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(
            error_norm::<f64>(&[], &[], &[], 1.0, 1.0),
            Err(SolverError::EmptyState)
        );
    }

    #[test]
    fn error_norm_uses_the_larger_magnitude() {
        let v: f64 = error_norm(&[1.0], &[0.0], &[-3.0], 0.0 + 1e-300, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn initial_step_for_linear_decay_is_bracketed() {
        let h = initial_step(&decay(), &[1.0], 1e-8, 1e-8, 5, 1.0).unwrap();
        assert!(h > 1e-6 && h < 1e-1, "{h}");
    }

    #[test]
    fn initial_step_degenerate_derivative_uses_floor() {
        let zero = OdeSystem::<f64>::new("zero", 2, |_, out| out.fill(0.0));
        let h = initial_step(&zero, &[2.0, 0.0], 1e-8, 1e-8, 5, 10.0).unwrap();
        assert_eq!(h, INITIAL_STEP_FLOOR);
    }

    #[test]
    fn initial_step_never_exceeds_span() {
        let h = initial_step(&decay(), &[1.0], 1e-2, 1e-2, 5, 1e-3).unwrap();
        assert!(h <= 1e-3);
    }

    #[test]
    fn initial_step_rejects_non_finite_derivative() {
        let bad = OdeSystem::<f64>::new("bad", 1, |_, out| out[0] = f64::NAN);
        assert!(matches!(
            initial_step(&bad, &[1.0], 1e-8, 1e-8, 5, 1.0),
            Err(SolverError::Evaluation { .. })
        ));
    }

    #[test]
    fn linear_decay_matches_exponential() {
        for tbl in [tableau_tsit5(), tableau_dp5(), tableau_vern6()] {
            let traj = integrate(&decay(), &[1.0], &tbl, &SolverConfig::new(1.0)).unwrap();
            assert_eq!(traj.termination, Termination::ReachedTEnd);
            assert_eq!(traj.last_time(), Some(1.0));
            let y = traj.last_state().unwrap()[0];
            assert!((y - (-1.0f64).exp()).abs() < 1e-7, "{}: {y}", tbl.name);
            assert_eq!(traj.n_accepted + 1, traj.len());
        }
    }

    #[test]
    fn times_strictly_increase_and_states_are_finite() {
        let osc = OdeSystem::<f64>::new("osc", 2, |q, out| {
            out[0] = q[1];
            out[1] = -q[0];
        });
        let traj = integrate(&osc, &[1.0, 0.0], &tableau_tsit5(), &SolverConfig::new(20.0)).unwrap();
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert!(traj.states.iter().all(|q| q.iter().all(|x| x.is_finite())));
        let q = traj.last_state().unwrap();
        assert!((q[0] - 20f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn finite_time_blow_up_terminates_cleanly() {
        let riccati = OdeSystem::<f64>::new("riccati", 1, |q, out| out[0] = q[0] * q[0]);
        // exact solution 1/(1 - t) blows up at t = 1
        let traj = integrate(&riccati, &[1.0], &tableau_tsit5(), &SolverConfig::new(2.0)).unwrap();
        let Termination::BlowUp { t } = traj.termination else {
            panic!("expected blow-up, got {:?}", traj.termination);
        };
        assert!(t < 1.0 && t > 0.99);
        assert_eq!(traj.last_time(), Some(t));
    }

    #[test]
    fn non_finite_rhs_is_a_blow_up_not_a_panic() {
        let bad = OdeSystem::<f64>::new("nan", 1, |q, out| {
            out[0] = if q[0] > 1.5 { f64::NAN } else { 1.0 }
        });
        let traj = integrate(&bad, &[1.0], &tableau_dp5(), &SolverConfig::new(5.0)).unwrap();
        assert!(matches!(traj.termination, Termination::BlowUp { .. }));
        assert_eq!(traj.termination.time(), traj.last_time());
    }

    #[test]
    fn non_finite_initial_state_gives_empty_trajectory() {
        let traj = integrate(&decay(), &[f64::NAN], &tableau_dp5(), &SolverConfig::new(1.0)).unwrap();
        assert!(traj.is_empty());
        assert_eq!(traj.termination, Termination::BlowUp { t: 0.0 });
    }

    #[test]
    fn step_limit_and_underflow() {
        let cfg = SolverConfig {
            max_steps: 3,
            ..SolverConfig::new(100.0)
        };
        let traj = integrate(&decay(), &[1.0], &tableau_tsit5(), &cfg).unwrap();
        assert!(matches!(traj.termination, Termination::MaxSteps { .. }));

        let cfg = SolverConfig {
            min_step: Some(1.0),
            initial_step: Some(0.5),
            ..SolverConfig::new(10.0)
        };
        let traj = integrate(&decay(), &[1.0], &tableau_tsit5(), &cfg).unwrap();
        assert_eq!(traj.termination, Termination::StepUnderflow { t: 0.0 });
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(1.0).validate().is_ok());
        let bad = [
            SolverConfig::new(1.0).with_tolerances(0.0, 1e-8),
            SolverConfig::new(1.0).with_span(2.0, 1.0),
            SolverConfig {
                safety: 1.5,
                ..SolverConfig::new(1.0)
            },
            SolverConfig {
                min_factor: 1.5,
                ..SolverConfig::new(1.0)
            },
            SolverConfig {
                max_factor: 0.5,
                ..SolverConfig::new(1.0)
            },
            SolverConfig {
                max_steps: 0,
                ..SolverConfig::new(1.0)
            },
            SolverConfig {
                initial_step: Some(-1.0),
                ..SolverConfig::new(1.0)
            },
        ];
        for cfg in bad {
            assert!(
                matches!(cfg.validate(), Err(SolverError::InvalidConfig(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = integrate(&decay(), &[1.0, 2.0], &tableau_dp5(), &SolverConfig::new(1.0)).unwrap_err();
        assert!(matches!(
            err,
            SolverError::DimensionMismatch {
                expected: 1,
                got: 2,
                ..
            }
        ));
    }

    #[test]
    fn f32_runs_too() {
        let sys = OdeSystem::<f32>::new("decay32", 1, |q, out| out[0] = -q[0]);
        let cfg = SolverConfig::new(1.0).with_tolerances(1e-6, 1e-6);
        let traj = integrate(&sys, &[1.0f32], &tableau_tsit5(), &cfg).unwrap();
        assert_eq!(traj.termination, Termination::ReachedTEnd);
        assert!((traj.last_state().unwrap()[0] - (-1.0f32).exp()).abs() < 1e-5);
    }
}
