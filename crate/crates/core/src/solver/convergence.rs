use super::{check_dim, OdeSystem, SolverError, StepWork};
use crate::scalar::Scalar;
use crate::tableau::ButcherTableau;

/// Integrates with `n_steps` equal steps of the main method and returns the
/// final state. The embedded error estimate is ignored.
pub fn integrate_fixed_step<T: Scalar>(
    system: &OdeSystem<T>,
    q0: &[T],
    tbl: &ButcherTableau,
    t0: T,
    t_end: T,
    n_steps: usize,
) -> Result<Vec<T>, SolverError> {
    check_dim(system, q0)?;
    if n_steps == 0 || !(t_end > t0) {
        return Err(SolverError::InvalidConfig(format!(
            "fixed-step run needs t0 < t_end and at least one step (got {n_steps})"
        )));
    }
    let co = tbl.coefficients::<T>();
    let h = (t_end - t0).div_p(T::lit(n_steps as f64));
    let mut work = StepWork::new(co.stages(), system.dim());
    let mut y = q0.to_vec();
    let mut evals = 0;
    system.eval_into(&y, &mut work.k[0]);
    for _ in 0..n_steps {
        if !work.attempt(system, &co, &y, h, &mut evals) {
            return Err(SolverError::NonFiniteFixedStep { h: h.as_f64() });
        }
        std::mem::swap(&mut y, &mut work.y_new);
        if co.fsal {
            let s = co.stages();
            work.k.swap(0, s - 1);
        } else {
            system.eval_into(&y, &mut work.k[0]);
        }
    }
    Ok(y)
}

/// Observed order from a fixed-step refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEstimate {
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub order: f64,
    /// `(h, max-norm error at t_end)` for each step size.
    pub samples: Vec<(f64, f64)>,
}

/// Runs [`integrate_fixed_step`] for every step size in `steps` and fits the
/// slope of `log(error)` against `log(h)`. Each `h` must divide `t_end - t0`
/// into a whole number of steps.
pub fn estimate_convergence_order<T: Scalar>(
    system: &OdeSystem<T>,
    q0: &[T],
    exact: impl Fn(T) -> Vec<T>,
    tbl: &ButcherTableau,
    t0: f64,
    t_end: f64,
    steps: &[f64],
) -> Result<ConvergenceEstimate, SolverError> {
    if steps.len() < 3 {
        return Err(SolverError::Convergence(format!(
            "at least three step sizes, got {}",
            steps.len()
        )));
    }
    let span = t_end - t0;
    let (t0t, t_endt) = (T::lit(t0), T::lit(t_end));
    let reference = exact(t_endt);
    let mut samples = Vec::with_capacity(steps.len());
    for &h in steps {
        let n = (span / h).round();
        if !(h > 0.0) || n < 1.0 || ((n * h - span) / span).abs() > 1e-9 {
            return Err(SolverError::Convergence(format!(
                "step sizes dividing the interval evenly, {h} does not"
            )));
        }
        let y = integrate_fixed_step(system, q0, tbl, t0t, t_endt, n as usize)?;
        let err = y
            .iter()
            .zip(&reference)
            .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs().as_f64()));
        if !(err > 0.0 && err.is_finite()) {
            return Err(SolverError::Convergence(format!(
                "a positive finite error at every step size, got {err:e} at h = {h}"
            )));
        }
        samples.push((h, err));
    }
    let m = samples.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(SolverError::Convergence("distinct step sizes".into()));
    }
    Ok(ConvergenceEstimate {
        order: sxy / sxx,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{tableau_dp5, tableau_tsit5};

    fn decay() -> OdeSystem<f64> {
        OdeSystem::new("decay", 1, |q: &[f64], out: &mut [f64]| out[0] = -q[0])
    }

    #[test]
    fn fifth_order_methods_show_order_five() {
        let steps = [0.1, 0.05, 0.025, 0.0125];
        for tbl in [tableau_tsit5(), tableau_dp5()] {
            let est = estimate_convergence_order(
                &decay(),
                &[1.0],
                |t: f64| vec![(-t).exp()],
                &tbl,
                0.0,
                1.0,
                &steps,
            )
            .unwrap();
            assert!((est.order - 5.0).abs() <= 0.3, "{}: {}", tbl.name, est.order);
        }
    }

    #[test]
    fn too_few_or_uneven_steps_are_rejected() {
        let tbl = tableau_dp5();
        let exact = |t: f64| vec![(-t).exp()];
        assert!(estimate_convergence_order(&decay(), &[1.0], exact, &tbl, 0.0, 1.0, &[0.1, 0.05]).is_err());
        assert!(
            estimate_convergence_order(&decay(), &[1.0], exact, &tbl, 0.0, 1.0, &[0.3, 0.1, 0.05]).is_err()
        );
    }

    #[test]
    fn fixed_step_single_step_matches_taylor() {
        let y = integrate_fixed_step(&decay(), &[1.0], &tableau_dp5(), 0.0, 0.01, 1).unwrap();
        assert!((y[0] - (-0.01f64).exp()).abs() < 1e-13);
    }
}
