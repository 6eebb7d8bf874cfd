//! Observed order of each pair on `y' = −y`, from fixed-step refinement.

use mendel_ode::solver::estimate_convergence_order;
use mendel_ode::{Method, OdeSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let decay = OdeSystem::new("decay", 1, |y: &[f64], out: &mut [f64]| out[0] = -y[0]);
    let steps = [0.1, 0.05, 0.025, 0.0125];
    for m in Method::ALL {
        let est = estimate_convergence_order(
            &decay,
            &[1.0],
            |t: f64| vec![(-t).exp()],
            &m.tableau(),
            0.0,
            1.0,
            &steps,
        )?;
        println!("{m:<6} binary64  order {:.3}", est.order);
        for (h, e) in est.samples {
            println!("         h = {h:<7} error {e:.3e}");
        }
    }
    // vern6 reaches roundoff in binary64 at these steps; double-double shows the
    // asymptotic rate
    #[cfg(feature = "extended")]
    {
        use mendel_ode::scalar::{Extended, Scalar};
        let decay = OdeSystem::new("decay", 1, |y: &[Extended], out: &mut [Extended]| out[0] = -y[0]);
        let fine = [1.0 / 80.0, 1.0 / 160.0, 1.0 / 320.0, 1.0 / 640.0];
        let est = estimate_convergence_order(
            &decay,
            &[Extended::lit(1.0)],
            |t: Extended| vec![(-t).exp_p()],
            &Method::Vern6.tableau(),
            0.0,
            1.0,
            &fine,
        )?;
        println!("vern6  extended  order {:.3}", est.order);
    }
    Ok(())
}
