//! `u' = (1 + u) u` integrated against its closed form, up to and past the
//! blow-up time.

use mendel_ode::models::{deviation_analytic, deviation_blowup_time, deviation_system};
use mendel_ode::{integrate, Method, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u0 = 0.1;
    let t_star = deviation_blowup_time(u0).unwrap();
    println!("u0 = {u0}, t* = ln 11 = {t_star:.15}");
    let system = deviation_system::<f64>();
    let cfg = SolverConfig::new(0.9 * t_star).with_tolerances(1e-8, 1e-8);
    let traj = integrate(&system, &[u0], &Method::Tsit5.tableau(), &cfg)?;
    let mut worst: f64 = 0.0;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let exact = deviation_analytic(u0, *t)?;
        worst = worst.max((u[0] - exact).abs() / exact.abs().max(1.0));
    }
    println!(
        "to 0.9 t*: {} steps, worst scaled error {worst:.2e}",
        traj.n_accepted
    );

    let past = SolverConfig::new(2.0 * t_star).with_tolerances(1e-8, 1e-8);
    let traj = integrate(&system, &[u0], &Method::Tsit5.tableau(), &past)?;
    println!(
        "to 2 t*: {} at t = {:.6}",
        traj.termination.label(),
        traj.termination.time().unwrap_or(f64::NAN)
    );
    println!(
        "closed form past t*: {}",
        deviation_analytic(u0, 2.5).unwrap_err()
    );
    Ok(())
}
