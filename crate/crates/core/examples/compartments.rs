//! Genotype compartment sizes under exponential growth, and the proportions
//! they imply.

use mendel_ode::models::{compartments_system, GrowthFunction};
use mendel_ode::{integrate, Method, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = compartments_system::<f64>(GrowthFunction::exponential());
    let c0 = [3.0, 1.0, 2.0];
    let traj = integrate(&system, &c0, &Method::Tsit5.tableau(), &SolverConfig::new(5.0))?;
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}",
        "t", "c1", "c2", "c3", "q1", "q2", "q3"
    );
    let stride = (traj.len() / 8).max(1);
    for (t, c) in traj.times.iter().zip(&traj.states).step_by(stride) {
        let s: f64 = c.iter().sum();
        println!(
            "{t:>6.2} {:>10.3} {:>10.3} {:>10.3} {:>8.4} {:>8.4} {:>8.4}",
            c[0],
            c[1],
            c[2],
            c[0] / s,
            c[1] / s,
            c[2] / s
        );
    }

    // a logistic total growth rate is just another closure
    let logistic = GrowthFunction::new(|s: f64| s * (10.0 - s).max(0.0))?;
    let traj = integrate(
        &compartments_system(logistic),
        &c0,
        &Method::Dp5.tableau(),
        &SolverConfig::new(20.0),
    )?;
    println!("logistic: final sizes {:?}", traj.last_state().unwrap());
    Ok(())
}
