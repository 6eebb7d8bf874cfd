//! The same unstable run in binary32, binary64 and double-double: the onset
//! of the deviation moves later as the working precision grows.
//!
//! `cargo run --example precision_study`

use mendel_ode::experiments::{precision_study_tolerance, run_simulation, PresetId};
use mendel_ode::{Method, Precision};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for method in [Method::Tsit5, Method::Dp5] {
        println!("{method}");
        for precision in Precision::ALL {
            if !precision.is_available() {
                println!("  {precision:<4} skipped (build without the `extended` feature)");
                continue;
            }
            let mut sim = PresetId::Fig5.simulation(precision)?;
            sim.method = method;
            let out = run_simulation(&sim)?;
            println!(
                "  {:<4} tol {:>5.0e}  {:<16} t = {:>7.3}  {:>5} steps  {:>6.3}s  {}",
                precision.tag(),
                precision_study_tolerance(precision),
                out.event.kind.tag(),
                out.event.time,
                out.trajectory.n_accepted(),
                out.wall_time,
                out.trajectory.termination().label(),
            );
        }
    }
    Ok(())
}
