//! Runs the original models until roundoff pushes them off the manifold
//! `Σq = 1`, with each method.

use mendel_ode::experiments::{run_simulation, PresetId};
use mendel_ode::{Method, Precision};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs = [
        (PresetId::Fig1, None),
        (PresetId::Fig2, None),
        (PresetId::Fig4, None),
        (PresetId::Fig4, Some(Method::Vern6)),
        (PresetId::Fig4, Some(Method::Dp5)),
    ];
    println!(
        "{:<8} {:<6} {:<18} {:>10} {:>12} {:>9} {:>8}",
        "preset", "method", "event", "t_event", "closest", "accepted", "secs"
    );
    for (id, method) in runs {
        let mut sim = id.simulation(Precision::F64)?;
        if let Some(m) = method {
            sim.method = m;
        }
        let out = run_simulation(&sim)?;
        println!(
            "{:<8} {:<6} {:<18} {:>10.3} {:>12.3e} {:>9} {:>8.3}",
            id.tag(),
            sim.method.tag(),
            out.event.kind.tag(),
            out.event.time,
            out.closest_approach.unwrap_or(f64::NAN),
            out.trajectory.n_accepted(),
            out.wall_time,
        );
    }
    Ok(())
}
