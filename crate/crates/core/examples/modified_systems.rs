//! The reformulated models keep `Σq` fixed to roundoff and settle on their
//! predicted steady states.

use mendel_ode::analysis::{hardy_weinberg_limit, modified2_limit};
use mendel_ode::experiments::{run_preset, PresetId};
use mendel_ode::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let two = run_preset(PresetId::Fig8TwoComponent, Precision::F64)?;
    let q = two.trajectory.last_state_f64().unwrap();
    let q0 = &two.simulation.q0;
    println!("two alleles from {q0:?}");
    println!("  final   {q:?}");
    println!("  limit   {:?}", modified2_limit(&[q0[0], q0[1]]));
    println!("  max |Σq - Σq(0)| = {:.1e}", two.trajectory.max_sum_drift());

    let three = run_preset(PresetId::Fig8ThreeComponent, Precision::F64)?;
    let q = three.trajectory.last_state_f64().unwrap();
    let q0 = &three.simulation.q0;
    println!("three genotypes from {q0:?}");
    println!("  final   {q:?}");
    println!("  limit   {:?}", hardy_weinberg_limit(&[q0[0], q0[1], q0[2]])?);
    println!("  q3 - q2²/(4 q1) = {:.1e}", q[2] - q[1] * q[1] / (4.0 * q[0]));
    println!("  max |Σq - Σq(0)| = {:.1e}", three.trajectory.max_sum_drift());
    Ok(())
}
