//! Turns the second integral `Σq − 1` of the original models into a first
//! integral, two ways, and compares with the shipped modified models.

use mendel_ode::analysis::{
    first_integral_residual, reformulate_projection, reformulate_state_scaled, AffineFunctional, ScalarField,
};
use mendel_ode::experiments::reformulation_check;
use mendel_ode::models::{proportions3_system, MutationParameter, SystemId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = MutationParameter::new(0.7)?;
    for id in [SystemId::Orig2, SystemId::Orig3] {
        let r = reformulation_check(id, a, 10_000, 1)?;
        println!("{id}: {}", serde_json::to_string_pretty(&r)?);
    }

    // the operators work on any system with an affine second integral
    let f = proportions3_system::<f64>();
    let j = AffineFunctional::deviation(3);
    let projected = reformulate_projection(&f, &j, &ScalarField::sum())?;
    let scaled = reformulate_state_scaled(&f, &j, &ScalarField::sum())?;
    let q = [0.9, 0.6, 0.3];
    println!("at {q:?}");
    println!("  original   J'f = {:+.3e}", first_integral_residual(&f, &j, &q)?);
    println!(
        "  projected  J'f = {:+.3e}",
        first_integral_residual(&projected, &j, &q)?
    );
    println!(
        "  scaled     J'f = {:+.3e}",
        first_integral_residual(&scaled, &j, &q)?
    );
    Ok(())
}
