//! Steady states of the four models with their spectra and stability.

use mendel_ode::analysis::steady_state_catalog;
use mendel_ode::models::{MutationParameter, SystemId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = MutationParameter::new(0.7)?;
    for id in [SystemId::Orig2, SystemId::Mod2, SystemId::Orig3, SystemId::Mod3] {
        println!("{id}");
        for rec in steady_state_catalog(id, a, 4)? {
            let values: Vec<String> = rec
                .eigenvalues
                .iter()
                .map(|z| {
                    if z.im == 0.0 {
                        format!("{:.3}", z.re)
                    } else {
                        format!("{:.3}", z)
                    }
                })
                .collect();
            let point: Vec<String> = rec.point.iter().map(|x| format!("{x:.4}")).collect();
            println!(
                "  ({})  [{}]  {}{}",
                point.join(", "),
                values.join(", "),
                rec.classification,
                if rec.defective { ", defective" } else { "" }
            );
        }
    }
    Ok(())
}
