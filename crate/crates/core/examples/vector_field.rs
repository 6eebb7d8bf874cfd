//! Direction fields of the two-allele models on `[0, 1.5]²`, written as CSV.
//!
//! `cargo run --example vector_field -- [OUT_DIR]`

use std::path::PathBuf;

use mendel_ode::experiments::PresetId;
use mendel_ode::export::export_field;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    for id in [PresetId::Fig3Field, PresetId::Fig6Field] {
        let field = id.field()?;
        let samples = field.sample()?;
        let path = dir.join(format!("{id}.csv"));
        export_field(&samples, &path)?;
        let stationary: Vec<_> = samples
            .iter()
            .filter(|s| s.stationary)
            .map(|s| (s.x, s.y))
            .collect();
        println!(
            "{id} ({}): {} samples -> {}",
            field.system,
            samples.len(),
            path.display()
        );
        println!("  stationary grid points: {stationary:?}");
    }
    Ok(())
}
