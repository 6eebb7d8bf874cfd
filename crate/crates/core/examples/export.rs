//! Runs a preset and writes the trajectory CSV plus its JSON summary, the
//! same files `mendel-ode reproduce <preset> --out PATH` produces.
//!
//! `cargo run --example export -- fig8-3c /tmp/fig8-3c.csv`

use std::path::PathBuf;

use mendel_ode::experiments::{run_preset, PresetId};
use mendel_ode::export::export_outcome;
use mendel_ode::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let id: PresetId = args.next().as_deref().unwrap_or("fig1").parse()?;
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("{id}.csv")));
    let out = run_preset(id, Precision::F64)?;
    let summary = export_outcome(&out, &path)?;
    println!("wrote {} and {}", path.display(), summary.display());
    println!("{}", std::fs::read_to_string(summary)?);
    Ok(())
}
