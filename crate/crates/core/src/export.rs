//! CSV and JSON output for trajectories, run summaries and vector fields.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::analysis::FieldSample;
use crate::experiments::{AnyTrajectory, SimulationOutcome};
use crate::scalar::{Precision, Scalar};
use crate::solver::Trajectory;
use crate::with_trajectory;

#[derive(Debug, thiserror::Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct ExportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Header `t,q1,…,qn,sum,u`, one row per stored point, `u = sum − 1`.
pub fn write_trajectory_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, mut w: W) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.dim).map(|i| format!("q{i}")));
    header.extend(["sum".to_string(), "u".to_string()]);
    writeln!(w, "{}", header.join(","))?;
    for (t, q) in traj.times.iter().zip(&traj.states) {
        let sum = q.iter().fold(T::zero(), |acc, &x| acc + x);
        let mut row = vec![t.to_round_trip_string()];
        row.extend(q.iter().map(|x| x.to_round_trip_string()));
        row.push(sum.to_round_trip_string());
        row.push((sum - T::one()).to_round_trip_string());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

pub fn write_any_trajectory_csv<W: Write>(traj: &AnyTrajectory, w: W) -> io::Result<()> {
    with_trajectory!(traj, t => write_trajectory_csv(t, w))
}

/// Number in the run's precision: a JSON number for binary32/64, a decimal
/// string for the extended type.
fn number<T: Scalar>(x: T) -> Value {
    if T::PRECISION == Precision::Big {
        Value::String(x.to_round_trip_string())
    } else {
        json!(x.as_f64())
    }
}

fn precise_parts<T: Scalar>(traj: &Trajectory<T>) -> (Value, Value) {
    let last_t = traj.last_time().map_or(Value::Null, number);
    let last_q = traj.last_state().map_or(Value::Null, |q| {
        Value::Array(q.iter().map(|&x| number(x)).collect())
    });
    (last_t, last_q)
}

/// Summary with the keys `preset`, `termination`, `event`, `n_accepted`,
/// `n_rejected` and `wall_time`, plus the run parameters.
pub fn summary_json(out: &SimulationOutcome) -> Value {
    let sim = &out.simulation;
    let big = out.trajectory.precision() == Precision::Big;
    let (last_t, last_q) = with_trajectory!(&out.trajectory, t => precise_parts(t));
    let term = out.trajectory.termination();
    let term_t = match (term.time(), big) {
        (None, _) => Value::Null,
        (Some(_), true) => last_t.clone(),
        (Some(t), false) => json!(t),
    };
    let event_time = if big {
        Value::String(out.event.time_text.clone())
    } else {
        json!(out.event.time)
    };
    json!({
        "preset": sim.label,
        "system": sim.system.tag(),
        "method": sim.method.tag(),
        "precision": sim.precision.tag(),
        "a": sim.system.uses_mutation().then(|| sim.a.value()),
        "q0": sim.q0,
        "abstol": sim.abstol,
        "reltol": sim.reltol,
        "t_end": sim.t_end,
        "termination": { "kind": term.label(), "t": term_t },
        "event": {
            "kind": out.event.kind.tag(),
            "time": event_time,
            "trigger": out.event.trigger,
        },
        "n_accepted": out.trajectory.n_accepted(),
        "n_rejected": out.trajectory.n_rejected(),
        "wall_time": out.wall_time,
        "final_time": last_t,
        "final_state": last_q,
        "closest_approach": out.closest_approach.filter(|d| d.is_finite()),
        "max_sum_drift": out.trajectory.max_sum_drift(),
    })
}

/// Header `x,y,dx,dy,len`.
pub fn write_field_csv<W: Write>(samples: &[FieldSample], mut w: W) -> io::Result<()> {
    writeln!(w, "x,y,dx,dy,len")?;
    for s in samples {
        writeln!(w, "{:?},{:?},{:?},{:?},{:?}", s.x, s.y, s.dx, s.dy, s.len)?;
    }
    w.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>, ExportError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExportError {
            path: path.to_path_buf(),
            source,
        })
}

fn at(path: &Path) -> impl Fn(io::Error) -> ExportError + '_ {
    move |source| ExportError {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the trajectory CSV to `csv_path` and the summary next to it with a
/// `.json` extension. Returns the summary path.
pub fn export_outcome(out: &SimulationOutcome, csv_path: &Path) -> Result<PathBuf, ExportError> {
    write_any_trajectory_csv(&out.trajectory, create(csv_path)?).map_err(at(csv_path))?;
    let json_path = csv_path.with_extension("json");
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &summary_json(out))
        .map_err(io::Error::from)
        .and_then(|_| writeln!(w))
        .and_then(|_| w.flush())
        .map_err(at(&json_path))?;
    Ok(json_path)
}

pub fn export_field(samples: &[FieldSample], path: &Path) -> Result<(), ExportError> {
    write_field_csv(samples, create(path)?).map_err(at(path))
}
