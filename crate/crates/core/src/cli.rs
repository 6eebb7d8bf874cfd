//! Command-line front end. Exit codes: 0 success (a blow-up is a recorded
//! outcome, not a failure), 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    analyze_steady_state, classify_stability, eigen_small, steady_state_catalog, Grid2, SteadyStateRecord,
    STABILITY_TOL, STEADY_RESIDUAL_TOL,
};
use crate::experiments::{
    reformulation_check, run_simulation, ExperimentError, PresetId, Simulation, SimulationOutcome,
    DEFAULT_MUTATION, DEVIATION_THRESHOLD,
};
use crate::export::{export_field, export_outcome, summary_json, write_any_trajectory_csv, write_field_csv};
use crate::models::{MutationParameter, SystemId};
use crate::scalar::Precision;
use crate::solver::SolverError;
use crate::tableau::Method;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mendel-ode",
    version,
    about = "Gene-inheritance ODE experiments with embedded Runge-Kutta pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one system and report the deviation from Σq(0).
    Simulate(SimulateArgs),
    /// Run a named preset (fig1, fig2, fig3-field, fig4, fig5, fig6-field, fig8-2c, fig8-3c).
    Reproduce(ReproduceArgs),
    /// List steady states of a system with eigenvalues and stability.
    SteadyStates(SteadyArgs),
    /// Eigenvalues of a system's Jacobian at a point.
    Eigen(EigenArgs),
    /// Sample the direction field of a two-component system.
    Field(FieldArgs),
    /// Check the reformulations that turn Σq − 1 into a first integral.
    ReformulateCheck(ReformulateArgs),
}

#[derive(Debug, Args)]
struct RunOptions {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    abstol: Option<f64>,
    #[arg(long)]
    reltol: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// f32, f64 or big
    #[arg(long)]
    precision: Option<Precision>,
    /// Trajectory CSV path; the JSON summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Without --out, csv prints the trajectory and json the summary.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    system: SystemId,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    q0: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_MUTATION)]
    a: f64,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    preset: PresetId,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Debug, Args)]
struct SteadyArgs {
    system: SystemId,
    #[arg(long, default_value_t = DEFAULT_MUTATION)]
    a: f64,
    /// Family members to list.
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct EigenArgs {
    system: SystemId,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    at: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MUTATION)]
    a: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct FieldArgs {
    system: SystemId,
    #[arg(long, default_value_t = DEFAULT_MUTATION)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    min: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    max: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct ReformulateArgs {
    system: SystemId,
    #[arg(long, default_value_t = DEFAULT_MUTATION)]
    a: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::UnknownPreset(_)
            | ExperimentError::NotATrajectory(_)
            | ExperimentError::NotAField(_)
            | ExperimentError::InitialState { .. }
            | ExperimentError::PrecisionUnavailable(_)
            | ExperimentError::Solver(SolverError::InvalidConfig(_)) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn mutation(a: f64) -> Result<MutationParameter, Failure> {
    MutationParameter::new(a).map_err(|e| Failure::Usage(e.to_string()))
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Simulate(args) => simulate(args, out),
        Command::Reproduce(args) => reproduce(args, out),
        Command::SteadyStates(args) => steady_states(args, out),
        Command::Eigen(args) => eigen(args, out),
        Command::Field(args) => field(args, out),
        Command::ReformulateCheck(args) => reformulate(args, out),
    }
}

fn default_q0(system: SystemId) -> Vec<f64> {
    match system {
        SystemId::Orig2 | SystemId::Mod2 => vec![0.25, 0.75],
        SystemId::Orig3 => vec![0.5, 0.25, 0.25],
        SystemId::Mod3 => vec![0.75, 0.25, 0.25],
        SystemId::Compartments => vec![1.0, 1.0, 1.0],
        SystemId::Deviation => vec![0.1],
    }
}

fn default_t_end(system: SystemId) -> f64 {
    match system {
        SystemId::Mod2 | SystemId::Mod3 => 50.0,
        SystemId::Deviation => 10.0,
        _ => 500.0,
    }
}

fn apply(sim: &mut Simulation, opts: &RunOptions) {
    if let Some(m) = opts.method {
        sim.method = m;
    }
    if let Some(x) = opts.abstol {
        sim.abstol = x;
    }
    if let Some(x) = opts.reltol {
        sim.reltol = x;
    }
    if let Some(x) = opts.t_end {
        sim.t_end = x;
    }
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let q0 = args.q0.unwrap_or_else(|| default_q0(args.system));
    if q0.len() != args.system.dim() {
        return Err(Failure::Usage(format!(
            "--q0 has {} values but `{}` has {} components",
            q0.len(),
            args.system,
            args.system.dim()
        )));
    }
    let mut sim = Simulation {
        label: format!("simulate-{}", args.system),
        system: args.system,
        a: mutation(args.a)?,
        method: Method::Tsit5,
        q0,
        abstol: 1e-8,
        reltol: 1e-8,
        t_end: default_t_end(args.system),
        precision: args.run.precision.unwrap_or(Precision::F64),
        threshold: DEVIATION_THRESHOLD,
    };
    apply(&mut sim, &args.run);
    finish(run_simulation(&sim)?, &args.run, out)
}

fn reproduce(args: ReproduceArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.preset.is_field() {
        let samples = args.preset.field()?.sample()?;
        return emit_field(&samples, args.run.out, args.run.format, out);
    }
    let mut sim = args
        .preset
        .simulation(args.run.precision.unwrap_or(Precision::F64))?;
    apply(&mut sim, &args.run);
    finish(run_simulation(&sim)?, &args.run, out)
}

fn finish(outcome: SimulationOutcome, opts: &RunOptions, out: &mut dyn Write) -> Result<(), Failure> {
    let summary = summary_json(&outcome);
    match (&opts.out, opts.format) {
        (Some(path), format) => {
            let json_path = export_outcome(&outcome, path).map_err(runtime)?;
            if format == Format::Json {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&summary).map_err(runtime)?
                )
                .map_err(runtime)?;
            } else {
                writeln!(
                    out,
                    "{}: {} after {} accepted steps, event {} at t = {}; wrote {} and {}",
                    outcome.simulation.label,
                    outcome.trajectory.termination().label(),
                    outcome.trajectory.n_accepted(),
                    outcome.event.kind.tag(),
                    outcome.event.time_text,
                    path.display(),
                    json_path.display()
                )
                .map_err(runtime)?;
            }
        }
        (None, Format::Csv) => write_any_trajectory_csv(&outcome.trajectory, out).map_err(runtime)?,
        (None, Format::Json) => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&summary).map_err(runtime)?
        )
        .map_err(runtime)?,
    }
    Ok(())
}

fn emit_field(
    samples: &[crate::analysis::FieldSample],
    path: Option<PathBuf>,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    match (path, format) {
        (Some(p), _) => {
            export_field(samples, &p).map_err(runtime)?;
            writeln!(out, "wrote {} samples to {}", samples.len(), p.display()).map_err(runtime)
        }
        (None, Format::Csv) => write_field_csv(samples, out).map_err(runtime),
        (None, Format::Json) => {
            writeln!(out, "{}", serde_json::to_string(samples).map_err(runtime)?).map_err(runtime)
        }
    }
}

fn field(args: FieldArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.system.dim() != 2 {
        return Err(Failure::Usage(format!(
            "vector fields need a two-component system, `{}` has {}",
            args.system,
            args.system.dim()
        )));
    }
    let grid = Grid2::square(args.min, args.max, args.step);
    let system = args.system.build::<f64>(mutation(args.a)?);
    let samples =
        crate::analysis::sample_vector_field(&system, &grid).map_err(|e| Failure::Usage(e.to_string()))?;
    emit_field(&samples, args.out, args.format, out)
}

fn fmt_complex(z: &num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn print_record(rec: &SteadyStateRecord, out: &mut dyn Write) -> std::io::Result<()> {
    let values: Vec<_> = rec.eigenvalues.iter().map(fmt_complex).collect();
    writeln!(
        out,
        "{:?}  eigenvalues [{}]  {}{}",
        rec.point,
        values.join(", "),
        rec.classification,
        if rec.defective { "  (defective)" } else { "" }
    )
}

fn steady_states(args: SteadyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let records = steady_state_catalog(args.system, mutation(args.a)?, args.samples)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if args.format == Format::Json {
        return writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&records).map_err(runtime)?
        )
        .map_err(runtime);
    }
    for rec in &records {
        print_record(rec, out).map_err(runtime)?;
    }
    Ok(())
}

fn eigen(args: EigenArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.at.len() != args.system.dim() {
        return Err(Failure::Usage(format!(
            "--at has {} values but `{}` has {} components",
            args.at.len(),
            args.system,
            args.system.dim()
        )));
    }
    let system = args.system.build::<f64>(mutation(args.a)?);
    if system.dim() == 1 {
        return Err(Failure::Usage("eigen needs a 2- or 3-component system".into()));
    }
    // a steady point gets the full record, anything else just the spectrum
    if let Ok(rec) = analyze_steady_state(&system, &args.at) {
        if args.format == Format::Json {
            return writeln!(out, "{}", serde_json::to_string_pretty(&rec).map_err(runtime)?)
                .map_err(runtime);
        }
        return print_record(&rec, out).map_err(runtime);
    }
    let jac = system.jacobian_or_fd(&args.at, 1e-6);
    let eig = eigen_small(&jac).map_err(runtime)?;
    let verdict = classify_stability(&eig.values, STABILITY_TOL);
    if args.format == Format::Json {
        let doc = json!({
            "point": args.at,
            "steady": false,
            "eigenvalues": eig.values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "linear_classification": verdict.tag(),
        });
        return writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(runtime)?).map_err(runtime);
    }
    let values: Vec<_> = eig.values.iter().map(fmt_complex).collect();
    writeln!(
        out,
        "{:?}  eigenvalues [{}]  (not a steady state: ‖f‖∞ > {STEADY_RESIDUAL_TOL:e})",
        args.at,
        values.join(", ")
    )
    .map_err(runtime)
}

fn reformulate(args: ReformulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if !matches!(args.system, SystemId::Orig2 | SystemId::Orig3) {
        return Err(Failure::Usage(format!(
            "reformulate-check applies to orig2 and orig3, not {}",
            args.system
        )));
    }
    let r = reformulation_check(args.system, mutation(args.a)?, args.samples, args.seed)?;
    let ok = r.projection_first_integral <= 1e-12 && r.state_scaled_first_integral <= 1e-12;
    if args.format == Format::Json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r).map_err(runtime)?).map_err(runtime)?;
    } else {
        let mut lines = vec![
            format!(
                "{} random states in [-0.5, 2]^{} (seed {})",
                r.samples,
                args.system.dim(),
                args.seed
            ),
            format!("original second-integral residual     {:.3e}", r.second_integral),
            format!(
                "projection first-integral residual    {:.3e}",
                r.projection_first_integral
            ),
            format!(
                "state-scaled first-integral residual  {:.3e}",
                r.state_scaled_first_integral
            ),
            format!(
                "state-scaled vs shipped modified rhs  {:.3e}",
                r.state_scaled_vs_modified
            ),
        ];
        if let Some(d) = r.projection_vs_closed_form {
            lines.push(format!("projection vs closed form             {d:.3e}"));
        }
        lines.push(format!(
            "agreement on sum(q) = 1               {:.3e}",
            r.manifold_agreement
        ));
        lines.push(if ok {
            "ok".into()
        } else {
            "FAILED: residual above 1e-12".into()
        });
        writeln!(out, "{}", lines.join("\n")).map_err(runtime)?;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Runtime("first-integral residual above 1e-12".into()))
    }
}
