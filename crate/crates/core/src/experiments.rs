//! Ready-made experiments reproducing the instability of the original models
//! and the good behaviour of the modified ones.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{hardy_weinberg_limit, sample_vector_field, AnalysisError, FieldSample, Grid2};
use crate::models::{MutationParameter, SystemId};
use crate::scalar::{Precision, Scalar};
use crate::solver::{integrate, SolverConfig, SolverError, Termination, Trajectory};
use crate::tableau::Method;

/// `|Σq(t) − Σq(0)|` beyond which a run counts as having left its manifold.
pub const DEVIATION_THRESHOLD: f64 = 0.1;
pub const DEFAULT_MUTATION: f64 = 0.7;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("precision `{0}` is not available in this build (enable the `extended` feature)")]
    PrecisionUnavailable(Precision),
    #[error("unknown preset `{0}` (expected one of {list})", list = PresetId::list())]
    UnknownPreset(String),
    #[error("preset `{0}` produces a vector field, not a trajectory")]
    NotATrajectory(PresetId),
    #[error("preset `{0}` produces a trajectory, not a vector field")]
    NotAField(PresetId),
    #[error("initial state has {got} components, system `{system}` needs {expected}")]
    InitialState {
        system: SystemId,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PresetId {
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "fig2")]
    Fig2,
    #[serde(rename = "fig3-field")]
    Fig3Field,
    #[serde(rename = "fig4")]
    Fig4,
    #[serde(rename = "fig5")]
    Fig5,
    #[serde(rename = "fig6-field")]
    Fig6Field,
    #[serde(rename = "fig8-2c")]
    Fig8TwoComponent,
    #[serde(rename = "fig8-3c")]
    Fig8ThreeComponent,
}

impl PresetId {
    pub const ALL: [PresetId; 8] = [
        PresetId::Fig1,
        PresetId::Fig2,
        PresetId::Fig3Field,
        PresetId::Fig4,
        PresetId::Fig5,
        PresetId::Fig6Field,
        PresetId::Fig8TwoComponent,
        PresetId::Fig8ThreeComponent,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PresetId::Fig1 => "fig1",
            PresetId::Fig2 => "fig2",
            PresetId::Fig3Field => "fig3-field",
            PresetId::Fig4 => "fig4",
            PresetId::Fig5 => "fig5",
            PresetId::Fig6Field => "fig6-field",
            PresetId::Fig8TwoComponent => "fig8-2c",
            PresetId::Fig8ThreeComponent => "fig8-3c",
        }
    }

    fn list() -> String {
        Self::ALL.map(|p| p.tag()).join(", ")
    }

    pub fn is_field(self) -> bool {
        matches!(self, PresetId::Fig3Field | PresetId::Fig6Field)
    }

    pub fn preset(self) -> Preset {
        let a = MutationParameter::new(DEFAULT_MUTATION).expect("valid default");
        let grid = Grid2::square(0.0, 1.5, 0.1);
        let sim = |system, method, q0: &[f64], t_end| Simulation {
            label: self.tag().to_string(),
            system,
            a,
            method,
            q0: q0.to_vec(),
            abstol: 1e-8,
            reltol: 1e-8,
            t_end,
            precision: Precision::F64,
            threshold: DEVIATION_THRESHOLD,
        };
        let fig1_q0 = [0.5, 0.25, 0.25];
        match self {
            PresetId::Fig1 => Preset::Trajectory(sim(SystemId::Orig3, Method::Tsit5, &fig1_q0, 500.0)),
            PresetId::Fig2 => Preset::Trajectory(sim(SystemId::Orig3, Method::Dp5, &fig1_q0, 500.0)),
            PresetId::Fig4 => Preset::Trajectory(sim(SystemId::Orig2, Method::Tsit5, &[0.25, 0.75], 500.0)),
            PresetId::Fig5 => Preset::Trajectory(sim(SystemId::Orig3, Method::Tsit5, &fig1_q0, 500.0)),
            PresetId::Fig8TwoComponent => {
                Preset::Trajectory(sim(SystemId::Mod2, Method::Tsit5, &[0.25, 0.75], 50.0))
            }
            PresetId::Fig8ThreeComponent => {
                Preset::Trajectory(sim(SystemId::Mod3, Method::Tsit5, &[0.75, 0.25, 0.25], 50.0))
            }
            PresetId::Fig3Field => Preset::Field(FieldPreset {
                system: SystemId::Orig2,
                a,
                grid,
            }),
            PresetId::Fig6Field => Preset::Field(FieldPreset {
                system: SystemId::Mod2,
                a,
                grid,
            }),
        }
    }

    /// Trajectory preset at the given precision. The precision study (`fig5`)
    /// also switches tolerances: 1e-7 in binary32, 1e-8 in binary64, 1e-14
    /// in the extended type.
    pub fn simulation(self, precision: Precision) -> Result<Simulation, ExperimentError> {
        let Preset::Trajectory(mut sim) = self.preset() else {
            return Err(ExperimentError::NotATrajectory(self));
        };
        sim.precision = precision;
        if self == PresetId::Fig5 {
            let tol = precision_study_tolerance(precision);
            sim.abstol = tol;
            sim.reltol = tol;
        }
        Ok(sim)
    }

    pub fn field(self) -> Result<FieldPreset, ExperimentError> {
        match self.preset() {
            Preset::Field(f) => Ok(f),
            Preset::Trajectory(_) => Err(ExperimentError::NotAField(self)),
        }
    }
}

pub fn precision_study_tolerance(precision: Precision) -> f64 {
    match precision {
        Precision::F32 => 1e-7,
        Precision::F64 => 1e-8,
        Precision::Big => 1e-14,
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PresetId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.tag() == s)
            .ok_or_else(|| ExperimentError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Trajectory(Simulation),
    Field(FieldPreset),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPreset {
    pub system: SystemId,
    pub a: MutationParameter,
    pub grid: Grid2,
}

impl FieldPreset {
    pub fn sample(&self) -> Result<Vec<FieldSample>, ExperimentError> {
        Ok(sample_vector_field(&self.system.build(self.a), &self.grid)?)
    }
}

/// Everything needed to run and monitor one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub label: String,
    pub system: SystemId,
    pub a: MutationParameter,
    pub method: Method,
    pub q0: Vec<f64>,
    pub abstol: f64,
    pub reltol: f64,
    pub t_end: f64,
    pub precision: Precision,
    pub threshold: f64,
}

impl Simulation {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.t_end).with_tolerances(self.abstol, self.reltol)
    }

    /// The steady state the run is expected to approach, when one is known:
    /// the conserved allele frequency `q₁ + q₂/2` picks the family member for
    /// the three-genotype systems; the two-allele systems head for the
    /// diagonal.
    pub fn reference_point(&self) -> Option<Vec<f64>> {
        let q = &self.q0;
        match self.system {
            SystemId::Mod3 if q.len() == 3 => {
                hardy_weinberg_limit(&[q[0], q[1], q[2]]).ok().map(|r| r.to_vec())
            }
            // on the manifold Σq = 1 the original system conserves q₁ + q₂/2 too
            SystemId::Orig3 if q.len() == 3 => {
                let p = q[0] + 0.5 * q[1];
                hardy_weinberg_limit(&[p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)])
                    .ok()
                    .map(|r| r.to_vec())
            }
            SystemId::Orig2 if q.len() == 2 => Some(vec![0.5, 0.5]),
            SystemId::Mod2 if q.len() == 2 => {
                let c = 0.5 * (q[0] + q[1]);
                Some(vec![c, c])
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ExtinctionOnset,
    BlowupOnset,
    None,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::ExtinctionOnset => "extinction_onset",
            EventKind::BlowupOnset => "blowup_onset",
            EventKind::None => "none",
        }
    }
}

/// First accepted step at which `|Σq − Σq(0)|` exceeds the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationEvent {
    pub kind: EventKind,
    /// Event time, or the last integrated time when nothing was crossed.
    pub time: f64,
    /// `time` in the full precision of the run.
    pub time_text: String,
    pub trigger: String,
}

pub fn detect_deviation<T: Scalar>(traj: &Trajectory<T>, threshold: f64) -> DeviationEvent {
    let sums = traj.sums();
    let Some(&s0) = sums.first() else {
        return DeviationEvent {
            kind: EventKind::None,
            time: traj.termination.time().unwrap_or(0.0),
            time_text: "0.0".into(),
            trigger: "empty trajectory".into(),
        };
    };
    let limit = T::lit(threshold);
    for (i, &s) in sums.iter().enumerate() {
        let d = s - s0;
        if d.abs() > limit || !d.is_finite() {
            let t = traj.times[i];
            let kind = if d < T::zero() {
                EventKind::ExtinctionOnset
            } else {
                EventKind::BlowupOnset
            };
            return DeviationEvent {
                kind,
                time: t.as_f64(),
                time_text: t.to_round_trip_string(),
                trigger: format!("|sum(q) - sum(q0)| = {:.3e} > {threshold}", d.abs().as_f64()),
            };
        }
    }
    let t = *traj.times.last().expect("non-empty");
    DeviationEvent {
        kind: EventKind::None,
        time: t.as_f64(),
        time_text: t.to_round_trip_string(),
        trigger: format!("|sum(q) - sum(q0)| stayed within {threshold}"),
    }
}

/// A trajectory in whichever precision the run used.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTrajectory {
    F32(Trajectory<f32>),
    F64(Trajectory<f64>),
    #[cfg(feature = "extended")]
    Big(Trajectory<crate::scalar::Extended>),
}

/// Applies `$body` to the inner trajectory, bound as `$t`.
#[macro_export]
#[doc(hidden)]
macro_rules! with_trajectory {
    ($any:expr, $t:ident => $body:expr) => {
        match $any {
            $crate::experiments::AnyTrajectory::F32($t) => $body,
            $crate::experiments::AnyTrajectory::F64($t) => $body,
            #[cfg(feature = "extended")]
            $crate::experiments::AnyTrajectory::Big($t) => $body,
        }
    };
}

impl AnyTrajectory {
    pub fn precision(&self) -> Precision {
        match self {
            AnyTrajectory::F32(_) => Precision::F32,
            AnyTrajectory::F64(_) => Precision::F64,
            #[cfg(feature = "extended")]
            AnyTrajectory::Big(_) => Precision::Big,
        }
    }

    pub fn len(&self) -> usize {
        with_trajectory!(self, t => t.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn termination(&self) -> Termination {
        with_trajectory!(self, t => t.termination)
    }

    pub fn n_accepted(&self) -> usize {
        with_trajectory!(self, t => t.n_accepted)
    }

    pub fn n_rejected(&self) -> usize {
        with_trajectory!(self, t => t.n_rejected)
    }

    pub fn times_f64(&self) -> Vec<f64> {
        with_trajectory!(self, t => t.times.iter().map(|x| x.as_f64()).collect())
    }

    pub fn states_f64(&self) -> Vec<Vec<f64>> {
        with_trajectory!(self, t => t
            .states
            .iter()
            .map(|q| q.iter().map(|x| x.as_f64()).collect())
            .collect())
    }

    pub fn last_state_f64(&self) -> Option<Vec<f64>> {
        with_trajectory!(self, t => t.last_state().map(|q| q.iter().map(|x| x.as_f64()).collect()))
    }

    /// `max_t |Σq(t) − Σq(0)|`, evaluated in the run's precision.
    pub fn max_sum_drift(&self) -> f64 {
        with_trajectory!(self, t => {
            let sums = t.sums();
            match sums.first() {
                Some(&s0) => sums.iter().fold(0.0f64, |m, &s| m.max((s - s0).abs().as_f64())),
                None => 0.0,
            }
        })
    }

    pub fn deviation_event(&self, threshold: f64) -> DeviationEvent {
        with_trajectory!(self, t => detect_deviation(t, threshold))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub simulation: Simulation,
    pub trajectory: AnyTrajectory,
    pub event: DeviationEvent,
    /// Smallest sup-norm distance to the reference steady state over the
    /// accepted states up to the event.
    pub closest_approach: Option<f64>,
    pub wall_time: f64,
}

fn run_typed<T: Scalar>(sim: &Simulation) -> Result<Trajectory<T>, ExperimentError> {
    let system = sim.system.build::<T>(sim.a);
    let q0: Vec<T> = sim.q0.iter().map(|&x| T::lit(x)).collect();
    Ok(integrate(
        &system,
        &q0,
        &sim.method.tableau(),
        &sim.solver_config(),
    )?)
}

pub fn run_simulation(sim: &Simulation) -> Result<SimulationOutcome, ExperimentError> {
    if sim.q0.len() != sim.system.dim() {
        return Err(ExperimentError::InitialState {
            system: sim.system,
            expected: sim.system.dim(),
            got: sim.q0.len(),
        });
    }
    if !sim.precision.is_available() {
        return Err(ExperimentError::PrecisionUnavailable(sim.precision));
    }
    let start = Instant::now();
    let trajectory = match sim.precision {
        Precision::F32 => AnyTrajectory::F32(run_typed(sim)?),
        Precision::F64 => AnyTrajectory::F64(run_typed(sim)?),
        #[cfg(feature = "extended")]
        Precision::Big => AnyTrajectory::Big(run_typed(sim)?),
        #[cfg(not(feature = "extended"))]
        Precision::Big => return Err(ExperimentError::PrecisionUnavailable(sim.precision)),
    };
    let wall_time = start.elapsed().as_secs_f64();
    let event = trajectory.deviation_event(sim.threshold);
    let closest_approach = sim.reference_point().map(|r| {
        let times = trajectory.times_f64();
        trajectory
            .states_f64()
            .iter()
            .zip(times)
            .take_while(|(_, t)| event.kind == EventKind::None || *t <= event.time)
            .map(|(q, _)| q.iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(SimulationOutcome {
        simulation: sim.clone(),
        trajectory,
        event,
        closest_approach,
        wall_time,
    })
}

pub fn run_preset(id: PresetId, precision: Precision) -> Result<SimulationOutcome, ExperimentError> {
    run_simulation(&id.simulation(precision)?)
}

/// Maxima over random states of the residuals that show the reformulations
/// work, for one of the original systems with `J = Σq − 1`, `α = Σq`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReformulationReport {
    pub system: SystemId,
    pub samples: usize,
    /// `g·f − αJ` for the original system.
    pub second_integral: f64,
    /// `g·f̃` for the projected system.
    pub projection_first_integral: f64,
    /// `g·f̃` for the state-scaled system.
    pub state_scaled_first_integral: f64,
    /// State-scaled system against the shipped modified system.
    pub state_scaled_vs_modified: f64,
    /// Projected two-allele system against its closed form
    /// `((a−½)(q₁²−q₂²) − (q₁−q₂)/2, (½−a)(q₁²−q₂²) + (q₁−q₂)/2)`.
    pub projection_vs_closed_form: Option<f64>,
    /// Both reformulations against the original on `Σq = 1`.
    pub manifold_agreement: f64,
}

/// Samples `samples` states uniformly from `[-0.5, 2]ⁿ` with a seeded
/// generator and measures the residuals listed in [`ReformulationReport`].
pub fn reformulation_check(
    system: SystemId,
    a: MutationParameter,
    samples: usize,
    seed: u64,
) -> Result<ReformulationReport, ExperimentError> {
    use crate::analysis::{
        first_integral_residual, reformulate_projection, reformulate_state_scaled, second_integral_residual,
        AffineFunctional, ScalarField,
    };
    use rand::{Rng, SeedableRng};

    let modified = match system {
        SystemId::Orig2 => SystemId::Mod2,
        SystemId::Orig3 => SystemId::Mod3,
        other => {
            return Err(ExperimentError::Analysis(AnalysisError::Domain(format!(
                "reformulation check applies to orig2 and orig3, not {other}"
            ))))
        }
    };
    let n = system.dim();
    let f = system.build::<f64>(a);
    let shipped = modified.build::<f64>(a);
    let j = AffineFunctional::deviation(n);
    let alpha = ScalarField::sum();
    let projected = reformulate_projection(&f, &j, &alpha)?;
    let scaled = reformulate_state_scaled(&f, &j, &alpha)?;
    let av = a.value();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut report = ReformulationReport {
        system,
        samples,
        second_integral: 0.0,
        projection_first_integral: 0.0,
        state_scaled_first_integral: 0.0,
        state_scaled_vs_modified: 0.0,
        projection_vs_closed_form: (system == SystemId::Orig2).then_some(0.0),
        manifold_agreement: 0.0,
    };
    let mut q = vec![0.0; n];
    for _ in 0..samples {
        for x in q.iter_mut() {
            *x = rng.gen_range(-0.5..2.0);
        }
        report.second_integral = report
            .second_integral
            .max(second_integral_residual(&f, &j, &alpha, &q)?.abs());
        report.projection_first_integral = report
            .projection_first_integral
            .max(first_integral_residual(&projected, &j, &q)?.abs());
        report.state_scaled_first_integral = report
            .state_scaled_first_integral
            .max(first_integral_residual(&scaled, &j, &q)?.abs());
        report.state_scaled_vs_modified = report
            .state_scaled_vs_modified
            .max(sup(&scaled.eval(&q), &shipped.eval(&q)));
        if let Some(m) = report.projection_vs_closed_form.as_mut() {
            let (d2, d) = (q[0] * q[0] - q[1] * q[1], q[0] - q[1]);
            let closed = [(av - 0.5) * d2 - 0.5 * d, (0.5 - av) * d2 + 0.5 * d];
            *m = m.max(sup(&projected.eval(&q), &closed));
        }
        // project onto Σq = 1
        let shift = (q.iter().sum::<f64>() - 1.0) / n as f64;
        let on: Vec<f64> = q.iter().map(|x| x - shift).collect();
        let base = f.eval(&on);
        report.manifold_agreement = report
            .manifold_agreement
            .max(sup(&base, &projected.eval(&on)))
            .max(sup(&base, &scaled.eval(&on)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for id in PresetId::ALL {
            assert_eq!(id.tag().parse::<PresetId>().unwrap(), id);
        }
        let err = "fig7".parse::<PresetId>().unwrap_err().to_string();
        assert!(err.contains("fig8-3c"), "{err}");
    }

    #[test]
    fn field_presets_are_not_trajectories() {
        assert!(PresetId::Fig3Field.simulation(Precision::F64).is_err());
        assert!(PresetId::Fig1.field().is_err());
        assert_eq!(PresetId::Fig3Field.field().unwrap().sample().unwrap().len(), 256);
    }

    #[test]
    fn precision_study_tolerances() {
        let sim = PresetId::Fig5.simulation(Precision::F32).unwrap();
        assert_eq!((sim.abstol, sim.reltol), (1e-7, 1e-7));
        let sim = PresetId::Fig5.simulation(Precision::Big).unwrap();
        assert_eq!(sim.abstol, 1e-14);
        let sim = PresetId::Fig1.simulation(Precision::F32).unwrap();
        assert_eq!(sim.abstol, 1e-8);
    }

    #[test]
    fn reference_points() {
        let sim = PresetId::Fig1.simulation(Precision::F64).unwrap();
        assert_eq!(sim.reference_point().unwrap(), vec![0.390625, 0.46875, 0.140625]);
        let sim = PresetId::Fig8ThreeComponent.simulation(Precision::F64).unwrap();
        let r = sim.reference_point().unwrap();
        for (a, b) in r.iter().zip([0.6125, 0.525, 0.1125]) {
            assert!((a - b).abs() < 1e-15);
        }
        let sim = PresetId::Fig8TwoComponent.simulation(Precision::F64).unwrap();
        assert_eq!(sim.reference_point().unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn reformulation_check_small_sample() {
        let a = MutationParameter::new(0.7).unwrap();
        for id in [SystemId::Orig2, SystemId::Orig3] {
            let r = reformulation_check(id, a, 200, 1).unwrap();
            assert!(r.second_integral <= 1e-13, "{r:?}");
            assert!(r.projection_first_integral <= 1e-12, "{r:?}");
            assert!(r.state_scaled_first_integral <= 1e-12, "{r:?}");
            assert!(r.state_scaled_vs_modified <= 1e-13, "{r:?}");
            assert!(r.manifold_agreement <= 1e-13, "{r:?}");
        }
        assert!(reformulation_check(SystemId::Mod3, a, 10, 1).is_err());
    }

    #[test]
    fn wrong_initial_state_length() {
        let mut sim = PresetId::Fig1.simulation(Precision::F64).unwrap();
        sim.q0 = vec![0.5, 0.5];
        assert!(matches!(
            run_simulation(&sim),
            Err(ExperimentError::InitialState { .. })
        ));
    }
}
