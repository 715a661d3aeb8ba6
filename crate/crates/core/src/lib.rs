pub mod descent;
pub mod elastica;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod session;

pub use descent::{
    classify, initial_step, perturb, run, step, step_from, ClassTag, ClassifyTolerances, DescentParams, DescentStep, FitDiagnostics,
    NormalFormClass, RunError, RunOutcome, RunSummary, TrajectoryRecord,
};
pub use elastica::{
    construct_gamma_epsilon, find_figure_eight_amplitude, integrate_pendulum, pendulum_period,
    sample_circle, sample_figure_eight, CriticalCurveSample, CriticalKind, PendulumSolution,
};
pub use energy::{discrete_energy, exact_gradient, EnergyBreakdown};
pub use error::{ElasticaError, Result};
pub use geometry::{
    closure_report, ingest, turning_profile, whitney_index, ClosureReport, PolyCurve, TurningProfile, Vec2,
};
