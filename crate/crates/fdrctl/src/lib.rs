//! Multiple testing with weighted false-discovery-rate control.
//!
//! The library is organized around two coupled conditions that together
//! imply `FDR <= alpha * Pi(H0)`:
//!
//! * **self-consistency** — every rejected hypothesis clears its
//!   threshold `alpha pi(h) beta(|R|)` evaluated at the realized
//!   rejection volume; satisfied by step-up, step-down and step-up-down
//!   procedures ([`procedures`]);
//! * **dependency control** — `E[1{U <= c beta(V)} / V] <= c` for the
//!   couple `(p_h, |R|)` at every true null; guaranteed by the linear
//!   shape under independence or positive regression dependence, and by
//!   the prior-generated shapes `beta_nu(r) = integral_0^r x dnu(x)`
//!   under arbitrary dependence ([`shape`], [`conditions`]).
//!
//! [`simulation`] provides seeded Gaussian p-value generators and
//! Monte-Carlo estimates of FDR, FWER and power; [`specs`] the string
//! forms used by the `fdrctl` command-line tool; [`io`] the CSV formats.

pub mod conditions;
pub mod error;
pub mod io;
pub mod num;
pub mod procedures;
pub mod shape;
pub mod simulation;
pub mod space;
pub mod specs;

pub use error::{Error, Result};
pub use procedures::{
    adaptive_two_stage, level_set, make_rank_thresholds, rank_step_down, step_down, step_up,
    step_up_down, FactorizedThresholds, RankKind, RankThresholds,
};
pub use shape::{
    bonferroni_crossover, shape_table, ContinuousPrior, PriorDistribution, ShapeFunction,
    TableCurve,
};
pub use simulation::{
    estimate_error_rates, run_experiment, trial_rng, DependenceModel, ExperimentConfig,
    ExperimentReport, ModelKind,
};
pub use space::{fdp, weighted_pvalues, HypothesisSpace, PValueVector, RejectionSet};
pub use specs::{CompiledProcedure, ProcedureSpec, ShapeSpec};
