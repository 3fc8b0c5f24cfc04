//! Technology learning-curve toolkit: curve families, empirical rate data,
//! statistical fitting, piecewise-linear approximation, and a small
//! mixed-integer solver for capacity-expansion planning with endogenous
//! learning.
//!
//! The crate is organised around [`LearningSpec`], the tagged union of curve
//! families. Everything downstream — fitting observed cost series, linearising
//! curves for optimization, and the expansion model itself — consumes or
//! produces that type.

pub mod config;
pub mod curves;
pub mod dataset;
pub mod expansion;
pub mod fitting;
pub mod milp;
pub mod numeric;
pub mod pwl;

pub use config::{
    packaged_scenario, packaged_scenario_names, packaged_scenario_text, parse_curve_config,
    parse_scenario_config, write_curve_config, write_scenario_config, ConfigError,
};
pub use curves::{
    exponent_to_lr, lr_to_exponent, Component, CompositeSpec, CurveError, DiminishingSpec,
    LearningSpec, ModifierSpec, OneFactorSpec, PartialSpec, Stage, StagedSpec, TwoFactorSpec,
};
pub use dataset::{
    all_packaged_records, box_stats, load_records, packaged_records, query, BoxStats, DatasetError,
    RateFilter, RateRecord, TableId,
};
pub use expansion::{
    build_milp, compare_modes, solve_expansion, solve_expansion_with, sweep_learning_rate,
    BuildTiming, ExpansionError, ExpansionPlan, MilpBuild, Mode, ModeReport, ScenarioConfig,
    SweepRow, TechnologySpec, VarMap,
};
pub use fitting::{
    bootstrap_ci, fit_one_factor, fit_two_factor, FitError, FitModel, FitResult, Observation,
    ObservationSeries,
};
pub use milp::{
    solve_lp, solve_lp_tol, solve_milp, write_lp_format, LinearProgram, MilpError, MilpOptions,
    MilpProblem, MilpSolution, Relation, Row, Sense, SolveStatus,
};
pub use pwl::{approx_error, build_breakpoints, eval_pwl, PwlApprox, PwlError, PwlPolicy};
