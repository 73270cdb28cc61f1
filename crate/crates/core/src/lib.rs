//! Discovery and removal of direct and indirect discrimination in discrete
//! causal networks, based on path-specific effects.
//!
//! A [`CausalModel`] is a DAG over categorical variables with one CPT per
//! node. [`pse_dd`] measures the effect of a protected attribute on a
//! decision along the direct arc and along paths through redlining
//! attributes; [`pse_dr`] minimally modifies the decision's CPT so both stay
//! within a threshold and regenerates a dataset from the repaired model.

pub mod data;
pub mod discovery;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod path_effects;
pub mod qp;
pub mod removal;
pub mod report;
pub mod sampling;

pub use data::{estimate_cpts, load_csv, read_csv, save_csv, write_csv, Dataset};
pub use discovery::{
    pse_dd, DiscoveryReport, DiscriminationQuery, EffectPair, IndirectEffects, Outcome, DEFAULT_TAU,
};
pub use error::{Error, Result};
pub use format::{format_model, parse_model, read_model_file, write_model_file, ModelSpec};
pub use inference::{marginal, post_intervention, probability, risk_difference, total_effect};
pub use metrics::{chi_square_utility, predict_and_audit};
pub use model::{Assignment, BinaryAttribute, CausalGraph, CausalModel, Cpt, VarId, Variable};
pub use path_effects::{
    partition_children, path_effect, recanting_witness, se_direct, se_indirect, ChildPartition,
    PathEffect, PathKind, PathQuery, WitnessCheck,
};
pub use removal::{
    build_repair_problem, cut_unidentifiable, pse_dr, solve_repair, RemovalMode, RepairOptions,
    RepairProblem, RepairResult, Surgery,
};
pub use report::ReportDocument;
pub use sampling::SamplingMode;
