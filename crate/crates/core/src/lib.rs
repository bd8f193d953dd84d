//! Probability bounds analysis for black-box decision models.
//!
//! Parameters known only through a few summary statistics are represented
//! as p-boxes ([`pbox`]), sliced into focal elements and pushed through a
//! model by box-constrained optimization ([`propagation`], [`optimizer`]).
//! The resulting outcome p-boxes feed interval decision rules
//! ([`decision`]). Plain Monte Carlo over precise distributions is
//! available as the comparison baseline.

pub mod decision;
pub mod exec;
pub mod interval;
pub mod models;
pub mod optimizer;
pub mod pbox;
pub mod propagation;

pub use decision::{choose, expected_interval, Choice, DecisionRule, UtilityInterval};
pub use exec::Execution;
pub use interval::Interval;
pub use models::{Model, ModelError, ModelRegistry};
pub use optimizer::{optimize_box, vertex_extrema, OptimizerConfig, SearchBox, Sense};
pub use pbox::{MinimalData, PBox, PBoxError, Side, Summary};
pub use propagation::{
    discretize_outer, propagate_mixed, propagate_pboxes, psa_propagate, EmpiricalPBox, ParameterSet, PropagationConfig,
    PropagationError,
};
