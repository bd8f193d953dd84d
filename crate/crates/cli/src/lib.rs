//! Configuration-driven runs of the probability bounds pipelines.

pub mod config;
pub mod curve;
pub mod run;

pub use config::{Analysis, AnalysisConfig, ConfigError, Pipeline};
pub use curve::{curve_csv, export_curve, Curve, CurveError};
pub use run::{run_analysis, RunError, RunOptions, RunSummary};
