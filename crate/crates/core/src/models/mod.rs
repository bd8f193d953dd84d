//! Black-box decision models.
//!
//! A [`Model`] maps a vector of named inputs to one scalar outcome. The
//! pipelines only ever see this contract, so anything pure and reentrant
//! can be plugged in.

pub mod cohort;
pub mod four_state;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use cohort::{
    cohort_trace, demo_model, demo_spec, discounted_outcomes, inmb, CohortCeaSpec, CohortModel, Expr, Outcome,
    StateSpec, Trace,
};
pub use four_state::{life_expectancy, FourStateModel, FourStateRates};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("rate {name} must be finite and non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("transient system is singular: some reachable state has no exit")]
    SingularSystem,
    #[error("transition row of state {state} is invalid at cycle {cycle} (outgoing mass {sum})")]
    RowSumViolation { cycle: usize, state: String, sum: f64 },
    #[error("utility of state {state} must lie in [0, 1], got {value}")]
    UtilityOutOfRange { state: String, value: f64 },
    #[error("unknown parameter {0}")]
    MissingParameter(String),
    #[error("expected {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("model {0} is already registered")]
    DuplicateModel(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// A pure scalar function of named inputs.
pub trait Model: Send + Sync {
    /// Input names, in the order `evaluate` expects them.
    fn inputs(&self) -> &[String];

    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

type BoxedFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// Wraps a closure as a [`Model`].
#[derive(Clone)]
pub struct FnModel {
    inputs: Vec<String>,
    f: Arc<BoxedFn>,
}

impl FnModel {
    pub fn new<I, S, F>(inputs: I, f: F) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            inputs: inputs.into_iter().map(Into::into).collect(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnModel")
            .field("inputs", &self.inputs)
            .finish_non_exhaustive()
    }
}

impl Model for FnModel {
    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.inputs.len() {
            return Err(ModelError::ArityMismatch {
                expected: self.inputs.len(),
                got: x.len(),
            });
        }
        (self.f)(x)
    }
}

/// Named models available to configuration files.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, Arc<dyn Model>>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `life_expectancy`, `demo_cea_inmb` and
    /// `demo_cea_net_benefit`.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.models
            .insert("life_expectancy".into(), Arc::new(FourStateModel::new()));
        r.models.insert("demo_cea_inmb".into(), Arc::new(demo_model()));
        let nb =
            CohortModel::new(demo_spec(), Outcome::NetBenefit { wtp: cohort::DEMO_WTP }).expect("demo spec is valid");
        r.models.insert("demo_cea_net_benefit".into(), Arc::new(nb));
        r
    }

    pub fn register(&mut self, name: impl Into<String>, model: Arc<dyn Model>) -> Result<()> {
        let name = name.into();
        if self.models.contains_key(&name) {
            return Err(ModelError::DuplicateModel(name));
        }
        self.models.insert(name, model);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Model>> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| ModelError::UnknownModel(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}

impl fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.models.keys()).finish()
    }
}
