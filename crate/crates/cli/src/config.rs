//! Analysis configuration files.

use std::collections::BTreeMap;
use std::sync::Arc;

use pba_core::models::{CohortCeaSpec, CohortModel, Outcome};
use pba_core::{DecisionRule, Model, ModelRegistry, OptimizerConfig, ParameterSet, Summary};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA: &str = "pba-analysis/1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    PboxCurve,
    Propagate,
    PropagateMixed,
    Psa,
    Decide,
}

/// A registry model by name, or an inline cohort spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Named(String),
    Cohort { cohort: CohortCeaSpec, outcome: Outcome },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub name: String,
    /// Parameters pinned to a value for this action.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveOptions {
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Plot range; defaults to the padded support.
    #[serde(default)]
    pub range: Option<[f64; 2]>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            range: None,
        }
    }
}

fn default_grid() -> usize {
    201
}

fn default_slices() -> usize {
    50
}

fn default_samples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub schema: String,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub model: Option<ModelRef>,
    #[serde(default)]
    pub parameters: ParameterSet,
    /// Statistics for the `pbox-curve` pipeline.
    #[serde(default)]
    pub pbox: Option<Summary>,
    #[serde(default = "default_slices")]
    pub slices: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// 0 uses every core, 1 runs sequentially.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub curve: CurveOptions,
    /// Precise-only parameters propagated by PSA alongside the main run.
    #[serde(default)]
    pub baseline: Option<ParameterSet>,
    #[serde(default)]
    pub actions: Vec<Action>,
    #[serde(default)]
    pub decision: Option<DecisionRule>,
}

/// A parsed config together with its resolved model.
pub struct Analysis {
    pub config: AnalysisConfig,
    pub model: Option<Arc<dyn Model>>,
    pub model_name: Option<String>,
}

fn input_check(params: &ParameterSet, model: &dyn Model, path: &str) -> Result<(), ConfigError> {
    params
        .check(model.inputs())
        .map_err(|e| ConfigError::invalid(path, format!("{e}; model inputs are {:?}", model.inputs())))
}

impl AnalysisConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Checks the schema tag and per-pipeline requirements, and resolves
    /// the model.
    pub fn resolve(self, registry: &ModelRegistry) -> Result<Analysis, ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::invalid(
                "/schema",
                format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema),
            ));
        }
        if self.slices == 0 {
            return Err(ConfigError::invalid("/slices", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(ConfigError::invalid("/samples", "must be at least 1"));
        }
        if self.curve.grid < 2 {
            return Err(ConfigError::invalid("/curve/grid", "must be at least 2"));
        }
        if let Some([lo, hi]) = self.curve.range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ConfigError::invalid("/curve/range", "needs finite lo < hi"));
            }
        }
        if self.pipeline == Pipeline::PboxCurve {
            let d = self
                .pbox
                .ok_or_else(|| ConfigError::invalid("/pbox", "required by the pbox-curve pipeline"))?;
            d.to_pbox().map_err(|e| ConfigError::invalid("/pbox", e.to_string()))?;
            return Ok(Analysis {
                config: self,
                model: None,
                model_name: None,
            });
        }

        let (model, name): (Arc<dyn Model>, String) = match &self.model {
            None => return Err(ConfigError::invalid("/model", "required by this pipeline")),
            Some(ModelRef::Named(name)) => (
                registry
                    .get(name)
                    .map_err(|e| ConfigError::invalid("/model", e.to_string()))?,
                name.clone(),
            ),
            Some(ModelRef::Cohort { cohort, outcome }) => {
                let m = CohortModel::new(cohort.clone(), outcome.clone())
                    .map_err(|e| ConfigError::invalid("/model", e.to_string()))?;
                (Arc::new(m), "inline cohort".to_string())
            }
        };

        let p = &self.parameters;
        match self.pipeline {
            Pipeline::Propagate if !p.precise.is_empty() => {
                return Err(ConfigError::invalid(
                    "/parameters/precise",
                    "the propagate pipeline takes no precise parameters; use propagate-mixed",
                ))
            }
            Pipeline::Psa if !p.boxed.is_empty() => {
                return Err(ConfigError::invalid(
                    "/parameters/boxed",
                    "the psa pipeline takes no boxed parameters",
                ))
            }
            Pipeline::Decide => {
                if self.actions.len() < 2 {
                    return Err(ConfigError::invalid("/actions", "decide needs at least two actions"));
                }
                if self.decision.is_none() {
                    return Err(ConfigError::invalid("/decision", "required by the decide pipeline"));
                }
                let mut seen = std::collections::BTreeSet::new();
                for (i, a) in self.actions.iter().enumerate() {
                    if !seen.insert(&a.name) {
                        return Err(ConfigError::invalid(
                            format!("/actions/{i}/name"),
                            "duplicate action name",
                        ));
                    }
                    for key in a.overrides.keys() {
                        if !model.inputs().contains(key) {
                            return Err(ConfigError::invalid(
                                format!("/actions/{i}/overrides/{key}"),
                                format!("unknown parameter; model inputs are {:?}", model.inputs()),
                            ));
                        }
                    }
                    input_check(
                        &with_overrides(p, &a.overrides),
                        model.as_ref(),
                        &format!("/actions/{i}"),
                    )?;
                }
            }
            _ => {}
        }
        if self.pipeline != Pipeline::Decide {
            input_check(p, model.as_ref(), "/parameters")?;
        }
        if let Some(b) = &self.baseline {
            if !b.boxed.is_empty() {
                return Err(ConfigError::invalid("/baseline/boxed", "the baseline runs PSA only"));
            }
            input_check(b, model.as_ref(), "/baseline")?;
        }
        Ok(Analysis {
            config: self,
            model: Some(model),
            model_name: Some(name),
        })
    }
}

/// `params` with each overridden name moved into the fixed values.
pub fn with_overrides(params: &ParameterSet, overrides: &BTreeMap<String, f64>) -> ParameterSet {
    let mut out = params.clone();
    for (k, &v) in overrides {
        out.boxed.remove(k);
        out.precise.remove(k);
        out.fixed.insert(k.clone(), v);
    }
    out
}
