//! Propagation of p-boxes and precise distributions through a model.
//!
//! Boxed parameters are sliced into focal elements; every combination of
//! slices forms a hyperrectangle over which the model is minimized and
//! maximized. Precise parameters are sampled by seeded Monte Carlo, one
//! generator stream per sample, so results do not depend on thread count.

mod discretize;
mod distributions;
mod empirical;

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::models::{Model, ModelError};
use crate::optimizer::{optimize_box, OptimizerConfig, OptimizerError, SearchBox, Sense};
use crate::pbox::{MinimalData, PBox, PBoxError};

pub use discretize::{
    discretize_outer, DiscretizedPBox, FocalElement, FocalProduct, Hyperrectangle, DEFAULT_MAX_BOXES,
};
pub use distributions::{moment_match, BetaSpec, DistributionSpec, Family, GammaSpec, NativeParams};
pub use empirical::{EmpiricalPBox, Extremum, StepFunction};

use distributions::Sampler;

/// Named input values, used in error reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<(String, f64)>);

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("number of slices must be at least 1")]
    ZeroSlices,
    #[error("number of Monte Carlo samples must be at least 1")]
    ZeroSamples,
    #[error("focal product needs at least one input")]
    EmptyProduct,
    #[error("focal product has {} hyperrectangles, over the cap of {cap}", count.map_or("too many".to_string(), |c| c.to_string()))]
    TooManyHyperrectangles { count: Option<usize>, cap: usize },
    #[error("no outcomes to assemble")]
    EmptyOutcome,
    #[error("invalid outcome {value} with mass {mass}")]
    InvalidOutcome { value: f64, mass: f64 },
    #[error("outcome masses sum to {0}, not 1")]
    MassMismatch(f64),
    #[error("outcome minimum {min} exceeds maximum {max}")]
    ReversedExtremum { min: f64, max: f64 },
    #[error("cannot match {family:?} moments: {reason}")]
    InfeasibleMoments { family: Family, reason: String },
    #[error("{family:?} needs {needed}")]
    MissingStatistic { family: Family, needed: &'static str },
    #[error("invalid distribution for {name}: {reason}")]
    InvalidDistributionSpec { name: String, reason: String },
    #[error("parameter {0} is assigned more than once")]
    DuplicateParameter(String),
    #[error("model input {0} has no value, distribution or p-box")]
    MissingParameter(String),
    #[error("parameter {0} is not a model input")]
    UnknownParameter(String),
    #[error("this pipeline takes no precise parameters, found {0}")]
    UnexpectedPrecise(String),
    #[error("this pipeline takes no p-box parameters, found {0}")]
    UnexpectedBoxed(String),
    #[error("p-box for {name}: {source}")]
    BoxedParameter { name: String, source: PBoxError },
    #[error(transparent)]
    PBox(#[from] PBoxError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("model failed at {point}: {source}")]
    ModelEvaluation { point: Point, source: ModelError },
    #[error("model returned {value} at {point}")]
    NonFiniteOutput { point: Point, value: f64 },
}

pub type Result<T, E = PropagationError> = std::result::Result<T, E>;

/// Model inputs split into fixed values, precise distributions and p-boxes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterSet {
    pub fixed: BTreeMap<String, f64>,
    pub precise: BTreeMap<String, DistributionSpec>,
    pub boxed: BTreeMap<String, MinimalData>,
}

impl ParameterSet {
    /// Checks the three maps are disjoint and exactly cover `inputs`.
    pub fn check(&self, inputs: &[String]) -> Result<()> {
        self.layout(inputs).map(|_| ())
    }

    fn layout(&self, inputs: &[String]) -> Result<Layout> {
        for name in self.precise.keys().chain(self.boxed.keys()) {
            if self.fixed.contains_key(name) {
                return Err(PropagationError::DuplicateParameter(name.clone()));
            }
        }
        for name in self.boxed.keys() {
            if self.precise.contains_key(name) {
                return Err(PropagationError::DuplicateParameter(name.clone()));
            }
        }
        for name in self.fixed.keys().chain(self.precise.keys()).chain(self.boxed.keys()) {
            if !inputs.contains(name) {
                return Err(PropagationError::UnknownParameter(name.clone()));
            }
        }
        let mut layout = Layout {
            names: inputs.to_vec(),
            base: vec![0.0; inputs.len()],
            boxed: Vec::new(),
            precise: Vec::new(),
        };
        for (i, name) in inputs.iter().enumerate() {
            if let Some(&v) = self.fixed.get(name) {
                layout.base[i] = v;
            } else if let Some(d) = self.boxed.get(name) {
                let p = PBox::from_data(*d).map_err(|source| PropagationError::BoxedParameter {
                    name: name.clone(),
                    source,
                })?;
                layout.boxed.push((i, p));
            } else if let Some(spec) = self.precise.get(name) {
                layout.precise.push((i, Sampler::new(name, spec)?));
            } else {
                return Err(PropagationError::MissingParameter(name.clone()));
            }
        }
        Ok(layout)
    }
}

struct Layout {
    names: Vec<String>,
    /// Fixed values in place; other slots are overwritten.
    base: Vec<f64>,
    boxed: Vec<(usize, PBox)>,
    precise: Vec<(usize, Sampler)>,
}

impl Layout {
    fn point(&self, x: &[f64]) -> Point {
        Point(self.names.iter().cloned().zip(x.iter().copied()).collect())
    }

    fn discretize(&self, n: usize) -> Result<Vec<DiscretizedPBox>> {
        self.boxed.iter().map(|(_, p)| discretize_outer(p, n)).collect()
    }

    /// Input vector for Monte Carlo sample `s`.
    fn sample(&self, seed: u64, s: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut x = self.base.clone();
        for (i, sampler) in &self.precise {
            let u: f64 = Open01.sample(&mut rng);
            x[*i] = sampler.quantile(u);
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    /// Slices per boxed parameter.
    pub slices: usize,
    pub optimizer: OptimizerConfig,
    #[serde(skip)]
    pub execution: Execution,
    pub max_boxes: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            slices: 50,
            optimizer: OptimizerConfig::default(),
            execution: Execution::default(),
            max_boxes: DEFAULT_MAX_BOXES,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub evaluations: u64,
    pub hyperrectangles: usize,
    /// Optimizations that spent their budget before meeting the tolerance.
    pub unconverged: usize,
    pub samples: usize,
}

impl RunStats {
    fn add(&mut self, o: &RunStats) {
        self.evaluations += o.evaluations;
        self.hyperrectangles += o.hyperrectangles;
        self.unconverged += o.unconverged;
        self.samples += o.samples;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub pbox: EmpiricalPBox,
    pub stats: RunStats,
}

fn evaluate(model: &dyn Model, layout: &Layout, x: &[f64]) -> Result<f64> {
    match model.evaluate(x) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(value) => Err(PropagationError::NonFiniteOutput {
            point: layout.point(x),
            value,
        }),
        Err(source) => Err(PropagationError::ModelEvaluation {
            point: layout.point(x),
            source,
        }),
    }
}

/// Min and max of the model over one hyperrectangle, other inputs from `base`.
fn box_extrema(
    model: &dyn Model,
    layout: &Layout,
    base: &[f64],
    rect: &Hyperrectangle,
    opt: &OptimizerConfig,
) -> Result<(Extremum, RunStats)> {
    let mut stats = RunStats {
        hyperrectangles: 1,
        ..RunStats::default()
    };
    if layout.boxed.is_empty() {
        let y = evaluate(model, layout, base)?;
        stats.evaluations = 1;
        return Ok((
            Extremum {
                min: y,
                max: y,
                mass: rect.mass,
            },
            stats,
        ));
    }
    let sb = SearchBox::with_config(rect.intervals.clone(), *opt);
    let mut run = |sense: Sense| -> Result<f64> {
        let mut failure: Option<PropagationError> = None;
        let result = {
            let f = |u: &[f64]| {
                let mut x = base.to_vec();
                for ((i, _), &ui) in layout.boxed.iter().zip(u) {
                    x[*i] = ui;
                }
                match evaluate(model, layout, &x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            };
            optimize_box(f, &sb, sense)
        };
        match result {
            Ok(o) => {
                stats.evaluations += o.evaluations as u64;
                stats.unconverged += usize::from(!o.converged);
                Ok(o.value)
            }
            Err(OptimizerError::NonFiniteObjective { .. }) if failure.is_some() => Err(failure.expect("checked")),
            Err(e) => Err(e.into()),
        }
    };
    let min = run(Sense::Min)?;
    let max = run(Sense::Max)?;
    // both searches are approximate; keep the pair ordered
    let (min, max) = (min.min(max), max.max(min));
    Ok((
        Extremum {
            min,
            max,
            mass: rect.mass,
        },
        stats,
    ))
}

fn assemble(results: Vec<Result<(Extremum, RunStats)>>, samples: usize) -> Result<Propagated> {
    let mut stats = RunStats {
        samples,
        ..RunStats::default()
    };
    let mut extrema = Vec::with_capacity(results.len());
    for r in results {
        let (e, s) = r?;
        stats.add(&s);
        extrema.push(e);
    }
    Ok(Propagated {
        pbox: EmpiricalPBox::new(extrema)?,
        stats,
    })
}

fn pointless_rect() -> Hyperrectangle {
    Hyperrectangle {
        intervals: Vec::new(),
        mass: 1.0,
        multi_index: Vec::new(),
    }
}

/// Propagates p-box parameters through `model`; all other inputs fixed.
pub fn propagate_pboxes(model: &dyn Model, params: &ParameterSet, cfg: &PropagationConfig) -> Result<Propagated> {
    if let Some(name) = params.precise.keys().next() {
        return Err(PropagationError::UnexpectedPrecise(name.clone()));
    }
    let layout = params.layout(model.inputs())?;
    if layout.boxed.is_empty() {
        return assemble(
            vec![box_extrema(
                model,
                &layout,
                &layout.base,
                &pointless_rect(),
                &cfg.optimizer,
            )],
            0,
        );
    }
    let slices = layout.discretize(cfg.slices)?;
    let product = FocalProduct::with_cap(&slices, cfg.max_boxes)?;
    let results = cfg.execution.map(product.len(), |k| {
        let rect = product.get(k).expect("index in range");
        box_extrema(model, &layout, &layout.base, &rect, &cfg.optimizer)
    });
    assemble(results, 0)
}

/// Mixed propagation: for each of `samples` draws of the precise
/// parameters, propagates the p-boxes, and averages the resulting bounds.
///
/// With no precise parameters this is exactly [`propagate_pboxes`].
pub fn propagate_mixed(
    model: &dyn Model,
    params: &ParameterSet,
    cfg: &PropagationConfig,
    samples: usize,
    seed: u64,
) -> Result<Propagated> {
    if samples == 0 {
        return Err(PropagationError::ZeroSamples);
    }
    if params.precise.is_empty() {
        return propagate_pboxes(model, params, cfg);
    }
    let layout = params.layout(model.inputs())?;
    let bases = cfg.execution.map(samples, |s| layout.sample(seed, s));
    let scale = 1.0 / samples as f64;
    if layout.boxed.is_empty() {
        let results = cfg.execution.map(samples, |s| {
            let mut rect = pointless_rect();
            rect.mass = scale;
            box_extrema(model, &layout, &bases[s], &rect, &cfg.optimizer)
        });
        return assemble(results, samples);
    }
    let slices = layout.discretize(cfg.slices)?;
    let product = FocalProduct::with_cap(&slices, cfg.max_boxes)?;
    let per = product.len();
    let jobs = per
        .checked_mul(samples)
        .ok_or(PropagationError::TooManyHyperrectangles {
            count: None,
            cap: cfg.max_boxes,
        })?;
    let results = cfg.execution.map(jobs, |job| {
        let (s, k) = (job / per, job % per);
        let mut rect = product.get(k).expect("index in range");
        rect.mass *= scale;
        box_extrema(model, &layout, &bases[s], &rect, &cfg.optimizer)
    });
    assemble(results, samples)
}

/// Plain Monte Carlo over precise parameters: the empirical outcome CDF.
pub fn psa_propagate(
    model: &dyn Model,
    params: &ParameterSet,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Propagated> {
    if let Some(name) = params.boxed.keys().next() {
        return Err(PropagationError::UnexpectedBoxed(name.clone()));
    }
    if samples == 0 {
        return Err(PropagationError::ZeroSamples);
    }
    let layout = params.layout(model.inputs())?;
    let scale = 1.0 / samples as f64;
    let results = exec.map(samples, |s| {
        let x = layout.sample(seed, s);
        let y = evaluate(model, &layout, &x)?;
        Ok((
            Extremum {
                min: y,
                max: y,
                mass: scale,
            },
            RunStats {
                evaluations: 1,
                ..RunStats::default()
            },
        ))
    });
    assemble(results, samples)
}

/// The raw outcome samples of a PSA run, in sample order.
pub fn psa_samples(
    model: &dyn Model,
    params: &ParameterSet,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    if let Some(name) = params.boxed.keys().next() {
        return Err(PropagationError::UnexpectedBoxed(name.clone()));
    }
    let layout = params.layout(model.inputs())?;
    exec.map(samples, |s| evaluate(model, &layout, &layout.sample(seed, s)))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnModel;
    use crate::pbox::Side;

    fn identity() -> FnModel {
        FnModel::new(["x"], |x| Ok(x[0]))
    }

    fn boxed(d: MinimalData) -> ParameterSet {
        ParameterSet {
            boxed: BTreeMap::from([("x".to_string(), d)]),
            ..ParameterSet::default()
        }
    }

    #[test]
    fn layout_checks() {
        let m = FnModel::new(["a", "b"], |x| Ok(x[0] + x[1]));
        let mut p = ParameterSet::default();
        p.fixed.insert("a".into(), 1.0);
        assert_eq!(p.check(m.inputs()), Err(PropagationError::MissingParameter("b".into())));
        p.fixed.insert("c".into(), 1.0);
        assert_eq!(p.check(m.inputs()), Err(PropagationError::UnknownParameter("c".into())));
        p.fixed.remove("c");
        p.boxed.insert("a".into(), MinimalData::MinMax { min: 0.0, max: 1.0 });
        assert_eq!(
            p.check(m.inputs()),
            Err(PropagationError::DuplicateParameter("a".into()))
        );
    }

    #[test]
    fn constant_model_steps_once() {
        let m = FnModel::new(["x"], |_| Ok(2.5));
        let r = propagate_pboxes(
            &m,
            &boxed(MinimalData::MinMax { min: 0.0, max: 1.0 }),
            &PropagationConfig::default(),
        )
        .unwrap();
        for side in [Side::Lower, Side::Upper] {
            assert_eq!(r.pbox.eval(side, 2.4999), 0.0);
            assert_eq!(r.pbox.eval(side, 2.5), 1.0);
        }
    }

    #[test]
    fn identity_minmax_recovers_support() {
        let cfg = PropagationConfig {
            slices: 10,
            ..PropagationConfig::default()
        };
        let r = propagate_pboxes(&identity(), &boxed(MinimalData::MinMax { min: 1.0, max: 3.0 }), &cfg).unwrap();
        let s = r.pbox.support();
        assert!((s.lo - 1.0).abs() < 1e-5 && (s.hi - 3.0).abs() < 1e-5, "{s}");
        assert_eq!(r.stats.hyperrectangles, 10);
    }

    #[test]
    fn model_errors_carry_the_point() {
        let m = FnModel::new(["x"], |x| {
            if x[0] > 0.9 {
                Err(ModelError::Other("too big".into()))
            } else {
                Ok(x[0])
            }
        });
        let err = propagate_pboxes(
            &m,
            &boxed(MinimalData::MinMax { min: 0.0, max: 1.0 }),
            &PropagationConfig::default(),
        )
        .unwrap_err();
        match err {
            PropagationError::ModelEvaluation { point, .. } => assert!(point.0[0].1 > 0.9),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn psa_is_seeded() {
        let mut p = ParameterSet::default();
        p.precise
            .insert("x".into(), DistributionSpec::Uniform { min: 0.0, max: 1.0 });
        let a = psa_propagate(&identity(), &p, 200, 7, Execution::Sequential).unwrap();
        let b = psa_propagate(&identity(), &p, 200, 7, Execution::default()).unwrap();
        let c = psa_propagate(&identity(), &p, 200, 8, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.pbox, c.pbox);
        assert!(a.pbox.is_precise());
        let mixed = propagate_mixed(&identity(), &p, &PropagationConfig::default(), 200, 7).unwrap();
        assert_eq!(mixed.pbox, a.pbox);
    }
}
