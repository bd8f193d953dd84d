//! Pipeline execution and output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pba_core::propagation::RunStats;
use pba_core::{
    choose, expected_interval, propagate_mixed, propagate_pboxes, psa_propagate, Choice, DecisionRule, EmpiricalPBox,
    Execution, Interval, Model, PBox, ParameterSet, PropagationConfig, Side,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{with_overrides, Analysis, Pipeline};
use crate::curve::{export_curve, Curve, CurveError};

pub const SUMMARY_SCHEMA: &str = "pba-summary/1";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    PBox(#[from] pba_core::PBoxError),
    #[error(transparent)]
    Propagation(#[from] pba_core::PropagationError),
    #[error(transparent)]
    Decision(#[from] pba_core::decision::DecisionError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::PBox(_) => "PBoxError",
            RunError::Propagation(_) => "PropagationError",
            RunError::Decision(_) => "DecisionError",
            RunError::Curve(e) => e.kind(),
            RunError::Io { .. } => "IoError",
        }
    }
}

/// Run-time knobs that may come from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeSummary {
    pub curve: String,
    pub support: Interval,
    /// Expected outcome under the lower and upper bounds, ordered.
    pub expected: Interval,
    pub precise: bool,
    pub stats: RunStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineSummary {
    pub curve: String,
    pub samples: usize,
    pub sample_range: Interval,
    pub mean: f64,
    /// Largest distance by which the baseline CDF leaves the envelope.
    pub excursion: f64,
    /// The baseline CDF lies strictly between the bounds at every sample.
    pub strictly_inside: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionSummary {
    pub name: String,
    #[serde(flatten)]
    pub outcome: OutcomeSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema: &'static str,
    pub pipeline: Pipeline,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub seed: u64,
    pub slices: usize,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<OutcomeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ActionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<DecisionRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice: Option<Choice>,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    seconds: f64,
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn excursion(env: &EmpiricalPBox, psa: &EmpiricalPBox) -> (f64, bool) {
    let step = psa.lower();
    let mut prev = 0.0;
    let (mut worst, mut strict): (f64, bool) = (0.0, true);
    for (&y, &c) in step.points().iter().zip(step.cumulative()) {
        let (l, u) = (env.eval(Side::Lower, y), env.eval(Side::Upper, y));
        worst = worst.max(l - c).max(prev - u);
        strict &= l < c && prev < u;
        prev = c;
    }
    (worst, strict)
}

struct Runner<'a> {
    analysis: &'a Analysis,
    seed: u64,
    exec: Execution,
    out: &'a Path,
}

impl Runner<'_> {
    fn prop_config(&self) -> PropagationConfig {
        PropagationConfig {
            slices: self.analysis.config.slices,
            optimizer: self.analysis.config.optimizer,
            execution: self.exec,
            ..Default::default()
        }
    }

    fn range(&self) -> Option<Interval> {
        self.analysis.config.curve.range.map(|[lo, hi]| Interval { lo, hi })
    }

    fn export(&self, c: Curve<'_>, file: &str) -> Result<String, RunError> {
        export_curve(c, self.analysis.config.curve.grid, self.range(), &self.out.join(file))?;
        Ok(file.to_string())
    }

    fn summarize(&self, e: &EmpiricalPBox, stats: RunStats, file: &str) -> Result<OutcomeSummary, RunError> {
        Ok(OutcomeSummary {
            curve: self.export(Curve::Empirical(e), file)?,
            support: e.support(),
            expected: expected_interval("outcome", e, None)?.interval,
            precise: e.is_precise(),
            stats,
        })
    }

    fn propagate(&self, model: &dyn Model, params: &ParameterSet) -> Result<(EmpiricalPBox, RunStats), RunError> {
        let c = &self.analysis.config;
        let out = match c.pipeline {
            Pipeline::Propagate => propagate_pboxes(model, params, &self.prop_config())?,
            Pipeline::Psa => psa_propagate(model, params, c.samples, self.seed, self.exec)?,
            _ => propagate_mixed(model, params, &self.prop_config(), c.samples, self.seed)?,
        };
        Ok((out.pbox, out.stats))
    }

    fn run(&self) -> Result<RunSummary, RunError> {
        let c = &self.analysis.config;
        let mut summary = RunSummary {
            schema: SUMMARY_SCHEMA,
            pipeline: c.pipeline,
            model: self.analysis.model_name.clone(),
            seed: self.seed,
            slices: c.slices,
            samples: c.samples,
            result: None,
            baseline: None,
            actions: Vec::new(),
            rule: None,
            choice: None,
        };
        if c.pipeline == Pipeline::PboxCurve {
            let p: PBox = c.pbox.expect("checked when resolving").to_pbox()?;
            let file = self.export(Curve::Analytic(&p), "curve.csv")?;
            let s = p.support();
            summary.result = Some(OutcomeSummary {
                curve: file,
                support: s,
                // integrals of t against the bounding CDFs over the support
                expected: bound_means(&p),
                precise: false,
                stats: RunStats::default(),
            });
            return Ok(summary);
        }

        let model = self.analysis.model.as_deref().expect("checked when resolving");
        if c.pipeline == Pipeline::Decide {
            let rule = c.decision.expect("checked when resolving");
            let mut intervals = Vec::new();
            for a in &c.actions {
                let params = with_overrides(&c.parameters, &a.overrides);
                let (e, stats) = self.propagate(model, &params)?;
                let outcome = self.summarize(&e, stats, &format!("curve-{}.csv", file_stem(&a.name)))?;
                intervals.push(pba_core::UtilityInterval {
                    action: a.name.clone(),
                    interval: outcome.expected,
                });
                summary.actions.push(ActionSummary {
                    name: a.name.clone(),
                    outcome,
                });
            }
            summary.choice = Some(choose(&intervals, rule)?);
            summary.rule = Some(rule);
            return Ok(summary);
        }

        let (env, stats) = self.propagate(model, &c.parameters)?;
        summary.result = Some(self.summarize(&env, stats, "curve.csv")?);
        if let Some(b) = &c.baseline {
            let psa = psa_propagate(model, b, c.samples, self.seed, self.exec)?;
            let (excursion, strictly_inside) = excursion(&env, &psa.pbox);
            summary.baseline = Some(BaselineSummary {
                curve: self.export(Curve::Empirical(&psa.pbox), "baseline.csv")?,
                samples: c.samples,
                sample_range: psa.pbox.support(),
                mean: psa.pbox.lower().expectation(|x| x),
                excursion,
                strictly_inside,
            });
        }
        Ok(summary)
    }
}

/// `[int t dF_upper, int t dF_lower]` for an analytic box, by the midpoint
/// rule on 20000 cells.
fn bound_means(p: &PBox) -> Interval {
    // E[T] = b - int_a^b F(t) dt
    let s = p.support();
    let n = 20_000;
    let h = s.width() / n as f64;
    let area = |side: Side| (0..n).map(|i| p.eval(side, s.lo + (i as f64 + 0.5) * h)).sum::<f64>() * h;
    Interval {
        lo: s.hi - area(Side::Upper),
        hi: s.hi - area(Side::Lower),
    }
}

/// Runs the configured pipeline, writing `summary.json`, the curve files and
/// `timing.json` into `opts.out_dir`.
pub fn run_analysis(analysis: &Analysis, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(&opts.out_dir).map_err(|source| RunError::Io {
        path: opts.out_dir.display().to_string(),
        source,
    })?;
    let runner = Runner {
        analysis,
        seed: opts.seed.or(analysis.config.seed).unwrap_or(0),
        exec: Execution::with_threads(opts.threads.unwrap_or(analysis.config.threads)),
        out: &opts.out_dir,
    };
    let summary = runner.run()?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&opts.out_dir.join("summary.json"), &(json + "\n"))?;
    // kept apart so the other outputs are reproducible byte for byte
    let timing = Timing {
        seconds: start.elapsed().as_secs_f64(),
    };
    write(
        &opts.out_dir.join("timing.json"),
        &(serde_json::to_string_pretty(&timing).expect("timing serializes") + "\n"),
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pba_core::MinimalData;

    #[test]
    fn bound_means_of_min_max() {
        let p = PBox::from_data(MinimalData::MinMax { min: 1.0, max: 3.0 }).unwrap();
        let m = bound_means(&p);
        assert!((m.lo - 1.0).abs() < 1e-9 && (m.hi - 3.0).abs() < 1e-9);
    }

    #[test]
    fn stems_are_filesystem_safe() {
        assert_eq!(file_stem("hip/new v2"), "hip_new_v2");
    }
}
