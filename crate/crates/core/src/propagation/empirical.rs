//! Weighted step functions and empirical p-boxes of model outcomes.

use serde::{Deserialize, Serialize};

use super::{PropagationError, Result};
use crate::interval::Interval;
use crate::pbox::Side;

const MASS_TOL: f64 = 1e-9;

/// A right-continuous CDF made of jumps at sorted, distinct points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl StepFunction {
    /// Builds the CDF of weighted points. The total must be 1 within 1e-9;
    /// the last cumulative value is set to exactly 1.
    pub fn from_weighted(mut pts: Vec<(f64, f64)>) -> Result<Self> {
        if pts.is_empty() {
            return Err(PropagationError::EmptyOutcome);
        }
        if let Some(&(x, w)) = pts
            .iter()
            .find(|(x, w)| !x.is_finite() || !(w.is_finite() && *w >= 0.0))
        {
            return Err(PropagationError::InvalidOutcome { value: x, mass: w });
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(pts.len());
        let mut cum: Vec<f64> = Vec::with_capacity(pts.len());
        let mut total = 0.0;
        for (x, w) in pts {
            total += w;
            if xs.last() == Some(&x) {
                *cum.last_mut().expect("paired") = total;
            } else {
                xs.push(x);
                cum.push(total);
            }
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(PropagationError::MassMismatch(total));
        }
        for c in cum.iter_mut() {
            *c = c.min(1.0);
        }
        *cum.last_mut().expect("non-empty") = 1.0;
        Ok(Self { xs, cum })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.xs.partition_point(|&x| x <= t) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    /// Jump locations.
    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    /// Cumulative values at the jump locations.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// Jump sizes.
    pub fn masses(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut prev = 0.0;
        self.xs.iter().zip(&self.cum).map(move |(&x, &c)| {
            let m = c - prev;
            prev = c;
            (x, m)
        })
    }

    /// `sum u(x) * jump(x)`.
    pub fn expectation(&self, u: impl Fn(f64) -> f64) -> f64 {
        self.masses().map(|(x, m)| m * u(x)).sum()
    }
}

/// Per-box outcome extremes with the box mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub min: f64,
    pub max: f64,
    pub mass: f64,
}

/// Bounds on the outcome CDF assembled from per-box extremes.
///
/// Cumulating the maxima gives the lower bound and cumulating the minima
/// the upper bound: smaller outcomes push the CDF up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPBox {
    extrema: Vec<Extremum>,
    lower: StepFunction,
    upper: StepFunction,
}

impl EmpiricalPBox {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN endpoints must fail
    pub fn new(extrema: Vec<Extremum>) -> Result<Self> {
        if let Some(e) = extrema.iter().find(|e| !(e.min <= e.max)) {
            return Err(PropagationError::ReversedExtremum { min: e.min, max: e.max });
        }
        let lower = StepFunction::from_weighted(extrema.iter().map(|e| (e.max, e.mass)).collect())?;
        let upper = StepFunction::from_weighted(extrema.iter().map(|e| (e.min, e.mass)).collect())?;
        Ok(Self { extrema, lower, upper })
    }

    /// Equal-weight empirical CDF of samples; both bounds coincide.
    pub fn from_samples(ys: &[f64]) -> Result<Self> {
        let m = 1.0 / ys.len().max(1) as f64;
        Self::new(
            ys.iter()
                .map(|&y| Extremum {
                    min: y,
                    max: y,
                    mass: m,
                })
                .collect(),
        )
    }

    pub fn extrema(&self) -> &[Extremum] {
        &self.extrema
    }

    pub fn lower(&self) -> &StepFunction {
        &self.lower
    }

    pub fn upper(&self) -> &StepFunction {
        &self.upper
    }

    pub fn step(&self, side: Side) -> &StepFunction {
        match side {
            Side::Lower => &self.lower,
            Side::Upper => &self.upper,
        }
    }

    pub fn eval(&self, side: Side, t: f64) -> f64 {
        self.step(side).eval(t)
    }

    /// Smallest minimum to largest maximum.
    pub fn support(&self) -> Interval {
        Interval {
            lo: self.upper.xs[0],
            hi: *self.lower.xs.last().expect("non-empty"),
        }
    }

    /// True when both bounds are the same step function.
    pub fn is_precise(&self) -> bool {
        self.lower == self.upper
    }
}
