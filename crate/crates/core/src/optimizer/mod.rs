//! Box-constrained global optimization of black-box objectives.
//!
//! [`optimize_box`] runs a deterministic locally-biased DIRECT search;
//! [`vertex_extrema`] enumerates corners and is exact for objectives that
//! are monotone in each coordinate.

mod direct;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;

pub use direct::optimize_box;

pub const DEFAULT_BUDGET: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Largest dimension [`vertex_extrema`] will enumerate.
pub const MAX_VERTEX_DIM: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("search box has no coordinates")]
    EmptyBox,
    #[error("evaluation budget must be at least 1")]
    ZeroBudget,
    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid interval [{lo}, {hi}] for coordinate {index}")]
    InvalidInterval { index: usize, lo: f64, hi: f64 },
    #[error("objective returned {value} at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },
    #[error("{free} free coordinates need 2^{free} evaluations, over the budget of {budget}")]
    DimensionTooLarge { free: usize, budget: usize },
}

pub type Result<T, E = OptimizerError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Min,
    Max,
}

/// Optimizer settings shared by every box of a propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub budget: usize,
    pub tol: f64,
    /// Slack in the potentially-optimal test; 0 keeps every hull vertex.
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            tol: DEFAULT_TOL,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub bounds: Vec<Interval>,
    pub budget: usize,
    /// Stop once the best rectangle's diameter falls below `tol` times the
    /// diameter of the whole box.
    pub tol: f64,
    pub epsilon: f64,
}

impl SearchBox {
    pub fn new(bounds: Vec<Interval>) -> Self {
        Self::with_config(bounds, OptimizerConfig::default())
    }

    pub fn with_config(bounds: Vec<Interval>, cfg: OptimizerConfig) -> Self {
        Self {
            bounds,
            budget: cfg.budget,
            tol: cfg.tol,
            epsilon: cfg.epsilon,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(OptimizerError::EmptyBox);
        }
        if self.budget == 0 {
            return Err(OptimizerError::ZeroBudget);
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(OptimizerError::InvalidTolerance(self.tol));
        }
        for (index, iv) in self.bounds.iter().enumerate() {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                return Err(OptimizerError::InvalidInterval {
                    index,
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        Ok(())
    }

    /// Indices of coordinates with positive width.
    pub fn free_dims(&self) -> Vec<usize> {
        (0..self.bounds.len())
            .filter(|&i| self.bounds[i].width() > 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// The tolerance criterion was met before the budget ran out.
    pub converged: bool,
    pub evaluations: usize,
}

fn checked(point: &[f64], value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(OptimizerError::NonFiniteObjective {
            point: point.to_vec(),
            value,
        })
    }
}

/// Minimum and maximum of `f` over the corners of `b`.
///
/// Zero-width coordinates are pinned, so only `2^free` corners are visited.
pub fn vertex_extrema<F>(mut f: F, b: &SearchBox) -> Result<Interval>
where
    F: FnMut(&[f64]) -> f64,
{
    b.validate()?;
    let free = b.free_dims();
    if free.len() > MAX_VERTEX_DIM || (1usize << free.len()) > b.budget {
        return Err(OptimizerError::DimensionTooLarge {
            free: free.len(),
            budget: b.budget,
        });
    }
    let mut x: Vec<f64> = b.bounds.iter().map(|iv| iv.lo).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0usize..1 << free.len() {
        for (bit, &i) in free.iter().enumerate() {
            let iv = b.bounds[i];
            x[i] = if mask >> bit & 1 == 1 { iv.hi } else { iv.lo };
        }
        let v = checked(&x, f(&x))?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(Interval { lo, hi })
}
