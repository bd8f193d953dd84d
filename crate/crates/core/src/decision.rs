//! Interval expected utilities and decision rules over competing actions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::propagation::EmpiricalPBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("need at least two actions, got {0}")]
    TooFewActions(usize),
    #[error("Hurwicz alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("utility decreases between {x0} and {x1}")]
    NonMonotoneUtility { x0: f64, x1: f64 },
    #[error("utility is {value} at {x}")]
    NonFiniteUtility { x: f64, value: f64 },
}

pub type Result<T, E = DecisionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityInterval {
    pub action: String,
    pub interval: Interval,
}

impl UtilityInterval {
    pub fn new(action: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            action: action.into(),
            interval: Interval { lo, hi },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DecisionRule {
    Dominance,
    Pessimist,
    Optimist,
    /// Scores `alpha * lower + (1 - alpha) * upper`.
    Hurwicz {
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "actions", rename_all = "snake_case")]
pub enum Choice {
    /// The optimal actions; several when tied.
    Optimal(Vec<String>),
    /// Undominated actions whose intervals cannot be ordered.
    Indeterminate(Vec<String>),
}

/// Expected utility under both bounds of `e`, as `[min, max]`.
///
/// `utility` must be non-decreasing; `None` means the identity.
pub fn expected_interval(
    action: impl Into<String>,
    e: &EmpiricalPBox,
    utility: Option<&dyn Fn(f64) -> f64>,
) -> Result<UtilityInterval> {
    let id = |x: f64| x;
    let u: &dyn Fn(f64) -> f64 = utility.unwrap_or(&id);
    let mut xs: Vec<f64> = e.lower().points().iter().chain(e.upper().points()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut prev: Option<(f64, f64)> = None;
    for &x in &xs {
        let v = u(x);
        if !v.is_finite() {
            return Err(DecisionError::NonFiniteUtility { x, value: v });
        }
        if let Some((x0, v0)) = prev {
            if v < v0 {
                return Err(DecisionError::NonMonotoneUtility { x0, x1: x });
            }
        }
        prev = Some((x, v));
    }
    let a = e.lower().expectation(u);
    let b = e.upper().expectation(u);
    Ok(UtilityInterval {
        action: action.into(),
        interval: Interval {
            lo: a.min(b),
            hi: a.max(b),
        },
    })
}

fn dominates(a: &Interval, b: &Interval) -> bool {
    a.lo > b.lo && a.hi > b.hi
}

fn incomparable(a: &Interval, b: &Interval) -> bool {
    (a.lo < b.lo && a.hi > b.hi) || (a.lo > b.lo && a.hi < b.hi)
}

fn argmax(us: &[UtilityInterval], score: impl Fn(&Interval) -> f64) -> Vec<String> {
    let scores: Vec<f64> = us.iter().map(|u| score(&u.interval)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    us.iter()
        .zip(&scores)
        .filter(|(_, &s)| s == best)
        .map(|(u, _)| u.action.clone())
        .collect()
}

/// Applies `rule` to the candidate actions.
pub fn choose(us: &[UtilityInterval], rule: DecisionRule) -> Result<Choice> {
    if us.len() < 2 {
        return Err(DecisionError::TooFewActions(us.len()));
    }
    let chosen = match rule {
        DecisionRule::Pessimist => argmax(us, |i| i.lo),
        DecisionRule::Optimist => argmax(us, |i| i.hi),
        DecisionRule::Hurwicz { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(DecisionError::InvalidAlpha(alpha));
            }
            // the end cases avoid 0 * inf
            if alpha == 1.0 {
                argmax(us, |i| i.lo)
            } else if alpha == 0.0 {
                argmax(us, |i| i.hi)
            } else {
                argmax(us, |i| alpha * i.lo + (1.0 - alpha) * i.hi)
            }
        }
        DecisionRule::Dominance => {
            let kept: Vec<&UtilityInterval> = us
                .iter()
                .filter(|a| !us.iter().any(|b| dominates(&b.interval, &a.interval)))
                .collect();
            let names = kept.iter().map(|u| u.action.clone()).collect();
            let clash = kept
                .iter()
                .enumerate()
                .any(|(i, a)| kept[i + 1..].iter().any(|b| incomparable(&a.interval, &b.interval)));
            return Ok(if clash {
                Choice::Indeterminate(names)
            } else {
                Choice::Optimal(names)
            });
        }
    };
    Ok(Choice::Optimal(chosen))
}
