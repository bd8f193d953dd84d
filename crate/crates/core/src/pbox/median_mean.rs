//! Bounds for the `{min, max, median, mean}` case.
//!
//! The shape of the box depends on where the mean sits relative to the
//! median, the midpoint of the support and the feasible mean range
//! `[(min + median)/2, (median + max)/2]`. Eleven configurations are
//! distinguished; each yields a fixed layout of plateaus at 1/2 and
//! mean-type curves.

use super::bound::{Bound, BoundBuilder, BoundExpr};

/// The eleven configurations, numbered in the conventional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianMeanCase {
    /// median < mean < midpoint
    C1,
    /// median < mean = midpoint
    C2,
    /// median < mean, midpoint < mean < upper mean limit
    C3,
    /// median < mean = upper mean limit
    C4,
    /// median = mean < midpoint
    C5,
    /// median = mean = midpoint
    C6,
    /// median = mean > midpoint
    C7,
    /// median > mean = lower mean limit
    C8,
    /// median > mean, lower mean limit < mean < midpoint
    C9,
    /// median > mean = midpoint
    C10,
    /// median > mean > midpoint
    C11,
}

/// Derived breakpoint values shared by all cases.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Breakpoints {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    pub mid: f64,
    /// `2 mean - min`: where the lower mean curve reaches 1/2.
    pub gamma: f64,
    /// `2 mean - max`: where the upper mean curve reaches 1/2.
    pub psi: f64,
    pub mean_lo: f64,
    pub mean_hi: f64,
}

impl Breakpoints {
    pub fn new(min: f64, max: f64, median: f64, mean: f64) -> Self {
        Self {
            min,
            max,
            median,
            mean,
            mid: 0.5 * (min + max),
            gamma: 2.0 * mean - min,
            psi: 2.0 * mean - max,
            mean_lo: 0.5 * (min + median),
            mean_hi: 0.5 * (median + max),
        }
    }
}

impl MedianMeanCase {
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    /// Classifies validated data. Equalities are tested with a tolerance
    /// relative to the support width.
    pub fn classify(min: f64, max: f64, median: f64, mean: f64) -> Self {
        let bp = Breakpoints::new(min, max, median, mean);
        let tol = 1e-12 * (max - min);
        let eq = |x: f64, y: f64| (x - y).abs() <= tol;
        let vs_mid = if eq(mean, bp.mid) {
            0
        } else if mean < bp.mid {
            -1
        } else {
            1
        };
        if eq(median, mean) {
            match vs_mid {
                -1 => MedianMeanCase::C5,
                0 => MedianMeanCase::C6,
                _ => MedianMeanCase::C7,
            }
        } else if median < mean {
            if eq(mean, bp.mean_hi) {
                MedianMeanCase::C4
            } else {
                match vs_mid {
                    -1 => MedianMeanCase::C1,
                    0 => MedianMeanCase::C2,
                    _ => MedianMeanCase::C3,
                }
            }
        } else if eq(mean, bp.mean_lo) {
            MedianMeanCase::C8
        } else {
            match vs_mid {
                -1 => MedianMeanCase::C9,
                0 => MedianMeanCase::C10,
                _ => MedianMeanCase::C11,
            }
        }
    }

    pub(crate) fn lower(self, bp: &Breakpoints) -> Bound {
        use MedianMeanCase::*;
        let curve = BoundExpr::MeanLower {
            min: bp.min,
            mean: bp.mean,
        };
        let mut b = BoundBuilder::new();
        match self {
            // plateau from the median, the mean curve takes over past gamma
            C1 | C5 => {
                b.push(bp.median, BoundExpr::HALF).push(bp.gamma, curve);
            }
            // gamma at or beyond max: the plateau runs to max
            C2 | C3 | C4 | C6 | C7 => {
                b.push(bp.median, BoundExpr::HALF);
            }
            // curve from the mean; at the lower mean limit gamma == median
            C8 => {
                b.push(bp.mean, curve);
            }
            C9 => {
                b.push(bp.mean, curve)
                    .push(bp.median, BoundExpr::HALF)
                    .push(bp.gamma, curve);
            }
            C10 | C11 => {
                b.push(bp.mean, curve).push(bp.median, BoundExpr::HALF);
            }
        }
        b.push(bp.max, BoundExpr::ONE);
        b.finish()
    }

    pub(crate) fn upper(self, bp: &Breakpoints) -> Bound {
        use MedianMeanCase::*;
        let curve = BoundExpr::MeanUpper {
            max: bp.max,
            mean: bp.mean,
        };
        let mut b = BoundBuilder::new();
        match self {
            C1 | C2 => {
                b.push(bp.min, BoundExpr::HALF)
                    .push(bp.median, curve)
                    .push(bp.mean, BoundExpr::ONE);
            }
            C3 => {
                b.push(bp.min, curve)
                    .push(bp.psi, BoundExpr::HALF)
                    .push(bp.median, curve)
                    .push(bp.mean, BoundExpr::ONE);
            }
            // psi == median: the curve runs uninterrupted up to the mean
            C4 => {
                b.push(bp.min, curve).push(bp.mean, BoundExpr::ONE);
            }
            C5 | C6 | C8 | C9 | C10 => {
                b.push(bp.min, BoundExpr::HALF).push(bp.median, BoundExpr::ONE);
            }
            C7 | C11 => {
                b.push(bp.min, curve)
                    .push(bp.psi, BoundExpr::HALF)
                    .push(bp.median, BoundExpr::ONE);
            }
        }
        b.finish()
    }
}
