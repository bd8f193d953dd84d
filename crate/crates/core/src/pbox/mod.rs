//! Probability boxes built from minimal summary statistics.
//!
//! A [`PBox`] holds a lower and an upper bounding CDF in closed form. Boxes
//! are constructed from [`MinimalData`], evaluated pointwise, inverted
//! (set-valued quasi-inverses) and intersected.

mod bound;
mod median_mean;
mod oracle;

pub use bound::{Bound, BoundExpr, BoundSegment, Extreme};
pub use median_mean::MedianMeanCase;
pub use oracle::{oracle_cdf_bounds, MomentOracle};

use crate::interval::Interval;
use bound::BoundBuilder;
use median_mean::Breakpoints;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PBoxError {
    #[error("minimum {min} must be strictly below maximum {max}")]
    ReversedBounds { min: f64, max: f64 },
    #[error("{name} = {value} lies outside the support [{min}, {max}]")]
    StatisticOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("variance {variance} exceeds the largest feasible value {limit} for this mean and support")]
    InfeasibleVariance { variance: f64, limit: f64 },
    #[error("mean {mean} is incompatible with the median; it must lie in [{lo}, {hi}]")]
    InfeasibleMedianMean { mean: f64, lo: f64, hi: f64 },
    #[error("non-finite statistic {name} = {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("standard deviation {0} must be non-negative")]
    NegativeStd(f64),
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("p-boxes have different supports: {0} and {1}")]
    MismatchedSupports(Interval, Interval),
    #[error("intersection is empty near {theta}: the minimal data are mutually inconsistent")]
    EmptyBox { theta: f64 },
    #[error("nothing to intersect")]
    NoInput,
    #[error("unsupported combination of statistics: {0}")]
    UnsupportedCombination(String),
    #[error("grid size {0} is too small")]
    GridTooSmall(usize),
}

pub type Result<T, E = PBoxError> = std::result::Result<T, E>;

/// The summary statistics available for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Summary", into = "Summary")]
pub enum MinimalData {
    MinMax { min: f64, max: f64 },
    MinMaxMedian { min: f64, max: f64, median: f64 },
    MinMaxMean { min: f64, max: f64, mean: f64 },
    MinMaxMeanStd { min: f64, max: f64, mean: f64, std: f64 },
    MinMaxMedianMean { min: f64, max: f64, median: f64, mean: f64 },
}

impl MinimalData {
    pub fn min(&self) -> f64 {
        match *self {
            MinimalData::MinMax { min, .. }
            | MinimalData::MinMaxMedian { min, .. }
            | MinimalData::MinMaxMean { min, .. }
            | MinimalData::MinMaxMeanStd { min, .. }
            | MinimalData::MinMaxMedianMean { min, .. } => min,
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            MinimalData::MinMax { max, .. }
            | MinimalData::MinMaxMedian { max, .. }
            | MinimalData::MinMaxMean { max, .. }
            | MinimalData::MinMaxMeanStd { max, .. }
            | MinimalData::MinMaxMedianMean { max, .. } => max,
        }
    }

    pub fn median(&self) -> Option<f64> {
        match *self {
            MinimalData::MinMaxMedian { median, .. } | MinimalData::MinMaxMedianMean { median, .. } => Some(median),
            _ => None,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            MinimalData::MinMaxMean { mean, .. }
            | MinimalData::MinMaxMeanStd { mean, .. }
            | MinimalData::MinMaxMedianMean { mean, .. } => Some(mean),
            _ => None,
        }
    }

    pub fn std(&self) -> Option<f64> {
        match *self {
            MinimalData::MinMaxMeanStd { std, .. } => Some(std),
            _ => None,
        }
    }

    pub fn support(&self) -> Interval {
        Interval {
            lo: self.min(),
            hi: self.max(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MinimalData::MinMax { .. } => "min-max",
            MinimalData::MinMaxMedian { .. } => "min-max-median",
            MinimalData::MinMaxMean { .. } => "min-max-mean",
            MinimalData::MinMaxMeanStd { .. } => "min-max-mean-std",
            MinimalData::MinMaxMedianMean { .. } => "min-max-median-mean",
        }
    }

    /// Checks every feasibility condition and returns the data unchanged.
    pub fn validate(self) -> Result<Self> {
        let (min, max) = (self.min(), self.max());
        for (name, value) in [
            ("min", Some(min)),
            ("max", Some(max)),
            ("median", self.median()),
            ("mean", self.mean()),
            ("std", self.std()),
        ] {
            if let Some(value) = value {
                if !value.is_finite() {
                    return Err(PBoxError::NonFinite { name, value });
                }
            }
        }
        if min >= max {
            return Err(PBoxError::ReversedBounds { min, max });
        }
        for (name, value) in [("median", self.median()), ("mean", self.mean())] {
            if let Some(value) = value {
                if value < min || value > max {
                    return Err(PBoxError::StatisticOutOfRange { name, value, min, max });
                }
            }
        }
        if let (Some(mean), Some(std)) = (self.mean(), self.std()) {
            if std < 0.0 {
                return Err(PBoxError::NegativeStd(std));
            }
            let limit = (max - mean) * (mean - min);
            let variance = std * std;
            // allow for rounding when std was computed as sqrt(limit)
            if variance > limit * (1.0 + 1e-12) {
                return Err(PBoxError::InfeasibleVariance { variance, limit });
            }
        }
        if let (Some(median), Some(mean)) = (self.median(), self.mean()) {
            let (lo, hi) = (0.5 * (min + median), 0.5 * (median + max));
            if mean < lo || mean > hi {
                return Err(PBoxError::InfeasibleMedianMean { mean, lo, hi });
            }
        }
        Ok(self)
    }
}

/// Flat, optional-field view of the statistics; the serialized form of
/// [`MinimalData`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl Summary {
    /// Builds the p-box for any combination of statistics, intersecting
    /// primitive boxes when no single constructor covers the combination.
    pub fn to_pbox(&self) -> Result<PBox> {
        if let Ok(d) = MinimalData::try_from(*self) {
            return PBox::from_data(d);
        }
        match (self.median, self.mean, self.std) {
            (Some(median), Some(mean), Some(std)) => {
                let parts = [
                    PBox::from_data(MinimalData::MinMaxMedianMean {
                        min: self.min,
                        max: self.max,
                        median,
                        mean,
                    })?,
                    PBox::from_data(MinimalData::MinMaxMeanStd {
                        min: self.min,
                        max: self.max,
                        mean,
                        std,
                    })?,
                ];
                PBox::intersect(&parts)
            }
            _ => Err(PBoxError::UnsupportedCombination(
                "a standard deviation requires a mean".into(),
            )),
        }
    }
}

impl TryFrom<Summary> for MinimalData {
    type Error = PBoxError;

    fn try_from(s: Summary) -> Result<Self> {
        let Summary {
            min,
            max,
            median,
            mean,
            std,
        } = s;
        let d = match (median, mean, std) {
            (None, None, None) => MinimalData::MinMax { min, max },
            (Some(median), None, None) => MinimalData::MinMaxMedian { min, max, median },
            (None, Some(mean), None) => MinimalData::MinMaxMean { min, max, mean },
            (None, Some(mean), Some(std)) => MinimalData::MinMaxMeanStd { min, max, mean, std },
            (Some(median), Some(mean), None) => MinimalData::MinMaxMedianMean { min, max, median, mean },
            _ => {
                return Err(PBoxError::UnsupportedCombination(format!(
                    "median={median:?} mean={mean:?} std={std:?}"
                )))
            }
        };
        Ok(d)
    }
}

impl From<MinimalData> for Summary {
    fn from(d: MinimalData) -> Self {
        Summary {
            min: d.min(),
            max: d.max(),
            median: d.median(),
            mean: d.mean(),
            std: d.std(),
        }
    }
}

/// Checks the feasibility conditions of `d`.
pub fn validate_minimal_data(d: MinimalData) -> Result<MinimalData> {
    d.validate()
}

/// Which bounding function to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Data(MinimalData),
    Intersection,
}

/// A pair of bounding CDFs over a bounded support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PBox {
    lower: Bound,
    upper: Bound,
    support: Interval,
    provenance: Provenance,
}

impl PBox {
    /// Builds the closed-form p-box for validated data.
    pub fn from_data(d: MinimalData) -> Result<Self> {
        let d = d.validate()?;
        let (a, b) = (d.min(), d.max());
        let (lower, upper) = match d {
            MinimalData::MinMax { .. } => (step_at(b), step_at(a)),
            MinimalData::MinMaxMedian { median, .. } => {
                let mut lo = BoundBuilder::new();
                lo.push(median, BoundExpr::HALF).push(b, BoundExpr::ONE);
                let mut up = BoundBuilder::new();
                up.push(a, BoundExpr::HALF).push(median, BoundExpr::ONE);
                (lo.finish(), up.finish())
            }
            MinimalData::MinMaxMean { mean, .. } => mean_bounds(a, b, mean),
            MinimalData::MinMaxMeanStd { mean, std, .. } => std_bounds(a, b, mean, std),
            MinimalData::MinMaxMedianMean { median, mean, .. } => {
                if mean == a || mean == b {
                    (step_at(mean), step_at(mean))
                } else {
                    let case = MedianMeanCase::classify(a, b, median, mean);
                    let bp = Breakpoints::new(a, b, median, mean);
                    (case.lower(&bp), case.upper(&bp))
                }
            }
        };
        Ok(PBox {
            lower,
            upper,
            support: d.support(),
            provenance: Provenance::Data(d),
        })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn bound(&self, side: Side) -> &Bound {
        match side {
            Side::Lower => &self.lower,
            Side::Upper => &self.upper,
        }
    }

    pub fn lower(&self) -> &Bound {
        &self.lower
    }

    pub fn upper(&self) -> &Bound {
        &self.upper
    }

    /// Value of a bounding function; 0 left of the support, 1 right of it.
    pub fn eval(&self, side: Side, theta: f64) -> f64 {
        self.bound(side).eval(theta)
    }

    /// Set-valued inverse `{t in support : F(t-) <= p <= F(t)}` as a closed interval.
    pub fn quasi_inverse(&self, side: Side, p: f64) -> Result<Interval> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PBoxError::ProbabilityOutOfRange(p));
        }
        let f = self.bound(side);
        let Interval { lo: a, hi: b } = self.support;
        let lo = f.first_reaching(p).clamp(a, b);
        let hi = f.first_exceeding(p).clamp(lo, b);
        Ok(Interval { lo, hi })
    }

    /// Pointwise max of lower bounds and min of upper bounds.
    pub fn intersect(boxes: &[PBox]) -> Result<PBox> {
        let first = boxes.first().ok_or(PBoxError::NoInput)?;
        if let Some(other) = boxes.iter().find(|p| p.support != first.support) {
            return Err(PBoxError::MismatchedSupports(first.support, other.support));
        }
        if boxes.len() == 1 {
            return Ok(first.clone());
        }
        let lowers: Vec<&Bound> = boxes.iter().map(|p| &p.lower).collect();
        let uppers: Vec<&Bound> = boxes.iter().map(|p| &p.upper).collect();
        let lower = Bound::pointwise(&lowers, Extreme::Max);
        let upper = Bound::pointwise(&uppers, Extreme::Min);
        let out = PBox {
            lower,
            upper,
            support: first.support,
            provenance: Provenance::Intersection,
        };
        if let Some(theta) = out.first_crossing() {
            return Err(PBoxError::EmptyBox { theta });
        }
        Ok(out)
    }

    /// First probe where the lower bound exceeds the upper bound, if any.
    fn first_crossing(&self) -> Option<f64> {
        let mut cuts: Vec<f64> = self.lower.breakpoints().chain(self.upper.breakpoints()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let bad = |t: f64| self.lower.eval(t) > self.upper.eval(t) + 1e-12;
        for w in cuts.windows(2) {
            for k in 0..16 {
                let t = w[0] + (w[1] - w[0]) * k as f64 / 16.0;
                if bad(t) {
                    return Some(t);
                }
            }
        }
        cuts.last().copied().filter(|&t| bad(t))
    }
}

fn step_at(t: f64) -> Bound {
    let mut b = BoundBuilder::new();
    b.push(t, BoundExpr::ONE);
    b.finish()
}

fn mean_bounds(a: f64, b: f64, mean: f64) -> (Bound, Bound) {
    if mean == a || mean == b {
        return (step_at(mean), step_at(mean));
    }
    let mut lo = BoundBuilder::new();
    lo.push(mean, BoundExpr::MeanLower { min: a, mean })
        .push(b, BoundExpr::ONE);
    let mut up = BoundBuilder::new();
    up.push(a, BoundExpr::MeanUpper { max: b, mean })
        .push(mean, BoundExpr::ONE);
    (lo.finish(), up.finish())
}

fn std_bounds(a: f64, b: f64, mean: f64, std: f64) -> (Bound, Bound) {
    let variance = std * std;
    if variance == 0.0 || mean == a || mean == b {
        return (step_at(mean), step_at(mean));
    }
    let limit = (b - mean) * (mean - a);
    if variance >= limit * (1.0 - 1e-12) {
        // only the two-point distribution on {a, b} remains
        let phi = (b - mean) / (b - a);
        let mut lo = BoundBuilder::new();
        lo.push(a, BoundExpr::constant(phi)).push(b, BoundExpr::ONE);
        let lo = lo.finish();
        return (lo.clone(), lo);
    }
    let xi1 = mean - variance / (b - mean);
    let xi2 = mean + variance / (mean - a);
    let mut lo = BoundBuilder::new();
    lo.push(
        xi1,
        BoundExpr::StdLowerMid {
            min: a,
            max: b,
            mean,
            std,
        },
    )
    .push(xi2, BoundExpr::StdLowerRight { mean, std })
    .push(b, BoundExpr::ONE);
    let mut up = BoundBuilder::new();
    up.push(a, BoundExpr::StdUpperLeft { mean, std })
        .push(
            xi1,
            BoundExpr::StdUpperMid {
                min: a,
                max: b,
                mean,
                std,
            },
        )
        .push(xi2, BoundExpr::ONE);
    (lo.finish(), up.finish())
}

/// Builds the p-box for `d`; see [`PBox::from_data`].
pub fn build_pbox(d: MinimalData) -> Result<PBox> {
    PBox::from_data(d)
}

pub fn eval_bound(p: &PBox, side: Side, theta: f64) -> f64 {
    p.eval(side, theta)
}

pub fn quasi_inverse(p: &PBox, side: Side, prob: f64) -> Result<Interval> {
    p.quasi_inverse(side, prob)
}

pub fn intersect_pboxes(ps: &[PBox]) -> Result<PBox> {
    PBox::intersect(ps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm(min: f64, max: f64) -> MinimalData {
        MinimalData::MinMax { min, max }
    }

    #[test]
    fn validation_examples() {
        assert!(mm(0.0, 1.0).validate().is_ok());
        assert!(matches!(
            MinimalData::MinMaxMeanStd {
                min: 0.0,
                max: 1.0,
                mean: 0.5,
                std: 0.6
            }
            .validate(),
            Err(PBoxError::InfeasibleVariance { .. })
        ));
        assert!(matches!(mm(2.0, 1.0).validate(), Err(PBoxError::ReversedBounds { .. })));
        assert!(matches!(mm(1.0, 1.0).validate(), Err(PBoxError::ReversedBounds { .. })));
        assert!(matches!(
            MinimalData::MinMaxMedian {
                min: 0.0,
                max: 1.0,
                median: 1.5
            }
            .validate(),
            Err(PBoxError::StatisticOutOfRange { name: "median", .. })
        ));
        assert!(matches!(
            MinimalData::MinMaxMedianMean {
                min: 0.0,
                max: 1.0,
                median: 0.2,
                mean: 0.7
            }
            .validate(),
            Err(PBoxError::InfeasibleMedianMean { .. })
        ));
        // boundary variance is feasible
        assert!(MinimalData::MinMaxMeanStd {
            min: 0.0,
            max: 1.0,
            mean: 0.5,
            std: 0.5
        }
        .validate()
        .is_ok());
        assert!(matches!(
            MinimalData::MinMaxMean {
                min: 0.0,
                max: f64::NAN,
                mean: 0.5
            }
            .validate(),
            Err(PBoxError::NonFinite { .. })
        ));
    }

    #[test]
    fn min_max_steps() {
        let p = build_pbox(mm(0.0, 1.0)).unwrap();
        assert_eq!(p.eval(Side::Upper, 0.0), 1.0);
        assert_eq!(p.eval(Side::Lower, 0.999), 0.0);
        assert_eq!(p.eval(Side::Lower, 1.0), 1.0);
        assert_eq!(p.eval(Side::Lower, 2.0), 1.0);
        assert_eq!(p.eval(Side::Upper, -1e-9), 0.0);
    }

    #[test]
    fn median_box_values() {
        let p = build_pbox(MinimalData::MinMaxMedian {
            min: 0.0,
            max: 1.0,
            median: 0.4,
        })
        .unwrap();
        assert_eq!(p.eval(Side::Lower, 0.5), 0.5);
        assert_eq!(p.eval(Side::Upper, 0.2), 0.5);
        assert_eq!(p.eval(Side::Lower, 0.39), 0.0);
        assert_eq!(p.eval(Side::Upper, 0.4), 1.0);
    }

    #[test]
    fn std_box_breakpoints() {
        let (mean, std) = (1.0, 0.0167);
        let p = build_pbox(MinimalData::MinMaxMeanStd {
            min: 0.0,
            max: 10.0,
            mean,
            std,
        })
        .unwrap();
        let xi1 = mean - std * std / 9.0;
        let xi2 = mean + std * std / 1.0;
        let lo: Vec<f64> = p.lower().breakpoints().collect();
        assert_eq!(lo, vec![xi1, xi2, 10.0]);
        let up: Vec<f64> = p.upper().breakpoints().collect();
        assert_eq!(up, vec![0.0, xi1, xi2]);
        assert_eq!(p.eval(Side::Lower, 0.5), 0.0);
        assert_eq!(p.eval(Side::Lower, xi1 - 1e-12), 0.0);
        assert_eq!(p.eval(Side::Upper, xi2), 1.0);
    }

    #[test]
    fn degenerate_std_boxes() {
        let point = build_pbox(MinimalData::MinMaxMeanStd {
            min: 0.0,
            max: 1.0,
            mean: 0.3,
            std: 0.0,
        })
        .unwrap();
        assert_eq!(point.eval(Side::Lower, 0.3), 1.0);
        assert_eq!(point.eval(Side::Upper, 0.2999), 0.0);
        let two = build_pbox(MinimalData::MinMaxMeanStd {
            min: 0.0,
            max: 1.0,
            mean: 0.5,
            std: 0.5,
        })
        .unwrap();
        assert_eq!(two.eval(Side::Lower, 0.0), 0.5);
        assert_eq!(two.eval(Side::Upper, 0.7), 0.5);
    }

    #[test]
    fn quasi_inverse_examples() {
        let med = build_pbox(MinimalData::MinMaxMedian {
            min: 0.0,
            max: 1.0,
            median: 0.4,
        })
        .unwrap();
        assert_eq!(
            med.quasi_inverse(Side::Lower, 0.5).unwrap(),
            Interval { lo: 0.4, hi: 1.0 }
        );
        assert_eq!(
            med.quasi_inverse(Side::Lower, 0.0).unwrap(),
            Interval { lo: 0.0, hi: 0.4 }
        );
        assert_eq!(med.quasi_inverse(Side::Lower, 0.3).unwrap(), Interval::point(0.4));
        assert_eq!(med.quasi_inverse(Side::Lower, 0.7).unwrap(), Interval::point(1.0));
        assert_eq!(med.quasi_inverse(Side::Upper, 0.2).unwrap(), Interval::point(0.0));
        assert_eq!(
            med.quasi_inverse(Side::Upper, 0.5).unwrap(),
            Interval { lo: 0.0, hi: 0.4 }
        );
        assert_eq!(med.quasi_inverse(Side::Upper, 0.7).unwrap(), Interval::point(0.4));
        assert_eq!(
            med.quasi_inverse(Side::Upper, 1.0).unwrap(),
            Interval { lo: 0.4, hi: 1.0 }
        );

        let mean = build_pbox(MinimalData::MinMaxMean {
            min: 0.0,
            max: 1.0,
            mean: 0.5,
        })
        .unwrap();
        assert_eq!(mean.quasi_inverse(Side::Upper, 0.3).unwrap(), Interval::point(0.0));
        assert_eq!(
            mean.quasi_inverse(Side::Upper, 1.0).unwrap(),
            Interval { lo: 0.5, hi: 1.0 }
        );
        assert_eq!(
            mean.quasi_inverse(Side::Lower, 0.0).unwrap(),
            Interval { lo: 0.0, hi: 0.5 }
        );
        // (p a - mu)/(p - 1) with a = 0
        let t = mean.quasi_inverse(Side::Lower, 0.25).unwrap();
        assert!((t.lo - 0.5 / 0.75).abs() < 1e-15 && t.is_degenerate());
        assert_eq!(mean.quasi_inverse(Side::Lower, 0.5).unwrap(), Interval::point(1.0));

        let minmax = build_pbox(mm(0.0, 1.0)).unwrap();
        assert_eq!(minmax.quasi_inverse(Side::Lower, 0.7).unwrap(), Interval::point(1.0));
        assert_eq!(
            minmax.quasi_inverse(Side::Lower, 0.0).unwrap(),
            Interval { lo: 0.0, hi: 1.0 }
        );
        assert_eq!(
            minmax.quasi_inverse(Side::Upper, 1.0).unwrap(),
            Interval { lo: 0.0, hi: 1.0 }
        );
        assert!(matches!(
            minmax.quasi_inverse(Side::Upper, 1.5),
            Err(PBoxError::ProbabilityOutOfRange(_))
        ));
    }

    #[test]
    fn std_inverse_matches_closed_forms() {
        let (a, b, mu, s) = (0.0, 1.0, 0.4, 0.2);
        let p = build_pbox(MinimalData::MinMaxMeanStd {
            min: a,
            max: b,
            mean: mu,
            std: s,
        })
        .unwrap();
        let s2 = s * s;
        let xi1 = mu - s2 / (b - mu);
        assert_eq!(p.quasi_inverse(Side::Lower, 0.0).unwrap(), Interval { lo: a, hi: xi1 });
        // branch thresholds: forward formulas evaluated at the breakpoints
        let lower_switch = s2 / ((mu - a).powi(2) + s2);
        let upper_switch = (b - mu).powi(2) / ((b - mu).powi(2) + s2);
        for prob in [0.01, 0.05, 0.2, 0.5, 0.9] {
            let lo = p.quasi_inverse(Side::Lower, prob).unwrap();
            let want = if prob <= lower_switch {
                (prob * a * (b - a) - mu * (b - mu) + s2) / (prob * (b - a) - (b - mu))
            } else {
                mu + (prob * s2 / (1.0 - prob)).sqrt()
            };
            assert!(
                (lo.lo - want).abs() < 1e-12 && lo.width() < 1e-12,
                "p={prob}: {lo} vs {want}"
            );
            let up = p.quasi_inverse(Side::Upper, prob).unwrap();
            // the upper bound jumps at `a`, so small p map onto `a` itself
            let want = if prob <= upper_switch {
                (mu - (s2 * (1.0 - prob) / prob).sqrt()).max(a)
            } else {
                ((b - mu) * (b - a + mu) - s2 - prob * b * (b - a)) / ((b - mu) - prob * (b - a))
            };
            assert!(
                (up.lo - want).abs() < 1e-12 && up.width() < 1e-12,
                "p={prob}: {up} vs {want}"
            );
        }
        let top = p.quasi_inverse(Side::Upper, 1.0).unwrap();
        assert!((top.lo - (mu + s2 / (mu - a))).abs() < 1e-15 && top.hi == b);
    }

    #[test]
    fn intersection_rules() {
        let m = build_pbox(MinimalData::MinMaxMedian {
            min: 0.0,
            max: 1.0,
            median: 0.5,
        })
        .unwrap();
        let mu = build_pbox(MinimalData::MinMaxMean {
            min: 0.0,
            max: 1.0,
            mean: 0.5,
        })
        .unwrap();
        let same = intersect_pboxes(&[mu.clone(), mu.clone()]).unwrap();
        for k in 0..=200 {
            let t = -0.1 + 1.2 * k as f64 / 200.0;
            assert_eq!(same.eval(Side::Lower, t), mu.eval(Side::Lower, t));
            assert_eq!(same.eval(Side::Upper, t), mu.eval(Side::Upper, t));
        }
        let both = intersect_pboxes(&[mu.clone(), m.clone()]).unwrap();
        for k in 0..=200 {
            let t = -0.1 + 1.2 * k as f64 / 200.0;
            let lo = mu.eval(Side::Lower, t).max(m.eval(Side::Lower, t));
            let up = mu.eval(Side::Upper, t).min(m.eval(Side::Upper, t));
            assert_eq!(both.eval(Side::Lower, t), lo, "t={t}");
            assert_eq!(both.eval(Side::Upper, t), up, "t={t}");
        }
        let wide = build_pbox(mm(0.0, 2.0)).unwrap();
        assert!(matches!(
            intersect_pboxes(&[mu, wide]),
            Err(PBoxError::MismatchedSupports(..))
        ));
        assert!(matches!(intersect_pboxes(&[]), Err(PBoxError::NoInput)));
    }

    #[test]
    fn inconsistent_data_give_empty_box() {
        let low = build_pbox(MinimalData::MinMaxMedian {
            min: 0.0,
            max: 1.0,
            median: 0.1,
        })
        .unwrap();
        let high = build_pbox(MinimalData::MinMaxMeanStd {
            min: 0.0,
            max: 1.0,
            mean: 0.9,
            std: 0.01,
        })
        .unwrap();
        assert!(matches!(
            intersect_pboxes(&[low, high]),
            Err(PBoxError::EmptyBox { .. })
        ));
    }

    #[test]
    fn summary_round_trip_and_intersection_fallback() {
        let d = MinimalData::MinMaxMeanStd {
            min: 0.0,
            max: 10.0,
            mean: 1.0,
            std: 0.0167,
        };
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"min":0.0,"max":10.0,"mean":1.0,"std":0.0167}"#);
        let back: MinimalData = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let s = Summary {
            min: 0.0,
            max: 1.0,
            median: Some(0.4),
            mean: Some(0.45),
            std: Some(0.2),
        };
        assert!(MinimalData::try_from(s).is_err());
        let p = s.to_pbox().unwrap();
        assert_eq!(p.provenance(), &Provenance::Intersection);
        assert!(serde_json::from_str::<MinimalData>(r#"{"min":0,"max":1,"std":0.1}"#).is_err());
    }
}
