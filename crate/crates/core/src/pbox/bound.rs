//! Piecewise closed-form bounding functions.
//!
//! A [`Bound`] is a right-continuous, non-decreasing step/curve built from
//! [`BoundSegment`]s. Segment `i` covers `[start_i, start_{i+1})`; the first
//! segment starts at `-inf` and the last one runs to `+inf`.

use serde::{Deserialize, Serialize};

/// Closed-form expression of a bound on one segment.
///
/// Field names follow the summary statistic they carry: `min`/`max` are the
/// support endpoints, `mean` and `std` the first two moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundExpr {
    Constant {
        value: f64,
    },
    /// `(t - mean) / (t - min)`
    MeanLower {
        min: f64,
        mean: f64,
    },
    /// `(max - mean) / (max - t)`
    MeanUpper {
        max: f64,
        mean: f64,
    },
    /// `(std^2 + (max - mean)(t - mean)) / ((max - min)(t - min))`
    StdLowerMid {
        min: f64,
        max: f64,
        mean: f64,
        std: f64,
    },
    /// `(t - mean)^2 / ((t - mean)^2 + std^2)`
    StdLowerRight {
        mean: f64,
        std: f64,
    },
    /// `std^2 / ((mean - t)^2 + std^2)`
    StdUpperLeft {
        mean: f64,
        std: f64,
    },
    /// `((max - mean)(max - min + mean - t) - std^2) / ((max - min)(max - t))`
    StdUpperMid {
        min: f64,
        max: f64,
        mean: f64,
        std: f64,
    },
}

impl BoundExpr {
    pub const ZERO: BoundExpr = BoundExpr::Constant { value: 0.0 };
    pub const HALF: BoundExpr = BoundExpr::Constant { value: 0.5 };
    pub const ONE: BoundExpr = BoundExpr::Constant { value: 1.0 };

    pub fn constant(value: f64) -> Self {
        BoundExpr::Constant { value }
    }

    /// Raw value of the closed form, without clamping.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            BoundExpr::Constant { value } => value,
            BoundExpr::MeanLower { min, mean } => (t - mean) / (t - min),
            BoundExpr::MeanUpper { max, mean } => (max - mean) / (max - t),
            BoundExpr::StdLowerMid { min, max, mean, std } => {
                (std * std + (max - mean) * (t - mean)) / ((max - min) * (t - min))
            }
            BoundExpr::StdLowerRight { mean, std } => {
                let d2 = (t - mean) * (t - mean);
                d2 / (d2 + std * std)
            }
            BoundExpr::StdUpperLeft { mean, std } => {
                let s2 = std * std;
                s2 / ((mean - t) * (mean - t) + s2)
            }
            BoundExpr::StdUpperMid { min, max, mean, std } => {
                ((max - mean) * (max - min + mean - t) - std * std) / ((max - min) * (max - t))
            }
        }
    }

    /// Value clamped into `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.value(t).clamp(0.0, 1.0)
    }

    /// Solves `value(t) = p` for the strictly increasing expressions.
    ///
    /// Returns NaN for constants and infinities where the closed form has no
    /// finite preimage.
    pub fn inverse(&self, p: f64) -> f64 {
        match *self {
            BoundExpr::Constant { .. } => f64::NAN,
            BoundExpr::MeanLower { min, mean } => (mean - p * min) / (1.0 - p),
            BoundExpr::MeanUpper { max, mean } => max - (max - mean) / p,
            BoundExpr::StdLowerMid { min, max, mean, std } => {
                let span = max - min;
                (p * min * span - mean * (max - mean) + std * std) / (p * span - (max - mean))
            }
            BoundExpr::StdLowerRight { mean, std } => mean + (p * std * std / (1.0 - p)).sqrt(),
            BoundExpr::StdUpperLeft { mean, std } => mean - (std * std * (1.0 - p) / p).sqrt(),
            BoundExpr::StdUpperMid { min, max, mean, std } => {
                let span = max - min;
                ((max - mean) * (span + mean) - std * std - p * max * span) / ((max - mean) - p * span)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BoundExpr::Constant { .. })
    }

    /// Rank used to break ties between equal-valued expressions; lower is simpler.
    pub fn complexity(&self) -> u8 {
        match self {
            BoundExpr::Constant { .. } => 0,
            BoundExpr::MeanLower { .. } | BoundExpr::MeanUpper { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSegment {
    /// Left (closed) end of the segment; `-inf` for the first one.
    pub start: f64,
    pub expr: BoundExpr,
}

/// Which pointwise extreme to trace when combining bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

/// Right-continuous non-decreasing function from segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    segments: Vec<BoundSegment>,
}

impl Bound {
    pub fn segments(&self) -> &[BoundSegment] {
        &self.segments
    }

    /// Finite segment starts, in increasing order.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    fn index_at(&self, t: f64) -> usize {
        // first segment always starts at -inf
        self.segments.partition_point(|s| s.start <= t).max(1) - 1
    }

    fn end_of(&self, i: usize) -> f64 {
        self.segments.get(i + 1).map_or(f64::INFINITY, |s| s.start)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        self.segments[self.index_at(t)].expr.eval(t)
    }

    /// Limit from the left, `F(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.start < t).max(1) - 1;
        self.segments[i].expr.eval(t)
    }

    /// `inf { t : F(t) >= p }`, or `+inf` when the set is empty.
    pub fn first_reaching(&self, p: f64) -> f64 {
        self.first_where(p, false)
    }

    /// `inf { t : F(t) > p }`, or `+inf` when the set is empty.
    pub fn first_exceeding(&self, p: f64) -> f64 {
        self.first_where(p, true)
    }

    fn first_where(&self, p: f64, strict: bool) -> f64 {
        let hit = |v: f64| if strict { v > p } else { v >= p };
        for (i, seg) in self.segments.iter().enumerate() {
            let end = self.end_of(i);
            match seg.expr {
                BoundExpr::Constant { value } => {
                    if hit(value) {
                        return seg.start;
                    }
                }
                expr => {
                    if hit(expr.eval(seg.start)) {
                        return seg.start;
                    }
                    // the closed-form inverse has other branches; only trust
                    // it once the segment is known to reach p
                    if end.is_finite() && !hit(expr.eval(end)) {
                        continue;
                    }
                    let t = expr.inverse(p);
                    if !t.is_nan() && t >= seg.start - 1e-9 * seg.start.abs().max(1.0) {
                        return t.clamp(seg.start, end);
                    }
                }
            }
        }
        f64::INFINITY
    }

    /// Pointwise maximum or minimum of several bounds, traced segment by segment.
    pub fn pointwise(bounds: &[&Bound], pick: Extreme) -> Bound {
        assert!(!bounds.is_empty(), "pointwise extreme of no bounds");
        let mut cuts: Vec<f64> = bounds.iter().flat_map(|b| b.breakpoints()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut builder = BoundBuilder::new();
        let mut lefts = Vec::with_capacity(cuts.len() + 1);
        lefts.push(f64::NEG_INFINITY);
        lefts.extend(cuts.iter().copied());

        for (k, &left) in lefts.iter().enumerate() {
            let right = lefts.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let probe = if left.is_finite() { left } else { right };
            let exprs: Vec<BoundExpr> = bounds
                .iter()
                .map(|b| b.segments[b.index_at(if left.is_finite() { left } else { f64::MIN })].expr)
                .collect();

            if !left.is_finite() || !right.is_finite() {
                let winner = best_at(&exprs, probe, pick, None);
                builder.push(left, winner);
                continue;
            }
            trace_interval(&mut builder, &exprs, left, right, pick);
        }
        builder.finish()
    }
}

const TRACE_SAMPLES: usize = 64;

/// Appends the winning expressions on `[left, right)` to `builder`, splitting
/// at crossings located by bisection.
fn trace_interval(builder: &mut BoundBuilder, exprs: &[BoundExpr], left: f64, right: f64, pick: Extreme) {
    let width = right - left;
    let mut current = best_at(exprs, left, pick, Some(left + width / TRACE_SAMPLES as f64));
    builder.push(left, current);
    let mut prev = left;
    for k in 1..=TRACE_SAMPLES {
        // the last sample is the left limit at `right`; expressions are continuous
        let x = if k == TRACE_SAMPLES {
            right
        } else {
            left + width * (k as f64) / (TRACE_SAMPLES as f64)
        };
        let candidate = best_at(exprs, x, pick, None);
        if candidate != current && beats(&candidate, &current, x, pick) {
            let cross = bisect_crossing(&current, &candidate, prev, x, pick);
            if cross < right {
                builder.push(cross, candidate);
            }
            current = candidate;
        }
        prev = x;
    }
}

/// Smallest point in `(lo, hi]` (to bisection precision) where `challenger`
/// strictly beats `holder`.
fn bisect_crossing(holder: &BoundExpr, challenger: &BoundExpr, lo: f64, hi: f64, pick: Extreme) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beats(challenger, holder, mid, pick) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn beats(a: &BoundExpr, b: &BoundExpr, t: f64, pick: Extreme) -> bool {
    let (va, vb) = (a.eval(t), b.eval(t));
    match pick {
        Extreme::Max => va > vb,
        Extreme::Min => va < vb,
    }
}

fn best_at(exprs: &[BoundExpr], t: f64, pick: Extreme, tiebreak: Option<f64>) -> BoundExpr {
    let mut best = exprs[0];
    for &e in &exprs[1..] {
        if beats(&e, &best, t, pick) {
            best = e;
        } else if e.eval(t) == best.eval(t) {
            let ahead = tiebreak.is_some_and(|u| beats(&e, &best, u, pick));
            let behind = tiebreak.is_some_and(|u| beats(&best, &e, u, pick));
            if ahead || (!behind && e.complexity() < best.complexity()) {
                best = e;
            }
        }
    }
    best
}

/// Incremental constructor keeping segments ordered and merged.
#[derive(Debug)]
pub(crate) struct BoundBuilder {
    segments: Vec<BoundSegment>,
}

impl BoundBuilder {
    pub fn new() -> Self {
        Self {
            segments: vec![BoundSegment {
                start: f64::NEG_INFINITY,
                expr: BoundExpr::ZERO,
            }],
        }
    }

    /// Starts a new segment at `start`. A start equal to the previous one
    /// replaces it, so empty segments never survive.
    pub fn push(&mut self, start: f64, expr: BoundExpr) -> &mut Self {
        let last = self.segments.last_mut().expect("builder is never empty");
        debug_assert!(start >= last.start, "segments must be pushed in order");
        if start <= last.start {
            last.expr = expr;
        } else if last.expr != expr {
            self.segments.push(BoundSegment { start, expr });
        }
        self
    }

    pub fn finish(mut self) -> Bound {
        // replacing may leave equal neighbours behind
        self.segments.dedup_by(|next, prev| next.expr == prev.expr);
        Bound {
            segments: self.segments,
        }
    }
}
