//! Locally-biased DIRECT on the normalized unit cube.
//!
//! Rectangles are trisected along their longest sides. Since sides of one
//! rectangle differ by at most one trisection level, the sum of levels fixes
//! its diameter; rectangles are grouped by that sum and only the best of
//! each group is a division candidate.

use std::collections::{BTreeMap, BTreeSet};

use super::{checked, Optimum, Result, SearchBox, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    f: f64,
    idx: usize,
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.f.total_cmp(&other.f).then(self.idx.cmp(&other.idx))
    }
}

struct Rect {
    center: Vec<f64>,
    levels: Vec<u32>,
    f: f64,
}

impl Rect {
    fn level_sum(&self) -> u32 {
        self.levels.iter().sum()
    }
}

struct Search<'a, F> {
    f: F,
    b: &'a SearchBox,
    free: Vec<usize>,
    sign: f64,
    x: Vec<f64>,
    rects: Vec<Rect>,
    groups: BTreeMap<u32, BTreeSet<Key>>,
    evaluations: usize,
    best: Key,
}

impl<F: FnMut(&[f64]) -> f64> Search<'_, F> {
    fn eval(&mut self, u: &[f64]) -> Result<f64> {
        for (&i, &ui) in self.free.iter().zip(u) {
            let iv = self.b.bounds[i];
            self.x[i] = iv.lo + ui * iv.width();
        }
        self.evaluations += 1;
        let v = (self.f)(&self.x);
        Ok(self.sign * checked(&self.x, v)?)
    }

    fn insert(&mut self, r: Rect) {
        let key = Key {
            f: r.f,
            idx: self.rects.len(),
        };
        self.groups.entry(r.level_sum()).or_default().insert(key);
        if key < self.best {
            self.best = key;
        }
        self.rects.push(r);
    }

    /// Half-diagonal of a rectangle whose levels sum to `s`.
    fn diameter(&self, s: u32) -> f64 {
        let n = self.free.len() as u32;
        let (k, j) = (s / n, s % n);
        let side = 3f64.powi(-(k as i32));
        let long = (n - j) as f64 * side * side;
        let short = j as f64 * side * side / 9.0;
        0.5 * (long + short).sqrt()
    }

    /// Representatives on the lower-right convex hull of (diameter, value),
    /// best first.
    fn potentially_optimal(&self) -> Vec<usize> {
        let fmin = self.best.f;
        // largest group holding the incumbent value
        let start = self
            .groups
            .iter()
            .find(|(_, set)| set.first().is_some_and(|k| k.f == fmin))
            .map(|(&s, _)| s)
            .unwrap_or_else(|| self.rects[self.best.idx].level_sum());
        // groups iterate by increasing level sum, i.e. decreasing diameter
        let mut pts: Vec<(f64, f64, usize)> = self
            .groups
            .range(..=start)
            .rev()
            .filter_map(|(&s, set)| set.first().map(|k| (self.diameter(s), k.f, k.idx)))
            .collect();
        pts.dedup_by(|b, a| a.0 == b.0);
        let mut hull: Vec<(f64, f64, usize)> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let target = fmin - self.b.epsilon * fmin.abs();
        (0..hull.len())
            .filter(|&i| {
                let (d, f, _) = hull[i];
                match hull.get(i + 1) {
                    None => true,
                    Some(&(dn, fnext, _)) => {
                        let k = (fnext - f) / (dn - d);
                        f - k * d <= target
                    }
                }
            })
            .map(|i| hull[i].2)
            .collect()
    }

    fn divide(&mut self, idx: usize) -> Result<bool> {
        let lmin = *self.rects[idx].levels.iter().min().expect("non-empty");
        let long: Vec<usize> = (0..self.free.len())
            .filter(|&i| self.rects[idx].levels[i] == lmin)
            .collect();
        if self.evaluations + 2 * long.len() > self.b.budget {
            return Ok(false);
        }
        let delta = 3f64.powi(-(lmin as i32 + 1));
        let mut probes = Vec::with_capacity(long.len());
        for &i in &long {
            let mut lo = self.rects[idx].center.clone();
            let mut hi = lo.clone();
            lo[i] -= delta;
            hi[i] += delta;
            let (flo, fhi) = (self.eval(&lo)?, self.eval(&hi)?);
            probes.push((flo.min(fhi), i, [(lo, flo), (hi, fhi)]));
        }
        probes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let old = Key {
            f: self.rects[idx].f,
            idx,
        };
        let sum = self.rects[idx].level_sum();
        if let Some(set) = self.groups.get_mut(&sum) {
            set.remove(&old);
            if set.is_empty() {
                self.groups.remove(&sum);
            }
        }
        let mut levels = self.rects[idx].levels.clone();
        for (_, i, children) in probes {
            levels[i] += 1;
            for (center, f) in children {
                self.insert(Rect {
                    center,
                    levels: levels.clone(),
                    f,
                });
            }
        }
        self.rects[idx].levels = levels;
        self.groups.entry(self.rects[idx].level_sum()).or_default().insert(old);
        Ok(true)
    }
}

/// Minimizes or maximizes `f` over `b`.
///
/// Coordinates of zero width are pinned. The result carries the best point
/// seen; `converged` is false when the budget ran out first.
pub fn optimize_box<F>(f: F, b: &SearchBox, sense: Sense) -> Result<Optimum>
where
    F: FnMut(&[f64]) -> f64,
{
    b.validate()?;
    let free = b.free_dims();
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut s = Search {
        f,
        b,
        x: b.bounds.iter().map(|iv| iv.lo).collect(),
        sign,
        rects: Vec::new(),
        groups: BTreeMap::new(),
        evaluations: 0,
        best: Key {
            f: f64::INFINITY,
            idx: usize::MAX,
        },
        free,
    };
    let n = s.free.len();
    let center = vec![0.5; n];
    let f0 = s.eval(&center)?;
    if n == 0 {
        return Ok(Optimum {
            point: s.x,
            value: sign * f0,
            converged: true,
            evaluations: 1,
        });
    }
    s.insert(Rect {
        center,
        levels: vec![0; n],
        f: f0,
    });

    let threshold = b.tol * s.diameter(0);
    let mut converged = false;
    'outer: loop {
        if s.diameter(s.rects[s.best.idx].level_sum()) < threshold {
            converged = true;
            break;
        }
        for idx in s.potentially_optimal() {
            if !s.divide(idx)? {
                break 'outer;
            }
        }
    }

    let best = s.best;
    let u = s.rects[best.idx].center.clone();
    for (&i, &ui) in s.free.iter().zip(&u) {
        let iv = b.bounds[i];
        s.x[i] = iv.lo + ui * iv.width();
    }
    Ok(Optimum {
        point: s.x,
        value: sign * best.f,
        converged,
        evaluations: s.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::optimizer::vertex_extrema;

    fn unit(dim: usize) -> SearchBox {
        SearchBox::new(vec![Interval { lo: 0.0, hi: 1.0 }; dim])
    }

    #[test]
    fn quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] - 0.7).powi(2);
        let r = optimize_box(f, &unit(2), Sense::Min).unwrap();
        assert!(r.evaluations <= 2000);
        assert!(
            (r.point[0] - 0.3).abs() < 1e-4 && (r.point[1] - 0.7).abs() < 1e-4,
            "{r:?}"
        );
        assert!(r.value < 1e-8);
    }

    #[test]
    fn linear_vertices() {
        let f = |x: &[f64]| 2.0 * x[0] - x[1];
        let lo = optimize_box(f, &unit(2), Sense::Min).unwrap();
        let hi = optimize_box(f, &unit(2), Sense::Max).unwrap();
        assert!((lo.value + 1.0).abs() < 1e-6, "{lo:?}");
        assert!((hi.value - 2.0).abs() < 1e-6, "{hi:?}");
        assert!((lo.point[0]).abs() < 1e-6 && (lo.point[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pinned_coordinates_are_kept() {
        let b = SearchBox::new(vec![Interval { lo: 0.0, hi: 1.0 }, Interval::point(2.5)]);
        let r = optimize_box(|x| (x[0] - 0.5).abs() + x[1], &b, Sense::Min).unwrap();
        assert_eq!(r.point[1], 2.5);
        let all = SearchBox::new(vec![Interval::point(1.0), Interval::point(2.0)]);
        let r = optimize_box(|x| x[0] * x[1], &all, Sense::Max).unwrap();
        assert_eq!((r.value, r.evaluations, r.converged), (2.0, 1, true));
    }

    #[test]
    fn deterministic_and_budgeted() {
        let f = |x: &[f64]| (5.0 * x[0]).sin() + (7.0 * x[1]).cos() * x[2];
        let mut b = unit(3);
        b.budget = 300;
        b.tol = 1e-12;
        let r1 = optimize_box(f, &b, Sense::Min).unwrap();
        let r2 = optimize_box(f, &b, Sense::Min).unwrap();
        assert_eq!(r1, r2);
        assert!(!r1.converged && r1.evaluations <= 300);
    }

    #[test]
    fn agrees_with_vertices_on_monotone_objective() {
        let mut b = SearchBox::new(vec![Interval { lo: 0.5, hi: 2.0 }, Interval { lo: 1.0, hi: 3.0 }]);
        // corner optima are approached to within tol of the box diameter
        b.tol = 1e-9;
        let f = |x: &[f64]| x[0].exp() / x[1];
        let v = vertex_extrema(f, &b).unwrap();
        let lo = optimize_box(f, &b, Sense::Min).unwrap();
        let hi = optimize_box(f, &b, Sense::Max).unwrap();
        assert!((lo.value - v.lo).abs() <= 1e-6 * v.lo.abs(), "{lo:?} vs {v}");
        assert!((hi.value - v.hi).abs() <= 1e-6 * v.hi.abs(), "{hi:?} vs {v}");
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let r = optimize_box(|x| 1.0 / (x[0] - 0.5), &unit(1), Sense::Min);
        assert!(matches!(
            r,
            Err(crate::optimizer::OptimizerError::NonFiniteObjective { .. })
        ));
    }
}
