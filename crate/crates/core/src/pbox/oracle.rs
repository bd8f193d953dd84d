//! Brute-force CDF bounds over discrete distributions on a grid.
//!
//! Independent of the closed forms: enumerates every distribution supported
//! on at most three grid points that satisfies the summary statistics and
//! takes the extreme CDF values. The constraint set is linear in the masses
//! (sum, mean, a band around the second moment, and the two median
//! inequalities `F(m-) <= 1/2 <= F(m)`), so the extremes of `F(t)` sit at
//! vertices, and vertices with at most three active rows have at most three
//! atoms.

use super::{MinimalData, PBoxError, Result};
use crate::exec::Execution;
use crate::interval::Interval;

const MASS_EPS: f64 = 1e-12;

/// One feasible vertex distribution.
#[derive(Debug, Clone, Copy)]
struct Atoms {
    points: [f64; 3],
    masses: [f64; 3],
    len: usize,
}

impl Atoms {
    fn cdf(&self, t: f64) -> f64 {
        if self.points[..self.len].iter().all(|&x| x <= t) {
            return 1.0;
        }
        (0..self.len)
            .filter(|&i| self.points[i] <= t)
            .map(|i| self.masses[i])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Sum,
    Mean,
    SecondMoment(f64),
    BelowMedian,
    UpToMedian,
}

/// Precomputed vertex distributions for one set of minimal data.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    data: MinimalData,
    grid: Vec<f64>,
    atoms: Vec<Atoms>,
}

impl MomentOracle {
    pub fn new(d: MinimalData, gridsize: usize) -> Result<Self> {
        Self::with_execution(d, gridsize, Execution::default())
    }

    pub fn with_execution(d: MinimalData, gridsize: usize, exec: Execution) -> Result<Self> {
        let d = d.validate()?;
        if gridsize < 11 {
            return Err(PBoxError::GridTooSmall(gridsize));
        }
        let (a, b) = (d.min(), d.max());
        let step = (b - a) / (gridsize - 1) as f64;
        let grid: Vec<f64> = (0..gridsize)
            .map(|i| if i + 1 == gridsize { b } else { a + step * i as f64 })
            .collect();
        let problem = Problem::new(&d, step);

        let per_first = exec.map(gridsize, |i| {
            let mut found = Vec::new();
            problem.collect(&[grid[i]], &mut found);
            for j in i + 1..gridsize {
                problem.collect(&[grid[i], grid[j]], &mut found);
                for k in j + 1..gridsize {
                    problem.collect(&[grid[i], grid[j], grid[k]], &mut found);
                }
            }
            found
        });
        let atoms = per_first.into_iter().flatten().collect();
        Ok(Self { data: d, grid, atoms })
    }

    pub fn data(&self) -> &MinimalData {
        &self.data
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Number of feasible vertex distributions found.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `[min F(t), max F(t)]` over the enumerated distributions.
    pub fn bounds(&self, t: f64) -> Interval {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for a in &self.atoms {
            let f = a.cdf(t);
            lo = lo.min(f);
            hi = hi.max(f);
        }
        Interval {
            lo: lo.clamp(0.0, 1.0),
            hi: hi.clamp(0.0, 1.0),
        }
    }
}

/// Brute-force bounds on `F(theta)` for one point.
pub fn oracle_cdf_bounds(d: MinimalData, theta: f64, gridsize: usize) -> Result<Interval> {
    Ok(MomentOracle::new(d, gridsize)?.bounds(theta))
}

struct Problem {
    mean: Option<f64>,
    second: Option<(f64, f64)>,
    median: Option<f64>,
    optional: Vec<Row>,
    scale: f64,
}

impl Problem {
    fn new(d: &MinimalData, step: f64) -> Self {
        let mean = d.mean();
        // grid atoms cannot hit a second moment exactly; allow the spread a
        // grid split adds
        let second = d.std().zip(mean).map(|(s, m)| (s * s + m * m, step * step));
        let median = d.median();
        let mut optional = Vec::new();
        if mean.is_some() {
            optional.push(Row::Mean);
        }
        if let Some((m2, band)) = second {
            optional.push(Row::SecondMoment(m2 - band));
            optional.push(Row::SecondMoment(m2 + band));
        }
        if median.is_some() {
            optional.push(Row::BelowMedian);
            optional.push(Row::UpToMedian);
        }
        Self {
            mean,
            second,
            median,
            optional,
            scale: d.max() - d.min(),
        }
    }

    fn row(&self, row: Row, points: &[f64]) -> ([f64; 3], f64) {
        let mut coef = [0.0; 3];
        for (c, &x) in coef.iter_mut().zip(points) {
            *c = match row {
                Row::Sum => 1.0,
                Row::Mean => x,
                Row::SecondMoment(_) => x * x,
                Row::BelowMedian => f64::from(u8::from(x < self.median.unwrap_or(f64::NAN))),
                Row::UpToMedian => f64::from(u8::from(x <= self.median.unwrap_or(f64::NAN))),
            };
        }
        let rhs = match row {
            Row::Sum => 1.0,
            Row::Mean => self.mean.unwrap_or(0.0),
            Row::SecondMoment(v) => v,
            Row::BelowMedian | Row::UpToMedian => 0.5,
        };
        (coef, rhs)
    }

    fn collect(&self, points: &[f64], out: &mut Vec<Atoms>) {
        let k = points.len();
        let n = self.optional.len();
        let mut push = |rows: &[Row]| {
            if let Some(masses) = self.solve(rows, points) {
                if self.feasible(points, &masses) {
                    let mut atoms = Atoms {
                        points: [0.0; 3],
                        masses: [0.0; 3],
                        len: k,
                    };
                    atoms.points[..k].copy_from_slice(points);
                    atoms.masses[..k].copy_from_slice(&masses[..k]);
                    out.push(atoms);
                }
            }
        };
        match k {
            1 => push(&[Row::Sum]),
            2 => {
                for &r in &self.optional {
                    push(&[Row::Sum, r]);
                }
            }
            _ => {
                for i in 0..n {
                    for j in i + 1..n {
                        push(&[Row::Sum, self.optional[i], self.optional[j]]);
                    }
                }
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rows: &[Row], points: &[f64]) -> Option<[f64; 3]> {
        let k = points.len();
        let mut m = [[0.0; 4]; 3];
        for (r, &row) in rows.iter().enumerate() {
            let (coef, rhs) = self.row(row, points);
            m[r][..k].copy_from_slice(&coef[..k]);
            m[r][k] = rhs;
        }
        // Gaussian elimination with partial pivoting on the k x (k+1) block
        for col in 0..k {
            let piv = (col..k).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
            if m[piv][col].abs() < 1e-14 {
                return None;
            }
            m.swap(col, piv);
            for r in 0..k {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for c in col..=k {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
        let mut w = [0.0; 3];
        for i in 0..k {
            w[i] = m[i][k] / m[i][i];
        }
        Some(w)
    }

    fn feasible(&self, points: &[f64], w: &[f64; 3]) -> bool {
        let k = points.len();
        let w = &w[..k];
        if w.iter().any(|&x| !(-MASS_EPS..=1.0 + MASS_EPS).contains(&x)) {
            return false;
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return false;
        }
        if let Some(mu) = self.mean {
            let m: f64 = w.iter().zip(points).map(|(w, x)| w * x).sum();
            if (m - mu).abs() > 1e-9 * self.scale {
                return false;
            }
        }
        if let Some((m2, band)) = self.second {
            let s: f64 = w.iter().zip(points).map(|(w, x)| w * x * x).sum();
            if (s - m2).abs() > band + 1e-9 * self.scale * self.scale {
                return false;
            }
        }
        if let Some(med) = self.median {
            let below: f64 = w.iter().zip(points).filter(|(_, &x)| x < med).map(|(w, _)| w).sum();
            let upto: f64 = w.iter().zip(points).filter(|(_, &x)| x <= med).map(|(w, _)| w).sum();
            if below > 0.5 + 1e-9 || upto < 0.5 - 1e-9 {
                return false;
            }
        }
        true
    }
}
