//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use pba_core::models::FourStateRates;
use pba_core::propagation::DiscretizedPBox;
use pba_core::{MinimalData, PBox, Side};
use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A finite discrete distribution.
#[derive(Debug, Clone)]
pub struct Discrete {
    pub xs: Vec<f64>,
    pub ws: Vec<f64>,
}

impl Discrete {
    fn empty() -> Self {
        Self { xs: vec![], ws: vec![] }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.xs
            .iter()
            .zip(&self.ws)
            .filter(|(x, _)| **x <= t)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn left_cdf(&self, t: f64) -> f64 {
        self.xs
            .iter()
            .zip(&self.ws)
            .filter(|(x, _)| **x < t)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.ws.iter().sum()
    }

    /// Sum of `w * x` (not normalized).
    fn moment(&self, k: i32) -> f64 {
        self.xs.iter().zip(&self.ws).map(|(x, w)| w * x.powi(k)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.xs
            .iter()
            .zip(&self.ws)
            .map(|(x, w)| w * (x - m).powi(2))
            .sum::<f64>()
            / self.mass()
    }

    fn scale(&mut self, s: f64) {
        self.ws.iter_mut().for_each(|w| *w *= s);
    }

    /// Replaces a fraction `t` of every atom's mass by one atom at `x`.
    fn mix_toward(&mut self, x: f64, t: f64) {
        let m = self.mass();
        self.scale(1.0 - t);
        self.xs.push(x);
        self.ws.push(t * m);
    }

    fn extend(&mut self, other: &Discrete) {
        self.xs.extend_from_slice(&other.xs);
        self.ws.extend_from_slice(&other.ws);
    }
}

/// Random atoms in `[lo, hi]` with total mass `mass`. Endpoints and the
/// listed special points are picked with positive probability.
fn random_atoms(r: &mut ChaCha8Rng, lo: f64, hi: f64, mass: f64, special: &[f64]) -> Discrete {
    if mass <= 0.0 {
        return Discrete::empty();
    }
    let k = r.random_range(1..=5);
    let mut d = Discrete::empty();
    for _ in 0..k {
        let pick = r.random_range(0..10);
        let x = match pick {
            0 => lo,
            1 => hi,
            2 if !special.is_empty() => special[r.random_range(0..special.len())],
            _ => lo + r.random::<f64>() * (hi - lo),
        };
        d.xs.push(x.clamp(lo, hi));
        d.ws.push(-f64::ln(Open01.sample(r)));
    }
    let total = d.mass();
    d.scale(mass / total);
    d
}

/// Moves the mean of `d` to `mu` by mixing with an atom at `toward`.
/// Returns false when the target is out of reach.
fn repair_mean(d: &mut Discrete, mu: f64, toward: f64) -> bool {
    let m = d.mean();
    if (toward - m).abs() < 1e-300 {
        return (m - mu).abs() < 1e-12;
    }
    let t = (mu - m) / (toward - m);
    if !(0.0..=1.0).contains(&t) {
        return false;
    }
    d.mix_toward(toward, t);
    true
}

/// A random distribution consistent with `d`, or `None` after a rejected
/// construction.
pub fn random_consistent(d: &MinimalData, r: &mut ChaCha8Rng) -> Option<Discrete> {
    let (a, b) = (d.min(), d.max());
    match *d {
        MinimalData::MinMax { .. } => Some(random_atoms(r, a, b, 1.0, &[])),
        MinimalData::MinMaxMedian { median, .. } => {
            let (left, center, right) = median_split(r, a, b, median);
            let mut out = left;
            out.extend(&center);
            out.extend(&right);
            Some(out)
        }
        MinimalData::MinMaxMean { mean, .. } => {
            let mut x = random_atoms(r, a, b, 1.0, &[mean]);
            let target = if x.mean() < mean { b } else { a };
            repair_mean(&mut x, mean, target).then_some(x)
        }
        MinimalData::MinMaxMeanStd { mean, std, .. } => {
            let mut x = random_atoms(r, a, b, 1.0, &[mean]);
            let target = if x.mean() < mean { b } else { a };
            if !repair_mean(&mut x, mean, target) {
                return None;
            }
            let v = std * std;
            let vmax = (b - mean) * (mean - a);
            let vx = x.variance();
            if vx < v {
                // mix with the two-point law on {a, b} that has the same mean
                let t = (v - vx) / (vmax - vx);
                let pb = (mean - a) / (b - a);
                x.scale(1.0 - t);
                x.xs.extend([a, b]);
                x.ws.extend([t * (1.0 - pb), t * pb]);
            } else if vx > 0.0 {
                x.mix_toward(mean, 1.0 - v / vx);
            }
            Some(x)
        }
        MinimalData::MinMaxMedianMean { median, mean, .. } => {
            let (mut left, center, mut right) = median_split(r, a, b, median);
            let total = |l: &Discrete, c: &Discrete, rt: &Discrete| l.moment(1) + c.moment(1) + rt.moment(1);
            let mut pieces_up = [(&mut right, b), (&mut left, median)];
            let cur = total(pieces_up[1].0, &center, pieces_up[0].0);
            if cur < mean {
                let mut deficit = mean - cur;
                for (piece, target) in pieces_up.iter_mut() {
                    let m = piece.mass();
                    if m <= 0.0 || deficit <= 0.0 {
                        continue;
                    }
                    let gain = m * (*target - piece.mean());
                    let t = (deficit / gain).min(1.0);
                    piece.mix_toward(*target, t);
                    deficit -= t * gain;
                }
            } else {
                let mut excess = cur - mean;
                for (piece, target) in [(&mut left, a), (&mut right, median)] {
                    let m = piece.mass();
                    if m <= 0.0 || excess <= 0.0 {
                        continue;
                    }
                    let gain = m * (piece.mean() - target);
                    let t = (excess / gain).min(1.0);
                    piece.mix_toward(target, t);
                    excess -= t * gain;
                }
            }
            let mut out = left;
            out.extend(&center);
            out.extend(&right);
            ((out.mean() - mean).abs() <= 1e-9 * (b - a)).then_some(out)
        }
    }
}

/// Mass below, at and above the median, respecting `F(m-) <= 1/2 <= F(m)`.
fn median_split(r: &mut ChaCha8Rng, a: f64, b: f64, m: f64) -> (Discrete, Discrete, Discrete) {
    let q = if r.random_bool(0.3) { r.random::<f64>() } else { 0.0 };
    let lo = (0.5 - q).max(0.0);
    let hi = 0.5f64.min(1.0 - q);
    let l = lo + r.random::<f64>() * (hi - lo);
    let rm = (1.0 - l - q).max(0.0);
    // left atoms strictly below m, right atoms strictly above
    let below = (m - a) * 1e-9;
    let left = if m > a {
        random_atoms(r, a, m - below, l, &[])
    } else {
        Discrete::empty()
    };
    let right = if b > m {
        random_atoms(r, m + (b - m) * 1e-9, b, rm, &[])
    } else {
        Discrete::empty()
    };
    let center = Discrete {
        xs: vec![m],
        ws: vec![1.0 - left.mass() - right.mass()],
    };
    (left, center, right)
}

/// Checks that `x` satisfies `d` to within `tol` (relative to the support).
pub fn satisfies(x: &Discrete, d: &MinimalData, tol: f64) -> bool {
    let (a, b) = (d.min(), d.max());
    let w = b - a;
    let mut ok =
        (x.mass() - 1.0).abs() < tol && x.xs.iter().all(|&v| v >= a && v <= b) && x.ws.iter().all(|&v| v >= -tol);
    if let Some(m) = d.median() {
        ok &= x.left_cdf(m) <= 0.5 + tol && x.cdf(m) >= 0.5 - tol;
    }
    if let Some(mu) = d.mean() {
        ok &= (x.mean() - mu).abs() <= tol * w;
    }
    if let Some(s) = d.std() {
        ok &= (x.variance() - s * s).abs() <= tol * w * w;
    }
    ok
}

/// Random valid data of kind `kind` (0..5 in declaration order).
pub fn random_data(kind: usize, r: &mut ChaCha8Rng) -> MinimalData {
    let a = r.random_range(-5.0..5.0);
    let b = a + r.random_range(0.5..10.0);
    let frac = |r: &mut ChaCha8Rng| r.random_range(0.02..0.98);
    let mean = a + frac(r) * (b - a);
    match kind {
        0 => MinimalData::MinMax { min: a, max: b },
        1 => MinimalData::MinMaxMedian {
            min: a,
            max: b,
            median: a + frac(r) * (b - a),
        },
        2 => MinimalData::MinMaxMean { min: a, max: b, mean },
        3 => {
            let vmax = (b - mean) * (mean - a);
            let f: f64 = if r.random_bool(0.1) { 1.0 } else { frac(r) };
            MinimalData::MinMaxMeanStd {
                min: a,
                max: b,
                mean,
                std: (f * vmax).sqrt(),
            }
        }
        _ => {
            let median = a + frac(r) * (b - a);
            let lo = 0.5 * (a + median);
            let hi = 0.5 * (median + b);
            let pick = r.random_range(0..8);
            let mean = match pick {
                0 => lo,
                1 => hi,
                2 => median,
                3 => 0.5 * (a + b),
                _ => lo + r.random::<f64>() * (hi - lo),
            };
            MinimalData::MinMaxMedianMean {
                min: a,
                max: b,
                median,
                mean: mean.clamp(lo, hi),
            }
        }
    }
}

pub const KIND_NAMES: [&str; 5] = ["min-max", "median", "mean", "mean-std", "median-mean"];

/// Largest amount by which `x`'s CDF leaves `[lbf, ubf]` at the probes,
/// the atoms, and points just left of the atoms.
pub fn enclosure_violation(p: &PBox, x: &Discrete, probes: usize) -> f64 {
    let s = p.support();
    let pad = 0.05 * s.width();
    let mut ts: Vec<f64> = (0..probes)
        .map(|i| s.lo - pad + (s.width() + 2.0 * pad) * i as f64 / (probes - 1) as f64)
        .collect();
    for &v in &x.xs {
        ts.push(v);
        ts.push(v - 1e-9 * s.width());
    }
    ts.iter()
        .map(|&t| {
            let f = x.cdf(t);
            (p.eval(Side::Lower, t) - f).max(f - p.eval(Side::Upper, t)).max(0.0)
        })
        .fold(0.0, f64::max)
}

/// Largest pointwise gap between a discretized envelope and the analytic
/// bounds on a grid of `grid` points, plus the largest outer violation.
pub fn envelope_distance(p: &PBox, d: &DiscretizedPBox, grid: usize) -> (f64, f64) {
    let s = p.support();
    let (mut dist, mut viol) = (0.0f64, 0.0f64);
    for i in 0..grid {
        let t = s.lo + s.width() * i as f64 / (grid - 1) as f64;
        let (l, u) = (p.eval(Side::Lower, t), p.eval(Side::Upper, t));
        let (dl, du) = (d.lower(t), d.upper(t));
        dist = dist.max((l - dl).abs()).max((du - u).abs());
        viol = viol.max(dl - l).max(u - du);
    }
    (dist, viol)
}

/// Event-driven simulation of the four-state chain: mean and standard error
/// of the time spent before absorption, starting in S1.
pub fn simulate_life_expectancy(r: &FourStateRates, paths: usize, seed: u64) -> (f64, f64) {
    let mut g = rng(seed);
    let exp = |rate: f64, g: &mut ChaCha8Rng| -f64::ln(Open01.sample(g)) / rate;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..paths {
        let mut t = 0.0;
        let mut state = 1;
        loop {
            let exits: &[(usize, f64)] = match state {
                1 => &[(2, r.c1), (3, r.c2), (4, r.c3)],
                2 => &[(3, r.c4), (4, r.c5)],
                3 => &[(4, r.c6)],
                _ => break,
            };
            let total: f64 = exits.iter().map(|e| e.1).sum();
            t += exp(total, &mut g);
            let mut u = g.random::<f64>() * total;
            let mut next = exits[exits.len() - 1].0;
            for &(s, rate) in exits {
                if u < rate {
                    next = s;
                    break;
                }
                u -= rate;
            }
            state = next;
        }
        sum += t;
        sq += t * t;
    }
    let n = paths as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Case study 1 fixed rates.
pub const C2: f64 = 0.01;
pub const C3: f64 = 0.001;
pub const C4: f64 = 0.1;
pub const C5: f64 = 0.05;

pub fn c1_data() -> MinimalData {
    MinimalData::MinMaxMeanStd {
        min: 0.0,
        max: 10.0,
        mean: 0.05,
        std: 0.00033,
    }
}

pub fn c6_data() -> MinimalData {
    MinimalData::MinMaxMeanStd {
        min: 0.0,
        max: 10.0,
        mean: 1.0,
        std: 0.0167,
    }
}
