//! Four-state continuous-time cohort model.
//!
//! States S1..S3 are transient and S4 absorbing:
//!
//! ```text
//! S1 -c1-> S2 -c4-> S3 -c6-> S4
//! S1 -c2-> S3,  S1 -c3-> S4,  S2 -c5-> S4
//! ```
//!
//! Life expectancy is the expected time spent outside S4 starting from S1.

use serde::{Deserialize, Serialize};

use super::{Model, ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourStateRates {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl FourStateRates {
    pub const NAMES: [&'static str; 6] = ["c1", "c2", "c3", "c4", "c5", "c6"];

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        let [c1, c2, c3, c4, c5, c6] = <[f64; 6]>::try_from(x).map_err(|_| ModelError::ArityMismatch {
            expected: 6,
            got: x.len(),
        })?;
        Ok(Self { c1, c2, c3, c4, c5, c6 })
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in Self::NAMES.into_iter().zip(self.as_array()) {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::NegativeRate { name, value });
            }
        }
        Ok(())
    }

    /// Generator restricted to the transient states.
    fn transient_generator(&self) -> [[f64; 3]; 3] {
        let r = self;
        [
            [-(r.c1 + r.c2 + r.c3), r.c1, r.c2],
            [0.0, -(r.c4 + r.c5), r.c4],
            [0.0, 0.0, -r.c6],
        ]
    }
}

/// Expected residence time in S1..S3 starting from S1.
///
/// Solves `-Q t = 1` over the transient states reachable from S1, so rates
/// out of unreachable states do not matter.
pub fn life_expectancy(r: &FourStateRates) -> Result<f64> {
    r.validate()?;
    let q = r.transient_generator();
    let reach = [true, r.c1 > 0.0, r.c2 > 0.0 || (r.c1 > 0.0 && r.c4 > 0.0)];
    let idx: Vec<usize> = (0..3).filter(|&i| reach[i]).collect();
    let k = idx.len();
    let mut m = [[0.0; 4]; 3];
    for (row, &i) in idx.iter().enumerate() {
        for (col, &j) in idx.iter().enumerate() {
            m[row][col] = -q[i][j];
        }
        m[row][k] = 1.0;
    }
    let t = solve(&mut m, k)?;
    let le = t[0];
    if le.is_finite() && le > 0.0 {
        Ok(le)
    } else {
        Err(ModelError::SingularSystem)
    }
}

#[allow(clippy::needless_range_loop)]
fn solve(m: &mut [[f64; 4]; 3], k: usize) -> Result<[f64; 3]> {
    let scale = m
        .iter()
        .take(k)
        .flat_map(|row| row[..k].iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .expect("non-empty range");
        if !(m[piv][col].abs() > 1e-300 && m[piv][col].abs() > f64::EPSILON * scale * 1e-3) {
            return Err(ModelError::SingularSystem);
        }
        m.swap(col, piv);
        for r in col + 1..k {
            let f = m[r][col] / m[col][col];
            for c in col..=k {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][k] - s) / m[i][i];
    }
    Ok(x)
}

/// [`life_expectancy`] as a six-input [`Model`] over `c1..c6`.
#[derive(Debug, Clone)]
pub struct FourStateModel {
    inputs: Vec<String>,
}

impl FourStateModel {
    pub fn new() -> Self {
        Self {
            inputs: FourStateRates::NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Default for FourStateModel {
    fn default() -> Self {
        Self::new()
    }
}

impl Model for FourStateModel {
    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        life_expectancy(&FourStateRates::from_slice(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(c1: f64, c6: f64) -> FourStateRates {
        FourStateRates {
            c1,
            c2: 0.01,
            c3: 0.001,
            c4: 0.1,
            c5: 0.05,
            c6,
        }
    }

    #[test]
    fn single_exit_is_exponential() {
        let r = FourStateRates {
            c1: 0.0,
            c2: 0.0,
            c3: 0.25,
            c4: 0.0,
            c5: 0.0,
            c6: 0.0,
        };
        assert_eq!(life_expectancy(&r).unwrap(), 4.0);
    }

    #[test]
    fn matches_path_decomposition() {
        let r = rates(0.05, 1.0);
        let t3 = 1.0 / r.c6;
        let t2 = (1.0 + r.c4 * t3) / (r.c4 + r.c5);
        let t1 = (1.0 + r.c1 * t2 + r.c2 * t3) / (r.c1 + r.c2 + r.c3);
        let le = life_expectancy(&r).unwrap();
        assert!((le - t1).abs() <= 1e-12 * t1, "{le} vs {t1}");
    }

    #[test]
    fn decreasing_in_exit_rates() {
        assert!(life_expectancy(&rates(0.05, 2.0)).unwrap() < life_expectancy(&rates(0.05, 1.0)).unwrap());
    }

    #[test]
    fn singular_and_invalid() {
        assert_eq!(life_expectancy(&rates(0.05, 0.0)), Err(ModelError::SingularSystem));
        let mut r = rates(0.05, 1.0);
        r.c3 = -1.0;
        assert!(matches!(
            life_expectancy(&r),
            Err(ModelError::NegativeRate { name: "c3", .. })
        ));
        let m = FourStateModel::new();
        assert!(matches!(m.evaluate(&[1.0]), Err(ModelError::ArityMismatch { .. })));
    }
}
