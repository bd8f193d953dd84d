//! Precise input distributions for Monte Carlo sampling.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Gamma};

use super::{PropagationError, Result};
use crate::pbox::MinimalData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    Beta,
    Uniform,
}

/// Parameters given either as moments or natively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Moments { mean: f64, std: f64 },
    Native { shape: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Moments { mean: f64, std: f64 },
    Native { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gamma(GammaSpec),
    Beta(BetaSpec),
    Uniform {
        min: f64,
        max: f64,
    },
    /// Piecewise-linear CDF through `(values[i], cdf[i])`.
    Tabulated {
        values: Vec<f64>,
        cdf: Vec<f64>,
    },
}

/// Native parameters produced by [`moment_match`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NativeParams {
    Gamma { shape: f64, rate: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform { min: f64, max: f64 },
}

impl From<NativeParams> for DistributionSpec {
    fn from(p: NativeParams) -> Self {
        match p {
            NativeParams::Gamma { shape, rate } => DistributionSpec::Gamma(GammaSpec::Native { shape, rate }),
            NativeParams::Beta { alpha, beta } => DistributionSpec::Beta(BetaSpec::Native { alpha, beta }),
            NativeParams::Uniform { min, max } => DistributionSpec::Uniform { min, max },
        }
    }
}

fn infeasible(family: Family, reason: String) -> PropagationError {
    PropagationError::InfeasibleMoments { family, reason }
}

fn gamma_from_moments(mean: f64, std: f64) -> Result<(f64, f64)> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(infeasible(Family::Gamma, format!("mean {mean} must be positive")));
    }
    if !(std.is_finite() && std > 0.0) {
        return Err(infeasible(Family::Gamma, format!("std {std} must be positive")));
    }
    let v = std * std;
    Ok((mean * mean / v, mean / v))
}

fn beta_from_moments(mean: f64, std: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(infeasible(Family::Beta, format!("mean {mean} must lie in (0, 1)")));
    }
    let v = std * std;
    if !(v > 0.0 && v < mean * (1.0 - mean)) {
        return Err(infeasible(
            Family::Beta,
            format!("variance {v} must lie in (0, {})", mean * (1.0 - mean)),
        ));
    }
    let nu = mean * (1.0 - mean) / v - 1.0;
    Ok((mean * nu, (1.0 - mean) * nu))
}

/// Native parameters of `family` reproducing the statistics in `stats`.
///
/// Gamma and beta use the mean and standard deviation; uniform uses the
/// support.
pub fn moment_match(family: Family, stats: &MinimalData) -> Result<NativeParams> {
    let moments = || match (stats.mean(), stats.std()) {
        (Some(m), Some(s)) => Ok((m, s)),
        _ => Err(PropagationError::MissingStatistic {
            family,
            needed: "mean and std",
        }),
    };
    match family {
        Family::Gamma => {
            let (m, s) = moments()?;
            let (shape, rate) = gamma_from_moments(m, s)?;
            Ok(NativeParams::Gamma { shape, rate })
        }
        Family::Beta => {
            let (m, s) = moments()?;
            let (alpha, beta) = beta_from_moments(m, s)?;
            Ok(NativeParams::Beta { alpha, beta })
        }
        Family::Uniform => Ok(NativeParams::Uniform {
            min: stats.min(),
            max: stats.max(),
        }),
    }
}

/// A distribution ready for inverse-transform sampling.
#[derive(Debug, Clone)]
pub(crate) enum Sampler {
    Gamma(Gamma),
    Beta(Beta),
    Uniform(f64, f64),
    Tabulated(Vec<f64>, Vec<f64>),
}

impl Sampler {
    pub fn new(name: &str, spec: &DistributionSpec) -> Result<Self> {
        let invalid = |reason: String| PropagationError::InvalidDistributionSpec {
            name: name.to_string(),
            reason,
        };
        match *spec {
            DistributionSpec::Gamma(g) => {
                let (shape, rate) = match g {
                    GammaSpec::Moments { mean, std } => gamma_from_moments(mean, std)?,
                    GammaSpec::Native { shape, rate } => (shape, rate),
                };
                Gamma::new(shape, rate)
                    .map(Sampler::Gamma)
                    .map_err(|e| invalid(e.to_string()))
            }
            DistributionSpec::Beta(b) => {
                let (alpha, beta) = match b {
                    BetaSpec::Moments { mean, std } => beta_from_moments(mean, std)?,
                    BetaSpec::Native { alpha, beta } => (alpha, beta),
                };
                Beta::new(alpha, beta)
                    .map(Sampler::Beta)
                    .map_err(|e| invalid(e.to_string()))
            }
            DistributionSpec::Uniform { min, max } => {
                if min.is_finite() && max.is_finite() && min < max {
                    Ok(Sampler::Uniform(min, max))
                } else {
                    Err(invalid(format!("uniform needs min < max, got [{min}, {max}]")))
                }
            }
            DistributionSpec::Tabulated { ref values, ref cdf } => {
                let ok = values.len() >= 2
                    && values.len() == cdf.len()
                    && values.iter().all(|v| v.is_finite())
                    && values.windows(2).all(|w| w[0] < w[1])
                    && cdf.windows(2).all(|w| w[0] <= w[1])
                    && cdf[0] == 0.0
                    && cdf[cdf.len() - 1] == 1.0;
                if ok {
                    Ok(Sampler::Tabulated(values.clone(), cdf.clone()))
                } else {
                    Err(invalid(
                        "tabulated CDF needs increasing values and a non-decreasing cdf from 0 to 1".into(),
                    ))
                }
            }
        }
    }

    /// Quantile at `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Sampler::Gamma(g) => g.inverse_cdf(u),
            Sampler::Beta(b) => b.inverse_cdf(u),
            Sampler::Uniform(a, b) => a + u * (b - a),
            Sampler::Tabulated(xs, ps) => {
                let k = ps.partition_point(|&p| p < u).clamp(1, ps.len() - 1);
                let (p0, p1) = (ps[k - 1], ps[k]);
                let t = if p1 > p0 { (u - p0) / (p1 - p0) } else { 0.0 };
                xs[k - 1] + t * (xs[k] - xs[k - 1])
            }
        }
    }
}
