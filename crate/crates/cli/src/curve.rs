//! CSV export of bounding curves.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use pba_core::{EmpiricalPBox, Interval, PBox, Side};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CurveError {
    pub fn kind(&self) -> &'static str {
        match self {
            CurveError::GridTooSmall(_) => "InvalidArgument",
            CurveError::Io { .. } => "IoError",
        }
    }
}

/// Anything with a lower and upper CDF over a bounded support.
#[derive(Debug, Clone, Copy)]
pub enum Curve<'a> {
    Analytic(&'a PBox),
    Empirical(&'a EmpiricalPBox),
}

impl Curve<'_> {
    fn support(&self) -> Interval {
        match self {
            Curve::Analytic(p) => p.support(),
            Curve::Empirical(e) => e.support(),
        }
    }

    fn eval(&self, side: Side, t: f64) -> f64 {
        match self {
            Curve::Analytic(p) => p.eval(side, t),
            Curve::Empirical(e) => e.eval(side, t),
        }
    }

    /// The support widened by 5% on each side.
    pub fn padded_support(&self) -> Interval {
        let s = self.support();
        let pad = if s.width() > 0.0 {
            0.05 * s.width()
        } else {
            0.05 * s.lo.abs().max(1.0)
        };
        Interval {
            lo: s.lo - pad,
            hi: s.hi + pad,
        }
    }
}

/// `theta,lbf,ubf` rows on `gridsize` evenly spaced points of `range`.
pub fn curve_csv(c: Curve<'_>, gridsize: usize, range: Interval) -> Result<String, CurveError> {
    if gridsize < 2 {
        return Err(CurveError::GridTooSmall(gridsize));
    }
    let mut out = String::from("theta,lbf,ubf\n");
    for i in 0..gridsize {
        let theta = if i + 1 == gridsize {
            range.hi
        } else {
            let t = i as f64 / (gridsize - 1) as f64;
            range.lo * (1.0 - t) + range.hi * t
        };
        let (l, u) = (c.eval(Side::Lower, theta), c.eval(Side::Upper, theta));
        writeln!(out, "{theta},{l},{u}").expect("writing to a String");
    }
    Ok(out)
}

/// Writes the curve over the padded support (or `range`) to `path`.
pub fn export_curve(c: Curve<'_>, gridsize: usize, range: Option<Interval>, path: &Path) -> Result<(), CurveError> {
    let csv = curve_csv(c, gridsize, range.unwrap_or_else(|| c.padded_support()))?;
    std::fs::write(path, csv).map_err(|source| CurveError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pba_core::MinimalData;

    #[test]
    fn min_max_rows() {
        let p = PBox::from_data(MinimalData::MinMax { min: 0.0, max: 1.0 }).unwrap();
        let c = Curve::Analytic(&p);
        let csv = curve_csv(c, 3, c.padded_support()).unwrap();
        assert_eq!(csv, "theta,lbf,ubf\n-0.05,0,0\n0.5,0,1\n1.05,1,1\n");
    }

    #[test]
    fn grid_of_one_is_rejected() {
        let p = PBox::from_data(MinimalData::MinMax { min: 0.0, max: 1.0 }).unwrap();
        assert!(matches!(
            curve_csv(Curve::Analytic(&p), 1, p.support()),
            Err(CurveError::GridTooSmall(1))
        ));
    }

    #[test]
    fn point_support_still_pads() {
        let e = EmpiricalPBox::from_samples(&[2.0]).unwrap();
        let s = Curve::Empirical(&e).padded_support();
        assert!(s.lo < 2.0 && s.hi > 2.0);
    }
}
