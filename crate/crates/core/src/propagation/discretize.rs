//! Outer discretization of p-boxes and the product of focal elements.

use serde::{Deserialize, Serialize};

use super::{PropagationError, Result};
use crate::interval::Interval;
use crate::pbox::{PBox, Side};

/// Default limit on the number of hyperrectangles in one product.
pub const DEFAULT_MAX_BOXES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalElement {
    pub interval: Interval,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedPBox {
    pub elements: Vec<FocalElement>,
}

impl DiscretizedPBox {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Mass of elements whose right end is at most `t`.
    pub fn lower(&self, t: f64) -> f64 {
        self.cumulate(t, |iv| iv.hi)
    }

    /// Mass of elements whose left end is at most `t`.
    pub fn upper(&self, t: f64) -> f64 {
        self.cumulate(t, |iv| iv.lo)
    }

    fn cumulate(&self, t: f64, end: impl Fn(&Interval) -> f64) -> f64 {
        let mut total = 0.0;
        let mut all = true;
        for e in &self.elements {
            if end(&e.interval) <= t {
                total += e.mass;
            } else {
                all = false;
            }
        }
        if all {
            1.0
        } else {
            total
        }
    }
}

/// Slices `[0, 1]` into `n` equal masses and maps each slice back to an
/// interval that encloses the p-box.
///
/// Slice `j` covers probabilities `((j-1)/n, j/n]`; its interval runs from
/// the first point where the upper bound exceeds `(j-1)/n` to the first
/// point where the lower bound reaches `j/n`.
pub fn discretize_outer(p: &PBox, n: usize) -> Result<DiscretizedPBox> {
    if n == 0 {
        return Err(PropagationError::ZeroSlices);
    }
    let support = p.support();
    let mass = 1.0 / n as f64;
    let mut elements = Vec::with_capacity(n);
    for j in 1..=n {
        let lo = if j == 1 {
            support.lo
        } else {
            p.quasi_inverse(Side::Upper, (j - 1) as f64 / n as f64)?.hi
        };
        let hi = p.quasi_inverse(Side::Lower, j as f64 / n as f64)?.lo;
        elements.push(FocalElement {
            interval: Interval { lo: lo.min(hi), hi },
            mass,
        });
    }
    Ok(DiscretizedPBox { elements })
}

/// One cell of the focal product.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    pub intervals: Vec<Interval>,
    pub mass: f64,
    pub multi_index: Vec<usize>,
}

/// All combinations of one focal element per input, generated on demand.
///
/// The last input varies fastest.
#[derive(Debug, Clone)]
pub struct FocalProduct<'a> {
    inputs: &'a [DiscretizedPBox],
    len: usize,
}

impl<'a> FocalProduct<'a> {
    pub fn new(inputs: &'a [DiscretizedPBox]) -> Result<Self> {
        Self::with_cap(inputs, DEFAULT_MAX_BOXES)
    }

    pub fn with_cap(inputs: &'a [DiscretizedPBox], cap: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(PropagationError::EmptyProduct);
        }
        let mut len: usize = 1;
        for d in inputs {
            if d.is_empty() {
                return Err(PropagationError::ZeroSlices);
            }
            len = len
                .checked_mul(d.len())
                .ok_or(PropagationError::TooManyHyperrectangles { count: None, cap })?;
        }
        if len > cap {
            return Err(PropagationError::TooManyHyperrectangles { count: Some(len), cap });
        }
        Ok(Self { inputs, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mut i: usize) -> Option<Hyperrectangle> {
        if i >= self.len {
            return None;
        }
        let k = self.inputs.len();
        let mut multi_index = vec![0; k];
        for (slot, d) in multi_index.iter_mut().zip(self.inputs).rev() {
            *slot = i % d.len();
            i /= d.len();
        }
        let mut mass = 1.0;
        let intervals = multi_index
            .iter()
            .zip(self.inputs)
            .map(|(&j, d)| {
                mass *= d.elements[j].mass;
                d.elements[j].interval
            })
            .collect();
        Some(Hyperrectangle {
            intervals,
            mass,
            multi_index,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Hyperrectangle> + '_ {
        (0..self.len).map(|i| self.get(i).expect("index in range"))
    }
}
