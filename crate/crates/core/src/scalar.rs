//! Scalar abstraction for probabilities and outcome arithmetic.
//!
//! Every model, engine and estimator type is generic over a [`Scalar`]; the
//! crate root fixes `f64` for the common aliases.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when checking that a probability vector sums to one.
    fn mass_tolerance() -> Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-5
    }
}

/// Neumaier-compensated running sum. Summation order is the insertion order,
/// so results are reproducible bit-for-bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<S> {
    sum: S,
    compensation: S,
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn new() -> Self {
        Self {
            sum: S::zero(),
            compensation: S::zero(),
        }
    }

    pub fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> S {
        self.sum + self.compensation
    }
}

impl<S: Scalar> FromIterator<S> for CompensatedSum<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(iter: I) -> S {
    iter.into_iter().collect::<CompensatedSum<S>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum::<f64, _>(xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn f32_tolerance_is_looser() {
        assert!(f32::mass_tolerance() > 1e-9);
        assert_eq!(f64::mass_tolerance(), 1e-9);
    }
}
