//! Numeric abstraction for score arithmetic.
//!
//! Precision, recall, F1 and the averages are ratios of counts, so all they
//! need is a field that can be built from integers. Anything that also needs
//! square roots (standard deviations, physical quantities) asks for
//! [`num_traits::Float`] instead.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A number type scores can be computed in.
pub trait Scalar: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Lifts a count into the scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy view used by report emitters.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for num_rational::Ratio<i64> {}

/// `num / den`, or zero when the denominator is zero.
pub(crate) fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num) / T::from_count(den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn ratio_zero_denominator() {
        assert_eq!(ratio::<f64>(3, 0), 0.0);
        assert_eq!(ratio::<Rational>(0, 0), Rational::from_integer(0));
    }

    #[test]
    fn rational_is_exact() {
        let r: Rational = ratio(16, 21);
        assert_eq!(r, Rational::new(16, 21));
        assert!((r.as_f64() - 16.0 / 21.0).abs() < 1e-15);
    }
}
