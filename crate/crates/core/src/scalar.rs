use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use crate::fixed::Fixed32;

/// Element type of property matrices: the 32-bit datapath or the f64 oracle.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn div_count(self, n: usize) -> Self;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn relu(self) -> Self {
        self.max_of(Self::ZERO)
    }

    /// Transcendentals go through f64 and are quantized once; for Fixed32
    /// this is the behaviour of a correctly rounded lookup table.
    fn sigmoid(self) -> Self {
        Self::from_f64(1.0 / (1.0 + (-self.to_f64()).exp()))
    }

    fn tanh(self) -> Self {
        Self::from_f64(self.to_f64().tanh())
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn div_count(self, n: usize) -> Self {
        self / n as f64
    }

    fn sigmoid(self) -> Self {
        1.0 / (1.0 + (-self).exp())
    }

    fn tanh(self) -> Self {
        f64::tanh(self)
    }
}

impl Scalar for Fixed32 {
    const ZERO: Self = Fixed32::ZERO;
    const ONE: Self = Fixed32::ONE;

    fn from_f64(x: f64) -> Self {
        Fixed32::from_f64(x)
    }

    fn to_f64(self) -> f64 {
        Fixed32::to_f64(self)
    }

    fn div_count(self, n: usize) -> Self {
        Fixed32::div_count(self, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn activations_are_monotone_and_bounded(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(lo.sigmoid() <= hi.sigmoid());
            prop_assert!(Scalar::tanh(lo) <= Scalar::tanh(hi));
            prop_assert!(lo.relu() <= hi.relu());
            let s = a.sigmoid();
            prop_assert!((0.0..=1.0).contains(&s));
            let t = Scalar::tanh(a);
            prop_assert!((-1.0..=1.0).contains(&t));
            let (flo, fhi) = (Fixed32::from_f64(lo), Fixed32::from_f64(hi));
            prop_assert!(flo.sigmoid() <= fhi.sigmoid());
            prop_assert!(Scalar::tanh(flo) <= Scalar::tanh(fhi));
            prop_assert!(flo.relu() <= fhi.relu());
            prop_assert!(flo.relu() >= Fixed32::ZERO);
        }
    }

    #[test]
    fn relu_and_max() {
        assert_eq!((-2.0f64).relu(), 0.0);
        assert_eq!(3.0f64.max_of(7.5), 7.5);
        assert_eq!(Fixed32::from_f64(-1.0).relu(), Fixed32::ZERO);
        assert_eq!(0.0f64.sigmoid(), 0.5);
    }
}
