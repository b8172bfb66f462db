//! Q16.16 signed fixed point.
//!
//! The representable range is symmetric, `[-(2^15 - 2^-16), 2^15 - 2^-16]`:
//! every operation saturates to it, so negation can never overflow.
//! Multiplication widens to 64 bits and rounds to nearest, ties to even.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub const FRAC_BITS: u32 = 16;
const ONE_RAW: i64 = 1 << FRAC_BITS;
const MAX_RAW: i64 = i32::MAX as i64;
const MIN_RAW: i64 = -MAX_RAW;

#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed32(i32);

impl Fixed32 {
    pub const ZERO: Fixed32 = Fixed32(0);
    pub const ONE: Fixed32 = Fixed32(ONE_RAW as i32);
    pub const MAX: Fixed32 = Fixed32(MAX_RAW as i32);
    pub const MIN: Fixed32 = Fixed32(MIN_RAW as i32);
    /// Smallest positive increment, 2^-16.
    pub const EPSILON: Fixed32 = Fixed32(1);

    /// Wraps a raw word, clamping `i32::MIN` onto the symmetric range.
    pub fn from_raw(raw: i32) -> Self {
        Fixed32(raw.max(MIN_RAW as i32))
    }

    pub fn raw(self) -> i32 {
        self.0
    }

    fn saturate(v: i64) -> Self {
        Fixed32(v.clamp(MIN_RAW, MAX_RAW) as i32)
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return Fixed32::ZERO;
        }
        let scaled = (x * ONE_RAW as f64).round_ties_even();
        if scaled >= MAX_RAW as f64 {
            Fixed32::MAX
        } else if scaled <= MIN_RAW as f64 {
            Fixed32::MIN
        } else {
            Fixed32(scaled as i32)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / ONE_RAW as f64
    }

    /// Divides by a positive count, rounding to nearest even.
    pub fn div_count(self, n: usize) -> Self {
        assert!(n > 0, "division by a zero count");
        Self::saturate(div_round_even(self.0 as i64, n as i64))
    }

    pub fn max(self, other: Self) -> Self {
        Ord::max(self, other)
    }
}

/// `num / den` rounded to nearest, ties to even; `den > 0`.
fn div_round_even(num: i64, den: i64) -> i64 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal if q & 1 == 1 => q + 1,
        _ => q,
    }
}

impl Add for Fixed32 {
    type Output = Fixed32;
    fn add(self, rhs: Self) -> Self {
        Self::saturate(self.0 as i64 + rhs.0 as i64)
    }
}

impl Sub for Fixed32 {
    type Output = Fixed32;
    fn sub(self, rhs: Self) -> Self {
        Self::saturate(self.0 as i64 - rhs.0 as i64)
    }
}

impl Mul for Fixed32 {
    type Output = Fixed32;
    fn mul(self, rhs: Self) -> Self {
        let wide = self.0 as i64 * rhs.0 as i64;
        Self::saturate(div_round_even(wide, ONE_RAW))
    }
}

impl Neg for Fixed32 {
    type Output = Fixed32;
    fn neg(self) -> Self {
        Fixed32(-self.0)
    }
}

impl fmt::Debug for Fixed32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed32({})", self.to_f64())
    }
}

impl fmt::Display for Fixed32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fx(x: f64) -> Fixed32 {
        Fixed32::from_f64(x)
    }

    #[test]
    fn constants() {
        assert_eq!(Fixed32::ONE.to_f64(), 1.0);
        assert_eq!(Fixed32::MAX.to_f64(), 32768.0 - 1.0 / 65536.0);
        assert_eq!(Fixed32::MIN, -Fixed32::MAX);
        assert_eq!(Fixed32::from_raw(i32::MIN), Fixed32::MIN);
    }

    #[test]
    fn saturating_add_sub() {
        assert_eq!(Fixed32::MAX + Fixed32::ONE, Fixed32::MAX);
        assert_eq!(Fixed32::MIN - Fixed32::ONE, Fixed32::MIN);
        assert_eq!(fx(1.5) + fx(-0.25), fx(1.25));
        assert_eq!(fx(40000.0), Fixed32::MAX);
        assert_eq!(fx(-40000.0), Fixed32::MIN);
    }

    #[test]
    fn multiply_rounds_half_even() {
        let half_ulp = Fixed32::from_raw(1) * Fixed32::from_raw(1 << 15);
        // 2^-16 * 0.5 = exactly half an ULP -> ties to even (0)
        assert_eq!(half_ulp.raw(), 0);
        let three_halves = Fixed32::from_raw(3) * Fixed32::from_raw(1 << 15);
        // 1.5 ULP -> 2
        assert_eq!(three_halves.raw(), 2);
        let neg = Fixed32::from_raw(-3) * Fixed32::from_raw(1 << 15);
        assert_eq!(neg.raw(), -2);
        assert_eq!(fx(2.0) * fx(-3.5), fx(-7.0));
        assert_eq!(fx(300.0) * fx(300.0), Fixed32::MAX);
    }

    #[test]
    fn from_f64_ties_to_even() {
        assert_eq!(fx(0.5 / 65536.0).raw(), 0);
        assert_eq!(fx(1.5 / 65536.0).raw(), 2);
        assert_eq!(fx(f64::NAN), Fixed32::ZERO);
    }

    #[test]
    fn division_by_count() {
        assert_eq!(fx(3.0).div_count(2), fx(1.5));
        assert_eq!(Fixed32::from_raw(3).div_count(2).raw(), 2);
        assert_eq!(Fixed32::from_raw(5).div_count(2).raw(), 2);
        assert_eq!(Fixed32::from_raw(-5).div_count(2).raw(), -2);
    }

    proptest! {
        #[test]
        fn raw_round_trip(raw in (i32::MIN + 1)..=i32::MAX) {
            let x = Fixed32::from_raw(raw);
            prop_assert_eq!(Fixed32::from_f64(x.to_f64()), x);
        }

        #[test]
        fn multiply_error_within_half_ulp(a in -100.0f64..100.0, b in -100.0f64..100.0) {
            let (fa, fb) = (fx(a), fx(b));
            let exact = fa.to_f64() * fb.to_f64();
            let got = (fa * fb).to_f64();
            prop_assert!((got - exact).abs() <= 0.5 / 65536.0 + 1e-12);
        }

        #[test]
        fn add_is_commutative(a in any::<i32>(), b in any::<i32>()) {
            let (x, y) = (Fixed32::from_raw(a), Fixed32::from_raw(b));
            prop_assert_eq!(x + y, y + x);
        }
    }
}
