//! Ordered-field abstraction over `f64` and exact rationals.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used by the exact evaluation mode.
pub type Rational = BigRational;

/// Distance from 1 under which the closed forms of the geometric sums are
/// abandoned for direct summation.
pub const CLOSED_FORM_GUARD: f64 = 1e-8;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    /// Lossless for [`Rational`]; panics on non-finite input there.
    fn from_f64(x: f64) -> Self;
    fn from_int(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    /// Integer power; negative exponents require a non-zero base.
    fn powi(&self, exp: i32) -> Self;

    /// `Σ_{j=1}^{m} x^{-j}`. Requires `x ≠ 0` when `m ≥ 1`.
    fn inv_power_sum(x: &Self, m: u32) -> Self {
        if m == 0 {
            return Self::zero();
        }
        let y = Self::one() / x.clone();
        horner_geometric(&y, m)
    }

    /// `Σ_{j=1}^{m} x^{j}`.
    fn power_sum(x: &Self, m: u32) -> Self {
        horner_geometric(x, m)
    }
}

/// `y + y² + … + y^m` as `y(1 + y(1 + …))`.
fn horner_geometric<T: Scalar>(y: &T, m: u32) -> T {
    let mut acc = T::zero();
    for _ in 0..m {
        acc = y.clone() * (T::one() + acc);
    }
    acc
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn powi(&self, exp: i32) -> Self {
        f64::powi(*self, exp)
    }

    fn inv_power_sum(x: &Self, m: u32) -> Self {
        if m == 0 {
            return 0.0;
        }
        let x = *x;
        if (x - 1.0).abs() <= CLOSED_FORM_GUARD {
            return horner_geometric(&(1.0 / x), m);
        }
        // (x^{-m} − 1) / (1 − x)
        let numer = if x > 0.5 && x < 1.5 {
            (-(m as f64) * (x - 1.0).ln_1p()).exp_m1()
        } else {
            x.powi(-(m as i32)) - 1.0
        };
        numer / (1.0 - x)
    }

    fn power_sum(x: &Self, m: u32) -> Self {
        if m == 0 {
            return 0.0;
        }
        let x = *x;
        if (x - 1.0).abs() <= CLOSED_FORM_GUARD {
            return horner_geometric(&x, m);
        }
        // x (1 − x^m) / (1 − x)
        let numer = if x > 0.5 && x < 1.5 {
            -((m as f64) * (x - 1.0).ln_1p()).exp_m1()
        } else {
            1.0 - x.powi(m as i32)
        };
        x * numer / (1.0 - x)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("exact conversion needs a finite float")
    }

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn powi(&self, exp: i32) -> Self {
        num_traits::Pow::pow(self, exp)
    }
}

pub(crate) fn min_of<T: Scalar>(a: T, b: T) -> T {
    if a <= b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_inv(x: f64, m: u32) -> f64 {
        (1..=m).map(|j| x.powi(-(j as i32))).sum()
    }

    #[test]
    fn closed_forms_track_direct_sums() {
        for &x in &[-0.95, -0.5, -0.05, 0.05, 0.3, 0.9, 0.999, 1.0 + 1e-6, 1.7, 4.0] {
            for m in 1..=20 {
                let got = f64::inv_power_sum(&x, m);
                let want = direct_inv(x, m);
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "x={x} m={m}: {got} vs {want}");
                let got = f64::power_sum(&x, m);
                let want: f64 = (1..=m).map(|j| x.powi(j as i32)).sum();
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "x={x} m={m}");
            }
        }
    }

    #[test]
    fn rational_sums_are_exact() {
        let half = Rational::new(1.into(), 2.into());
        // 2 + 4 + 8 + 16
        assert_eq!(Rational::inv_power_sum(&half, 4), Rational::from_int(30));
        assert_eq!(Rational::power_sum(&Rational::from_int(2), 2), Rational::from_int(6));
        assert_eq!(Rational::power_sum(&half, 0), Rational::zero());
    }

    #[test]
    fn rational_from_f64_is_lossless() {
        for &x in &[0.1, -1.0 / 3.0, 1.5e-7, 123.456] {
            assert_eq!(Scalar::to_f64(&Rational::from_f64(x)), x);
        }
    }
}
