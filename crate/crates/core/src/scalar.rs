//! Scalars that weights can be computed in. Exact rationals are the default;
//! binary floats are supported for callers that want them.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use rust_decimal::{Decimal, RoundingStrategy};

pub trait WeightScalar: Num + Clone + PartialOrd + Debug {
    fn from_count(n: u64) -> Self;

    /// Two-decimal value, rounding halves away from zero.
    fn round_hundredths(&self) -> Decimal;

    fn to_f64(&self) -> f64;

    /// `part / whole * 100`.
    fn percent(part: u64, whole: u64) -> Self {
        Self::from_count(part) * Self::from_count(100) / Self::from_count(whole)
    }
}

fn round_float(x: f64) -> Decimal {
    Decimal::from_f64(x)
        .unwrap_or_default()
        .round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero)
}

impl WeightScalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn round_hundredths(&self) -> Decimal {
        round_float(*self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl WeightScalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn round_hundredths(&self) -> Decimal {
        round_float(*self as f64)
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl WeightScalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count fits in i64"))
    }

    fn round_hundredths(&self) -> Decimal {
        let (n, d) = (*self.numer() as i128, *self.denom() as i128);
        let scaled = n * 100;
        // Ratio keeps the denominator positive.
        let hundredths = if scaled >= 0 {
            (2 * scaled + d) / (2 * d)
        } else {
            -((-2 * scaled + d) / (2 * d))
        };
        Decimal::from_i128_with_scale(hundredths, 2)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(p: u64, w: u64) -> Ratio<i64> {
        Ratio::<i64>::percent(p, w)
    }

    #[test]
    fn exact_percentages_round_half_up() {
        assert_eq!(exact(1, 6).round_hundredths().to_string(), "16.67");
        assert_eq!(exact(2, 6).round_hundredths().to_string(), "33.33");
        assert_eq!(exact(3, 6).round_hundredths().to_string(), "50.00");
        assert_eq!(exact(1, 1).round_hundredths().to_string(), "100.00");
        // 1/8 = 12.5% exactly; 1/800 = 0.125% rounds up to 0.13.
        assert_eq!(exact(1, 800).round_hundredths().to_string(), "0.13");
        assert_eq!(exact(2, 3).round_hundredths().to_string(), "66.67");
    }

    #[test]
    fn float_and_exact_agree_after_rounding() {
        for whole in 1..=30u64 {
            for part in 0..=whole {
                let a = exact(part, whole).round_hundredths();
                let b = f64::percent(part, whole).round_hundredths();
                assert!((a - b).abs() <= Decimal::new(1, 2), "{part}/{whole}: {a} vs {b}");
                assert!(
                    (WeightScalar::to_f64(&f32::percent(part, whole)) - WeightScalar::to_f64(&exact(part, whole))).abs() < 1e-3
                );
            }
        }
    }
}
