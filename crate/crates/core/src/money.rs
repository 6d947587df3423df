//! Fixed-point money and survey weights.
//!
//! Amounts are held in whole deni (1/100 MKD) and weights in nano-units, so
//! weighted totals are exact integer products. Rounding to two decimals
//! happens when an amount is formatted for a report.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

/// Scale of [`Weight`]: one unit of weight is `WEIGHT_SCALE` raw steps.
pub const WEIGHT_SCALE: i64 = 1_000_000_000;

/// Macedonian denar amount with two fractional digits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mkd(i64);

impl Mkd {
    pub const ZERO: Mkd = Mkd(0);

    pub const fn from_cents(cents: i64) -> Self {
        Mkd(cents)
    }

    pub const fn from_whole(mkd: i64) -> Self {
        Mkd(mkd * 100)
    }

    /// Nearest cent to a floating amount, halves away from zero.
    pub fn from_f64(mkd: f64) -> Self {
        Mkd((mkd * 100.0).round() as i64)
    }

    pub const fn cents(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn max(self, other: Mkd) -> Mkd {
        Mkd(self.0.max(other.0))
    }

    pub fn min(self, other: Mkd) -> Mkd {
        Mkd(self.0.min(other.0))
    }

    /// Multiply by a rate and round to the nearest cent.
    pub fn scale(self, factor: f64) -> Mkd {
        Mkd((self.0 as f64 * factor).round() as i64)
    }

    pub fn times(self, n: i64) -> Mkd {
        Mkd(self.0 * n)
    }

    pub fn weighted(self, w: Weight) -> WeightedMkd {
        WeightedMkd(self.0 as i128 * w.0 as i128)
    }
}

impl Add for Mkd {
    type Output = Mkd;
    fn add(self, rhs: Mkd) -> Mkd {
        Mkd(self.0 + rhs.0)
    }
}

impl AddAssign for Mkd {
    fn add_assign(&mut self, rhs: Mkd) {
        self.0 += rhs.0;
    }
}

impl Sub for Mkd {
    type Output = Mkd;
    fn sub(self, rhs: Mkd) -> Mkd {
        Mkd(self.0 - rhs.0)
    }
}

impl SubAssign for Mkd {
    fn sub_assign(&mut self, rhs: Mkd) {
        self.0 -= rhs.0;
    }
}

impl Neg for Mkd {
    type Output = Mkd;
    fn neg(self) -> Mkd {
        Mkd(-self.0)
    }
}

impl Sum for Mkd {
    fn sum<I: Iterator<Item = Mkd>>(iter: I) -> Mkd {
        Mkd(iter.map(|m| m.0).sum())
    }
}

impl<'a> Sum<&'a Mkd> for Mkd {
    fn sum<I: Iterator<Item = &'a Mkd>>(iter: I) -> Mkd {
        Mkd(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Mkd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl FromStr for Mkd {
    type Err = ParseAmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed(s, 2).map(|v| Mkd(v as i64))
    }
}

/// Survey expansion factor, fixed at nine fractional digits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(i64);

impl Weight {
    pub const ZERO: Weight = Weight(0);
    pub const ONE: Weight = Weight(WEIGHT_SCALE);

    pub const fn from_raw(raw: i64) -> Self {
        Weight(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    pub fn from_f64(w: f64) -> Self {
        Weight((w * WEIGHT_SCALE as f64).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / WEIGHT_SCALE as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn times(self, n: i64) -> Weight {
        Weight(self.0 * n)
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl AddAssign for Weight {
    fn add_assign(&mut self, rhs: Weight) {
        self.0 += rhs.0;
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        Weight(iter.map(|w| w.0).sum())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / WEIGHT_SCALE as u64;
        let frac = abs % WEIGHT_SCALE as u64;
        if frac == 0 {
            return write!(f, "{sign}{whole}");
        }
        let digits = format!("{frac:09}");
        write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
    }
}

impl FromStr for Weight {
    type Err = ParseAmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed(s, 9).map(|v| Weight(v as i64))
    }
}

/// Money times weight: deni × nano-weight. Exact for any realistic total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightedMkd(i128);

impl WeightedMkd {
    pub const ZERO: WeightedMkd = WeightedMkd(0);

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn to_mkd_f64(self) -> f64 {
        self.0 as f64 / (100.0 * WEIGHT_SCALE as f64)
    }

    /// Round half-up (away from zero) to whole cents.
    pub fn round_to_mkd(self) -> Mkd {
        let scale = WEIGHT_SCALE as i128;
        let half = scale / 2;
        let cents = if self.0 >= 0 {
            (self.0 + half) / scale
        } else {
            -((-self.0 + half) / scale)
        };
        Mkd(cents as i64)
    }
}

impl Add for WeightedMkd {
    type Output = WeightedMkd;
    fn add(self, rhs: WeightedMkd) -> WeightedMkd {
        WeightedMkd(self.0 + rhs.0)
    }
}

impl AddAssign for WeightedMkd {
    fn add_assign(&mut self, rhs: WeightedMkd) {
        self.0 += rhs.0;
    }
}

impl Sub for WeightedMkd {
    type Output = WeightedMkd;
    fn sub(self, rhs: WeightedMkd) -> WeightedMkd {
        WeightedMkd(self.0 - rhs.0)
    }
}

impl Mul<i64> for WeightedMkd {
    type Output = WeightedMkd;
    fn mul(self, rhs: i64) -> WeightedMkd {
        WeightedMkd(self.0 * rhs as i128)
    }
}

impl Sum for WeightedMkd {
    fn sum<I: Iterator<Item = WeightedMkd>>(iter: I) -> WeightedMkd {
        WeightedMkd(iter.map(|w| w.0).sum())
    }
}

impl serde::Serialize for Mkd {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> serde::Deserialize<'de> for Mkd {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Mkd;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an MKD amount")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Mkd, E> {
                Ok(Mkd::from_whole(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Mkd, E> {
                Ok(Mkd::from_whole(v as i64))
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Mkd, E> {
                if !v.is_finite() {
                    return Err(E::custom("amount must be finite"));
                }
                Ok(Mkd::from_f64(v))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Mkd, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal amount {0:?}")]
pub struct ParseAmountError(pub String);

/// Parse a plain decimal (`-123.45`) into an integer scaled by 10^digits.
/// Extra fractional digits beyond `digits` are rejected rather than rounded.
fn parse_fixed(s: &str, digits: u32) -> Result<i128, ParseAmountError> {
    let err = || ParseAmountError(s.to_string());
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return Err(err());
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    if frac_part.len() > digits as usize {
        return Err(err());
    }
    let int_val: i128 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| err())? };
    let mut frac_val: i128 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| err())? };
    frac_val *= 10i128.pow(digits - frac_part.len() as u32);
    let v = int_val
        .checked_mul(10i128.pow(digits))
        .and_then(|x| x.checked_add(frac_val))
        .filter(|x| *x <= i64::MAX as i128)
        .ok_or_else(err)?;
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_formats_money() {
        assert_eq!("30000".parse::<Mkd>().unwrap(), Mkd::from_whole(30_000));
        assert_eq!("14500.5".parse::<Mkd>().unwrap().cents(), 1_450_050);
        assert_eq!("-0.07".parse::<Mkd>().unwrap().cents(), -7);
        assert_eq!(Mkd::from_cents(-7).to_string(), "-0.07");
        assert_eq!(Mkd::from_cents(123_456).to_string(), "1234.56");
        assert!("1.234".parse::<Mkd>().is_err());
        assert!("abc".parse::<Mkd>().is_err());
        assert!("".parse::<Mkd>().is_err());
        assert!(".".parse::<Mkd>().is_err());
    }

    #[test]
    fn weight_text_roundtrip() {
        let w: Weight = "60.125".parse().unwrap();
        assert_eq!(w.raw(), 60_125_000_000);
        assert_eq!(w.to_string(), "60.125");
        assert_eq!(Weight::ONE.to_string(), "1");
    }

    #[test]
    fn schedule_multipliers_are_exact_on_whole_amounts() {
        assert_eq!(Mkd::from_whole(30_000).scale(0.70), Mkd::from_whole(21_000));
        assert_eq!(Mkd::from_whole(20_000).scale(0.75), Mkd::from_whole(15_000));
        assert_eq!(Mkd::from_whole(14_500).scale(0.5), Mkd::from_whole(7_250));
        assert_eq!(Mkd::from_whole(14_500).scale(0.28), Mkd::from_whole(4_060));
    }

    #[test]
    fn weighted_rounding_is_half_up() {
        // 0.005 MKD in deni x nano-weight
        let half_cent = WeightedMkd(WEIGHT_SCALE as i128 / 2);
        assert_eq!(half_cent.round_to_mkd().cents(), 1);
        let below = WeightedMkd(WEIGHT_SCALE as i128 / 2 - 1);
        assert_eq!(below.round_to_mkd().cents(), 0);
    }

    proptest! {
        #[test]
        fn weight_display_parse_roundtrip(raw in 0i64..1_000_000_000_000_000) {
            let w = Weight::from_raw(raw);
            prop_assert_eq!(w.to_string().parse::<Weight>().unwrap(), w);
        }

        #[test]
        fn money_display_parse_roundtrip(cents in -10_000_000_000i64..10_000_000_000) {
            let m = Mkd::from_cents(cents);
            prop_assert_eq!(m.to_string().parse::<Mkd>().unwrap(), m);
        }
    }
}
