//! Exact rationals and their `"p/q"` text form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;
use std::fmt;

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn from_u128(numer: u128, denom: u128) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"p/q"`, `"p"` or a decimal-free integer string.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let numer: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in {text:?}")))?;
    let denom: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in {text:?}")))?;
    if denom.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(Rational::new(numer, denom))
}

/// Always `p/q` in lowest terms, including integers (`1/1`, `0/1`).
pub fn format(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Checks `0 < value < 1`.
pub fn check_open_unit(name: &str, value: &Rational) -> Result<()> {
    if value.is_positive() && *value < Rational::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in (0,1), got {}",
            format(value)
        )))
    }
}

/// Checks `0 < value <= 1`.
pub fn check_half_open_unit(name: &str, value: &Rational) -> Result<()> {
    if value.is_positive() && *value <= Rational::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in (0,1], got {}",
            format(value)
        )))
    }
}

/// `floor(value * scale)` for a nonnegative rational, saturating at `u128::MAX`.
pub fn floor_scaled(value: &Rational, scale: u128) -> u128 {
    if !value.is_positive() {
        return 0;
    }
    let scaled = value * Rational::from_integer(BigInt::from(scale));
    scaled.floor().to_integer().to_u128().unwrap_or(u128::MAX)
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// serde adapter: rationals as `"p/q"` strings, integers also accepted on input.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(
        value: &Rational,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    pub(crate) struct RationalVisitor;

    impl<'de> Visitor<'de> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a rational as \"p/q\" or an integer")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
            parse(v).map_err(E::custom)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
            Ok(Rational::from_integer(BigInt::from(v)))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
            Ok(Rational::from_integer(BigInt::from(v)))
        }
    }
}

/// serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(
        values: &[Rational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let values: Vec<RationalValue> = serde::Deserialize::deserialize(d)?;
        Ok(values.into_iter().map(|v| v.0).collect())
    }
}

/// serde adapter for `Vec<Vec<Rational>>`.
pub mod serde_rational_matrix {
    use super::*;
    use serde::de::SeqAccess;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(
        rows: &[Vec<Rational>],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            let strings: Vec<String> = row.iter().map(format).collect();
            seq.serialize_element(&strings)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        struct Row(Vec<Rational>);
        impl<'de> serde::Deserialize<'de> for Row {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                struct RowVisitor;
                impl<'de> Visitor<'de> for RowVisitor {
                    type Value = Row;
                    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                        f.write_str("a list of rationals")
                    }
                    fn visit_seq<A: SeqAccess<'de>>(
                        self,
                        mut seq: A,
                    ) -> std::result::Result<Row, A::Error> {
                        let mut out = Vec::new();
                        while let Some(v) = seq.next_element::<RationalValue>()? {
                            out.push(v.0);
                        }
                        Ok(Row(out))
                    }
                }
                d.deserialize_seq(RowVisitor)
            }
        }
        let rows: Vec<Row> = serde::Deserialize::deserialize(d)?;
        Ok(rows.into_iter().map(|r| r.0).collect())
    }
}

/// A rational newtype that deserializes from either form.
pub(crate) struct RationalValue(pub Rational);

impl<'de> serde::Deserialize<'de> for RationalValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(serde_rational::RationalVisitor)
            .map(RationalValue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("1/4").unwrap(), ratio(1, 4));
        assert_eq!(parse("2/8").unwrap(), ratio(1, 4));
        assert_eq!(parse("3").unwrap(), ratio(3, 1));
        assert!(parse("1/0").is_err());
        assert!(parse("0.5").is_err());
    }

    #[test]
    fn format_is_always_fraction() {
        assert_eq!(format(&ratio(1, 1)), "1/1");
        assert_eq!(format(&ratio(0, 5)), "0/1");
        assert_eq!(format(&ratio(6, 4)), "3/2");
    }

    #[test]
    fn floor_scaled_exact() {
        assert_eq!(floor_scaled(&ratio(1, 4), 16), 4);
        assert_eq!(floor_scaled(&ratio(1, 3), 16), 5);
        assert_eq!(floor_scaled(&ratio(-1, 3), 16), 0);
    }
}
