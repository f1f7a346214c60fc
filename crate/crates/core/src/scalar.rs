//! Scalar types used for injection-rate and burstiness parameters.
//!
//! Loads and packet counts are always integers. Only the `(rho, sigma)`
//! bound and the quantities derived from it need fractional values, and
//! those are computed generically so the same auditor runs on exact
//! rationals or on floats.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};

pub trait Scalar: Num + Copy + PartialOrd + Debug + Display {
    /// Exact embedding of a packet or round count.
    fn from_count(n: u64) -> Self;

    /// Largest integer not exceeding `self`, saturating at zero.
    fn floor_count(self) -> u64;
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn floor_count(self) -> u64 {
        if self <= 0.0 {
            0
        } else {
            self.floor() as u64
        }
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn floor_count(self) -> u64 {
        if self <= 0.0 {
            0
        } else {
            self.floor() as u64
        }
    }
}

impl Scalar for i64 {
    fn from_count(n: u64) -> Self {
        n as i64
    }

    fn floor_count(self) -> u64 {
        self.max(0) as u64
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }

    fn floor_count(self) -> u64 {
        self.floor().to_integer().max(0) as u64
    }
}

impl Scalar for Ratio<i128> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }

    fn floor_count(self) -> u64 {
        self.floor().to_integer().max(0).to_u64().unwrap_or(u64::MAX)
    }
}

/// Parses `p`, `p/q` or a finite decimal such as `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Ratio<i64>> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: `{text}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in `{text}`")));
        }
        return Ok(Ratio::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_part: i64 = match int {
            "" | "-" | "+" => 0,
            _ => int.parse().map_err(|_| bad())?,
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let frac_num: i64 = frac.parse().map_err(|_| bad())?;
        let magnitude = int_part.abs() * den + frac_num;
        let num = if negative { -magnitude } else { magnitude };
        return Ok(Ratio::new(num, den));
    }
    s.parse::<i64>().map(Ratio::from_integer).map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_fractions_and_decimals() {
        assert_eq!(parse_rational("3").unwrap(), Ratio::from_integer(3));
        assert_eq!(parse_rational("3/6").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_rational("0.5").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_rational("1.25").unwrap(), Ratio::new(5, 4));
        assert_eq!(parse_rational(".75").unwrap(), Ratio::new(3, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), Ratio::new(-1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "x", "1/0", "1.", "1.2.3", "a/b", "1.x"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn floor_count_saturates() {
        assert_eq!(Ratio::new(7i64, 2).floor_count(), 3);
        assert_eq!(Ratio::new(-7i64, 2).floor_count(), 0);
        assert_eq!(2.9f64.floor_count(), 2);
        assert_eq!(<f32 as Scalar>::from_count(4), 4.0);
    }
}
