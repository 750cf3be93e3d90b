//! Exact currency arithmetic in integer micro-USD.
//!
//! Budget checks and cost accumulation must not drift, so amounts are stored
//! as `i64` micro-dollars (1 USD = 1_000_000 micros) and only converted to
//! floats for display and ratio computations.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

pub const MICROS_PER_USD: i64 = 1_000_000;

/// A USD amount in exact micro-dollars.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Usd(i64);

impl Usd {
    pub const ZERO: Usd = Usd(0);

    pub fn from_micros(micros: i64) -> Usd {
        Usd(micros)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    /// Converts a float dollar amount, rounding half away from zero to the
    /// nearest micro-dollar. Intended for config and fixture input only.
    pub fn from_dollars(dollars: f64) -> Usd {
        Usd((dollars * MICROS_PER_USD as f64).round() as i64)
    }

    /// Parses a decimal dollar string ("1.50", "0.000039") exactly.
    /// At most six fractional digits are accepted.
    pub fn parse_dollars(text: &str) -> Result<Usd, UsdParseError> {
        let trimmed = text.trim();
        let (negative, body) = match trimmed.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, trimmed),
        };
        if body.is_empty() {
            return Err(UsdParseError::Empty);
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if frac_part.len() > 6 {
            return Err(UsdParseError::TooPrecise(text.to_string()));
        }
        let valid = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !valid(int_part) || (!frac_part.is_empty() && !valid(frac_part)) {
            return Err(UsdParseError::Malformed(text.to_string()));
        }
        let int: i64 = int_part
            .parse()
            .map_err(|_| UsdParseError::Malformed(text.to_string()))?;
        let mut frac: i64 = 0;
        if !frac_part.is_empty() {
            frac = frac_part
                .parse()
                .map_err(|_| UsdParseError::Malformed(text.to_string()))?;
            for _ in frac_part.len()..6 {
                frac *= 10;
            }
        }
        let micros = int * MICROS_PER_USD + frac;
        Ok(Usd(if negative { -micros } else { micros }))
    }

    pub fn as_dollars(self) -> f64 {
        self.0 as f64 / MICROS_PER_USD as f64
    }

    /// Cost of `tokens` at `rate` USD per million tokens, rounded half up.
    pub fn token_cost(tokens: u64, rate_per_mtok: Usd) -> Usd {
        let raw = tokens as i128 * rate_per_mtok.0 as i128;
        Usd(((raw + 500_000) / 1_000_000) as i64)
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Ratio of `self` to `other` as a float; `other` must be positive.
    pub fn ratio(self, other: Usd) -> f64 {
        self.0 as f64 / other.0 as f64
    }
}

impl Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0 + rhs.0)
    }
}

impl AddAssign for Usd {
    fn add_assign(&mut self, rhs: Usd) {
        self.0 += rhs.0;
    }
}

impl Sub for Usd {
    type Output = Usd;
    fn sub(self, rhs: Usd) -> Usd {
        Usd(self.0 - rhs.0)
    }
}

impl Mul<u32> for Usd {
    type Output = Usd;
    fn mul(self, rhs: u32) -> Usd {
        Usd(self.0 * rhs as i64)
    }
}

impl Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        iter.fold(Usd::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(
            f,
            "{sign}${}.{:06}",
            abs / MICROS_PER_USD as u64,
            abs % MICROS_PER_USD as u64
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum UsdParseError {
    #[error("empty amount")]
    Empty,
    #[error("malformed dollar amount: {0}")]
    Malformed(String),
    #[error("more than six fractional digits: {0}")]
    TooPrecise(String),
}
