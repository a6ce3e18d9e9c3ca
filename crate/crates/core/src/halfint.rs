use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Serialize, Serializer};

/// Exact half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: Self = Self { twice: 0 };

    pub const fn from_twice(twice: i64) -> Self {
        Self { twice }
    }

    pub const fn from_int(k: i64) -> Self {
        Self { twice: 2 * k }
    }

    pub const fn twice(self) -> i64 {
        self.twice
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// The integer value, if there is one.
    pub fn as_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.twice / 2)
    }
}

impl Add for HalfInt {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = Self;
    fn neg(self) -> Self {
        Self { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_integer() {
            Some(k) => write!(f, "{k}"),
            None => write!(f, "{}/2", self.twice),
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_display() {
        let half = HalfInt::from_twice(1);
        assert_eq!((half + half).as_integer(), Some(1));
        assert_eq!(half.to_string(), "1/2");
        assert_eq!((-HalfInt::from_twice(3)).to_string(), "-3/2");
        assert_eq!(HalfInt::from_int(2) - half, HalfInt::from_twice(3));
        assert_eq!(HalfInt::from_int(-4).to_string(), "-4");
    }
}
