//! Fixed-length binary words.
//!
//! Character `i` of the textual form is bit `i`, which is vertex `i` of the
//! instance graph. `"100"` therefore has only vertex 0 set.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitstring {
    bits: FixedBitSet,
}

impl Bitstring {
    pub fn zeros(len: usize) -> Self {
        Bitstring {
            bits: FixedBitSet::with_capacity(len),
        }
    }

    pub fn all_ones(len: usize) -> Self {
        let mut b = Self::zeros(len);
        b.bits.insert_range(..);
        b
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut b = Self::zeros(len);
        for i in ones {
            if i >= len {
                return Err(Error::InvalidBitstring(format!(
                    "index {i} out of range for length {len}"
                )));
            }
            b.bits.insert(i);
        }
        Ok(b)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.bits.set(i, v);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.len() == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits.set(i, value);
    }

    pub fn flip(&mut self, i: usize) {
        self.bits.toggle(i);
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn xor(&self, other: &Bitstring) -> Result<Bitstring> {
        self.check_len(other)?;
        let mut out = self.clone();
        out.bits.symmetric_difference_with(&other.bits);
        Ok(out)
    }

    pub fn check_len(&self, other: &Bitstring) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn as_bitset(&self) -> &FixedBitSet {
        &self.bits
    }

    pub(crate) fn from_bitset(bits: FixedBitSet) -> Self {
        Bitstring { bits }
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len())
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    /// Parses `0`/`1` characters; ASCII spaces and underscores are ignored so
    /// that grouped forms like `101 001 101` are accepted.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (pos, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                ' ' | '_' => {}
                other => {
                    return Err(Error::InvalidBitstring(format!(
                        "unexpected character {other:?} at position {pos}"
                    )))
                }
            }
        }
        Ok(Bitstring::from_bools(&bits))
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
