//! Balanced identifiers and the bit-slice sub-queries built from them.
//!
//! For a universe of size `n = 2^b`, element `v` is named by the `2b`-bit
//! word `binary(v - 1) ‖ !binary(v - 1)`: the high half holds `v - 1`, the
//! low half its bitwise complement. Every identifier therefore has exactly
//! `b` ones. Bit positions are numbered from 1 at the least significant bit.

use crate::error::{Error, Result};
use crate::model::{check_element, check_power_of_two, Element, QuerySet};

/// A fixed-weight identifier of `2 * log2(n)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BalancedId {
    bits: u64,
    half: u32,
}

impl BalancedId {
    /// The raw word; bit 0 of the integer is position 1.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Identifier length in bits, `2 * log2(n)`.
    pub fn width(&self) -> usize {
        2 * self.half as usize
    }

    /// Bit at `position` (1 = least significant).
    pub fn bit(&self, position: usize) -> bool {
        debug_assert!((1..=self.width()).contains(&position));
        (self.bits >> (position - 1)) & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.bits.count_ones()
    }

    /// The element this identifier names.
    pub fn element(&self) -> Element {
        (self.bits >> self.half) as usize + 1
    }
}

impl std::fmt::Display for BalancedId {
    /// Most significant bit first, e.g. `000111`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.width())
    }
}

fn half_width(n: usize) -> Result<u32> {
    check_power_of_two(n)?;
    if n < 2 {
        return Err(Error::InvalidParams(
            "balanced identifiers need n >= 2".into(),
        ));
    }
    Ok(n.trailing_zeros())
}

pub fn encode_balanced(v: Element, n: usize) -> Result<BalancedId> {
    let half = half_width(n)?;
    check_element(v, n)?;
    let hi = (v - 1) as u64;
    let mask = (1u64 << half) - 1;
    let lo = !hi & mask;
    Ok(BalancedId {
        bits: (hi << half) | lo,
        half,
    })
}

/// Decodes a difference vector given most significant position first
/// (`bitvals[0]` is position `2b`, the last entry is position 1).
///
/// Returns `None` unless every entry is 0 or 1, exactly `b` entries are 1
/// and the low half is the complement of the high half.
pub fn decode_balanced(bitvals: &[i64], n: usize) -> Option<Element> {
    let half = half_width(n).ok()? as usize;
    if bitvals.len() != 2 * half {
        return None;
    }
    let mut word = 0u64;
    for &b in bitvals {
        if b != 0 && b != 1 {
            return None;
        }
        word = (word << 1) | b as u64;
    }
    if word.count_ones() as usize != half {
        return None;
    }
    let mask = (1u64 << half) - 1;
    let hi = word >> half;
    if word & mask != !hi & mask {
        return None;
    }
    Some(hi as usize + 1)
}

/// `R_i(S)`: the members of `s` whose identifier has a one at `position`.
pub fn slice_query(s: &QuerySet, position: usize, n: usize) -> Result<QuerySet> {
    let half = half_width(n)? as usize;
    if position == 0 || position > 2 * half {
        return Err(Error::InvalidParams(format!(
            "bit position {position} outside 1..={}",
            2 * half
        )));
    }
    let mut out = Vec::new();
    for v in s.iter() {
        if encode_balanced(v, n)?.bit(position) {
            out.push(v);
        }
    }
    Ok(QuerySet::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_msb_first(id: BalancedId) -> Vec<i64> {
        (1..=id.width()).rev().map(|p| id.bit(p) as i64).collect()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_balanced(1, 8).unwrap().to_string(), "000111");
        assert_eq!(encode_balanced(4, 8).unwrap().to_string(), "011100");
        assert_eq!(encode_balanced(4, 8).unwrap().element(), 4);
        assert!(encode_balanced(0, 8).is_err());
        assert!(encode_balanced(9, 8).is_err());
        assert!(encode_balanced(1, 12).is_err());
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_balanced(&[0, 0, 0, 1, 1, 1], 8), Some(1));
        assert_eq!(decode_balanced(&[0, 1, 1, 1, 1, 1], 8), None);
        assert_eq!(decode_balanced(&[0, 0, 0, 1, 1], 8), None);
        // right weight, halves not complementary
        assert_eq!(decode_balanced(&[1, 1, 0, 1, 0, 0], 8), None);
        let a = bits_msb_first(encode_balanced(2, 8).unwrap());
        let b = bits_msb_first(encode_balanced(7, 8).unwrap());
        let sum: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert_eq!(decode_balanced(&sum, 8), None);
    }

    #[test]
    fn slice_examples() {
        let s = QuerySet::singleton(1);
        for i in 1..=6 {
            let expect = if i <= 3 { s.clone() } else { QuerySet::empty() };
            assert_eq!(slice_query(&s, i, 8).unwrap(), expect);
        }
        for i in 1..=6 {
            assert!(slice_query(&QuerySet::empty(), i, 8).unwrap().is_empty());
        }
        assert!(slice_query(&s, 0, 8).is_err());
        assert!(slice_query(&s, 7, 8).is_err());

        let all = QuerySet::new(1..=16);
        for v in 1..=16 {
            let hits = (1..=8)
                .filter(|&i| slice_query(&all, i, 16).unwrap().contains(v))
                .count();
            assert_eq!(hits, 4);
        }
    }

    #[test]
    fn roundtrip_and_weight_small() {
        for v in 1..=8 {
            let id = encode_balanced(v, 8).unwrap();
            assert_eq!(id.popcount(), 3);
            assert_eq!(decode_balanced(&bits_msb_first(id), 8), Some(v));
        }
    }
}
