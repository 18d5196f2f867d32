//! Strings over {0, 1, *}: the match and action vocabulary.
//!
//! A tri-state string fixes some bit positions and wildcards the rest. Used
//! in two roles: as a *match*, it tests whether a header agrees with the
//! fixed positions; as an *action*, it overwrites exactly the fixed
//! positions and leaves the wildcarded ones alone.
//!
//! Representation: a pair of bit strings of equal width — `fixed` marks the
//! non-wildcard positions, `values` holds the fixed bits embedded in zeros.
//! `values` is always contained in `fixed`, so the embedding (wildcards read
//! as zero) and the projection are both O(1) clones.

use std::fmt;
use std::str::FromStr;

use super::bits::BitString;
use super::ModelError;

/// A tri-state string over {0, 1, *}.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TriStateString {
    fixed: BitString,
    values: BitString,
}

impl TriStateString {
    /// The all-wildcard string: matches everything, rewrites nothing.
    pub fn wildcard(len: usize) -> Self {
        TriStateString {
            fixed: BitString::zeros(len),
            values: BitString::zeros(len),
        }
    }

    /// Parses a string of `0`, `1` and `*` characters.
    pub fn from_text(s: &str) -> Result<Self, ModelError> {
        let mut out = TriStateString::wildcard(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '*' => {}
                '0' => out.set_fixed(i, false),
                '1' => out.set_fixed(i, true),
                other => {
                    return Err(ModelError::BadSymbol {
                        position: i,
                        found: other,
                    })
                }
            }
        }
        Ok(out)
    }

    /// Builds from a projection and an embedded value. `values` must be
    /// contained in `fixed` (no value bit outside the projection).
    pub fn from_parts(fixed: BitString, values: BitString) -> Result<Self, ModelError> {
        if fixed.len() != values.len() {
            return Err(ModelError::LengthMismatch {
                expected: fixed.len(),
                got: values.len(),
            });
        }
        if !values.and(&fixed).eq(&values) {
            return Err(ModelError::ValueOutsideProjection);
        }
        Ok(TriStateString { fixed, values })
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    /// The projection: a bit string with 1 exactly at the non-wildcard
    /// positions.
    pub fn projection(&self) -> BitString {
        self.fixed.clone()
    }

    /// The string with every wildcard read as zero.
    pub fn embed_zeros(&self) -> BitString {
        self.values.clone()
    }

    /// Number of fixed positions.
    pub fn weight(&self) -> u32 {
        self.fixed.weight()
    }

    /// True when every position is a wildcard. As an action this is the
    /// identity; as a match it accepts every header.
    pub fn is_identity(&self) -> bool {
        self.fixed.is_zero()
    }

    /// The symbol at position `i`: `None` for `*`, otherwise the fixed bit.
    pub fn symbol(&self, i: usize) -> Option<bool> {
        if self.fixed.bit(i) {
            Some(self.values.bit(i))
        } else {
            None
        }
    }

    pub fn set_fixed(&mut self, i: usize, v: bool) {
        self.fixed.set_bit(i, true);
        self.values.set_bit(i, v);
    }

    pub fn set_wildcard(&mut self, i: usize) {
        self.fixed.set_bit(i, false);
        self.values.set_bit(i, false);
    }
}

impl fmt::Display for TriStateString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(match self.symbol(i) {
                None => "*",
                Some(false) => "0",
                Some(true) => "1",
            })?;
        }
        Ok(())
    }
}

impl fmt::Debug for TriStateString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TriStateString(\"{self}\")")
    }
}

impl FromStr for TriStateString {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TriStateString::from_text(s)
    }
}

/// Zeroes `x` outside the projection: the masking step both sides of the
/// protocol apply before comparing or hashing.
pub fn mask(projection: &BitString, x: &BitString) -> Result<BitString, ModelError> {
    if projection.len() != x.len() {
        return Err(ModelError::LengthMismatch {
            expected: projection.len(),
            got: x.len(),
        });
    }
    Ok(x.and(projection))
}

/// Substring match: true iff `x` agrees with `m` at every fixed position.
/// Only the first `m.len()` bits of `x` participate; `x` shorter than the
/// match is a caller contract violation (zero-prefix first).
pub fn tri_match(x: &BitString, m: &TriStateString) -> Result<bool, ModelError> {
    if x.len() < m.len() {
        return Err(ModelError::InputTooShort {
            need: m.len(),
            got: x.len(),
        });
    }
    let head = if x.len() == m.len() {
        x.clone()
    } else {
        x.prefix(m.len())
    };
    Ok(head.and(&m.fixed) == m.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitString {
        BitString::from_text(s).unwrap()
    }

    fn tri(s: &str) -> TriStateString {
        TriStateString::from_text(s).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(tri("10**01").projection(), bits("110011"));
        assert_eq!(tri("****").projection(), bits("0000"));
        assert_eq!(tri("0110").projection(), bits("1111"));
    }

    #[test]
    fn embed_reads_wildcards_as_zero() {
        assert_eq!(tri("10**01").embed_zeros(), bits("100001"));
        assert_eq!(tri("1*1*").embed_zeros(), bits("1010"));
        assert_eq!(tri("****").embed_zeros(), bits("0000"));
    }

    #[test]
    fn mask_examples() {
        assert_eq!(mask(&bits("110011"), &bits("101101")).unwrap(), bits("100001"));
        assert_eq!(mask(&bits("0000"), &bits("1111")).unwrap(), bits("0000"));
        assert_eq!(mask(&bits("1111"), &bits("0110")).unwrap(), bits("0110"));
        let err = mask(&bits("11"), &bits("111")).unwrap_err();
        assert!(matches!(err, ModelError::LengthMismatch { expected: 2, got: 3 }));
    }

    #[test]
    fn tri_match_examples() {
        // Trailing bits beyond the match width never participate.
        assert!(tri_match(&bits("10110100111"), &tri("10**01")).unwrap());
        assert!(!tri_match(&bits("00110100111"), &tri("10**01")).unwrap());
        assert!(tri_match(&bits("0110"), &tri("****")).unwrap());
        let err = tri_match(&bits("011"), &tri("01101")).unwrap_err();
        assert!(matches!(err, ModelError::InputTooShort { need: 5, got: 3 }));
    }

    #[test]
    fn from_parts_rejects_value_outside_projection() {
        assert!(TriStateString::from_parts(bits("1100"), bits("0100")).is_ok());
        let err = TriStateString::from_parts(bits("1100"), bits("0110")).unwrap_err();
        assert!(matches!(err, ModelError::ValueOutsideProjection));
    }

    #[test]
    fn text_roundtrip() {
        for s in ["", "*", "10**01", "0000", "****", "1*0*1"] {
            assert_eq!(tri(s).to_string(), s);
        }
    }

    fn tri_strategy(len: usize) -> impl Strategy<Value = TriStateString> {
        proptest::string::string_regex(&format!("[01*]{{{len}}}"))
            .unwrap()
            .prop_map(|s| TriStateString::from_text(&s).unwrap())
    }

    proptest! {
        // Weight of the projection equals the number of non-wildcard symbols.
        #[test]
        fn projection_weight_counts_fixed(s in "[01*]{0,64}") {
            let m = TriStateString::from_text(&s).unwrap();
            let fixed = s.chars().filter(|c| *c != '*').count() as u32;
            prop_assert_eq!(m.projection().weight(), fixed);
        }

        // Matching is exactly equality after masking both sides.
        #[test]
        fn match_is_masked_equality(m in tri_strategy(16), x in "[01]{16}") {
            let x = BitString::from_text(&x).unwrap();
            let lhs = tri_match(&x, &m).unwrap();
            let rhs = mask(&m.projection(), &x).unwrap() == m.embed_zeros();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn roundtrip(s in "[01*]{0,64}") {
            let m = TriStateString::from_text(&s).unwrap();
            prop_assert_eq!(m.to_string(), s);
        }
    }
}
