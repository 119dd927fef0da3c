//! Bit-pattern arithmetic on fixed-width integers.
//!
//! Monomial classification is phrased entirely in terms of the binary digits
//! of exponents: bitwise OR/AND, the 2-shadow partial order `x ≤₂ y`, and the
//! parity of binomial coefficients (Lucas's theorem for p = 2). Widths are
//! always explicit so that leading zeros are meaningful.
//!
//! Only the prime 2 is supported; general base-p Lucas is not needed anywhere.

use std::fmt;

use thiserror::Error;

/// Largest supported width. Field exponents never exceed 24 bits.
pub const MAX_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: u32, right: u32 },
    #[error("value {value} does not fit in {width} bits")]
    Overflow { value: u64, width: u32 },
    #[error("width {0} is outside 0..={MAX_WIDTH}")]
    BadWidth(u32),
}

/// A nonnegative integer together with the number of binary digits it is
/// considered to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    value: u32,
    width: u32,
}

impl BitVector {
    pub fn new(value: u64, width: u32) -> Result<Self, BitError> {
        if width > MAX_WIDTH {
            return Err(BitError::BadWidth(width));
        }
        if width < 64 && value >> width != 0 {
            return Err(BitError::Overflow { value, width });
        }
        Ok(BitVector {
            value: value as u32,
            width,
        })
    }

    pub fn zero(width: u32) -> Self {
        BitVector { value: 0, width }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    /// Digit `x_i`.
    pub fn bit(self, i: u32) -> bool {
        i < self.width && (self.value >> i) & 1 == 1
    }

    pub fn popcount(self) -> u32 {
        self.value.count_ones()
    }

    fn check(self, other: BitVector) -> Result<(), BitError> {
        if self.width != other.width {
            Err(BitError::WidthMismatch {
                left: self.width,
                right: other.width,
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width == 0 {
            return write!(f, "0b");
        }
        write!(f, "0b{:0width$b}", self.value, width = self.width as usize)
    }
}

/// Bitwise OR, `x ∨ y`.
pub fn bit_or(x: BitVector, y: BitVector) -> Result<BitVector, BitError> {
    x.check(y)?;
    Ok(BitVector {
        value: x.value | y.value,
        width: x.width,
    })
}

/// Bitwise AND, `x ∧ y`.
pub fn bit_and(x: BitVector, y: BitVector) -> Result<BitVector, BitError> {
    x.check(y)?;
    Ok(BitVector {
        value: x.value & y.value,
        width: x.width,
    })
}

/// `x ≤₂ y`: every digit of `x` is at most the matching digit of `y`.
pub fn in_2_shadow(x: BitVector, y: BitVector) -> Result<bool, BitError> {
    x.check(y)?;
    Ok(is_shadow(x.value, y.value))
}

/// `C(x, y) mod 2`, which by Lucas is 1 exactly when `y ≤₂ x`.
pub fn binom_mod2(x: BitVector, y: BitVector) -> Result<u8, BitError> {
    in_2_shadow(y, x).map(u8::from)
}

/// All `i ≤₂ y`, in increasing order. Yields `2^popcount(y)` values.
pub fn enumerate_2_shadow(y: BitVector) -> impl Iterator<Item = BitVector> {
    let width = y.width;
    ShadowIter::new(y.value).map(move |value| BitVector { value, width })
}

/// Raw-integer form of [`in_2_shadow`], used on hot paths.
#[inline]
pub fn is_shadow(x: u32, y: u32) -> bool {
    x & !y == 0
}

/// Increasing enumeration of the submasks of a `u32`.
#[derive(Debug, Clone)]
pub struct ShadowIter {
    mask: u32,
    next: Option<u32>,
}

impl ShadowIter {
    pub fn new(mask: u32) -> Self {
        ShadowIter {
            mask,
            next: Some(0),
        }
    }
}

impl Iterator for ShadowIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let current = self.next?;
        self.next = if current == self.mask {
            None
        } else {
            // Adding one with every non-mask bit forced high carries straight
            // into the next mask bit.
            Some((current | !self.mask).wrapping_add(1) & self.mask)
        };
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(v: u64) -> BitVector {
        BitVector::new(v, 4).unwrap()
    }

    #[test]
    fn or_examples() {
        assert_eq!(bit_or(bv(0b1110), bv(0b0001)).unwrap(), bv(0b1111));
        assert_eq!(bit_or(bv(0b1010), bv(0)).unwrap(), bv(0b1010));
        assert_eq!(bit_or(bv(0b0101), bv(0b0110)).unwrap(), bv(0b0111));
    }

    #[test]
    fn and_examples() {
        assert_eq!(bit_and(bv(0b1111), bv(0b0101)).unwrap(), bv(0b0101));
        assert_eq!(bit_and(bv(0b1011), bv(0)).unwrap(), bv(0));
        assert_eq!(bit_and(bv(0b0101), bv(0b0110)).unwrap(), bv(0b0100));
    }

    #[test]
    fn shadow_examples() {
        assert!(in_2_shadow(bv(0b0101), bv(0b1101)).unwrap());
        assert!(!in_2_shadow(bv(0b0010), bv(0b1101)).unwrap());
        for y in 0..16 {
            assert!(in_2_shadow(bv(0), bv(y)).unwrap());
        }
    }

    #[test]
    fn binom_examples() {
        // C(6,2) = 15, C(6,1) = 6
        assert_eq!(binom_mod2(bv(6), bv(2)).unwrap(), 1);
        assert_eq!(binom_mod2(bv(6), bv(1)).unwrap(), 0);
        for x in 0..16 {
            assert_eq!(binom_mod2(bv(x), bv(0)).unwrap(), 1);
        }
    }

    #[test]
    fn enumerate_examples() {
        let vals = |y| enumerate_2_shadow(bv(y)).map(|b| b.value()).collect::<Vec<_>>();
        assert_eq!(vals(0b0101), vec![0, 1, 4, 5]);
        assert_eq!(vals(0), vec![0]);
        assert_eq!(vals(0b11), vec![0, 1, 2, 3]);
    }

    #[test]
    fn full_width_mask_enumerates_everything_once() {
        let all: Vec<u32> = ShadowIter::new(0xff).collect();
        assert_eq!(all, (0..256).collect::<Vec<_>>());
        assert_eq!(ShadowIter::new(u32::MAX).take(5).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn width_errors() {
        let a = BitVector::new(3, 4).unwrap();
        let b = BitVector::new(3, 5).unwrap();
        assert!(matches!(bit_or(a, b), Err(BitError::WidthMismatch { .. })));
        assert!(matches!(bit_and(a, b), Err(BitError::WidthMismatch { .. })));
        assert!(in_2_shadow(a, b).is_err());
        assert!(binom_mod2(a, b).is_err());
        assert!(matches!(BitVector::new(16, 4), Err(BitError::Overflow { .. })));
        assert!(matches!(BitVector::new(0, 33), Err(BitError::BadWidth(33))));
    }

    #[test]
    fn display_keeps_leading_zeros() {
        assert_eq!(BitVector::new(5, 6).unwrap().to_string(), "0b000101");
    }

    proptest! {
        #[test]
        fn or_plus_and_is_sum(x in 0u64..4096, y in 0u64..4096) {
            let (x, y) = (BitVector::new(x, 12).unwrap(), BitVector::new(y, 12).unwrap());
            let or = bit_or(x, y).unwrap().value() as u64;
            let and = bit_and(x, y).unwrap().value() as u64;
            prop_assert_eq!(or + and, x.value() as u64 + y.value() as u64);
        }

        #[test]
        fn shadow_equivalences(x in 0u64..4096, y in 0u64..4096) {
            let (x, y) = (BitVector::new(x, 12).unwrap(), BitVector::new(y, 12).unwrap());
            let s = in_2_shadow(x, y).unwrap();
            prop_assert_eq!(s, bit_and(x, y).unwrap() == x);
            prop_assert_eq!(s, bit_or(x, y).unwrap() == y);
        }

        #[test]
        fn enumeration_is_exact(y in 0u64..(1 << 14)) {
            let y = BitVector::new(y, 14).unwrap();
            let items: Vec<_> = enumerate_2_shadow(y).collect();
            prop_assert_eq!(items.len(), 1usize << y.popcount());
            prop_assert!(items.windows(2).all(|w| w[0].value() < w[1].value()));
            for i in items {
                prop_assert!(in_2_shadow(i, y).unwrap());
            }
        }
    }

    /// Exact big-integer binomials, one Pascal row at a time.
    #[test]
    fn lucas_matches_exact_binomials_up_to_4096() {
        use num_bigint::BigUint;

        const TOP: usize = 1 << 12;
        let mut row: Vec<BigUint> = vec![BigUint::from(1u32)];
        for x in 0..=TOP {
            for (y, c) in row.iter().enumerate() {
                let parity = u8::from(c.bit(0));
                let xv = BitVector::new(x as u64, 13).unwrap();
                let yv = BitVector::new(y as u64, 13).unwrap();
                assert_eq!(binom_mod2(xv, yv).unwrap(), parity, "C({x},{y})");
            }
            let mut next = Vec::with_capacity(row.len() + 1);
            next.push(BigUint::from(1u32));
            for w in row.windows(2) {
                next.push(&w[0] + &w[1]);
            }
            next.push(BigUint::from(1u32));
            row = next;
        }
    }
}
