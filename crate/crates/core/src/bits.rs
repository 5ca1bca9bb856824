//! Packed bitstrings over `{0,1}^n` with 1-based indices.

use std::fmt;
use std::ops::{BitOr, BitXor};

use crate::error::CoreError;

/// An `n`-bit string stored as `⌈n/64⌉` little-endian words.
///
/// Index `i` (1-based) lives in bit `(i-1) % 64` of word `(i-1) / 64`.
/// Bits beyond the width are always zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    width: usize,
    words: Vec<u64>,
}

fn word_count(width: usize) -> usize {
    width.div_ceil(64)
}

impl BitString {
    /// The all-zero string `0^n`.
    pub fn zeros(width: usize) -> Self {
        BitString {
            width,
            words: vec![0; word_count(width)],
        }
    }

    /// The all-one string `1^n`.
    pub fn ones(width: usize) -> Self {
        let mut x = BitString {
            width,
            words: vec![u64::MAX; word_count(width)],
        };
        x.clear_tail();
        x
    }

    /// The unit vector `e_i`.
    pub fn unit(i: usize, width: usize) -> Result<Self, CoreError> {
        let mut x = Self::zeros(width);
        x.try_set(i, true)?;
        Ok(x)
    }

    /// Wraps packed words; extra words must be zero and bits past the width are cleared.
    pub fn from_words(width: usize, mut words: Vec<u64>) -> Self {
        words.resize(word_count(width), 0);
        let mut x = BitString { width, words };
        x.clear_tail();
        x
    }

    /// String with exactly the given (1-based) indices set.
    pub fn from_indices(width: usize, indices: &[usize]) -> Result<Self, CoreError> {
        let mut x = Self::zeros(width);
        for &i in indices {
            x.try_set(i, true)?;
        }
        Ok(x)
    }

    /// Parses a string of `0`/`1` characters; the first character is bit 1.
    pub fn from_bit_str(s: &str) -> Result<Self, CoreError> {
        let mut x = Self::zeros(s.len());
        for (k, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => x.set(k + 1, true),
                _ => return Err(CoreError::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(x)
    }

    /// Builds a string of width `n <= 64` from the low bits of `v` (bit 1 = LSB).
    pub fn from_u64(width: usize, v: u64) -> Self {
        assert!(width <= 64, "from_u64 requires width <= 64");
        let mut x = Self::zeros(width);
        if width > 0 {
            x.words[0] = v;
            x.clear_tail();
        }
        x
    }

    /// Low 64 bits as an integer (bit 1 = LSB); exact when width <= 64.
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let r = self.width % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    fn check_index(&self, i: usize) -> Result<(), CoreError> {
        if i == 0 || i > self.width {
            Err(CoreError::IndexOutOfRange {
                index: i,
                width: self.width,
            })
        } else {
            Ok(())
        }
    }

    /// Bit `i` (1-based). Panics when out of range.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i >= 1 && i <= self.width,
            "index {i} out of range 1..={}",
            self.width
        );
        (self.words[(i - 1) >> 6] >> ((i - 1) & 63)) & 1 == 1
    }

    /// Sets bit `i` (1-based). Panics when out of range.
    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i >= 1 && i <= self.width,
            "index {i} out of range 1..={}",
            self.width
        );
        let mask = 1u64 << ((i - 1) & 63);
        if value {
            self.words[(i - 1) >> 6] |= mask;
        } else {
            self.words[(i - 1) >> 6] &= !mask;
        }
    }

    pub fn try_set(&mut self, i: usize, value: bool) -> Result<(), CoreError> {
        self.check_index(i)?;
        self.set(i, value);
        Ok(())
    }

    /// Flips bit `i` (1-based).
    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Ascending iterator over the 1-based indices of set bits.
    pub fn support(&self) -> Support<'_> {
        Support {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn support_vec(&self) -> Vec<usize> {
        self.support().collect()
    }

    fn check_width(&self, other: &BitString) -> Result<(), CoreError> {
        if self.width != other.width {
            Err(CoreError::WidthMismatch {
                left: self.width,
                right: other.width,
            })
        } else {
            Ok(())
        }
    }

    /// Bitwise OR, failing on width mismatch.
    pub fn try_or(&self, other: &BitString) -> Result<BitString, CoreError> {
        self.check_width(other)?;
        let mut out = self.clone();
        out.or_assign(other);
        Ok(out)
    }

    /// Bitwise XOR, failing on width mismatch.
    pub fn try_xor(&self, other: &BitString) -> Result<BitString, CoreError> {
        self.check_width(other)?;
        let mut out = self.clone();
        out.xor_assign(other);
        Ok(out)
    }

    /// In-place OR. Panics on width mismatch.
    #[inline]
    pub fn or_assign(&mut self, other: &BitString) {
        assert_eq!(self.width, other.width, "width mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    /// In-place XOR. Panics on width mismatch.
    #[inline]
    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.width, other.width, "width mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// In-place AND-NOT (`self ∧ ¬other`).
    #[inline]
    pub fn and_not_assign(&mut self, other: &BitString) {
        assert_eq!(self.width, other.width, "width mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    /// True when the two strings share a set bit.
    pub fn intersects(&self, other: &BitString) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Hex encoding: little-endian bytes, bit 1 is the least significant bit of the first byte.
    pub fn to_hex(&self) -> String {
        let nbytes = self.width.div_ceil(8);
        let mut s = String::with_capacity(2 * nbytes);
        for b in 0..nbytes {
            let byte = (self.words[b / 8] >> (8 * (b % 8))) as u8;
            s.push_str(&format!("{byte:02x}"));
        }
        s
    }

    /// Inverse of [`BitString::to_hex`].
    pub fn from_hex(width: usize, hex: &str) -> Result<Self, CoreError> {
        let nbytes = width.div_ceil(8);
        if hex.len() != 2 * nbytes {
            return Err(CoreError::Parse(format!(
                "hex string of length {} does not encode {width} bits",
                hex.len()
            )));
        }
        let mut x = Self::zeros(width);
        for b in 0..nbytes {
            let byte = u8::from_str_radix(&hex[2 * b..2 * b + 2], 16)
                .map_err(|e| CoreError::Parse(format!("bad hex: {e}")))?;
            x.words[b / 8] |= (byte as u64) << (8 * (b % 8));
        }
        let before = x.clone();
        x.clear_tail();
        if x != before {
            return Err(CoreError::Parse(
                "hex string sets bits beyond the width".into(),
            ));
        }
        Ok(x)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width <= 64 {
            write!(f, "{self}")
        } else {
            write!(
                f,
                "BitString(n={}, supp={:?})",
                self.width,
                self.support_vec()
            )
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.width {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl BitOr for &BitString {
    type Output = BitString;
    fn bitor(self, rhs: &BitString) -> BitString {
        let mut out = self.clone();
        out.or_assign(rhs);
        out
    }
}

impl BitXor for &BitString {
    type Output = BitString;
    fn bitxor(self, rhs: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

/// Iterator over set bits, see [`BitString::support`].
pub struct Support<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Support<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let t = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_index * 64 + t + 1);
            }
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
    }
}

/// `⌈log₂ x⌉` for `x >= 1` (0 for `x <= 1`).
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// The repository-wide logarithm: base 2, clamped below at 1.
pub fn log2c(x: f64) -> f64 {
    x.log2().max(1.0)
}

/// `⌈x⌉` as an integer count, at least 1.
pub fn ceil_count(x: f64) -> u64 {
    (x.ceil() as u64).max(1)
}
