//! Bit-packed truth tables.
//!
//! Input `x = (x1, .., xn)` lives at index `idx(x) = sum x_i * 2^(i-1)`, so
//! `x1` is the least significant bit of the index. Bit `idx` of the table is
//! bit `idx % 64` of word `idx / 64`. Bits past `2^n` are always zero.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_ARITY: usize = 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BooleanError {
    #[error("arity {0} outside 1..={MAX_ARITY}")]
    ArityOutOfRange(usize),
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, BooleanError>;

fn check_arity(n: usize) -> Result<()> {
    if (1..=MAX_ARITY).contains(&n) {
        Ok(())
    } else {
        Err(BooleanError::ArityOutOfRange(n))
    }
}

fn words_for(n: usize) -> usize {
    ((1usize << n) + 63) / 64
}

fn tail_mask(n: usize) -> u64 {
    let bits = 1usize << n;
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Fraction of inputs on which two tables agree, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Agreement(pub Ratio<i64>);

impl Agreement {
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn advantage(self) -> Advantage {
        Advantage(self.0 - Ratio::new(1, 2))
    }
}

/// Agreement minus one half, in `[-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Advantage(pub Ratio<i64>);

impl Advantage {
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn zero(n: usize) -> Result<Self> {
        check_arity(n)?;
        Ok(TruthTable {
            n,
            words: vec![0; words_for(n)],
        })
    }

    pub fn constant(n: usize, value: bool) -> Result<Self> {
        let t = Self::zero(n)?;
        Ok(if value { t.not() } else { t })
    }

    /// The dictator function `x_var`, with `var` counted from 1.
    pub fn projection(n: usize, var: usize) -> Result<Self> {
        if var == 0 || var > n {
            return Err(BooleanError::InvalidParameter(format!(
                "variable x{var} out of range for arity {n}"
            )));
        }
        Self::from_fn(n, |x| (x >> (var - 1)) & 1 == 1)
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> bool) -> Result<Self> {
        let mut t = Self::zero(n)?;
        for idx in 0..(1u64 << n) {
            if f(idx) {
                t.words[(idx >> 6) as usize] |= 1 << (idx & 63);
            }
        }
        Ok(t)
    }

    /// Builds a table from raw words; bits past `2^n` must be zero.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self> {
        check_arity(n)?;
        if words.len() != words_for(n) {
            return Err(BooleanError::InvalidParameter(format!(
                "expected {} words for arity {n}, got {}",
                words_for(n),
                words.len()
            )));
        }
        if words[words.len() - 1] & !tail_mask(n) != 0 {
            return Err(BooleanError::InvalidParameter(
                "nonzero bits past the end of the table".into(),
            ));
        }
        Ok(TruthTable { n, words })
    }

    /// Tables with `2^n <= 64` bits, given as the low bits of `value`.
    pub fn from_u64(n: usize, value: u64) -> Result<Self> {
        if n > 6 {
            return Err(BooleanError::InvalidParameter(format!(
                "arity {n} does not fit in one word"
            )));
        }
        Self::from_words(n, vec![value])
    }

    /// Parses a string of '0'/'1' listing bits in index order.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let len = s.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(BooleanError::Parse(format!(
                "bit string length {len} is not 2^n with n >= 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BooleanError::Parse(format!("unexpected char {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::from_fn(n, |x| bits[x as usize])
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len())
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of entries, `2^n`.
    pub fn len(&self) -> u64 {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    /// The whole table as one word; only for `n <= 6`.
    pub fn as_u64(&self) -> Option<u64> {
        (self.n <= 6).then(|| self.words[0])
    }

    #[inline]
    pub fn get(&self, idx: u64) -> bool {
        debug_assert!(idx < self.len());
        (self.words[(idx >> 6) as usize] >> (idx & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, idx: u64, value: bool) {
        debug_assert!(idx < self.len());
        let w = &mut self.words[(idx >> 6) as usize];
        if value {
            *w |= 1 << (idx & 63);
        } else {
            *w &= !(1 << (idx & 63));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).filter(move |&i| self.get(i))
    }

    pub fn is_constant(&self) -> bool {
        let c = self.count_ones();
        c == 0 || c == self.len()
    }

    pub fn not(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let last = words.len() - 1;
        words[last] &= tail_mask(self.n);
        TruthTable { n: self.n, words }
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.same_arity(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| op(*a, *b))
            .collect();
        Ok(TruthTable { n: self.n, words })
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a ^ b)
    }

    fn same_arity(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(BooleanError::ArityMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    /// Number of inputs where the two tables agree.
    pub fn matches(&self, other: &Self) -> Result<u64> {
        self.same_arity(other)?;
        let differ: u64 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum();
        Ok(self.len() - differ)
    }

    pub fn agreement(&self, other: &Self) -> Result<Agreement> {
        let m = self.matches(other)?;
        Ok(Agreement(Ratio::new(m as i64, self.len() as i64)))
    }

    /// Fraction of inputs where the tables differ, as a float.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(1.0 - self.agreement(other)?.to_f64())
    }

    /// XOR of `t` independent copies on `t * n` inputs. Block `j` (from 0)
    /// occupies index bits `j*n .. (j+1)*n`.
    pub fn xor_amplify(&self, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(BooleanError::InvalidParameter("t must be >= 1".into()));
        }
        check_arity(t * self.n)?;
        let mut acc = self.clone();
        for _ in 1..t {
            acc = stack_blocks(&acc, self.n, |hi| self.get(hi))?;
        }
        Ok(acc)
    }

    /// `f'(x, y) = f(x)` where `x` is the low block and `y` has `p` bits.
    pub fn pad(&self, p: usize) -> Result<Self> {
        check_arity(self.n + p)?;
        stack_blocks(self, p, |_| false)
    }

    /// Fixes the top `k` variables to zero: the first `2^(n-k)` entries.
    pub fn restrict_prefix_zero(&self, k: usize) -> Result<Self> {
        if k == 0 || k >= self.n {
            return Err(BooleanError::InvalidParameter(format!(
                "need 1 <= k < n, got k={k}, n={}",
                self.n
            )));
        }
        self.low_block(self.n - k)
    }

    /// The first `2^m` entries as a table of arity `m`.
    pub fn low_block(&self, m: usize) -> Result<Self> {
        check_arity(m)?;
        if m > self.n {
            return Err(BooleanError::InvalidParameter(format!(
                "block arity {m} exceeds {}",
                self.n
            )));
        }
        self.segment(m, 0)
    }

    /// Entries `[i*2^m, (i+1)*2^m)` as a table of arity `m`.
    pub fn segment(&self, m: usize, i: u64) -> Result<Self> {
        check_arity(m)?;
        let start = i << m;
        if start + (1 << m) > self.len() {
            return Err(BooleanError::InvalidParameter("segment out of range".into()));
        }
        if m >= 6 {
            let w0 = (start >> 6) as usize;
            let words = self.words[w0..w0 + words_for(m)].to_vec();
            Ok(TruthTable { n: m, words })
        } else {
            let word = self.words[(start >> 6) as usize] >> (start & 63);
            Ok(TruthTable {
                n: m,
                words: vec![word & tail_mask(m)],
            })
        }
    }

    pub fn sample(n: usize, rng: &mut impl RngCore) -> Result<Self> {
        let mut t = Self::zero(n)?;
        for w in t.words.iter_mut() {
            *w = rng.next_u64();
        }
        let last = t.words.len() - 1;
        t.words[last] &= tail_mask(n);
        Ok(t)
    }

    /// Canonical two-line text form: `n=<arity>` then fixed-width hex.
    pub fn to_text(&self) -> String {
        format!("n={}\n{}", self.n, self.to_hex())
    }

    /// Hex digits, most significant first; bit 0 is the low bit of the last digit.
    pub fn to_hex(&self) -> String {
        let digits = ((1usize << self.n) + 3) / 4;
        (0..digits)
            .rev()
            .map(|d| {
                let bit = (d * 4) as u64;
                let nib = (self.words[(bit >> 6) as usize] >> (bit & 63)) & 0xf;
                char::from_digit(nib as u32, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        check_arity(n)?;
        let digits = ((1usize << n) + 3) / 4;
        let hex = hex.trim();
        if hex.len() != digits {
            return Err(BooleanError::Parse(format!(
                "expected {digits} hex digits for n={n}, got {}",
                hex.len()
            )));
        }
        let mut t = Self::zero(n)?;
        for (pos, c) in hex.chars().enumerate() {
            let nib = c
                .to_digit(16)
                .ok_or_else(|| BooleanError::Parse(format!("bad hex digit {c:?}")))?
                as u64;
            let bit = ((digits - 1 - pos) * 4) as u64;
            t.words[(bit >> 6) as usize] |= nib << (bit & 63);
        }
        if t.words[t.words.len() - 1] & !tail_mask(n) != 0 {
            return Err(BooleanError::Parse("bits set past the end of the table".into()));
        }
        Ok(t)
    }
}

/// Table of arity `base.n + m` whose block for high part `hi` is `base`,
/// complemented when `flip(hi)`.
fn stack_blocks(base: &TruthTable, m: usize, flip: impl Fn(u64) -> bool) -> Result<TruthTable> {
    let a = base.n;
    let n = a + m;
    let mut out = TruthTable::zero(n)?;
    let inverted = base.not();
    if a >= 6 {
        let seg = base.words.len();
        for hi in 0..(1u64 << m) {
            let src = if flip(hi) { &inverted } else { base };
            let at = hi as usize * seg;
            out.words[at..at + seg].copy_from_slice(&src.words);
        }
    } else {
        let width = 1u64 << a;
        for hi in 0..(1u64 << m) {
            let src = if flip(hi) { &inverted } else { base };
            let start = hi * width;
            out.words[(start >> 6) as usize] |= src.words[0] << (start & 63);
        }
    }
    Ok(out)
}

impl PartialOrd for TruthTable {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by arity, then by the table read as a binary number
/// (the order of the hex text form).
impl Ord for TruthTable {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n <= 5 {
            write!(f, "TruthTable({})", self.to_bit_string())
        } else {
            write!(f, "TruthTable(n={}, 0x{})", self.n, self.to_hex())
        }
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for TruthTable {
    type Err = BooleanError;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let head = lines
            .next()
            .ok_or_else(|| BooleanError::Parse("empty input".into()))?;
        let n: usize = head
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| BooleanError::Parse(format!("bad header {head:?}")))?;
        let hex = lines
            .next()
            .ok_or_else(|| BooleanError::Parse("missing hex line".into()))?;
        if lines.next().is_some() {
            return Err(BooleanError::Parse("trailing lines".into()));
        }
        Self::from_hex(n, hex)
    }
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    n: usize,
    hex: String,
}

impl Serialize for TruthTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            n: self.n,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruthTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TableRepr::deserialize(d)?;
        TruthTable::from_hex(r.n, &r.hex).map_err(serde::de::Error::custom)
    }
}
