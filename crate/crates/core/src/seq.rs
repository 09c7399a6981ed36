//! Finite words, points of Cantor space and their bounded-value cousins.
//!
//! A [`Point`] is a total oracle `index -> natural`. Search domains are
//! always eventually-zero points built with [`Point::pad`]; programmatic
//! points ([`Point::from_fn`], [`Point::interleave`]) only show up as
//! evaluation inputs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::budget::Budget;
use crate::error::{Error, Result};

/// A finite bit string.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinWord(Vec<u8>);

impl BinWord {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Builds a word from bits. Any nonzero entry is rejected.
    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Result<Self> {
        let bits: Vec<u8> = bits.into_iter().collect();
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("{b} is not a bit")));
        }
        Ok(Self(bits))
    }

    /// The `len`-bit word whose lexicographic rank is `index`: bit 0 is the
    /// most significant bit of `index`.
    pub fn from_index(index: u64, len: usize) -> Self {
        debug_assert!(len <= 64);
        Self(
            (0..len)
                .map(|i| ((index >> (len - 1 - i)) & 1) as u8)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn push(&mut self, bit: u8) {
        assert!(bit <= 1, "{bit} is not a bit");
        self.0.push(bit);
    }

    /// `self * bit`
    pub fn child(&self, bit: u8) -> Self {
        let mut w = self.clone();
        w.push(bit);
        w
    }

    pub fn concat(&self, other: &BinWord) -> Self {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        Self(bits)
    }

    pub fn truncate(&self, n: usize) -> Self {
        Self(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &BinWord) -> bool {
        other.0.starts_with(&self.0)
    }

    /// The word read as a natural, bit 0 most significant.
    pub fn rank(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn to_naturals(&self) -> NatWord {
        NatWord(self.0.iter().map(|&b| b as u64).collect())
    }
}

impl fmt::Display for BinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{self}>")
    }
}

impl FromStr for BinWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!(
                    "`{other}` in bit string `{s}`"
                ))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BinWord)
    }
}

impl Serialize for BinWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite word over the naturals, used for points below a bound sequence.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct NatWord(pub Vec<u64>);

impl NatWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn truncate(&self, n: usize) -> Self {
        Self(self.0[..n.min(self.0.len())].to_vec())
    }
}

impl fmt::Display for NatWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

type OracleFn = dyn Fn(u64) -> u64 + Send + Sync;

/// A total, deterministic oracle `index -> natural`.
#[derive(Clone)]
pub enum Point {
    /// A finite word followed by zeros.
    Padded(Arc<[u64]>),
    /// Even indices from the first point, odd indices from the second.
    Interleave(Arc<Point>, Arc<Point>),
    Programmatic(Arc<OracleFn>),
}

impl Point {
    pub fn zeros() -> Self {
        Point::Padded(Arc::from(Vec::new()))
    }

    /// `w * 00...`
    pub fn pad(w: &BinWord) -> Self {
        Point::Padded(w.bits().iter().map(|&b| b as u64).collect())
    }

    pub fn pad_naturals(w: &NatWord) -> Self {
        Point::Padded(Arc::from(w.0.clone()))
    }

    pub fn from_fn(f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        Point::Programmatic(Arc::new(f))
    }

    /// `z1 ⊕ z2`
    pub fn interleave(z1: Point, z2: Point) -> Self {
        Point::Interleave(Arc::new(z1), Arc::new(z2))
    }

    pub fn value(&self, index: u64) -> u64 {
        match self {
            Point::Padded(w) => usize::try_from(index)
                .ok()
                .and_then(|i| w.get(i).copied())
                .unwrap_or(0),
            Point::Interleave(a, b) => {
                if index % 2 == 0 {
                    a.value(index / 2)
                } else {
                    b.value(index / 2)
                }
            }
            Point::Programmatic(f) => f(index),
        }
    }

    /// One track of an interleaved point: `track` 0 gives the even indices.
    pub fn deinterleave(&self, track: u64) -> Point {
        debug_assert!(track <= 1);
        match self {
            Point::Interleave(a, b) => {
                if track == 0 {
                    (**a).clone()
                } else {
                    (**b).clone()
                }
            }
            other => {
                let other = other.clone();
                Point::from_fn(move |i| other.value(2 * i + track))
            }
        }
    }

    /// `f̄n` for a binary point. Values above 1 are read as 1.
    pub fn prefix(&self, n: usize) -> BinWord {
        BinWord(
            (0..n as u64)
                .map(|i| {
                    let v = self.value(i);
                    debug_assert!(v <= 1, "prefix of a non-binary point");
                    v.min(1) as u8
                })
                .collect(),
        )
    }

    pub fn prefix_naturals(&self, n: usize) -> NatWord {
        NatWord((0..n as u64).map(|i| self.value(i)).collect())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Padded(w) => {
                let parts: Vec<String> = w.iter().map(u64::to_string).collect();
                write!(f, "Padded({}*00..)", parts.join(","))
            }
            Point::Interleave(a, b) => write!(f, "Interleave({a:?}, {b:?})"),
            Point::Programmatic(_) => f.write_str("Programmatic(..)"),
        }
    }
}

pub fn prefix(f: &Point, n: usize) -> BinWord {
    f.prefix(n)
}

pub fn pad(w: &BinWord) -> Point {
    Point::pad(w)
}

pub fn interleave(z1: Point, z2: Point) -> Point {
    Point::interleave(z1, z2)
}

/// Number of words in `{0,1}^n`, or `None` if it does not fit in a `u64`.
pub fn word_count(n: usize) -> Option<u64> {
    (n < 64).then(|| 1u64 << n)
}

/// All words of length `n` in lexicographic order, 0 before 1.
///
/// Charges `2^n` work units up front.
pub fn enumerate_words(
    n: usize,
    budget: &Budget,
) -> Result<impl Iterator<Item = BinWord>> {
    let count = word_count(n).ok_or(Error::WorkBudget {
        needed: u64::MAX,
        remaining: budget.remaining(),
    })?;
    budget.charge(count)?;
    Ok((0..count).map(move |i| BinWord::from_index(i, n)))
}

/// Mixed-radix enumeration of words `w` with `w(i) < radices[i]`, in
/// lexicographic order.
pub fn enumerate_grid(radices: &[u64]) -> GridIter {
    GridIter {
        radices: radices.to_vec(),
        next: if radices.iter().all(|&r| r > 0) {
            Some(vec![0; radices.len()])
        } else {
            None
        },
    }
}

/// `Π radices[i]`, or `None` on overflow.
pub fn grid_size(radices: &[u64]) -> Option<u64> {
    radices.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r))
}

pub struct GridIter {
    radices: Vec<u64>,
    next: Option<Vec<u64>>,
}

impl Iterator for GridIter {
    type Item = NatWord;

    fn next(&mut self) -> Option<NatWord> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.radices[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(NatWord(current))
    }
}

/// Least `y` such that, in a lexicographically ordered grid of words with
/// the given radices, all words sharing a length-`y` prefix carry equal
/// values. Words sharing a prefix are contiguous blocks in that order.
pub(crate) fn least_agreement_depth<V: PartialEq>(values: &[V], radices: &[u64]) -> usize {
    debug_assert_eq!(Some(values.len() as u64), grid_size(radices));
    let mut block = values.len();
    for y in 0..=radices.len() {
        let uniform = block <= 1
            || values
                .chunks(block)
                .all(|chunk| chunk.iter().all(|v| *v == chunk[0]));
        if uniform {
            return y;
        }
        if y < radices.len() {
            block /= radices[y] as usize;
        }
    }
    radices.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> BinWord {
        s.parse().unwrap()
    }

    #[test]
    fn prefix_examples() {
        let f = pad(&w("101"));
        assert_eq!(prefix(&f, 0), w(""));
        assert_eq!(prefix(&f, 5), w("10100"));
        assert_eq!(prefix(&pad(&w("11")), 2), w("11"));
    }

    #[test]
    fn pad_examples() {
        let z = pad(&w(""));
        assert!((0..100).all(|i| z.value(i) == 0));
        let one = pad(&w("1"));
        assert_eq!(one.value(0), 1);
        assert_eq!(one.value(7), 0);
        assert_eq!(one.value(u64::MAX), 0);
    }

    #[test]
    fn interleave_examples() {
        let zz = interleave(Point::zeros(), Point::zeros());
        assert_eq!(zz.prefix(10), w("0000000000"));
        let z = interleave(pad(&w("1")), pad(&w("01")));
        assert_eq!(z.prefix(4), w("1001"));
        assert_eq!(z.deinterleave(0).prefix(3), w("100"));
        assert_eq!(z.deinterleave(1).prefix(3), w("010"));
        let programmatic = Point::from_fn(|i| i % 2);
        assert_eq!(programmatic.deinterleave(1).prefix(3), w("111"));
    }

    #[test]
    fn enumerate_examples() {
        let budget = Budget::unlimited();
        assert_eq!(enumerate_words(0, &budget).unwrap().collect::<Vec<_>>(), vec![w("")]);
        assert_eq!(
            enumerate_words(2, &budget).unwrap().collect::<Vec<_>>(),
            vec![w("00"), w("01"), w("10"), w("11")]
        );
        assert_eq!(enumerate_words(5, &budget).unwrap().count(), 32);
    }

    #[test]
    fn enumerate_respects_budget() {
        let budget = Budget::new(1_000_000, 10);
        assert!(matches!(
            enumerate_words(4, &budget),
            Err(Error::WorkBudget { needed: 16, .. })
        ));
        assert!(enumerate_words(3, &budget).is_ok());
    }

    #[test]
    fn grid_enumeration_is_lexicographic() {
        let words: Vec<_> = enumerate_grid(&[3, 1, 2]).map(|w| w.0).collect();
        assert_eq!(
            words,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![1, 0, 0],
                vec![1, 0, 1],
                vec![2, 0, 0],
                vec![2, 0, 1]
            ]
        );
        assert_eq!(enumerate_grid(&[]).count(), 1);
        assert_eq!(enumerate_grid(&[2, 0]).count(), 0);
    }

    #[test]
    fn agreement_depth_on_blocks() {
        // value = second bit of a 3-bit word
        let values: Vec<u64> = (0..8).map(|i| (i >> 1) & 1).collect();
        assert_eq!(least_agreement_depth(&values, &[2, 2, 2]), 2);
        assert_eq!(least_agreement_depth(&[7u64; 8], &[2, 2, 2]), 0);
        let distinct: Vec<u64> = (0..8).collect();
        assert_eq!(least_agreement_depth(&distinct, &[2, 2, 2]), 3);
    }

    #[test]
    fn binword_text_round_trip() {
        let word = w("0110");
        assert_eq!(word.to_string().parse::<BinWord>().unwrap(), word);
        assert!("012".parse::<BinWord>().is_err());
        assert_eq!(BinWord::from_index(5, 4), w("0101"));
        assert_eq!(w("0101").rank(), 5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word() -> impl Strategy<Value = BinWord> {
            proptest::collection::vec(0u8..=1, 0..24).prop_map(BinWord)
        }

        proptest! {
            #[test]
            fn prefixes_are_nested(word in word(), m in 0usize..30, extra in 0usize..10) {
                let f = pad(&word);
                let n = m + extra;
                prop_assert!(prefix(&f, m).is_prefix_of(&prefix(&f, n)));
            }

            #[test]
            fn pad_then_prefix_is_identity(word in word(), extra in 0usize..10) {
                let f = pad(&word);
                prop_assert_eq!(prefix(&f, word.len()), word.clone());
                let longer = prefix(&f, word.len() + extra);
                prop_assert_eq!(prefix(&pad(&longer), longer.len()), longer);
            }

            #[test]
            fn deinterleave_recovers_tracks(a in word(), b in word(), n in 0usize..30) {
                let z = interleave(pad(&a), pad(&b));
                prop_assert_eq!(z.deinterleave(0).prefix(n), pad(&a).prefix(n));
                prop_assert_eq!(z.deinterleave(1).prefix(n), pad(&b).prefix(n));
            }

            #[test]
            fn enumeration_is_exhaustive(n in 0usize..10) {
                let all: Vec<BinWord> = enumerate_words(n, &Budget::unlimited()).unwrap().collect();
                let set: std::collections::BTreeSet<_> = all.iter().cloned().collect();
                prop_assert_eq!(all.len(), 1usize << n);
                prop_assert_eq!(set.len(), all.len());
                prop_assert!(all.windows(2).all(|p| p[0] < p[1]));
            }
        }
    }
}
