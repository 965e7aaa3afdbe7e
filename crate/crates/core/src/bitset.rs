//! Fixed-width bit vectors used for attribute and object sets.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WORD_BITS: usize = 64;

/// A set of indices `0..width` packed into 64-bit words.
///
/// Bits at positions `>= width` in the last word are always zero, so equality
/// and hashing can compare words directly.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    width: usize,
    words: Vec<u64>,
}

fn word_count(width: usize) -> usize {
    width.div_ceil(WORD_BITS)
}

impl BitSet {
    pub fn empty(width: usize) -> Self {
        BitSet {
            width,
            words: vec![0; word_count(width)],
        }
    }

    pub fn full(width: usize) -> Self {
        let mut set = BitSet {
            width,
            words: vec![!0; word_count(width)],
        };
        set.trim();
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Self {
        let mut set = BitSet::empty(width);
        for i in indices {
            set.insert(i);
        }
        set
    }

    fn trim(&mut self) {
        let rem = self.width % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        assert!(i < self.width, "index {i} out of range for width {}", self.width);
        self.words[i / WORD_BITS] & (1 << (i % WORD_BITS)) != 0
    }

    /// Inserts `i`, returning whether it was newly added.
    #[inline]
    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < self.width, "index {i} out of range for width {}", self.width);
        let word = &mut self.words[i / WORD_BITS];
        let mask = 1 << (i % WORD_BITS);
        let fresh = *word & mask == 0;
        *word |= mask;
        fresh
    }

    /// Removes `i`, returning whether it was present.
    #[inline]
    pub fn remove(&mut self, i: usize) -> bool {
        assert!(i < self.width, "index {i} out of range for width {}", self.width);
        let word = &mut self.words[i / WORD_BITS];
        let mask = 1 << (i % WORD_BITS);
        let present = *word & mask != 0;
        *word &= !mask;
        present
    }

    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.width, "index {i} out of range for width {}", self.width);
        self.words[i / WORD_BITS] ^= 1 << (i % WORD_BITS);
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.width
    }

    fn check_width(&self, other: &BitSet) {
        assert_eq!(
            self.width, other.width,
            "bit set width mismatch: {} vs {}",
            self.width, other.width
        );
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.check_width(other);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_proper_subset(&self, other: &BitSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.check_width(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        self.check_width(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        self.check_width(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        self.check_width(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn complement(&self) -> BitSet {
        let mut out = BitSet {
            width: self.width,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Members strictly below `bound` are kept, the rest cleared.
    pub fn truncate_below(&mut self, bound: usize) {
        let bound = bound.min(self.width);
        let full_words = bound / WORD_BITS;
        let rem = bound % WORD_BITS;
        if full_words < self.words.len() {
            self.words[full_words] &= (1u64 << rem).wrapping_sub(1);
            for w in &mut self.words[full_words + 1..] {
                *w = 0;
            }
        }
    }

    /// Whether `self` and `other` agree on every index below `bound`.
    pub fn agrees_below(&self, other: &BitSet, bound: usize) -> bool {
        self.check_width(other);
        let bound = bound.min(self.width);
        let full_words = bound / WORD_BITS;
        if self.words[..full_words] != other.words[..full_words] {
            return false;
        }
        let rem = bound % WORD_BITS;
        if rem == 0 {
            return true;
        }
        let mask = (1u64 << rem) - 1;
        (self.words[full_words] ^ other.words[full_words]) & mask == 0
    }

    /// Renders as a row of `X` and `.` characters.
    pub fn to_cross_row(&self) -> String {
        (0..self.width)
            .map(|i| if self.contains(i) { 'X' } else { '.' })
            .collect()
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.index * WORD_BITS + bit);
            }
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
    }
}

impl<'a> IntoIterator for &'a BitSet {
    type Item = usize;
    type IntoIter = Ones<'a>;

    fn into_iter(self) -> Ones<'a> {
        self.iter()
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct BitSetRepr {
    width: usize,
    members: Vec<usize>,
}

impl Serialize for BitSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BitSetRepr {
            width: self.width,
            members: self.iter().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = BitSetRepr::deserialize(deserializer)?;
        if let Some(&bad) = repr.members.iter().find(|&&i| i >= repr.width) {
            return Err(serde::de::Error::custom(format!(
                "member {bad} out of range for width {}",
                repr.width
            )));
        }
        Ok(BitSet::from_indices(repr.width, repr.members))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_is_trimmed() {
        for width in [0, 1, 63, 64, 65, 130] {
            let full = BitSet::full(width);
            assert_eq!(full.len(), width);
            assert_eq!(full.complement(), BitSet::empty(width));
        }
    }

    #[test]
    fn truncate_and_agree() {
        let mut s = BitSet::from_indices(130, [0, 5, 64, 100, 129]);
        let t = BitSet::from_indices(130, [0, 5, 64, 101]);
        assert!(s.agrees_below(&t, 100));
        assert!(!s.agrees_below(&t, 101));
        s.truncate_below(65);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 5, 64]);
    }

    #[test]
    #[should_panic(expected = "width mismatch")]
    fn width_mismatch_panics() {
        BitSet::empty(3).is_subset(&BitSet::empty(4));
    }

    fn arb_pair() -> impl Strategy<Value = (BitSet, BitSet)> {
        (0usize..150).prop_flat_map(|w| {
            let bits = proptest::collection::vec(any::<bool>(), w);
            (bits.clone(), bits).prop_map(move |(a, b)| {
                let pick = |v: Vec<bool>| {
                    BitSet::from_indices(w, v.iter().enumerate().filter(|x| *x.1).map(|x| x.0))
                };
                (pick(a), pick(b))
            })
        })
    }

    proptest! {
        #[test]
        fn set_algebra_matches_naive((a, b) in arb_pair()) {
            let w = a.width();
            let na: Vec<bool> = (0..w).map(|i| a.contains(i)).collect();
            let nb: Vec<bool> = (0..w).map(|i| b.contains(i)).collect();
            let inter = a.intersection(&b);
            let uni = a.union(&b);
            let diff = a.difference(&b);
            for i in 0..w {
                prop_assert_eq!(inter.contains(i), na[i] && nb[i]);
                prop_assert_eq!(uni.contains(i), na[i] || nb[i]);
                prop_assert_eq!(diff.contains(i), na[i] && !nb[i]);
            }
            prop_assert_eq!(a.is_subset(&b), (0..w).all(|i| !na[i] || nb[i]));
            prop_assert_eq!(a.len(), na.iter().filter(|x| **x).count());
            let json = serde_json::to_string(&a).unwrap();
            prop_assert_eq!(serde_json::from_str::<BitSet>(&json).unwrap(), a);
        }
    }
}
