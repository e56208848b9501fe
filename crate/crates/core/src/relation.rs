//! Binary relations over a finite ground set `0..n`.
//!
//! A [`Relation`] is a set of ordered index pairs backed by an `n × n`
//! adjacency bitmap. Iteration is always in lexicographic pair order so that
//! serialized output is deterministic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered pair of consequence indices.
pub type Pair = (usize, usize);

/// Normalizes an unordered pair to `(min, max)`.
pub fn unordered(i: usize, j: usize) -> Pair {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    bits: Vec<bool>,
    len: usize,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * n],
            len: 0,
        }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.insert_unchecked(i, i);
        }
        r
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            bits: vec![true; n * n],
            len: n * n,
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = Pair>>(n: usize, pairs: I) -> Result<Self> {
        let mut r = Self::empty(n);
        for (i, j) in pairs {
            r.insert(i, j)?;
        }
        Ok(r)
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.bits[i * self.n + j]
    }

    pub fn contains_pair(&self, p: Pair) -> bool {
        self.contains(p.0, p.1)
    }

    /// Inserts `(i, j)`; returns whether the pair was new.
    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.insert_unchecked(i, j))
    }

    pub fn remove(&mut self, i: usize, j: usize) -> bool {
        if !self.contains(i, j) {
            return false;
        }
        self.bits[i * self.n + j] = false;
        self.len -= 1;
        true
    }

    pub(crate) fn insert_unchecked(&mut self, i: usize, j: usize) -> bool {
        let slot = &mut self.bits[i * self.n + j];
        if *slot {
            false
        } else {
            *slot = true;
            self.len += 1;
            true
        }
    }

    fn check(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                size: self.n,
            })
        }
    }

    fn check_same_size(&self, other: &Relation) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    /// Pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Pair> + '_ {
        let n = self.n;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / n, k % n))
    }

    pub fn pairs(&self) -> Vec<Pair> {
        self.iter().collect()
    }

    fn filtered(&self, keep: impl Fn(usize, usize) -> bool) -> Relation {
        let mut out = Relation::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if keep(i, j) {
                    out.insert_unchecked(i, j);
                }
            }
        }
        out
    }

    /// `{(i,j) ∈ R : (j,i) ∉ R}`.
    pub fn strict_part(&self) -> Relation {
        self.filtered(|i, j| self.contains(i, j) && !self.contains(j, i))
    }

    /// `{(i,j) ∈ R : (j,i) ∈ R}`.
    pub fn indifference_part(&self) -> Relation {
        self.filtered(|i, j| self.contains(i, j) && self.contains(j, i))
    }

    /// `{(i,j) : (i,j) ∉ R ∧ (j,i) ∉ R}`. Diagonal pairs absent from `R` are
    /// reported as incomparable.
    pub fn incomparable_part(&self) -> Relation {
        self.filtered(|i, j| !self.contains(i, j) && !self.contains(j, i))
    }

    pub fn inverse(&self) -> Relation {
        self.filtered(|i, j| self.contains(j, i))
    }

    /// Smallest transitive superset (Warshall closure).
    pub fn transitive_hull(&self) -> Relation {
        let n = self.n;
        let mut bits = self.bits.clone();
        for k in 0..n {
            for i in 0..n {
                if !bits[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    if bits[k * n + j] {
                        bits[i * n + j] = true;
                    }
                }
            }
        }
        let len = bits.iter().filter(|&&b| b).count();
        Relation { n, bits, len }
    }

    /// Cover edges of the strict part of the transitive hull. For a partial
    /// order this is its Hasse diagram.
    pub fn hasse_edges(&self) -> Vec<Pair> {
        let strict = self.transitive_hull().strict_part();
        strict
            .iter()
            .filter(|&(i, j)| {
                !(0..self.n)
                    .any(|k| k != i && k != j && strict.contains(i, k) && strict.contains(k, j))
            })
            .collect()
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        self.check_same_size(other)?;
        Ok(self.filtered(|i, j| self.contains(i, j) || other.contains(i, j)))
    }

    pub fn intersection(&self, other: &Relation) -> Result<Relation> {
        self.check_same_size(other)?;
        Ok(self.filtered(|i, j| self.contains(i, j) && other.contains(i, j)))
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n == other.n && self.iter().all(|(i, j)| other.contains(i, j))
    }

    /// `|R Δ S|`.
    pub fn symmetric_difference_len(&self, other: &Relation) -> Result<usize> {
        self.check_same_size(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|i| self.contains(i, i))
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.iter().all(|(i, j)| i == j || !self.contains(j, i))
    }

    pub fn is_transitive(&self) -> bool {
        self.transitive_hull().len == self.len
    }

    pub fn is_partial_order(&self) -> bool {
        self.is_reflexive() && self.is_antisymmetric() && self.is_transitive()
    }

    /// Returns a copy with the diagonal added.
    pub fn with_diagonal(&self) -> Relation {
        self.filtered(|i, j| i == j || self.contains(i, j))
    }

    /// Applies a permutation `perm[old] = new` to both coordinates.
    pub fn permuted(&self, perm: &[usize]) -> Result<Relation> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        Relation::from_pairs(self.n, self.iter().map(|(i, j)| (perm[i], perm[j])))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Relation")
            .field("n", &self.n)
            .field("pairs", &self.pairs())
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct RelationRepr {
    n: usize,
    pairs: Vec<Pair>,
}

impl Serialize for Relation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RelationRepr {
            n: self.n,
            pairs: self.pairs(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RelationRepr::deserialize(d)?;
        Relation::from_pairs(repr.n, repr.pairs).map_err(serde::de::Error::custom)
    }
}
