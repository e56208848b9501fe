//! Preference systems `[A, R1, R2]`.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{Pair, Relation};

/// A pair of `R1` pairs: `((i,j),(k,l))` reads "exchanging `j` for `i` is at
/// least as desirable as exchanging `l` for `k`".
pub type Exchange = (Pair, Pair);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Consequence {
    pub id: String,
    pub index: usize,
}

/// Ids `a1..an`, matching the usual textbook labelling.
pub fn default_consequences(n: usize) -> Vec<Consequence> {
    (0..n)
        .map(|index| Consequence {
            id: format!("a{}", index + 1),
            index,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceSystem {
    consequences: Vec<Consequence>,
    r1: Relation,
    r2: BTreeSet<Exchange>,
}

impl PreferenceSystem {
    pub fn new(consequences: Vec<Consequence>, r1: Relation, r2: BTreeSet<Exchange>) -> Result<Self> {
        let n = consequences.len();
        let mut seen = HashSet::new();
        for (pos, c) in consequences.iter().enumerate() {
            if c.index != pos {
                return Err(Error::InvalidConfig(format!(
                    "consequence `{}` has index {} at position {}",
                    c.id, c.index, pos
                )));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(Error::DuplicateConsequence(c.id.clone()));
            }
        }
        if r1.ground_size() != n {
            return Err(Error::SizeMismatch {
                left: n,
                right: r1.ground_size(),
            });
        }
        for &(a, b) in &r2 {
            for p in [a, b] {
                if !r1.contains_pair(p) {
                    return Err(Error::ExchangeOutsideOrdinal(p));
                }
            }
        }
        Ok(Self {
            consequences,
            r1,
            r2,
        })
    }

    pub fn from_parts(n: usize, r1: Relation, r2: BTreeSet<Exchange>) -> Result<Self> {
        Self::new(default_consequences(n), r1, r2)
    }

    /// `[A, ∅, ∅]`.
    pub fn vacuous(consequences: Vec<Consequence>) -> Self {
        let n = consequences.len();
        Self {
            consequences,
            r1: Relation::empty(n),
            r2: BTreeSet::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.consequences.len()
    }

    pub fn consequences(&self) -> &[Consequence] {
        &self.consequences
    }

    pub fn r1(&self) -> &Relation {
        &self.r1
    }

    pub fn r2(&self) -> &BTreeSet<Exchange> {
        &self.r2
    }

    pub fn r2_contains(&self, a: Pair, b: Pair) -> bool {
        self.r2.contains(&(a, b))
    }

    /// `P_{R2}`.
    pub fn r2_strict(&self) -> BTreeSet<Exchange> {
        self.r2
            .iter()
            .filter(|&&(a, b)| !self.r2.contains(&(b, a)))
            .copied()
            .collect()
    }

    /// `I_{R2}`.
    pub fn r2_indifference(&self) -> BTreeSet<Exchange> {
        self.r2
            .iter()
            .filter(|&&(a, b)| self.r2.contains(&(b, a)))
            .copied()
            .collect()
    }

    /// True iff `self` is a sub-system of `other`.
    pub fn is_subsystem_of(&self, other: &PreferenceSystem) -> Result<bool> {
        if self.consequences != other.consequences {
            return Err(Error::IncomparableSystems);
        }
        Ok(self.r1.is_subset(&other.r1) && self.r2.is_subset(&other.r2))
    }

    /// Returns `(a^*, a_*)` if some consequence is weakly above and some
    /// consequence weakly below every other one in `R1`. The smallest such
    /// indices are chosen.
    pub fn extremes(&self) -> Option<(usize, usize)> {
        let n = self.size();
        let top = (0..n).find(|&t| (0..n).all(|a| a == t || self.r1.contains(t, a)))?;
        let bottom = (0..n).find(|&b| (0..n).all(|a| a == b || self.r1.contains(a, b)))?;
        Some((top, bottom))
    }

    /// Appends an artificial top and bottom consequence strictly above and
    /// below everything else. Returns the new system and their indices.
    pub fn adjoin_extremes(&self) -> (PreferenceSystem, usize, usize) {
        let n = self.size();
        let top = n;
        let bottom = n + 1;
        let mut consequences = self.consequences.clone();
        consequences.push(Consequence {
            id: unique_id(&self.consequences, "__top"),
            index: top,
        });
        consequences.push(Consequence {
            id: unique_id(&self.consequences, "__bottom"),
            index: bottom,
        });
        let mut r1 = Relation::empty(n + 2);
        for (i, j) in self.r1.iter() {
            r1.insert_unchecked(i, j);
        }
        for a in 0..n + 2 {
            r1.insert_unchecked(top, a);
            r1.insert_unchecked(a, bottom);
        }
        let system = PreferenceSystem {
            consequences,
            r1,
            r2: self.r2.clone(),
        };
        (system, top, bottom)
    }

    /// Relabels consequences by `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Result<PreferenceSystem> {
        let r1 = self.r1.permuted(perm)?;
        let map = |(i, j): Pair| (perm[i], perm[j]);
        let r2 = self.r2.iter().map(|&(a, b)| (map(a), map(b))).collect();
        let mut consequences = self.consequences.clone();
        for c in &mut consequences {
            c.index = perm[c.index];
        }
        consequences.sort_by_key(|c| c.index);
        PreferenceSystem::new(consequences, r1, r2)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("preference system serializes")
    }
}

fn unique_id(existing: &[Consequence], base: &str) -> String {
    let mut id = base.to_string();
    while existing.iter().any(|c| c.id == id) {
        id.push('_');
    }
    id
}

#[derive(Serialize, Deserialize)]
struct ConsequenceRepr {
    id: String,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    consequences: Vec<ConsequenceRepr>,
    r1: Vec<Pair>,
    r2: Vec<Exchange>,
}

impl Serialize for PreferenceSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRepr {
            consequences: self
                .consequences
                .iter()
                .map(|c| ConsequenceRepr { id: c.id.clone() })
                .collect(),
            r1: self.r1.pairs(),
            r2: self.r2.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PreferenceSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SystemRepr::deserialize(d)?;
        let n = repr.consequences.len();
        let consequences = repr
            .consequences
            .into_iter()
            .enumerate()
            .map(|(index, c)| Consequence { id: c.id, index })
            .collect();
        let r1 = Relation::from_pairs(n, repr.r1).map_err(serde::de::Error::custom)?;
        PreferenceSystem::new(consequences, r1, repr.r2.into_iter().collect())
            .map_err(serde::de::Error::custom)
    }
}
