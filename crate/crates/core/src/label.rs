//! Label elicitation: pairs are labelled with a strength from
//! `L_r = {n, c, 0, 1, …, r}`.
//!
//! `n` marks "not at least as good", `c` a strict preference of unknown
//! strength, `0` indifference and `1..=r` increasing strengths of strict
//! preference. The basic procedure labels each pair once; the hierarchical
//! procedure re-labels equally labelled pairs in further rounds until equal
//! labels are known to stem from equal strength.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::relation::{unordered, Pair, Relation};
use crate::system::{default_consequences, Consequence, Exchange, PreferenceSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    N,
    C,
    Zero,
    Int(u32),
}

impl Label {
    /// Position in `0 < 1 < … < r`; `None` for `n` and `c`.
    pub fn strength(self) -> Option<u32> {
        match self {
            Label::Zero => Some(0),
            Label::Int(k) => Some(k),
            Label::N | Label::C => None,
        }
    }

    pub fn validate(self, r: u32) -> Result<()> {
        match self {
            Label::Int(k) if k == 0 || k > r => Err(Error::LabelOutOfRange { label: k, r }),
            _ => Ok(()),
        }
    }

    /// Label implied for `(j, i)` once `(i, j)` carries `self`.
    pub fn reverse(self) -> Label {
        match self {
            Label::Zero => Label::Zero,
            _ => Label::N,
        }
    }

    fn in_r1(self) -> bool {
        !matches!(self, Label::N)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::N => f.write_str("n"),
            Label::C => f.write_str("c"),
            Label::Zero => f.write_str("0"),
            Label::Int(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::N => s.serialize_str("n"),
            Label::C => s.serialize_str("c"),
            Label::Zero => s.serialize_u32(0),
            Label::Int(k) => s.serialize_u32(*k),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Ok(Label::Zero),
            Raw::Int(k) => Ok(Label::Int(k)),
            Raw::Str(s) => match s.as_str() {
                "n" | "N" => Ok(Label::N),
                "c" | "C" => Ok(Label::C),
                other => other
                    .parse::<u32>()
                    .map(|k| if k == 0 { Label::Zero } else { Label::Int(k) })
                    .map_err(|_| serde::de::Error::custom(format!("unknown label `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexOrdering {
    Greater,
    Equal,
    Less,
    Incomparable,
}

/// Lexicographic comparison of label histories with `0 < 1 < … < r`.
/// Histories containing `n` or `c` are incomparable to everything, and so
/// is a proper prefix to its extension (that situation never arises within
/// one hierarchical session).
pub fn lex_compare(h1: &[Label], h2: &[Label]) -> LexOrdering {
    let s1: Option<Vec<u32>> = h1.iter().map(|l| l.strength()).collect();
    let s2: Option<Vec<u32>> = h2.iter().map(|l| l.strength()).collect();
    let (Some(s1), Some(s2)) = (s1, s2) else {
        return LexOrdering::Incomparable;
    };
    for (a, b) in s1.iter().zip(&s2) {
        match a.cmp(b) {
            Ordering::Greater => return LexOrdering::Greater,
            Ordering::Less => return LexOrdering::Less,
            Ordering::Equal => {}
        }
    }
    if s1.len() == s2.len() {
        LexOrdering::Equal
    } else {
        LexOrdering::Incomparable
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistory {
    pub pair: Pair,
    pub labels: Vec<Label>,
}

/// An answer: `label` for the ordered pair `pair`. In first-round and basic
/// sessions the reverse orientation is filled in from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAnswer {
    pub pair: Pair,
    pub label: Label,
}

impl LabelAnswer {
    pub fn new(i: usize, j: usize, label: Label) -> Self {
        Self { pair: (i, j), label }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub pair: Pair,
    pub label: Label,
    pub round: usize,
    pub seq: usize,
}

fn check_pair(n: usize, (i, j): Pair) -> Result<()> {
    for index in [i, j] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, size: n });
        }
    }
    Ok(())
}

/// System of the single-stage procedure from a (possibly partial) label map.
///
/// `R1` holds the diagonal plus every pair labelled `0`, `c` or a strength;
/// `R2` relates labelled pairs with `ℓ_ij > ℓ_kl` or `ℓ_ij = ℓ_kl = 0`. Pairs
/// labelled `c` take no part in `R2`. When `r > n²` not every strength can be
/// in use, so equal strengths can only come from equal exchanges and are
/// recorded as indifference.
pub fn basic_label_system(n: usize, labels: &BTreeMap<Pair, Label>, r: u32) -> Result<PreferenceSystem> {
    let mut full = labels.clone();
    for (&(i, j), &label) in labels {
        check_pair(n, (i, j))?;
        label.validate(r)?;
        if i != j {
            full.entry((j, i)).or_insert(label.reverse());
        }
    }
    let mut r1 = Relation::diagonal(n);
    for (&(i, j), &label) in &full {
        if label.in_r1() {
            r1.insert_unchecked(i, j);
        }
    }
    let ties_are_indifference = (r as usize) > n * n;
    let rated: Vec<(Pair, u32)> = full
        .iter()
        .filter_map(|(&p, &l)| l.strength().map(|s| (p, s)))
        .collect();
    let mut r2 = BTreeSet::new();
    for &(x, sx) in &rated {
        for &(y, sy) in &rated {
            let related = sx > sy || (sx == sy && (sx == 0 || ties_are_indifference));
            if related {
                r2.insert((x, y));
            }
        }
    }
    PreferenceSystem::from_parts(n, r1, r2)
}

/// Single-stage label session driven one answer at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicLabelSession {
    consequences: Vec<Consequence>,
    r: u32,
    labels: BTreeMap<Pair, Label>,
    log: Vec<LabelEvent>,
}

impl BasicLabelSession {
    pub fn new(n: usize, r: u32) -> Result<Self> {
        Self::with_consequences(default_consequences(n), r, false)
    }

    /// With `diagonal_zero`, every `(a, a)` starts out labelled `0`.
    pub fn with_consequences(consequences: Vec<Consequence>, r: u32, diagonal_zero: bool) -> Result<Self> {
        if r < 1 {
            return Err(Error::InvalidConfig("label count r must be at least 1".into()));
        }
        let mut labels = BTreeMap::new();
        if diagonal_zero {
            for i in 0..consequences.len() {
                labels.insert((i, i), Label::Zero);
            }
        }
        Ok(Self {
            consequences,
            r,
            labels,
            log: Vec::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.consequences.len()
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn labels(&self) -> &BTreeMap<Pair, Label> {
        &self.labels
    }

    pub fn log(&self) -> &[LabelEvent] {
        &self.log
    }

    pub fn is_decided(&self, i: usize, j: usize) -> bool {
        self.labels.contains_key(&(i, j)) || self.labels.contains_key(&(j, i))
    }

    /// Unordered pairs `(i, j)`, `i < j`, not yet labelled.
    pub fn pending_pairs(&self) -> Vec<Pair> {
        let n = self.size();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if !self.is_decided(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn apply(&mut self, answer: LabelAnswer) -> Result<()> {
        let (i, j) = answer.pair;
        check_pair(self.size(), answer.pair)?;
        answer.label.validate(self.r)?;
        if self.is_decided(i, j) {
            return Err(Error::PairAlreadyDecided(answer.pair));
        }
        self.labels.insert((i, j), answer.label);
        self.log.push(LabelEvent {
            pair: answer.pair,
            label: answer.label,
            round: 1,
            seq: self.log.len(),
        });
        Ok(())
    }

    pub fn system(&self) -> PreferenceSystem {
        let s = basic_label_system(self.size(), &self.labels, self.r).expect("labels were validated");
        PreferenceSystem::new(self.consequences.clone(), s.r1().clone(), s.r2().clone())
            .expect("same ground set")
    }
}

/// Hierarchical label session.
///
/// Round one labels all of `A × A` (the diagonal is pre-labelled `0` and each
/// off-diagonal pair is answered once, in the orientation of the answer).
/// After each round, every active set `N` is split by strength label into
/// `N_1, …, N_r`; `N` is retired when `|N| ≤ r` or some `N_x` is empty, and
/// otherwise the `N_x` are labelled again in the next round.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSession {
    consequences: Vec<Consequence>,
    r: u32,
    round: usize,
    active_sets: Vec<Vec<Pair>>,
    round_labels: BTreeMap<Pair, Label>,
    histories: BTreeMap<Pair, Vec<Label>>,
    final_pairs: BTreeSet<Pair>,
    terminated: bool,
    log: Vec<LabelEvent>,
}

impl LabelSession {
    pub fn new(n: usize, r: u32) -> Result<Self> {
        Self::with_consequences(default_consequences(n), r)
    }

    pub fn with_consequences(consequences: Vec<Consequence>, r: u32) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidConfig("hierarchical label elicitation needs r ≥ 2".into()));
        }
        let n = consequences.len();
        let all: Vec<Pair> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let mut s = Self {
            consequences,
            r,
            round: 1,
            active_sets: vec![all],
            round_labels: BTreeMap::new(),
            histories: BTreeMap::new(),
            final_pairs: BTreeSet::new(),
            terminated: false,
            log: Vec::new(),
        };
        for i in 0..n {
            s.record((i, i), Label::Zero);
        }
        Ok(s)
    }

    /// Rebuilds a session from its event log, advancing rounds as the
    /// recorded round numbers increase.
    pub fn replay(consequences: Vec<Consequence>, r: u32, events: &[LabelEvent]) -> Result<Self> {
        let mut s = Self::with_consequences(consequences, r)?;
        for e in events {
            while s.round < e.round {
                s.advance_round()?;
            }
            s.apply_label(LabelAnswer {
                pair: e.pair,
                label: e.label,
            })?;
        }
        Ok(s)
    }

    pub fn size(&self) -> usize {
        self.consequences.len()
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn active_sets(&self) -> &[Vec<Pair>] {
        &self.active_sets
    }

    pub fn log(&self) -> &[LabelEvent] {
        &self.log
    }

    pub fn history(&self, pair: Pair) -> Option<&[Label]> {
        self.histories.get(&pair).map(Vec::as_slice)
    }

    pub fn histories(&self) -> Vec<LabelHistory> {
        self.histories
            .iter()
            .map(|(&pair, labels)| LabelHistory {
                pair,
                labels: labels.clone(),
            })
            .collect()
    }

    fn record(&mut self, pair: Pair, label: Label) {
        self.round_labels.insert(pair, label);
        self.histories.entry(pair).or_default().push(label);
    }

    fn is_active(&self, pair: Pair) -> bool {
        self.active_sets.iter().any(|s| s.binary_search(&pair).is_ok())
    }

    /// Questions still open in this round. In round one these are unordered
    /// pairs `(i, j)`, `i < j`; later rounds ask about ordered pairs.
    pub fn pending_pairs(&self) -> Vec<Pair> {
        if self.terminated {
            return Vec::new();
        }
        let mut out: Vec<Pair> = self
            .active_sets
            .iter()
            .flatten()
            .copied()
            .filter(|p| !self.round_labels.contains_key(p))
            .collect();
        if self.round == 1 {
            out.retain(|&(i, j)| i < j || !self.round_labels.contains_key(&(j, i)));
            out = out.into_iter().map(|(i, j)| unordered(i, j)).collect();
            out.dedup();
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn round_complete(&self) -> bool {
        self.active_sets
            .iter()
            .flatten()
            .all(|p| self.round_labels.contains_key(p))
    }

    /// Pairs of the active set containing `pair`, which is the context the
    /// decision maker labels against in this round.
    pub fn context_of(&self, pair: Pair) -> Option<&[Pair]> {
        self.active_sets
            .iter()
            .find(|s| s.binary_search(&pair).is_ok())
            .map(Vec::as_slice)
    }

    pub fn apply_label(&mut self, answer: LabelAnswer) -> Result<()> {
        if self.terminated {
            return Err(Error::AlreadyTerminated);
        }
        let (i, j) = answer.pair;
        check_pair(self.size(), answer.pair)?;
        answer.label.validate(self.r)?;
        if !self.is_active(answer.pair) {
            return Err(Error::PairNotActive(answer.pair));
        }
        if self.round_labels.contains_key(&answer.pair) {
            return Err(Error::PairAlreadyDecided(answer.pair));
        }
        if self.round == 1 {
            if self.round_labels.contains_key(&(j, i)) {
                return Err(Error::PairAlreadyDecided(answer.pair));
            }
            self.record((i, j), answer.label);
            self.record((j, i), answer.label.reverse());
        } else {
            if !matches!(answer.label, Label::Int(_)) {
                return Err(Error::InvalidConfig(format!(
                    "only strength labels 1..={} are allowed after the first round",
                    self.r
                )));
            }
            self.record((i, j), answer.label);
        }
        self.log.push(LabelEvent {
            pair: answer.pair,
            label: answer.label,
            round: self.round,
            seq: self.log.len(),
        });
        Ok(())
    }

    /// Closes the current round; returns whether the session terminated.
    pub fn advance_round(&mut self) -> Result<bool> {
        if self.terminated {
            return Err(Error::AlreadyTerminated);
        }
        let missing = self
            .active_sets
            .iter()
            .flatten()
            .filter(|p| !self.round_labels.contains_key(p))
            .count();
        if missing > 0 {
            return Err(Error::RoundIncomplete { missing });
        }
        let r = self.r as usize;
        let mut next = Vec::new();
        for set in std::mem::take(&mut self.active_sets) {
            let mut parts: Vec<Vec<Pair>> = vec![Vec::new(); r];
            for &p in &set {
                match self.round_labels[&p] {
                    Label::Int(k) => parts[(k - 1) as usize].push(p),
                    _ => {
                        self.final_pairs.insert(p);
                    }
                }
            }
            if set.len() <= r || parts.iter().any(Vec::is_empty) {
                self.final_pairs.extend(parts.into_iter().flatten());
            } else {
                next.extend(parts);
            }
        }
        self.round_labels.clear();
        if next.is_empty() {
            self.terminated = true;
        } else {
            self.active_sets = next;
            self.round += 1;
        }
        Ok(self.terminated)
    }

    /// Number of completed labelling rounds.
    pub fn rounds_used(&self) -> usize {
        self.round
    }

    /// Sound sub-system from the information gathered so far: strict
    /// comparisons decided at some history position, and equalities only
    /// between pairs whose elicitation has ended (or that are both `0`).
    pub fn provisional_system(&self) -> PreferenceSystem {
        let n = self.size();
        let mut r1 = Relation::diagonal(n);
        for (&(i, j), h) in &self.histories {
            if h[0].in_r1() {
                r1.insert_unchecked(i, j);
            }
        }
        let entries: Vec<(Pair, &[Label])> = self
            .histories
            .iter()
            .filter(|(p, _)| r1.contains_pair(**p))
            .map(|(&p, h)| (p, h.as_slice()))
            .collect();
        let mut r2: BTreeSet<Exchange> = BTreeSet::new();
        for &(x, hx) in &entries {
            for &(y, hy) in &entries {
                let m = hx.len().min(hy.len());
                let related = match lex_compare(&hx[..m], &hy[..m]) {
                    LexOrdering::Greater => true,
                    LexOrdering::Equal => {
                        let both_zero = hx[0] == Label::Zero && hy[0] == Label::Zero;
                        both_zero
                            || (hx.len() == hy.len()
                                && self.final_pairs.contains(&x)
                                && self.final_pairs.contains(&y))
                    }
                    _ => false,
                };
                if related {
                    r2.insert((x, y));
                }
            }
        }
        PreferenceSystem::new(self.consequences.clone(), r1, r2).expect("well formed")
    }

    /// Final system; `R2` is `≥_L` on histories.
    pub fn build_system(&self) -> Result<PreferenceSystem> {
        if !self.terminated {
            return Err(Error::NotTerminated);
        }
        Ok(self.provisional_system())
    }
}

/// Upper bound on the number of rounds of the hierarchical procedure.
pub fn round_bound(n: usize, r: u32) -> usize {
    let n2 = (n * n) as i64;
    let r = r as i64;
    let steps = (n2 - r).max(0);
    let bound = (steps + (r - 2)) / (r - 1) + 1;
    bound.max(1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_compare_examples() {
        use Label::*;
        assert_eq!(lex_compare(&[Int(3)], &[Int(2)]), LexOrdering::Greater);
        assert_eq!(lex_compare(&[Int(2), Int(1)], &[Int(2), Int(3)]), LexOrdering::Less);
        assert_eq!(lex_compare(&[C], &[Int(2)]), LexOrdering::Incomparable);
        assert_eq!(lex_compare(&[Zero], &[Zero]), LexOrdering::Equal);
        assert_eq!(lex_compare(&[Int(1)], &[Zero]), LexOrdering::Greater);
        assert_eq!(lex_compare(&[N], &[N]), LexOrdering::Incomparable);
    }

    #[test]
    fn labels_serialize_as_in_schema() {
        let json = serde_json::to_string(&[Label::N, Label::C, Label::Zero, Label::Int(4)]).unwrap();
        assert_eq!(json, r#"["n","c",0,4]"#);
        let back: Vec<Label> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Label::N, Label::C, Label::Zero, Label::Int(4)]);
    }

    #[test]
    fn first_round_semantics() {
        let mut s = LabelSession::new(3, 2).unwrap();
        s.apply_label(LabelAnswer::new(0, 1, Label::N)).unwrap();
        s.apply_label(LabelAnswer::new(1, 2, Label::Zero)).unwrap();
        s.apply_label(LabelAnswer::new(2, 0, Label::Int(2))).unwrap();
        assert!(s.pending_pairs().is_empty());
        assert!(s.advance_round().unwrap());
        let a = s.build_system().unwrap();
        assert!(!a.r1().contains(0, 1) && !a.r1().contains(1, 0));
        assert!(a.r1().contains(1, 2) && a.r1().contains(2, 1));
        assert!(a.r1().contains(2, 0) && !a.r1().contains(0, 2));
        assert!(a.r2_contains((1, 2), (0, 0)) && a.r2_contains((0, 0), (1, 2)));
        assert!(a.r2_contains((2, 0), (1, 2)) && !a.r2_contains((1, 2), (2, 0)));
    }

    #[test]
    fn answering_a_pair_twice_is_rejected() {
        let mut s = LabelSession::new(2, 3).unwrap();
        s.apply_label(LabelAnswer::new(0, 1, Label::Int(1))).unwrap();
        assert_eq!(
            s.apply_label(LabelAnswer::new(1, 0, Label::Int(1))),
            Err(Error::PairAlreadyDecided((1, 0)))
        );
        assert_eq!(
            s.apply_label(LabelAnswer::new(0, 0, Label::Int(5))),
            Err(Error::LabelOutOfRange { label: 5, r: 3 })
        );
    }

    #[test]
    fn incomplete_round_cannot_advance() {
        let mut s = LabelSession::new(3, 2).unwrap();
        s.apply_label(LabelAnswer::new(0, 1, Label::Int(1))).unwrap();
        assert_eq!(s.advance_round(), Err(Error::RoundIncomplete { missing: 4 }));
        assert_eq!(s.build_system(), Err(Error::NotTerminated));
    }

    #[test]
    fn retire_rules() {
        // Size test: 4 ordered pairs with r = 5.
        let mut s = LabelSession::new(2, 5).unwrap();
        s.apply_label(LabelAnswer::new(0, 1, Label::Int(1))).unwrap();
        assert!(s.advance_round().unwrap());
        // Empty-preimage test: r = 2 with only label 1 in use.
        let mut s = LabelSession::new(3, 2).unwrap();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            s.apply_label(LabelAnswer::new(i, j, Label::Int(1))).unwrap();
        }
        assert!(s.advance_round().unwrap());
        let a = s.build_system().unwrap();
        assert!(a.r2_contains((0, 1), (0, 2)) && a.r2_contains((0, 2), (0, 1)));
    }

    #[test]
    fn second_round_refines() {
        let mut s = LabelSession::new(3, 2).unwrap();
        s.apply_label(LabelAnswer::new(0, 1, Label::Int(1))).unwrap();
        s.apply_label(LabelAnswer::new(1, 2, Label::Int(1))).unwrap();
        s.apply_label(LabelAnswer::new(0, 2, Label::Int(2))).unwrap();
        assert!(!s.advance_round().unwrap());
        assert_eq!(s.round(), 2);
        assert_eq!(s.pending_pairs(), vec![(0, 1), (0, 2), (1, 2)]);
        s.apply_label(LabelAnswer::new(0, 1, Label::Int(2))).unwrap();
        s.apply_label(LabelAnswer::new(1, 2, Label::Int(1))).unwrap();
        s.apply_label(LabelAnswer::new(0, 2, Label::Int(1))).unwrap();
        assert!(s.advance_round().unwrap());
        assert_eq!(s.history((0, 1)), Some(&[Label::Int(1), Label::Int(2)][..]));
        let a = s.build_system().unwrap();
        assert!(a.r2_contains((0, 1), (1, 2)) && !a.r2_contains((1, 2), (0, 1)));
        assert!(a.r2_contains((0, 2), (0, 1)));
    }

    #[test]
    fn basic_examples() {
        let empty = basic_label_system(3, &BTreeMap::new(), 5).unwrap();
        assert_eq!(empty.r1(), &Relation::diagonal(3));
        assert!(empty.r2().is_empty());
        let zeros: BTreeMap<Pair, Label> = [((0, 1), Label::Zero), ((1, 2), Label::Zero)].into_iter().collect();
        let a = basic_label_system(3, &zeros, 5).unwrap();
        assert!(a.r2_contains((0, 1), (1, 2)) && a.r2_contains((1, 2), (0, 1)));
    }

    #[test]
    fn round_bound_matches_formula() {
        assert_eq!(round_bound(8, 3), 32);
        assert_eq!(round_bound(2, 5), 1);
        assert_eq!(round_bound(3, 2), 8);
    }
}
