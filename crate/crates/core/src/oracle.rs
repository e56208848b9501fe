//! Synthetic decision makers.
//!
//! A [`GroundTruth`] is a preference system generated by a utility vector:
//! `R1*` is a set of pairs compatible with the utilities and `R2*` orders the
//! utility differences of all `R1*` pairs. Oracles answer elicitation
//! queries from it so that every assumption of the procedures holds exactly.
//! Times follow `t_ij = 1/(u_i − u_j)`, which turns reciprocal additivity
//! into the identity `(u_i − u_j) + (u_j − u_k) = u_i − u_k`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consistency::UtilityVector;
use crate::error::{Error, Result};
use crate::label::{Label, LabelAnswer};
use crate::relation::{Pair, Relation};
use crate::system::{Exchange, PreferenceSystem};
use crate::time::{TimeAnswer, TimeMatrix, Verdict};

/// Utility differences closer than this are the same exchange strength.
pub const DIFF_TOL: f64 = 1e-12;

/// Resolution of the utility grid used by random truths.
const FINE_GRID: u32 = 1 << 16;
const COARSE_GRID: u32 = 1 << 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(flatten)]
    pub system: PreferenceSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityVector>,
    /// Strict pairs whose exchange strength the decision maker cannot rate.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub strength_incomparable: BTreeSet<Pair>,
}

fn same_strength(a: f64, b: f64) -> bool {
    (a - b).abs() <= DIFF_TOL
}

impl GroundTruth {
    /// Truth with `R1* = r1` and `R2*` the complete ordering of utility
    /// differences over `r1`. Fails if `u` does not represent `r1`.
    pub fn from_utility(utility: Vec<f64>, r1: Relation) -> Result<Self> {
        let n = utility.len();
        if r1.ground_size() != n {
            return Err(Error::DimensionMismatch {
                expected: r1.ground_size(),
                got: n,
            });
        }
        for (i, j) in r1.iter() {
            let d = utility[i] - utility[j];
            let ok = if r1.contains(j, i) { same_strength(d, 0.0) } else { d > DIFF_TOL };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "utility does not represent pair ({i}, {j}) of the ordinal relation"
                )));
            }
        }
        let pairs = r1.pairs();
        let mut r2 = BTreeSet::new();
        for &x in &pairs {
            for &y in &pairs {
                let (dx, dy) = (utility[x.0] - utility[x.1], utility[y.0] - utility[y.1]);
                if dx > dy || same_strength(dx, dy) {
                    r2.insert((x, y));
                }
            }
        }
        Ok(Self {
            system: PreferenceSystem::from_parts(n, r1, r2)?,
            utility: Some(UtilityVector::new(utility)),
            strength_incomparable: BTreeSet::new(),
        })
    }

    /// Marks strict pairs as strength-incomparable: every exchange that
    /// involves one of them leaves `R2*`.
    pub fn with_strength_incomparable(mut self, pairs: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let r1 = self.system.r1();
        for p in pairs {
            if !r1.contains_pair(p) || r1.contains(p.1, p.0) {
                return Err(Error::InvalidConfig(format!("pair {p:?} is not a strict pair of R1*")));
            }
            self.strength_incomparable.insert(p);
        }
        let r2: BTreeSet<Exchange> = self
            .system
            .r2()
            .iter()
            .filter(|(x, y)| !self.strength_incomparable.contains(x) && !self.strength_incomparable.contains(y))
            .copied()
            .collect();
        self.system = PreferenceSystem::new(self.system.consequences().to_vec(), r1.clone(), r2)?;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.system.size()
    }

    pub fn r1(&self) -> &Relation {
        self.system.r1()
    }

    pub fn utility(&self) -> Result<&UtilityVector> {
        self.utility
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("ground truth carries no utility".into()))
    }

    pub fn is_strict(&self, i: usize, j: usize) -> bool {
        self.r1().contains(i, j) && !self.r1().contains(j, i)
    }

    pub fn is_indifferent(&self, i: usize, j: usize) -> bool {
        self.r1().contains(i, j) && self.r1().contains(j, i)
    }

    /// True iff some strict pairs `(i,j), (j,k)` exist, so an efficient
    /// session can skip at least one question.
    pub fn has_chain_of_length_two(&self) -> bool {
        let n = self.size();
        (0..n).any(|i| (0..n).any(|j| self.is_strict(i, j) && (0..n).any(|k| self.is_strict(j, k))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "kind", content = "p")]
pub enum TruthShape {
    /// Strict total order with pairwise distinct differences.
    Chain,
    /// Each utility-compatible strict pair is dropped with the given
    /// probability before the transitive hull is taken.
    Partial(f64),
    /// Total preorder on a coarse dyadic grid; each value repeats an earlier
    /// one with the given probability.
    WithTies(f64),
}

fn distinct_differences(k: &[u32]) -> bool {
    let mut seen = BTreeSet::new();
    for (a, &ka) in k.iter().enumerate() {
        for &kb in &k[a + 1..] {
            if ka == kb || !seen.insert(ka.abs_diff(kb)) {
                return false;
            }
        }
    }
    true
}

/// Seed-deterministic random ground truth with a representing utility.
pub fn random_ground_truth(n: usize, seed: u64, shape: TruthShape) -> Result<GroundTruth> {
    if n < 2 {
        return Err(Error::InvalidConfig("ground truths need at least two consequences".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, grid) = match shape {
        TruthShape::Chain | TruthShape::Partial(_) => loop {
            let k: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=FINE_GRID)).collect();
            if distinct_differences(&k) {
                break (k, FINE_GRID);
            }
        },
        TruthShape::WithTies(p_tie) => {
            check_probability(p_tie)?;
            let mut k: Vec<u32> = Vec::with_capacity(n);
            for i in 0..n {
                let value = if i > 0 && rng.gen_bool(p_tie) {
                    k[rng.gen_range(0..i)]
                } else {
                    rng.gen_range(0..=COARSE_GRID)
                };
                k.push(value);
            }
            (k, COARSE_GRID)
        }
    };
    let utility: Vec<f64> = k.iter().map(|&v| v as f64 / grid as f64).collect();
    let mut r1 = Relation::diagonal(n);
    match shape {
        TruthShape::Chain | TruthShape::WithTies(_) => {
            for i in 0..n {
                for j in 0..n {
                    if utility[i] >= utility[j] {
                        r1.insert_unchecked(i, j);
                    }
                }
            }
        }
        TruthShape::Partial(p) => {
            check_probability(p)?;
            for i in 0..n {
                for j in 0..n {
                    if utility[i] > utility[j] && !rng.gen_bool(p) {
                        r1.insert_unchecked(i, j);
                    }
                }
            }
            r1 = r1.transitive_hull();
        }
    }
    GroundTruth::from_utility(utility, r1)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(format!("{p} is not in [0, 1]")))
    }
}

/// Answers time queries with `t = 1/Δu`.
#[derive(Debug, Clone)]
pub struct TimeOracle {
    pub truth: GroundTruth,
    pub c_inf: f64,
}

impl TimeOracle {
    pub fn new(truth: GroundTruth, c_inf: f64) -> Result<Self> {
        truth.utility()?;
        Ok(Self { truth, c_inf })
    }

    /// Consideration time the decision maker would show on `(i, j)`.
    pub fn time(&self, i: usize, j: usize) -> f64 {
        if self.truth.is_indifferent(i, j) {
            self.c_inf
        } else if self.truth.is_strict(i, j) {
            let u = self.truth.utility.as_ref().expect("checked at construction");
            1.0 / (u.get(i) - u.get(j))
        } else {
            0.0
        }
    }

    pub fn time_matrix(&self) -> TimeMatrix {
        let n = self.truth.size();
        let mut t = TimeMatrix::new(n, self.c_inf);
        for i in 0..n {
            for j in 0..n {
                t.set(i, j, self.time(i, j));
            }
        }
        t
    }

    pub fn answer(&self, i: usize, j: usize) -> TimeAnswer {
        if self.truth.is_indifferent(i, j) {
            TimeAnswer::new(i, j, Verdict::Indifferent, 0.0)
        } else if self.truth.is_strict(i, j) {
            TimeAnswer::new(i, j, Verdict::IStrictlyPreferred, self.time(i, j))
        } else if self.truth.is_strict(j, i) {
            TimeAnswer::new(i, j, Verdict::JStrictlyPreferred, self.time(j, i))
        } else {
            TimeAnswer::new(i, j, Verdict::Incomparable, 0.0)
        }
    }
}

/// How a label oracle maps strengths to labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelBinning {
    /// Distinct strengths in the context are split into `min(r, #classes)`
    /// contiguous groups of near-equal count, so every label in use marks
    /// a nonempty group. Suited to hierarchical rounds.
    #[default]
    Classes,
    /// Label `⌈r · Δ / Δmax⌉`, with `Δmax` the largest strength in the
    /// context: equal-width strength bands. Meant for single-stage
    /// labelling, where labels need not split the context evenly.
    EqualWidth,
}

/// Answers label queries; labels are conditioned on the set of pairs they
/// are asked within.
#[derive(Debug, Clone)]
pub struct LabelOracle {
    pub truth: GroundTruth,
    pub r: u32,
    pub binning: LabelBinning,
}

impl LabelOracle {
    pub fn new(truth: GroundTruth, r: u32) -> Result<Self> {
        truth.utility()?;
        if r < 1 {
            return Err(Error::InvalidConfig("label count must be positive".into()));
        }
        Ok(Self {
            truth,
            r,
            binning: LabelBinning::Classes,
        })
    }

    pub fn with_binning(mut self, binning: LabelBinning) -> Self {
        self.binning = binning;
        self
    }

    fn diff(&self, (i, j): Pair) -> f64 {
        let u = self.truth.utility.as_ref().expect("checked at construction");
        u.get(i) - u.get(j)
    }

    fn rateable(&self, p: Pair) -> bool {
        self.truth.is_strict(p.0, p.1) && !self.truth.strength_incomparable.contains(&p)
    }

    /// Label of `(i, j)` when the decision maker labels the pairs of
    /// `context`. Strength classes present in the context are cut into
    /// `min(r, #classes)` contiguous, order-preserving bins, all of them
    /// used.
    pub fn answer(&self, pair: Pair, context: &[Pair]) -> Label {
        let (i, j) = pair;
        if i == j || self.truth.is_indifferent(i, j) {
            return Label::Zero;
        }
        if !self.truth.is_strict(i, j) {
            return Label::N;
        }
        if self.truth.strength_incomparable.contains(&pair) {
            return Label::C;
        }
        let mut values: Vec<f64> = context
            .iter()
            .copied()
            .chain(std::iter::once(pair))
            .filter(|&p| self.rateable(p))
            .map(|p| self.diff(p))
            .collect();
        if self.binning == LabelBinning::EqualWidth {
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let r = self.r as f64;
            let band = (r * self.diff(pair) / max - DIFF_TOL).ceil().clamp(1.0, r);
            return Label::Int(band as u32);
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite utilities"));
        let mut classes: Vec<f64> = Vec::new();
        for v in values {
            if classes.last().is_none_or(|&last| !same_strength(last, v)) {
                classes.push(v);
            }
        }
        let d = self.diff(pair);
        let idx = classes
            .iter()
            .position(|&c| same_strength(c, d))
            .expect("pair is in its own context");
        let k = classes.len();
        let bins = k.min(self.r as usize);
        Label::Int((idx * bins / k) as u32 + 1)
    }

    /// Label with respect to the full grid `A × A`.
    pub fn answer_unconditioned(&self, pair: Pair) -> Label {
        let n = self.truth.size();
        let grid: Vec<Pair> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        self.answer(pair, &grid)
    }

    /// Answer to the unordered question `{i, j}`, oriented so that a strict
    /// preference is reported on the preferred-first pair.
    pub fn answer_unordered(&self, i: usize, j: usize, context: &[Pair]) -> LabelAnswer {
        if self.truth.is_strict(j, i) {
            LabelAnswer::new(j, i, self.answer((j, i), context))
        } else {
            LabelAnswer::new(i, j, self.answer((i, j), context))
        }
    }
}

/// Violations of the time assumptions found in a matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimeAssumptionReport {
    pub violations: Vec<String>,
}

impl TimeAssumptionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Checks the ordinal-strength link, reciprocal additivity and indifference
/// copying for `times` against `truth`.
pub fn check_time_assumptions(times: &TimeMatrix, truth: &GroundTruth) -> TimeAssumptionReport {
    let mut v = Vec::new();
    let c_inf = times.c_inf();
    let r1 = truth.r1();
    let pairs = r1.pairs();
    let strict_r2 = truth.system.r2_strict();
    let indiff_r2 = truth.system.r2_indifference();
    for &x in &pairs {
        for &y in &pairs {
            let (tx, ty) = (times.get(x.0, x.1), times.get(y.0, y.1));
            let slower = ty > tx && tx > 0.0 && !close(tx, ty);
            if slower != strict_r2.contains(&(x, y)) {
                v.push(format!("ordinal link (strict): t{x:?}={tx}, t{y:?}={ty}"));
            }
            let tied = tx > 0.0 && close(tx, ty);
            if tied != indiff_r2.contains(&(x, y)) {
                v.push(format!("ordinal link (tie): t{x:?}={tx}, t{y:?}={ty}"));
            }
        }
    }
    let n = truth.size();
    for i in 0..n {
        for j in 0..n {
            let at_sentinel = times.get(i, j) == c_inf && times.get(j, i) == c_inf;
            if at_sentinel != truth.is_indifferent(i, j) {
                v.push(format!("sentinel: ({i}, {j}) at c_inf is {at_sentinel}"));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if truth.is_strict(i, j) && truth.is_strict(j, k) && truth.is_strict(i, k) {
                    let lhs = 1.0 / times.get(i, j) + 1.0 / times.get(j, k);
                    let rhs = 1.0 / times.get(i, k);
                    if !close(lhs, rhs) {
                        v.push(format!("additivity: ({i}, {j}, {k}) gives {lhs} vs {rhs}"));
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !truth.is_indifferent(i, j) {
                continue;
            }
            for k in 0..n {
                if truth.is_strict(k, i) && truth.is_strict(k, j) && !close(times.get(k, i), times.get(k, j)) {
                    v.push(format!("indifference copy: t({k},{i}) != t({k},{j})"));
                }
                if truth.is_strict(i, k) && truth.is_strict(j, k) && !close(times.get(i, k), times.get(j, k)) {
                    v.push(format!("indifference copy: t({i},{k}) != t({j},{k})"));
                }
            }
        }
    }
    TimeAssumptionReport { violations: v }
}
