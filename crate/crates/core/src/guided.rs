//! Statistically guided pair selection.
//!
//! A corpus of previously elicited orders is used to decide which pair to
//! present next: either the pair most often contained in the corpus, or the
//! pair whose orientation is best predicted by a subgroup of the corpus
//! described by pairs the current decision maker has already revealed.
//! Corpora are simulated from Mallows-type models over partial or total
//! orders with the symmetric-difference distance.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elicit::PairSelector;
use crate::error::{Error, Result};
use crate::relation::{unordered, Pair, Relation};
use crate::system::PreferenceSystem;

/// Largest ground set for which the exact sampler enumerates all partial
/// orders.
pub const EXACT_ENUMERATION_MAX: usize = 5;
/// Largest number of elicited-pair literals in a subgroup description.
pub const MAX_CONJUNCTION: usize = 3;
const QUALITY_TOL: f64 = 1e-12;

/// `|r1 Δ r2|`.
pub fn relation_distance(r1: &Relation, r2: &Relation) -> Result<usize> {
    r1.symmetric_difference_len(r2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorpusRepr", into = "CorpusRepr")]
pub struct OrderCorpus {
    pub ground_size: usize,
    pub orders: Vec<Relation>,
    pub weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CorpusRepr {
    n: usize,
    orders: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl TryFrom<CorpusRepr> for OrderCorpus {
    type Error = Error;

    fn try_from(r: CorpusRepr) -> Result<Self> {
        let orders = r
            .orders
            .into_iter()
            .map(|pairs| Relation::from_pairs(r.n, pairs))
            .collect::<Result<Vec<_>>>()?;
        OrderCorpus::new(r.n, orders, r.weights)
    }
}

impl From<OrderCorpus> for CorpusRepr {
    fn from(c: OrderCorpus) -> Self {
        CorpusRepr {
            n: c.ground_size,
            orders: c.orders.iter().map(Relation::pairs).collect(),
            weights: c.weights,
        }
    }
}

impl OrderCorpus {
    pub fn new(ground_size: usize, orders: Vec<Relation>, weights: Option<Vec<f64>>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for (k, o) in orders.iter().enumerate() {
            if o.ground_size() != ground_size {
                return Err(Error::SizeMismatch {
                    left: ground_size,
                    right: o.ground_size(),
                });
            }
            if !o.is_partial_order() {
                return Err(Error::NotPartialOrder(format!("corpus member {k}")));
            }
        }
        if let Some(w) = &weights {
            if w.len() != orders.len() {
                return Err(Error::DimensionMismatch {
                    expected: orders.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidConfig("corpus weights must be nonnegative with positive sum".into()));
            }
        }
        Ok(Self {
            ground_size,
            orders,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    fn weight(&self, k: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[k])
    }

    /// Weighted share of orders containing `(i, j)`.
    pub fn proportion(&self, i: usize, j: usize) -> f64 {
        let mut hit = 0.0;
        let mut total = 0.0;
        for (k, o) in self.orders.iter().enumerate() {
            let w = self.weight(k);
            total += w;
            if o.contains(i, j) {
                hit += w;
            }
        }
        hit / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OrderSupport {
    #[default]
    PartialOrders,
    TotalOrders,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MallowsModel {
    pub mode: Relation,
    pub lambda: f64,
    #[serde(default)]
    pub bimodal: bool,
    #[serde(default)]
    pub support: OrderSupport,
}

impl MallowsModel {
    pub fn new(mode: Relation, lambda: f64, bimodal: bool, support: OrderSupport) -> Result<Self> {
        let m = Self {
            mode,
            lambda,
            bimodal,
            support,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mode.is_partial_order() {
            return Err(Error::NotPartialOrder("Mallows mode".into()));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("spread λ must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Unnormalized log-probability of `r`.
    pub fn log_weight(&self, r: &Relation) -> f64 {
        let d = relation_distance(r, &self.mode).expect("same ground set") as f64;
        if !self.bimodal {
            return -d / self.lambda;
        }
        let d_inv = relation_distance(r, &self.mode.inverse()).expect("same ground set") as f64;
        let m = d.min(d_inv);
        -m / self.lambda + (0.5 * ((-(d - m) / self.lambda).exp() + (-(d_inv - m) / self.lambda).exp())).ln()
    }
}

fn is_transitive_strict(n: usize, strict: &[bool]) -> bool {
    for i in 0..n {
        for k in 0..n {
            if !strict[i * n + k] {
                continue;
            }
            for j in 0..n {
                if strict[k * n + j] && !strict[i * n + j] {
                    return false;
                }
            }
        }
    }
    true
}

/// Every partial order (reflexive, antisymmetric, transitive) on `n`
/// elements, for `n ≤ 5`.
pub fn enumerate_partial_orders(n: usize) -> Result<Vec<Relation>> {
    if n > EXACT_ENUMERATION_MAX {
        return Err(Error::InvalidConfig(format!(
            "exact enumeration is limited to n ≤ {EXACT_ENUMERATION_MAX}"
        )));
    }
    let pairs: Vec<Pair> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    let mut strict = vec![false; n * n];
    for code in 0..total {
        strict.iter_mut().for_each(|b| *b = false);
        let mut c = code;
        for &(i, j) in &pairs {
            match c % 3 {
                1 => strict[i * n + j] = true,
                2 => strict[j * n + i] = true,
                _ => {}
            }
            c /= 3;
        }
        if is_transitive_strict(n, &strict) {
            let mut r = Relation::diagonal(n);
            for i in 0..n {
                for j in 0..n {
                    if strict[i * n + j] {
                        r.insert_unchecked(i, j);
                    }
                }
            }
            out.push(r);
        }
    }
    Ok(out)
}

/// A linear extension of a partial order, listed best first. Among the
/// available elements the smallest index goes first.
pub fn linear_extension(order: &Relation) -> Vec<usize> {
    let n = order.ground_size();
    let strict = order.strict_part();
    let mut placed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let next = (0..n)
            .find(|&x| !placed[x] && (0..n).all(|y| placed[y] || !strict.contains(y, x)))
            .unwrap_or_else(|| (0..n).find(|&x| !placed[x]).expect("elements remain"));
        placed[next] = true;
        out.push(next);
    }
    out
}

/// Total order (with diagonal) from a best-first ranking.
pub fn total_order(ranking: &[usize]) -> Relation {
    let n = ranking.len();
    let mut r = Relation::diagonal(n);
    for a in 0..n {
        for b in a + 1..n {
            r.insert_unchecked(ranking[a], ranking[b]);
        }
    }
    r
}

/// Repeated-insertion sampling of a ranking with `P(L) ∝ φ^{K(L, center)}`
/// where `K` counts discordant pairs.
pub fn repeated_insertion<R: Rng>(center: &[usize], phi: f64, rng: &mut R) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(center.len());
    for (k, &item) in center.iter().enumerate() {
        let weights: Vec<f64> = (0..=k).map(|j| phi.powi(j as i32)).collect();
        let j = WeightedIndex::new(&weights).expect("φ^0 = 1").sample(rng);
        out.insert(k - j, item);
    }
    out
}

/// Draws `count` orders from the model.
///
/// Total-order support uses repeated insertion around a linear extension of
/// the mode (mirrored with probability ½ for bimodal models). Partial orders
/// are drawn exactly for `n ≤ 5` by enumeration; for larger `n` by
/// sampling-importance-resampling with a proposal that draws a linear order
/// `L` near the mode, keeps each `L`-consistent pair independently and
/// closes transitively.
pub fn sample_corpus(model: &MallowsModel, count: usize, seed: u64) -> Result<OrderCorpus> {
    model.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("corpus size must be at least 1".into()));
    }
    let n = model.mode.ground_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders = match model.support {
        OrderSupport::TotalOrders => {
            let center = linear_extension(&model.mode);
            let phi = (-2.0 / model.lambda).exp();
            (0..count)
                .map(|_| {
                    let mut l = repeated_insertion(&center, phi, &mut rng);
                    if model.bimodal && rng.gen_bool(0.5) {
                        l.reverse();
                    }
                    total_order(&l)
                })
                .collect()
        }
        OrderSupport::PartialOrders if n <= EXACT_ENUMERATION_MAX => {
            let all = enumerate_partial_orders(n)?;
            let logw: Vec<f64> = all.iter().map(|r| model.log_weight(r)).collect();
            let pick = categorical(&logw)?;
            (0..count).map(|_| all[pick.sample(&mut rng)].clone()).collect()
        }
        OrderSupport::PartialOrders => return sample_corpus_approximate(model, count, seed),
    };
    OrderCorpus::new(n, orders, None)
}

/// Sampling-importance-resampling draw of partial orders, used by
/// [`sample_corpus`] above the exact enumeration limit. Available at every
/// `n` so that it can be compared with exact sampling.
pub fn sample_corpus_approximate(model: &MallowsModel, count: usize, seed: u64) -> Result<OrderCorpus> {
    model.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("corpus size must be at least 1".into()));
    }
    let n = model.mode.ground_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool_size = (40 * count).max(4000);
    let unimodal = MallowsModel {
        bimodal: false,
        ..model.clone()
    };
    let main = importance_pool(&unimodal, pool_size, &mut rng);
    let mirrored = if model.bimodal {
        let inv = MallowsModel {
            mode: model.mode.inverse(),
            ..unimodal.clone()
        };
        Some(importance_pool(&inv, pool_size, &mut rng))
    } else {
        None
    };
    let main_pick = categorical(&main.1)?;
    let mirrored_pick = mirrored.as_ref().map(|m| categorical(&m.1)).transpose()?;
    let orders = (0..count)
        .map(|_| match (&mirrored, &mirrored_pick) {
            (Some(m), Some(p)) if rng.gen_bool(0.5) => m.0[p.sample(&mut rng)].clone(),
            _ => main.0[main_pick.sample(&mut rng)].clone(),
        })
        .collect();
    OrderCorpus::new(n, orders, None)
}

fn categorical(logw: &[f64]) -> Result<WeightedIndex<f64>> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    WeightedIndex::new(&w).map_err(|e| Error::InvalidConfig(format!("degenerate sampling weights: {e}")))
}

/// Proposal draws with their log importance weights.
fn importance_pool<R: Rng>(model: &MallowsModel, size: usize, rng: &mut R) -> (Vec<Relation>, Vec<f64>) {
    let n = model.mode.ground_size();
    let center = linear_extension(&model.mode);
    let mut rank = vec![0; n];
    for (pos, &x) in center.iter().enumerate() {
        rank[x] = pos;
    }
    let phi = (-2.0 / model.lambda).exp();
    let all_pairs = n * (n - 1) / 2;
    let mode_covers = model.mode.hasse_edges().len();
    let mode_strict = model.mode.strict_part().len();
    let missing = all_pairs - mode_strict;
    let rho_mode = if mode_covers + missing == 0 {
        0.5
    } else {
        (mode_covers as f64 / (mode_covers + missing) as f64).clamp(0.05, 0.95)
    };
    // Mixing in spread-out keep rates stops sparse or dense orders far from
    // the mode from receiving vanishing proposal mass.
    let rhos = [rho_mode, 0.2, 0.5, 0.8];
    let mut cache: HashMap<Relation, f64> = HashMap::new();
    let mut orders = Vec::with_capacity(size);
    let mut logw = Vec::with_capacity(size);
    for _ in 0..size {
        let l = repeated_insertion(&center, phi, rng);
        let rho = rhos[rng.gen_range(0..rhos.len())];
        let mut r = Relation::diagonal(n);
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(rho) {
                    r.insert_unchecked(l[a], l[b]);
                }
            }
        }
        let p = r.transitive_hull();
        let w = *cache.entry(p.clone()).or_insert_with(|| {
            let covers = p.hasse_edges().len() as f64;
            let strict = p.strict_part().len() as f64;
            let keep: Vec<f64> = rhos
                .iter()
                .map(|rho| covers * rho.ln() + (all_pairs as f64 - strict) * (1.0 - rho).ln())
                .collect();
            let top = keep.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_keep = top + (keep.iter().map(|k| (k - top).exp()).sum::<f64>() / rhos.len() as f64).ln();
            let log_q = log_extension_mass(&p, &rank, phi) + log_keep;
            model.log_weight(&p) - log_q
        });
        orders.push(p);
        logw.push(w);
    }
    (orders, logw)
}

/// `ln Σ_{L extends order} φ^{K(L, center)}` by dynamic programming over
/// the set of already placed elements.
fn log_extension_mass(order: &Relation, rank: &[usize], phi: f64) -> f64 {
    let n = order.ground_size();
    let mut preds = vec![0usize; n];
    for (i, j) in order.strict_part().iter() {
        preds[j] |= 1 << i;
    }
    let mut f = vec![0.0f64; 1 << n];
    f[0] = 1.0;
    for set in 0..(1usize << n) {
        if f[set] == 0.0 {
            continue;
        }
        for x in 0..n {
            if set & (1 << x) != 0 || preds[x] & !set != 0 {
                continue;
            }
            let jumped = (0..n)
                .filter(|&y| y != x && set & (1 << y) == 0 && rank[y] < rank[x])
                .count();
            f[set | (1 << x)] += f[set] * phi.powi(jumped as i32);
        }
    }
    f[(1 << n) - 1].ln()
}

/// Orientation of one of the `undecided` pairs most often contained in the
/// corpus, with its proportion. Ties go to the lexicographically smallest
/// ordered pair.
pub fn proportion_next_pair(corpus: &OrderCorpus, undecided: &[Pair]) -> Result<(Pair, f64)> {
    let (tied, q) = proportion_candidates(corpus, undecided)?;
    Ok((tied[0], q))
}

/// All orientations attaining the largest proportion, sorted.
pub fn proportion_candidates(corpus: &OrderCorpus, undecided: &[Pair]) -> Result<(Vec<Pair>, f64)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let scored: Vec<(Pair, f64)> = undecided
        .iter()
        .flat_map(|&(i, j)| [(i, j), (j, i)])
        .map(|p| (p, corpus.proportion(p.0, p.1)))
        .collect();
    best_of(scored).ok_or(Error::NoUndecidedPairs)
}

fn best_of(scored: Vec<(Pair, f64)>) -> Option<(Vec<Pair>, f64)> {
    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<Pair> = scored
        .into_iter()
        .filter(|s| s.1 >= best - QUALITY_TOL)
        .map(|s| s.0)
        .collect();
    tied.sort_unstable();
    tied.dedup();
    (!tied.is_empty()).then_some((tied, best))
}

/// Piatetsky-Shapiro quality `n (p − p0)`.
pub fn piatetsky_shapiro(n: f64, p: f64, p0: f64) -> f64 {
    n * (p - p0)
}

struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for k in 0..len {
            if f(k) {
                words[k / 64] |= 1 << (k % 64);
            }
        }
        Self { words }
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn mass(&self, weights: Option<&[f64]>) -> f64 {
        match weights {
            None => self.words.iter().map(|w| w.count_ones() as f64).sum(),
            Some(ws) => ws
                .iter()
                .enumerate()
                .filter(|(k, _)| self.words[k / 64] >> (k % 64) & 1 == 1)
                .map(|(_, w)| w)
                .sum(),
        }
    }
}

/// Subgroup-discovery choice of the next pair.
///
/// Subgroups are the corpus orders containing every pair of a conjunction of
/// at most three `elicited` pairs. For each orientation `t` of an undecided
/// pair the best quality `n (p − p0)` is taken over all such subgroups,
/// where `p` is the share of subgroup orders containing `t` and `p0` the
/// share in the whole corpus; the empty conjunction has quality 0. The
/// orientation with the best quality wins, ties going to the
/// lexicographically smallest ordered pair. When no subgroup improves on
/// the corpus the proportion heuristic decides, with quality 0.
pub fn subgroup_next_pair(corpus: &OrderCorpus, elicited: &[Pair], undecided: &[Pair]) -> Result<(Pair, f64)> {
    let (tied, q) = subgroup_candidates(corpus, elicited, undecided)?;
    Ok((tied[0], q))
}

/// All orientations attaining the best subgroup quality (or, when no
/// subgroup helps, the best proportion), sorted.
pub fn subgroup_candidates(corpus: &OrderCorpus, elicited: &[Pair], undecided: &[Pair]) -> Result<(Vec<Pair>, f64)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if undecided.is_empty() {
        return Err(Error::NoUndecidedPairs);
    }
    let m = corpus.len();
    let weights = corpus.weights.as_deref();
    let member = |p: Pair| Bits::from_fn(m, |k| corpus.orders[k].contains(p.0, p.1));
    let total = Bits::from_fn(m, |_| true).mass(weights);

    let literals: Vec<Bits> = elicited.iter().map(|&p| member(p)).collect();
    let mut conjunctions: Vec<(Bits, f64)> = Vec::new();
    let mut stack: Vec<(usize, Bits, usize)> = literals
        .iter()
        .enumerate()
        .map(|(k, b)| (k, Bits { words: b.words.clone() }, 1))
        .collect();
    while let Some((last, bits, size)) = stack.pop() {
        let mass = bits.mass(weights);
        if mass <= 0.0 {
            continue;
        }
        if size < MAX_CONJUNCTION {
            for next in last + 1..literals.len() {
                stack.push((next, bits.and(&literals[next]), size + 1));
            }
        }
        conjunctions.push((bits, mass));
    }

    let scored: Vec<(Pair, f64)> = undecided
        .iter()
        .flat_map(|&(i, j)| [(i, j), (j, i)])
        .map(|t| {
            let target = member(t);
            let p0 = target.mass(weights) / total;
            let quality = conjunctions
                .iter()
                .map(|(bits, mass)| {
                    let hit = bits.and(&target).mass(weights);
                    piatetsky_shapiro(*mass, hit / mass, p0)
                })
                .fold(0.0, f64::max);
            (t, quality)
        })
        .collect();
    let (tied, quality) = best_of(scored).expect("undecided is nonempty");
    if quality <= QUALITY_TOL {
        let (tied, _) = proportion_candidates(corpus, undecided)?;
        return Ok((tied, 0.0));
    }
    Ok((tied, quality))
}

/// How selectors resolve exact ties between equally good pairs.
#[derive(Debug, Clone)]
pub enum TieBreak {
    Lexicographic,
    Random(ChaCha8Rng),
}

impl TieBreak {
    pub fn random(seed: u64) -> Self {
        TieBreak::Random(ChaCha8Rng::seed_from_u64(seed))
    }

    fn pick(&mut self, tied: &[Pair]) -> Pair {
        match self {
            TieBreak::Lexicographic => tied[0],
            TieBreak::Random(rng) => tied[rng.gen_range(0..tied.len())],
        }
    }
}

fn pending_match(pending: &[Pair], (i, j): Pair) -> Result<Pair> {
    pending
        .iter()
        .copied()
        .find(|&p| p == (i, j) || p == (j, i))
        .ok_or(Error::NoUndecidedPairs)
}

/// Presents pairs by decreasing corpus proportion.
#[derive(Debug, Clone)]
pub struct ProportionSelector {
    pub corpus: OrderCorpus,
    pub tie_break: TieBreak,
}

impl ProportionSelector {
    pub fn new(corpus: OrderCorpus) -> Self {
        Self {
            corpus,
            tie_break: TieBreak::Lexicographic,
        }
    }
}

impl PairSelector for ProportionSelector {
    fn select(&mut self, pending: &[Pair], _current: &PreferenceSystem) -> Result<Pair> {
        let (tied, _) = proportion_candidates(&self.corpus, pending)?;
        pending_match(pending, self.tie_break.pick(&tied))
    }
}

/// Presents the pair best predicted by subgroups built from the decision
/// maker's strict preferences revealed so far.
#[derive(Debug, Clone)]
pub struct SubgroupSelector {
    pub corpus: OrderCorpus,
    pub tie_break: TieBreak,
}

impl SubgroupSelector {
    pub fn new(corpus: OrderCorpus) -> Self {
        Self {
            corpus,
            tie_break: TieBreak::Lexicographic,
        }
    }
}

impl PairSelector for SubgroupSelector {
    fn select(&mut self, pending: &[Pair], current: &PreferenceSystem) -> Result<Pair> {
        let elicited: Vec<Pair> = current.r1().strict_part().pairs();
        let undecided: Vec<Pair> = pending.iter().map(|&(i, j)| unordered(i, j)).collect();
        let (tied, _) = subgroup_candidates(&self.corpus, &elicited, &undecided)?;
        pending_match(pending, self.tie_break.pick(&tied))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Relation {
        total_order(&(0..n).collect::<Vec<_>>())
    }

    #[test]
    fn distance_examples() {
        let c = chain(3);
        assert_eq!(relation_distance(&c, &c).unwrap(), 0);
        assert_eq!(relation_distance(&c, &c.inverse()).unwrap(), 6);
        let mut d = Relation::diagonal(3);
        let before = d.clone();
        d.insert(0, 1).unwrap();
        assert_eq!(relation_distance(&before, &d).unwrap(), 1);
    }

    #[test]
    fn poset_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| enumerate_partial_orders(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 3, 19, 219, 4231]);
    }

    #[test]
    fn proportion_examples() {
        let c = chain(2);
        let corpus = OrderCorpus::new(2, vec![c.clone(), c.clone(), c], None).unwrap();
        assert_eq!(proportion_next_pair(&corpus, &[(0, 1)]).unwrap(), ((0, 1), 1.0));
        let split = OrderCorpus::new(3, vec![chain(3), chain(3).inverse()], None).unwrap();
        assert_eq!(proportion_next_pair(&split, &[(1, 2), (0, 1)]).unwrap(), ((0, 1), 0.5));
    }

    #[test]
    fn quality_arithmetic() {
        assert!((piatetsky_shapiro(40.0, 0.9, 0.5) - 16.0).abs() < 1e-12);
        assert_eq!(piatetsky_shapiro(100.0, 0.3, 0.3), 0.0);
    }

    #[test]
    fn subgroup_without_evidence_is_proportion() {
        let corpus = OrderCorpus::new(3, vec![chain(3), chain(3), chain(3).inverse()], None).unwrap();
        let undecided = [(0, 1), (0, 2), (1, 2)];
        let (p, q) = subgroup_next_pair(&corpus, &[], &undecided).unwrap();
        assert_eq!(q, 0.0);
        assert_eq!(p, proportion_next_pair(&corpus, &undecided).unwrap().0);
    }

    #[test]
    fn inverse_mode_subgroup_predicts_inverse() {
        let corpus = OrderCorpus::new(4, vec![chain(4), chain(4), chain(4).inverse(), chain(4).inverse()], None).unwrap();
        let (p, q) = subgroup_next_pair(&corpus, &[(3, 2)], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(p, (1, 0));
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corpus_rejects_non_orders() {
        let bad = Relation::from_pairs(2, [(0, 1), (1, 0), (0, 0), (1, 1)]).unwrap();
        assert!(OrderCorpus::new(2, vec![bad], None).is_err());
        assert_eq!(OrderCorpus::new(2, vec![], None), Err(Error::EmptyCorpus));
    }

    #[test]
    fn corpus_json_round_trip() {
        let corpus = OrderCorpus::new(3, vec![chain(3)], None).unwrap();
        let s = serde_json::to_string(&corpus).unwrap();
        assert!(s.starts_with("{\"n\":3,\"orders\":[[[0,0],[0,1]"));
        let back: OrderCorpus = serde_json::from_str(&s).unwrap();
        assert_eq!(back, corpus);
    }

    #[test]
    fn tiny_spread_returns_the_mode() {
        let model = MallowsModel::new(chain(4), 1e-3, false, OrderSupport::PartialOrders).unwrap();
        let corpus = sample_corpus(&model, 50, 7).unwrap();
        assert!(corpus.orders.iter().all(|o| *o == chain(4)));
        let total = MallowsModel::new(chain(6), 1e-3, false, OrderSupport::TotalOrders).unwrap();
        assert!(sample_corpus(&total, 50, 7).unwrap().orders.iter().all(|o| *o == chain(6)));
    }

    #[test]
    fn extension_mass_counts_linear_extensions() {
        // Antichain on 4 elements: 4! extensions at φ = 1.
        let rank = [0, 1, 2, 3];
        let m = log_extension_mass(&Relation::diagonal(4), &rank, 1.0).exp();
        assert!((m - 24.0).abs() < 1e-9);
        // Only the center ranking has K = 0.
        let m0 = log_extension_mass(&Relation::diagonal(4), &rank, 0.0).exp();
        assert!((m0 - 1.0).abs() < 1e-12);
    }
}
