//! Time elicitation: ordinal answers plus consideration times.
//!
//! Each answered pair contributes its ranking to `R1`; strict rankings also
//! contribute the time it took to give them. Shorter times mean stronger
//! preferences, and `R2` is read off the time matrix. In efficient mode the
//! session closes `R1` transitively after every answer and deduces the times
//! of implied pairs through reciprocal additivity
//! `1/t_ik = 1/t_ij + 1/t_jk`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{unordered, Pair, Relation};
use crate::system::{default_consequences, Consequence, PreferenceSystem};

/// Default indifference sentinel, in seconds.
pub const DEFAULT_C_INF: f64 = 1e6;

/// Relative tolerance under which two times count as equal when building
/// `R2`. Deduced times carry floating-point roundoff; measured times are far
/// coarser than this.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Incomparable,
    IStrictlyPreferred,
    JStrictlyPreferred,
    Indifferent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAnswer {
    pub pair: Pair,
    pub verdict: Verdict,
    /// Seconds; only read for strict verdicts.
    pub elapsed: f64,
}

impl TimeAnswer {
    pub fn new(i: usize, j: usize, verdict: Verdict, elapsed: f64) -> Self {
        Self {
            pair: (i, j),
            verdict,
            elapsed,
        }
    }

    /// "`better` over `worse`, after `elapsed` seconds".
    pub fn strict(better: usize, worse: usize, elapsed: f64) -> Self {
        Self::new(better, worse, Verdict::IStrictlyPreferred, elapsed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TimeMode {
    Basic,
    #[default]
    Efficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub mode: TimeMode,
    pub c_inf: f64,
    pub tie_tolerance: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            mode: TimeMode::Efficient,
            c_inf: DEFAULT_C_INF,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }
}

impl TimeConfig {
    pub fn basic() -> Self {
        Self {
            mode: TimeMode::Basic,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_inf.is_finite() && self.c_inf > 0.0) {
            return Err(Error::InvalidConfig(format!("c_inf must be positive, got {}", self.c_inf)));
        }
        if !(self.tie_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("tie tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Square matrix of consideration times; `0` means "no time available".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMatrix {
    n: usize,
    c_inf: f64,
    t: Vec<f64>,
}

impl TimeMatrix {
    /// All zeros except the diagonal, which holds `c_inf`.
    pub fn new(n: usize, c_inf: f64) -> Self {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            t[i * n + i] = c_inf;
        }
        Self { n, c_inf, t }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.t[i * self.n + j] = value;
    }
}

/// `t_il · t_lj / (t_il + t_lj)`: the time of a two-step strict chain.
pub fn fill_up_time(t_il: f64, t_lj: f64) -> Result<f64> {
    for t in [t_il, t_lj] {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
    }
    Ok(t_il * t_lj / (t_il + t_lj))
}

/// One line of the session event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEvent {
    pub pair: Pair,
    pub verdict: Verdict,
    pub elapsed_ms: f64,
    pub seq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSession {
    consequences: Vec<Consequence>,
    config: TimeConfig,
    r1: Relation,
    c: Relation,
    times: TimeMatrix,
    presented: BTreeSet<Pair>,
    log: Vec<TimeEvent>,
}

impl TimeSession {
    pub fn new(n: usize, config: TimeConfig) -> Result<Self> {
        Self::with_consequences(default_consequences(n), config)
    }

    pub fn with_consequences(consequences: Vec<Consequence>, config: TimeConfig) -> Result<Self> {
        config.validate()?;
        let n = consequences.len();
        Ok(Self {
            consequences,
            config,
            r1: Relation::diagonal(n),
            c: Relation::empty(n),
            times: TimeMatrix::new(n, config.c_inf),
            presented: BTreeSet::new(),
            log: Vec::new(),
        })
    }

    /// Rebuilds a session by applying a logged answer stream.
    pub fn replay(consequences: Vec<Consequence>, config: TimeConfig, events: &[TimeEvent]) -> Result<Self> {
        let mut s = Self::with_consequences(consequences, config)?;
        for e in events {
            s.apply_answer(TimeAnswer {
                pair: e.pair,
                verdict: e.verdict,
                elapsed: e.elapsed_ms / 1000.0,
            })?;
        }
        Ok(s)
    }

    pub fn size(&self) -> usize {
        self.consequences.len()
    }

    pub fn config(&self) -> &TimeConfig {
        &self.config
    }

    pub fn r1(&self) -> &Relation {
        &self.r1
    }

    pub fn incomparable(&self) -> &Relation {
        &self.c
    }

    pub fn times(&self) -> &TimeMatrix {
        &self.times
    }

    /// Unordered pairs that were asked, as `(min, max)`.
    pub fn presented(&self) -> &BTreeSet<Pair> {
        &self.presented
    }

    pub fn log(&self) -> &[TimeEvent] {
        &self.log
    }

    pub fn is_decided(&self, i: usize, j: usize) -> bool {
        self.r1.contains(i, j) || self.r1.contains(j, i) || self.c.contains(i, j)
    }

    /// Unordered pairs `(i, j)`, `i < j`, whose status is still unknown.
    pub fn next_unknown_pairs(&self) -> Vec<Pair> {
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

    pub fn is_complete(&self) -> bool {
        self.next_unknown_pairs().is_empty()
    }

    pub fn apply_answer(&mut self, answer: TimeAnswer) -> Result<()> {
        let n = self.size();
        let (i, j) = answer.pair;
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, size: n });
            }
        }
        if i == j {
            return Err(Error::InvalidConfig(format!("pair ({i}, {i}) is not a question")));
        }
        if self.is_decided(i, j) {
            return Err(Error::PairAlreadyDecided(answer.pair));
        }
        let c_inf = self.config.c_inf;
        let strict = match answer.verdict {
            Verdict::IStrictlyPreferred => Some((i, j)),
            Verdict::JStrictlyPreferred => Some((j, i)),
            _ => None,
        };
        if strict.is_some() {
            if !(answer.elapsed > 0.0) {
                return Err(Error::NonPositiveTime(answer.elapsed));
            }
            if answer.elapsed >= c_inf {
                return Err(Error::TimeExceedsSentinel {
                    time: answer.elapsed,
                    c_inf,
                });
            }
        }

        match answer.verdict {
            Verdict::Incomparable => {
                self.c.insert_unchecked(i, j);
                self.c.insert_unchecked(j, i);
                self.times.set(i, j, 0.0);
                self.times.set(j, i, 0.0);
            }
            Verdict::Indifferent => {
                self.r1.insert_unchecked(i, j);
                self.r1.insert_unchecked(j, i);
                self.times.set(i, j, c_inf);
                self.times.set(j, i, c_inf);
            }
            Verdict::IStrictlyPreferred | Verdict::JStrictlyPreferred => {
                let (a, b) = strict.expect("strict verdict");
                self.r1.insert_unchecked(a, b);
                self.times.set(a, b, answer.elapsed);
                self.times.set(b, a, 0.0);
            }
        }
        self.presented.insert(unordered(i, j));
        self.log.push(TimeEvent {
            pair: answer.pair,
            verdict: answer.verdict,
            elapsed_ms: if strict.is_some() { answer.elapsed * 1000.0 } else { 0.0 },
            seq: self.log.len(),
        });

        if self.config.mode == TimeMode::Efficient {
            self.close_transitively()?;
        }
        Ok(())
    }

    fn close_transitively(&mut self) -> Result<()> {
        let hull = self.r1.transitive_hull();
        let new_pairs: Vec<Pair> = hull.iter().filter(|&(a, b)| !self.r1.contains(a, b)).collect();
        let mut deduced = Vec::with_capacity(new_pairs.len());
        for &(a, b) in &new_pairs {
            let t = if hull.contains(b, a) {
                self.config.c_inf
            } else {
                self.deduce_time(a, b)?
            };
            deduced.push(((a, b), t));
        }
        for ((a, b), t) in deduced {
            self.times.set(a, b, t);
        }
        self.r1 = hull;
        Ok(())
    }

    /// Finds a shortest `R1` path `a → b`, drops its indifference hops and
    /// folds the remaining strict hops pairwise.
    fn deduce_time(&self, a: usize, b: usize) -> Result<f64> {
        let n = self.size();
        let mut prev = vec![usize::MAX; n];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            if x == b {
                break;
            }
            for y in 0..n {
                if y != x && prev[y] == usize::MAX && self.r1.contains(x, y) {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[b] == usize::MAX {
            return Err(Error::Lp(format!("no path for implied pair ({a}, {b})")));
        }
        let mut hops = Vec::new();
        let mut cur = b;
        while cur != a {
            let p = prev[cur];
            hops.push((p, cur));
            cur = p;
        }
        hops.reverse();
        let strict: Vec<f64> = hops
            .iter()
            .filter(|&&(x, y)| !self.r1.contains(y, x))
            .map(|&(x, y)| self.times.get(x, y))
            .collect();
        let mut iter = strict.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidConfig(format!("implied pair ({a}, {b}) has no strict hop")))?;
        iter.try_fold(first, fill_up_time)
    }

    /// `R2 = {((i,j),(k,l)) : t_kl ≥ t_ij > 0}` over pairs of `R1`.
    pub fn build_r2(&self) -> BTreeSet<((usize, usize), (usize, usize))> {
        let pairs: Vec<(Pair, f64)> = self
            .r1
            .iter()
            .map(|(i, j)| ((i, j), self.times.get(i, j)))
            .collect();
        let tol = self.config.tie_tolerance;
        let mut r2 = BTreeSet::new();
        for &(x, tx) in &pairs {
            if !(tx > 0.0) {
                continue;
            }
            for &(y, ty) in &pairs {
                if ty - tx >= -tol * tx.abs().max(ty.abs()) {
                    r2.insert((x, y));
                }
            }
        }
        r2
    }

    pub fn system(&self) -> PreferenceSystem {
        PreferenceSystem::new(self.consequences.clone(), self.r1.clone(), self.build_r2())
            .expect("session relations are well formed")
    }

    /// Log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_up_examples() {
        assert!((fill_up_time(0.2, 0.3).unwrap() - 0.12).abs() < 1e-12);
        assert!((fill_up_time(0.7, 0.7).unwrap() - 0.35).abs() < 1e-12);
        let folded = fill_up_time(fill_up_time(0.2, 0.3).unwrap(), 0.6).unwrap();
        // Reciprocal additivity: 1/0.2 + 1/0.3 + 1/0.6 = 10.
        assert!((1.0 / folded - 10.0).abs() < 1e-9);
        assert_eq!(fill_up_time(0.0, 1.0), Err(Error::NonPositiveTime(0.0)));
    }

    #[test]
    fn indifference_sets_sentinel() {
        let mut s = TimeSession::new(3, TimeConfig::basic()).unwrap();
        s.apply_answer(TimeAnswer::new(1, 2, Verdict::Indifferent, 0.0)).unwrap();
        assert!(s.r1().contains(1, 2) && s.r1().contains(2, 1));
        assert_eq!(s.times().get(1, 2), DEFAULT_C_INF);
        assert_eq!(s.times().get(2, 1), DEFAULT_C_INF);
    }

    #[test]
    fn incomparable_leaves_r1() {
        let mut s = TimeSession::new(3, TimeConfig::basic()).unwrap();
        s.apply_answer(TimeAnswer::new(1, 2, Verdict::Incomparable, 3.0)).unwrap();
        assert_eq!(s.r1(), &Relation::diagonal(3));
        assert!(s.incomparable().contains(1, 2) && s.incomparable().contains(2, 1));
        assert_eq!(s.times().get(1, 2), 0.0);
        assert_eq!(s.next_unknown_pairs(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn efficient_mode_fills_implied_time() {
        let mut s = TimeSession::new(3, TimeConfig::default()).unwrap();
        s.apply_answer(TimeAnswer::strict(0, 1, 0.2)).unwrap();
        s.apply_answer(TimeAnswer::strict(1, 2, 0.3)).unwrap();
        assert!(s.r1().contains(0, 2));
        assert!((s.times().get(0, 2) - 0.12).abs() < 1e-12);
        assert!(s.next_unknown_pairs().is_empty());
    }

    #[test]
    fn indifference_hops_copy_times() {
        let mut s = TimeSession::new(3, TimeConfig::default()).unwrap();
        s.apply_answer(TimeAnswer::strict(0, 1, 0.4)).unwrap();
        s.apply_answer(TimeAnswer::new(1, 2, Verdict::Indifferent, 0.0)).unwrap();
        assert!(s.r1().contains(0, 2) && !s.r1().contains(2, 0));
        assert_eq!(s.times().get(0, 2), 0.4);
    }

    #[test]
    fn strict_answers_are_validated() {
        let mut s = TimeSession::new(2, TimeConfig::default()).unwrap();
        assert_eq!(
            s.apply_answer(TimeAnswer::strict(0, 1, 0.0)),
            Err(Error::NonPositiveTime(0.0))
        );
        assert!(matches!(
            s.apply_answer(TimeAnswer::strict(0, 1, 2e6)),
            Err(Error::TimeExceedsSentinel { .. })
        ));
        s.apply_answer(TimeAnswer::strict(0, 1, 1.0)).unwrap();
        assert_eq!(
            s.apply_answer(TimeAnswer::new(1, 0, Verdict::Indifferent, 0.0)),
            Err(Error::PairAlreadyDecided((1, 0)))
        );
    }

    #[test]
    fn r2_rule_from_times() {
        let mut s = TimeSession::new(4, TimeConfig::basic()).unwrap();
        s.apply_answer(TimeAnswer::strict(0, 1, 0.2)).unwrap();
        s.apply_answer(TimeAnswer::strict(2, 3, 0.3)).unwrap();
        s.apply_answer(TimeAnswer::new(0, 2, Verdict::Incomparable, 0.0)).unwrap();
        let r2 = s.build_r2();
        assert!(r2.contains(&((0, 1), (2, 3))));
        assert!(!r2.contains(&((2, 3), (0, 1))));
        // Diagonal exchanges are mutually indifferent.
        assert!(r2.contains(&((0, 0), (1, 1))) && r2.contains(&((1, 1), (0, 0))));
        assert!(r2.iter().all(|&(x, y)| x != (0, 2) && y != (0, 2)));
    }

    #[test]
    fn log_replays() {
        let mut s = TimeSession::new(3, TimeConfig::default()).unwrap();
        s.apply_answer(TimeAnswer::strict(0, 1, 0.25)).unwrap();
        s.apply_answer(TimeAnswer::new(2, 1, Verdict::JStrictlyPreferred, 0.5)).unwrap();
        let line = s.log_jsonl();
        assert!(line.starts_with(r#"{"pair":[0,1],"verdict":"I_STRICTLY_PREFERRED","elapsed_ms":250.0,"seq":0}"#));
        let again = TimeSession::replay(default_consequences(3), *s.config(), s.log()).unwrap();
        assert_eq!(again, s);
    }
}
