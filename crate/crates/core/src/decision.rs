//! Decisions under credal uncertainty with partially known preferences.
//!
//! Acts map states to consequences; the uncertainty about states is a credal
//! set given by its extreme points. Two choice functions are provided:
//! δ-interval dominance over generalized expectation intervals and
//! A|M-dominance (expectation dominance for every compatible utility and
//! every measure in the credal set). Both reduce to one small LP per
//! (act, competitor, extreme point) triple, because for fixed `u` the
//! expectation is linear in `π` and its extrema over a polytope are attained
//! at vertices.

use serde::{Deserialize, Serialize};

use crate::consistency::{
    add_representation_constraints, check_consistency, check_consistency_normalized, utility_model, Margin,
    CONSISTENCY_TOL,
};
use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::system::PreferenceSystem;

/// Slack allowed on LP optima before a dominance check fails.
pub const DOMINANCE_TOL: f64 = 1e-9;
const PROBABILITY_TOL: f64 = 1e-12;
/// Largest state space accepted by the brute-force vertex enumeration.
pub const MAX_ENUMERATED_STATES: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Act {
    pub name: String,
    pub outcomes: Vec<usize>,
}

impl Act {
    pub fn new(name: impl Into<String>, outcomes: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredalSet {
    pub states: Vec<String>,
    pub extreme_points: Vec<Vec<f64>>,
}

fn default_states(k: usize) -> Vec<String> {
    (1..=k).map(|s| format!("s{s}")).collect()
}

impl CredalSet {
    pub fn new(states: Vec<String>, extreme_points: Vec<Vec<f64>>) -> Result<Self> {
        let c = Self {
            states,
            extreme_points,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn precise(pi: Vec<f64>) -> Result<Self> {
        Self::new(default_states(pi.len()), vec![pi])
    }

    pub fn uniform(k: usize) -> Self {
        Self::precise(vec![1.0 / k as f64; k]).expect("uniform distribution is valid")
    }

    /// All probability vectors over `k` states.
    pub fn vacuous(k: usize) -> Self {
        let points = (0..k)
            .map(|s| (0..k).map(|t| if s == t { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(default_states(k), points).expect("unit vectors are valid")
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_precise(&self) -> bool {
        self.extreme_points.len() == 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.extreme_points.is_empty() {
            return Err(Error::EmptyCredalSet);
        }
        let k = self.states.len();
        for (idx, p) in self.extreme_points.iter().enumerate() {
            if p.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: p.len(),
                });
            }
            if p.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::InvalidProbability(format!("extreme point {idx} has a negative entry")));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > PROBABILITY_TOL {
                return Err(Error::InvalidProbability(format!(
                    "extreme point {idx} sums to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// Vertices of `{π : π ≥ 0, Σπ = 1, π_a ≥ π_b for (a, b) in ge}` by
    /// brute force over active constraint sets.
    pub fn from_comparisons(k: usize, ge: &[(usize, usize)]) -> Result<Self> {
        if k == 0 || k > MAX_ENUMERATED_STATES {
            return Err(Error::InvalidConfig(format!(
                "vertex enumeration supports 1..={MAX_ENUMERATED_STATES} states, got {k}"
            )));
        }
        for &(a, b) in ge {
            for index in [a, b] {
                if index >= k {
                    return Err(Error::IndexOutOfRange { index, size: k });
                }
            }
        }
        // Inequalities g·π ≥ 0: nonnegativity, then the comparisons.
        let mut rows: Vec<Vec<f64>> = (0..k)
            .map(|s| (0..k).map(|t| if s == t { 1.0 } else { 0.0 }).collect())
            .collect();
        for &(a, b) in ge {
            let mut g = vec![0.0; k];
            g[a] += 1.0;
            g[b] -= 1.0;
            rows.push(g);
        }
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        for subset in combinations(rows.len(), k - 1) {
            let mut a: Vec<Vec<f64>> = subset.iter().map(|&r| rows[r].clone()).collect();
            let mut rhs = vec![0.0; k - 1];
            a.push(vec![1.0; k]);
            rhs.push(1.0);
            let Some(pi) = solve_square(a, rhs) else { continue };
            let feasible = rows
                .iter()
                .all(|g| g.iter().zip(&pi).map(|(x, y)| x * y).sum::<f64>() >= -1e-12);
            if !feasible {
                continue;
            }
            let pi: Vec<f64> = pi.into_iter().map(|x| if x.abs() < 1e-12 { 0.0 } else { x }).collect();
            if !vertices
                .iter()
                .any(|v| v.iter().zip(&pi).all(|(x, y)| (x - y).abs() < 1e-9))
            {
                vertices.push(pi);
            }
        }
        vertices.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
        Self::new(default_states(k), vertices)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite"))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[row][c] -= f * a[col][c];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecisionRule {
    /// δ-interval dominance.
    Interval,
    /// A|M-dominance.
    #[default]
    Am,
}

/// Which consequences normalize utilities for interval computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    /// The system's own top and bottom when it has them, otherwise
    /// artificial ones.
    #[default]
    Auto,
    /// Always artificial top and bottom consequences.
    Adjoin,
}

/// Everything about a decision except the preference system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProblem {
    pub acts: Vec<Act>,
    pub credal: CredalSet,
    #[serde(default)]
    pub rule: DecisionRule,
    #[serde(default)]
    pub delta: f64,
    /// Margin enforced on strict parts when evaluating A|M-dominance over
    /// the closed relaxation of the representation set.
    #[serde(default)]
    pub strictness_epsilon: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl DecisionProblem {
    pub fn new(acts: Vec<Act>, credal: CredalSet, rule: DecisionRule) -> Self {
        Self {
            acts,
            credal,
            rule,
            delta: 0.0,
            strictness_epsilon: 0.0,
            normalization: Normalization::Auto,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.credal.validate()?;
        if self.acts.is_empty() {
            return Err(Error::InvalidConfig("no acts given".into()));
        }
        let k = self.credal.num_states();
        for act in &self.acts {
            if act.outcomes.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: act.outcomes.len(),
                });
            }
            if let Some(&index) = act.outcomes.iter().find(|&&a| a >= n) {
                return Err(Error::IndexOutOfRange { index, size: n });
            }
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidConfig(format!("granularity {} outside [0, 1)", self.delta)));
        }
        if !(self.strictness_epsilon >= 0.0) {
            return Err(Error::InvalidConfig("strictness_epsilon must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn all_acts(&self) -> Vec<usize> {
        (0..self.acts.len()).collect()
    }
}

/// A preference system together with a decision problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSystem {
    pub system: PreferenceSystem,
    #[serde(flatten)]
    pub problem: DecisionProblem,
}

impl DecisionSystem {
    pub fn new(system: PreferenceSystem, problem: DecisionProblem) -> Result<Self> {
        problem.validate(system.size())?;
        Ok(Self { system, problem })
    }

    pub fn intervals(&self) -> Result<Vec<(f64, f64)>> {
        self.problem
            .acts
            .iter()
            .map(|x| generalized_expectation_interval(&self.system, &self.problem, x))
            .collect()
    }

    pub fn choose(&self, w: &[usize]) -> Result<Vec<usize>> {
        choose(&self.system, &self.problem, w)
    }
}

/// `Σ_s π_s u(x(s))`.
pub fn expectation(u: &[f64], pi: &[f64], x: &Act) -> Result<f64> {
    if pi.len() != x.outcomes.len() {
        return Err(Error::DimensionMismatch {
            expected: x.outcomes.len(),
            got: pi.len(),
        });
    }
    if let Some(&index) = x.outcomes.iter().find(|&&a| a >= u.len()) {
        return Err(Error::IndexOutOfRange { index, size: u.len() });
    }
    Ok(pi.iter().zip(&x.outcomes).map(|(p, &a)| p * u[a]).sum())
}

fn normalized_system(system: &PreferenceSystem, mode: Normalization) -> (PreferenceSystem, usize, usize) {
    if mode == Normalization::Auto {
        if let Some((top, bottom)) = system.extremes().filter(|(t, b)| t != b) {
            return (system.clone(), top, bottom);
        }
    }
    system.adjoin_extremes()
}

/// Lower and upper generalized expectation of `x` over the closure of
/// `N^δ × M`.
pub fn generalized_expectation_interval(
    system: &PreferenceSystem,
    problem: &DecisionProblem,
    x: &Act,
) -> Result<(f64, f64)> {
    problem.validate(system.size())?;
    let (norm, top, bottom) = normalized_system(system, problem.normalization);
    let report = check_consistency_normalized(&norm, top, bottom)?;
    if !report.is_delta_consistent(problem.delta) {
        return Err(Error::NotDeltaConsistent {
            delta: problem.delta,
            epsilon_star: report.epsilon_star,
        });
    }
    let (mut lp, u) = utility_model(&norm, Some((top, bottom)), Sense::Minimize)?;
    add_representation_constraints(&mut lp, &norm, &u, Margin::Fixed(problem.delta));
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for pi in &problem.credal.extreme_points {
        let mut coef: Vec<(usize, f64)> = Vec::new();
        for (p, &a) in pi.iter().zip(&x.outcomes) {
            coef.push((u[a], *p));
        }
        lp.set_objective(Sense::Minimize, &coef);
        lower = lower.min(lp.solve_optimal()?.0);
        lp.set_objective(Sense::Maximize, &coef);
        upper = upper.max(lp.solve_optimal()?.0);
    }
    Ok((lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0)))
}

/// `D_A(w)`: acts whose lower expectation reaches every upper expectation
/// in `w`, their own included.
pub fn interval_dominance_choice(system: &PreferenceSystem, problem: &DecisionProblem, w: &[usize]) -> Result<Vec<usize>> {
    let intervals: Vec<(f64, f64)> = w
        .iter()
        .map(|&i| generalized_expectation_interval(system, problem, act(problem, i)?))
        .collect::<Result<_>>()?;
    let max_upper = intervals.iter().map(|iv| iv.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(w.iter()
        .zip(&intervals)
        .filter(|(_, iv)| iv.0 >= max_upper - DOMINANCE_TOL)
        .map(|(&i, _)| i)
        .collect())
}

fn act(problem: &DecisionProblem, i: usize) -> Result<&Act> {
    problem.acts.get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        size: problem.acts.len(),
    })
}

/// `P_A(w)`: acts whose expectation is at least every competitor's for all
/// utilities in the closed representation set and all extreme points.
pub fn am_dominance_choice(system: &PreferenceSystem, problem: &DecisionProblem, w: &[usize]) -> Result<Vec<usize>> {
    problem.validate(system.size())?;
    let report = check_consistency(system)?;
    if !report.consistent {
        return Err(Error::Inconsistent);
    }
    if problem.strictness_epsilon > report.epsilon_star + CONSISTENCY_TOL {
        return Err(Error::NotDeltaConsistent {
            delta: problem.strictness_epsilon,
            epsilon_star: report.epsilon_star,
        });
    }
    let (mut lp, u) = utility_model(system, None, Sense::Minimize)?;
    add_representation_constraints(&mut lp, system, &u, Margin::Fixed(problem.strictness_epsilon));
    let mut chosen = Vec::new();
    for &y in w {
        let ya = act(problem, y)?;
        let mut dominant = true;
        'rivals: for &x in w {
            if x == y {
                continue;
            }
            let xa = act(problem, x)?;
            for pi in &problem.credal.extreme_points {
                let mut coef: Vec<(usize, f64)> = Vec::new();
                for (s, p) in pi.iter().enumerate() {
                    coef.push((u[ya.outcomes[s]], *p));
                    coef.push((u[xa.outcomes[s]], -*p));
                }
                lp.set_objective(Sense::Minimize, &coef);
                let (min, _) = lp.solve_optimal()?;
                if min < -DOMINANCE_TOL {
                    dominant = false;
                    break 'rivals;
                }
            }
        }
        if dominant {
            chosen.push(y);
        }
    }
    Ok(chosen)
}

pub fn choose(system: &PreferenceSystem, problem: &DecisionProblem, w: &[usize]) -> Result<Vec<usize>> {
    match problem.rule {
        DecisionRule::Interval => interval_dominance_choice(system, problem, w),
        DecisionRule::Am => am_dominance_choice(system, problem, w),
    }
}
