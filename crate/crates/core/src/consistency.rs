//! Linear-programming view of consistency.
//!
//! A system is consistent when some `u: A → [0,1]` represents `R1` and `R2`
//! with strict inequalities on their strict parts. Strictness is encoded by
//! a shared slack `ε` that the LP maximizes; the optimum `ε*` answers both
//! plain consistency (`ε* > tol`) and δ-consistency (`ε* ≥ δ`) under
//! normalization `u(a^*) = 1`, `u(a_*) = 0`.
//!
//! Constraints implied by chains of other constraints are dropped before the
//! model is handed to the solver: for `ε ≥ 0` a chain `x ≥ y + ε ≥ z + 2ε`
//! already forces `x ≥ z + ε`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome, Sense};
use crate::relation::Pair;
use crate::system::PreferenceSystem;

/// Numerical threshold separating consistent from inconsistent systems.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Largest primal violation accepted from the solver.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    pub values: Vec<f64>,
}

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest margin by which `self` satisfies the representation
    /// conditions of `system`: `min` over strict parts of the differences,
    /// minus the worst equality violation. Positive means a strict
    /// representation.
    pub fn representation_margin(&self, system: &PreferenceSystem) -> f64 {
        let u = &self.values;
        let d = |(i, j): Pair| u[i] - u[j];
        let r1 = system.r1();
        let mut margin = f64::INFINITY;
        let mut eq_violation: f64 = 0.0;
        for (i, j) in r1.iter() {
            if r1.contains(j, i) {
                eq_violation = eq_violation.max(d((i, j)).abs());
            } else {
                margin = margin.min(d((i, j)));
            }
        }
        let r2 = system.r2();
        for &(x, y) in r2 {
            if r2.contains(&(y, x)) {
                eq_violation = eq_violation.max((d(x) - d(y)).abs());
            } else {
                margin = margin.min(d(x) - d(y));
            }
        }
        margin.min(1.0) - eq_violation
    }
}

/// How the strict parts are separated in a model.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Margin {
    /// Shared slack variable (column index).
    Slack(usize),
    /// Fixed constant `δ ≥ 0`.
    Fixed(f64),
}

/// Representation LP together with the column layout.
#[derive(Debug, Clone)]
pub struct RepresentationLp {
    pub lp: LinearProgram,
    pub utility_vars: Vec<usize>,
    pub epsilon_var: usize,
    pub normalization: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub epsilon_star: f64,
    pub witness: Option<UtilityVector>,
    pub normalized: bool,
}

impl ConsistencyReport {
    /// `N^δ_A ≠ ∅`. Only meaningful for normalized reports; for `δ = 0` it
    /// coincides with plain consistency.
    pub fn is_delta_consistent(&self, delta: f64) -> bool {
        self.consistent && self.epsilon_star >= delta - CONSISTENCY_TOL
    }
}

/// Union-find over abstract node ids.
struct Classes {
    parent: Vec<usize>,
}

impl Classes {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Given equality edges and strict edges over `n` abstract nodes, returns
/// a smaller set of equality and strict edges generating the same
/// constraints for any nonnegative margin.
pub(crate) fn reduce_order_constraints(
    n: usize,
    equal: &[(usize, usize)],
    strict: &[(usize, usize)],
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut classes = Classes::new(n);
    for &(a, b) in equal {
        classes.union(a, b);
    }
    let mut eq_out = Vec::new();
    let mut touched = BTreeSet::new();
    for &(a, b) in equal {
        touched.insert(a);
        touched.insert(b);
    }
    for &x in &touched {
        let root = classes.find(x);
        if root != x {
            eq_out.push((x, root));
        }
    }

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut self_loop = None;
    for &(a, b) in strict {
        let (ca, cb) = (classes.find(a), classes.find(b));
        if ca == cb {
            self_loop.get_or_insert((a, b));
        } else {
            edges.insert((ca, cb));
        }
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &edges {
        adj.entry(a).or_default().push(b);
    }
    let reaches = |from: usize, to: usize, skip: (usize, usize)| -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if let Some(next) = adj.get(&x) {
                for &y in next {
                    if (x, y) == skip {
                        continue;
                    }
                    if y == to {
                        return true;
                    }
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
        }
        false
    };
    let acyclic = self_loop.is_none() && edges.iter().all(|&(a, b)| !reaches(b, a, (usize::MAX, usize::MAX)));
    let mut strict_out: Vec<(usize, usize)> = if acyclic {
        edges
            .iter()
            .copied()
            .filter(|&(a, b)| !reaches(a, b, (a, b)))
            .collect()
    } else {
        edges.iter().copied().collect()
    };
    if let Some(e) = self_loop {
        strict_out.push(e);
    }
    (eq_out, strict_out)
}

/// Adds the representation constraints of `system` over the given utility
/// columns.
pub(crate) fn add_representation_constraints(
    lp: &mut LinearProgram,
    system: &PreferenceSystem,
    u: &[usize],
    margin: Margin,
) {
    let n = system.size();
    let r1 = system.r1();

    let mut eq1 = Vec::new();
    let mut strict1 = Vec::new();
    for (i, j) in r1.iter() {
        if i == j {
            continue;
        }
        if r1.contains(j, i) {
            if i < j {
                eq1.push((i, j));
            }
        } else {
            strict1.push((i, j));
        }
    }
    let (eq1, strict1) = reduce_order_constraints(n, &eq1, &strict1);
    for (a, b) in eq1 {
        lp.add_constraint(format!("i1_{a}_{b}"), vec![(u[a], 1.0), (u[b], -1.0)], Cmp::Eq, 0.0);
    }
    for (a, b) in strict1 {
        push_strict(lp, format!("p1_{a}_{b}"), vec![(u[a], 1.0), (u[b], -1.0)], margin);
    }

    // Exchange nodes: each distinct R1 pair occurring in R2.
    let r2 = system.r2();
    let mut nodes: Vec<Pair> = r2.iter().flat_map(|&(x, y)| [x, y]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let id = |p: Pair| nodes.binary_search(&p).expect("exchange node");
    let mut eq2 = Vec::new();
    let mut strict2 = Vec::new();
    // All diagonal exchanges have difference 0; tie them together.
    let diagonals: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(_, p)| p.0 == p.1)
        .map(|(k, _)| k)
        .collect();
    for w in diagonals.windows(2) {
        eq2.push((w[0], w[1]));
    }
    for &(x, y) in r2 {
        if r2.contains(&(y, x)) {
            if x < y {
                eq2.push((id(x), id(y)));
            }
        } else {
            strict2.push((id(x), id(y)));
        }
    }
    let (eq2, strict2) = reduce_order_constraints(nodes.len(), &eq2, &strict2);
    let diff = |a: usize, b: usize| -> Vec<(usize, f64)> {
        let (x, y) = (nodes[a], nodes[b]);
        vec![(u[x.0], 1.0), (u[x.1], -1.0), (u[y.0], -1.0), (u[y.1], 1.0)]
    };
    for (a, b) in eq2 {
        let (x, y) = (nodes[a], nodes[b]);
        lp.add_constraint(
            format!("i2_{}_{}_{}_{}", x.0, x.1, y.0, y.1),
            diff(a, b),
            Cmp::Eq,
            0.0,
        );
    }
    for (a, b) in strict2 {
        let (x, y) = (nodes[a], nodes[b]);
        push_strict(lp, format!("p2_{}_{}_{}_{}", x.0, x.1, y.0, y.1), diff(a, b), margin);
    }
}

fn push_strict(lp: &mut LinearProgram, name: String, mut terms: Vec<(usize, f64)>, margin: Margin) {
    match margin {
        Margin::Slack(eps) => {
            terms.push((eps, -1.0));
            lp.add_constraint(name, terms, Cmp::Ge, 0.0);
        }
        Margin::Fixed(delta) => lp.add_constraint(name, terms, Cmp::Ge, delta),
    }
}

pub(crate) fn validate_normalization(system: &PreferenceSystem, top: usize, bottom: usize) -> Result<()> {
    let n = system.size();
    for index in [top, bottom] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, size: n });
        }
    }
    if top == bottom {
        return Err(Error::InvalidConfig("top and bottom consequence coincide".into()));
    }
    let r1 = system.r1();
    if (0..n).any(|a| a != top && !r1.contains(top, a)) {
        return Err(Error::NotExtreme {
            index: top,
            role: "maximal",
        });
    }
    for a in 0..n {
        if a != bottom && !r1.contains(a, bottom) {
            return Err(Error::NotExtreme {
                index: bottom,
                role: "minimal",
            });
        }
    }
    Ok(())
}

/// Utility columns `u_0..u_{n-1}` in `[0,1]` (pinned at the normalization
/// elements) and the representation constraints.
pub(crate) fn utility_model(
    system: &PreferenceSystem,
    normalization: Option<(usize, usize)>,
    sense: Sense,
) -> Result<(LinearProgram, Vec<usize>)> {
    if let Some((top, bottom)) = normalization {
        validate_normalization(system, top, bottom)?;
    }
    let mut lp = LinearProgram::new(sense);
    let u: Vec<usize> = (0..system.size())
        .map(|i| {
            let (lo, hi) = match normalization {
                Some((top, _)) if i == top => (1.0, 1.0),
                Some((_, bottom)) if i == bottom => (0.0, 0.0),
                _ => (0.0, 1.0),
            };
            lp.add_var(format!("u{i}"), lo, hi, 0.0)
        })
        .collect();
    Ok((lp, u))
}

pub fn build_representation_lp(
    system: &PreferenceSystem,
    normalization: Option<(usize, usize)>,
) -> Result<RepresentationLp> {
    let (mut lp, u) = utility_model(system, normalization, Sense::Maximize)?;
    let eps = lp.add_var("eps", 0.0, 1.0, 1.0);
    add_representation_constraints(&mut lp, system, &u, Margin::Slack(eps));
    Ok(RepresentationLp {
        lp,
        utility_vars: u,
        epsilon_var: eps,
        normalization,
    })
}

fn solve_report(model: &RepresentationLp) -> Result<ConsistencyReport> {
    let normalized = model.normalization.is_some();
    match model.lp.solve()? {
        LpOutcome::Infeasible => Ok(ConsistencyReport {
            consistent: false,
            epsilon_star: 0.0,
            witness: None,
            normalized,
        }),
        LpOutcome::Unbounded => Err(Error::Lp("representation LP reported unbounded".into())),
        LpOutcome::Optimal { objective, values } => {
            let violation = model.lp.max_violation(&values);
            if violation > FEASIBILITY_TOL {
                return Err(Error::Lp(format!(
                    "solver returned a point violating the model by {violation:e}"
                )));
            }
            let consistent = objective > CONSISTENCY_TOL;
            let witness = consistent.then(|| {
                UtilityVector::new(model.utility_vars.iter().map(|&v| values[v]).collect())
            });
            Ok(ConsistencyReport {
                consistent,
                epsilon_star: objective.max(0.0),
                witness,
                normalized,
            })
        }
    }
}

/// Consistency over the `[0,1]` box without normalization.
pub fn check_consistency(system: &PreferenceSystem) -> Result<ConsistencyReport> {
    solve_report(&build_representation_lp(system, None)?)
}

/// Consistency with `u(top) = 1`, `u(bottom) = 0`; `ε*` then is the largest
/// granularity `δ` with `N^δ_A ≠ ∅`.
pub fn check_consistency_normalized(system: &PreferenceSystem, top: usize, bottom: usize) -> Result<ConsistencyReport> {
    solve_report(&build_representation_lp(system, Some((top, bottom)))?)
}

/// Returns a representation with margins at least `max(δ, ε*)`, normalized
/// when the system has top and bottom elements. Among such points the
/// midpoint of the `Σu`-minimal and `Σu`-maximal solutions is returned.
pub fn sample_representation(system: &PreferenceSystem, delta: f64) -> Result<UtilityVector> {
    let normalization = system.extremes().filter(|(t, b)| t != b);
    let model = build_representation_lp(system, normalization)?;
    let report = solve_report(&model)?;
    if !report.is_delta_consistent(delta) {
        return Err(Error::NotDeltaConsistent {
            delta,
            epsilon_star: report.epsilon_star,
        });
    }
    let target = report.epsilon_star.max(delta);
    let mut fixed = model.lp.clone();
    let eps = &mut fixed.variables[model.epsilon_var];
    // Tiny backoff keeps the pinned slack feasible under solver roundoff.
    eps.lower = (target - 1e-10).max(0.0);
    eps.upper = eps.lower;
    let all: Vec<(usize, f64)> = model.utility_vars.iter().map(|&v| (v, 1.0)).collect();
    let mut points = Vec::new();
    for sense in [Sense::Minimize, Sense::Maximize] {
        fixed.set_objective(sense, &all);
        let (_, values) = fixed.solve_optimal()?;
        points.push(values);
    }
    let values = model
        .utility_vars
        .iter()
        .map(|&v| 0.5 * (points[0][v] + points[1][v]))
        .collect();
    Ok(UtilityVector::new(values))
}
