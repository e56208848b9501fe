//! Small linear-program model with a pluggable solver backend.
//!
//! Models are built here independently of any solver so that they can be
//! dumped in CPLEX LP text format for debugging. Solving is delegated to
//! `minilp`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { objective: f64, values: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            objective,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            cmp,
            rhs,
        });
    }

    pub fn set_objective(&mut self, sense: Sense, coefficients: &[(usize, f64)]) {
        self.sense = sense;
        for v in &mut self.variables {
            v.objective = 0.0;
        }
        for &(v, c) in coefficients {
            self.variables[v].objective += c;
        }
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        use minilp::{ComparisonOp, OptimizationDirection, Problem};

        let direction = match self.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut problem = Problem::new(direction);
        let vars: Vec<_> = self
            .variables
            .iter()
            .map(|v| problem.add_var(v.objective, (v.lower, v.upper)))
            .collect();
        for c in &self.constraints {
            if c.terms.is_empty() {
                let ok = match c.cmp {
                    Cmp::Ge => 0.0 >= c.rhs - 1e-12,
                    Cmp::Le => 0.0 <= c.rhs + 1e-12,
                    Cmp::Eq => c.rhs.abs() <= 1e-12,
                };
                if ok {
                    continue;
                }
                return Ok(LpOutcome::Infeasible);
            }
            let terms: Vec<_> = c.terms.iter().map(|&(v, coef)| (vars[v], coef)).collect();
            let op = match c.cmp {
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Le => ComparisonOp::Le,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(terms.as_slice(), op, c.rhs);
        }
        match problem.solve() {
            Ok(solution) => Ok(LpOutcome::Optimal {
                objective: solution.objective(),
                values: vars.iter().map(|&v| solution[v]).collect(),
            }),
            Err(minilp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(minilp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
        }
    }

    /// Solves and requires an optimum.
    pub fn solve_optimal(&self) -> Result<(f64, Vec<f64>)> {
        match self.solve()? {
            LpOutcome::Optimal { objective, values } => Ok((objective, values)),
            other => Err(Error::Lp(format!("expected an optimum, solver reported {other:?}"))),
        }
    }

    /// Largest violation of any bound or constraint at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, coef)| coef * values[v]).sum();
            let gap = match c.cmp {
                Cmp::Ge => c.rhs - lhs,
                Cmp::Le => lhs - c.rhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// CPLEX LP text format.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let obj: Vec<(usize, f64)> = self
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.objective != 0.0)
            .map(|(k, v)| (k, v.objective))
            .collect();
        let _ = writeln!(out, " obj: {}", self.expr(&obj));
        out.push_str("Subject To\n");
        for c in &self.constraints {
            let op = match c.cmp {
                Cmp::Ge => ">=",
                Cmp::Le => "<=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(out, " {}: {} {} {}", c.name, self.expr(&c.terms), op, c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_bound(v.lower), v.name, fmt_bound(v.upper));
        }
        out.push_str("End\n");
        out
    }

    fn expr(&self, terms: &[(usize, f64)]) -> String {
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, &(v, c)) in terms.iter().enumerate() {
            let sign = if c < 0.0 { "-" } else if k > 0 { "+" } else { "" };
            if !s.is_empty() {
                s.push(' ');
            }
            let mag = c.abs();
            if mag == 1.0 {
                let _ = write!(s, "{sign} {}", self.variables[v].name);
            } else {
                let _ = write!(s, "{sign} {mag} {}", self.variables[v].name);
            }
        }
        s.trim().to_string()
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tiny_program() {
        // max x + y, x + 2y <= 4, x <= 3
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, 3.0, 1.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, 1.0);
        lp.add_constraint("c1", vec![(x, 1.0), (y, 2.0)], Cmp::Le, 4.0);
        let (obj, vals) = lp.solve_optimal().unwrap();
        assert!((obj - 3.5).abs() < 1e-9);
        assert!(lp.max_violation(&vals) < 1e-9);
    }

    #[test]
    fn reports_infeasible() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Cmp::Ge, 2.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn lp_text_dump() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let u = lp.add_var("u0", 0.0, 1.0, 0.0);
        let e = lp.add_var("eps", 0.0, 1.0, 1.0);
        lp.add_constraint("p0", vec![(u, 1.0), (e, -1.0)], Cmp::Ge, 0.0);
        let text = lp.to_lp_text();
        assert!(text.starts_with("Maximize\n obj: eps\n"));
        assert!(text.contains(" p0: u0 - eps >= 0\n"));
        assert!(text.ends_with("End\n"));
    }
}
