//! Reports and runners behind the `prefsys` command.

pub mod terminal;

use prefsys_core::decision::DecisionProblem;
use prefsys_core::relation::Pair;
use prefsys_core::scenarios::{
    example1_pairs, example1_problem, example2_replication, replication_seed, run_example1, Example1Variant,
    Example2Config, Example2Method, Example2Model, Strategy,
};
use prefsys_core::system::Exchange;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use prefsys_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Report {
    pub variant: Example1Variant,
    pub steps: usize,
    pub asked: Vec<Pair>,
    /// Strict part of `R1`, without the diagonal.
    pub strict_r1: Vec<Pair>,
    pub strict_r2: Vec<Exchange>,
    pub chosen: Vec<String>,
    pub choice_set_is_lower_bound: bool,
    /// Whether the run reproduced the known outcome: act `X1` after four
    /// questions.
    pub matches_golden: bool,
}

pub fn example1_report(variant: Example1Variant) -> Result<Example1Report> {
    let out = run_example1(variant)?;
    let problem: DecisionProblem = example1_problem(variant);
    let chosen: Vec<String> = out.chosen.iter().map(|&k| problem.acts[k].name.clone()).collect();
    let strict_r1 = out.system.r1().strict_part().pairs();
    let mut expected_r1 = example1_pairs();
    expected_r1.sort();
    let matches_golden = out.steps == 4 && chosen == ["X1"] && strict_r1 == expected_r1;
    Ok(Example1Report {
        variant,
        steps: out.steps,
        asked: out.asked,
        strict_r2: out.system.r2_strict().into_iter().collect(),
        strict_r1,
        chosen,
        choice_set_is_lower_bound: out.choice_set_is_lower_bound,
        matches_golden,
    })
}

/// Median and quartiles of a sample.
///
/// The median is the middle value, or the mean of the two middle values;
/// quartiles interpolate linearly between order statistics at positions
/// `(m − 1) p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: usize,
    pub max: usize,
}

fn quantile(sorted: &[usize], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] as f64 + (h - lo as f64) * (sorted[hi] as f64 - sorted[lo] as f64)
}

pub fn summarize(values: &[usize]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    Some(Summary {
        median: quantile(&sorted, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: Strategy,
    #[serde(flatten)]
    pub summary: Summary,
    /// Pairs needed per replication, in replication order.
    pub distribution: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: Example2Model,
    pub corpus_size: usize,
    pub lambda: f64,
    pub method: Example2Method,
    pub random_ties: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub replications: usize,
    pub seed: u64,
    pub config: SimulationConfig,
    pub strategies: Vec<StrategyStats>,
}

impl SimulationReport {
    pub fn stats(&self, strategy: Strategy) -> Option<&StrategyStats> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }

    /// Raw distribution as CSV with columns `strategy,replication,pairs`.
    pub fn to_csv(&self) -> std::result::Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["strategy", "replication", "pairs"])?;
        for s in &self.strategies {
            let name = serde_json::to_value(s.strategy)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            for (k, pairs) in s.distribution.iter().enumerate() {
                w.write_record([name.clone(), k.to_string(), pairs.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }
}

/// Runs `replications` simulated elicitations per strategy. Replication `k`
/// uses seed stream `k` of `seed` whatever the strategy, so strategies face
/// the same decision makers; results do not depend on the thread count.
pub fn simulate_example2(
    base: SimulationConfig,
    strategies: &[Strategy],
    replications: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if replications == 0 {
        return Err(Error::InvalidConfig("replications must be positive".into()));
    }
    let mut stats = Vec::new();
    for &strategy in strategies {
        let cfg = Example2Config {
            model: base.model,
            strategy,
            corpus_size: base.corpus_size,
            lambda: base.lambda,
            method: base.method,
            random_ties: base.random_ties,
        };
        cfg.validate()?;
        let distribution = (0..replications as u64)
            .into_par_iter()
            .map(|k| example2_replication(&cfg, replication_seed(seed, k)))
            .collect::<Result<Vec<usize>>>()?;
        stats.push(StrategyStats {
            strategy,
            summary: summarize(&distribution).expect("replications > 0"),
            distribution,
        });
    }
    Ok(SimulationReport {
        replications,
        seed,
        config: base,
        strategies: stats,
    })
}

impl SimulationConfig {
    /// Settings of the worked example for `model`.
    pub fn standard(model: Example2Model) -> Self {
        let cfg = Example2Config::standard(model, Strategy::Random);
        Self {
            model,
            corpus_size: cfg.corpus_size,
            lambda: cfg.lambda,
            method: cfg.method,
            random_ties: cfg.random_ties,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_samples() {
        let s = summarize(&[4, 1, 3, 2]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert_eq!(summarize(&[7]).unwrap().iqr, 0.0);
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn csv_lists_every_replication() {
        let report = SimulationReport {
            replications: 2,
            seed: 1,
            config: SimulationConfig::standard(Example2Model::UnimodalPartial),
            strategies: vec![StrategyStats {
                strategy: Strategy::Random,
                summary: summarize(&[3, 5]).unwrap(),
                distribution: vec![3, 5],
            }],
        };
        assert_eq!(report.to_csv().unwrap(), "strategy,replication,pairs\nRANDOM,0,3\nRANDOM,1,5\n");
    }
}
