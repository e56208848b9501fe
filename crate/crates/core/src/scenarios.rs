//! The two worked examples: an eight-consequence decision maker with two or
//! three acts over four states, elicited by scripted answers, and the
//! simulation comparing random and statistically guided pair selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decision::{Act, CredalSet, DecisionProblem, DecisionRule};
use crate::elicit::{
    elicit_until_decision, BasicLabelElicitor, EarlyStopOutcome, Elicitor, PairSelector, RandomSelector,
    ScriptedLabels, ScriptedSelector, ScriptedTimes, TimeElicitor,
};
use crate::error::{Error, Result};
use crate::guided::{
    linear_extension, repeated_insertion, sample_corpus, total_order, MallowsModel, OrderSupport, ProportionSelector,
    SubgroupSelector, TieBreak,
};
use crate::label::{BasicLabelSession, Label};
use crate::oracle::{GroundTruth, LabelBinning, LabelOracle, TimeOracle};
use crate::relation::{Pair, Relation};
use crate::system::default_consequences;
use crate::time::{TimeAnswer, TimeConfig, TimeSession, DEFAULT_C_INF};

pub const EXAMPLE_N: usize = 8;
pub const EXAMPLE_LABELS: u32 = 5;

/// Ordinal generators of the example decision maker, 0-based: `(i, j)`
/// means `a_{i+1}` is preferred to `a_{j+1}`.
const GENERATORS: [Pair; 12] = [
    (2, 0),
    (4, 1),
    (6, 3),
    (1, 0),
    (5, 3),
    (3, 1),
    (7, 5),
    (7, 6),
    (4, 2),
    (6, 4),
    (5, 4),
    (3, 2),
];

/// Utilities (in fortieths) reproducing the exchange chain
/// `e31 > e52 > e74 > e21 = e64 = e42 = e86 > e87 > e53 > e75 > e65 > e43`.
const UTILITY_40THS: [f64; EXAMPLE_N] = [0.0, 10.0, 19.0, 20.0, 28.0, 30.0, 30.5, 40.0];

pub fn example_r1() -> Relation {
    Relation::from_pairs(EXAMPLE_N, GENERATORS)
        .expect("indices are in range")
        .with_diagonal()
        .transitive_hull()
}

pub fn example_utility() -> Vec<f64> {
    UTILITY_40THS.iter().map(|u| u / 40.0).collect()
}

pub fn example_truth() -> GroundTruth {
    GroundTruth::from_utility(example_utility(), example_r1()).expect("utility represents the order")
}

fn act(name: &str, outcomes: [usize; 4]) -> Act {
    Act::new(name, outcomes.to_vec())
}

/// `X1 = (a8, a5, a2, a3)`, `X2 = (a7, a6, a4, a1)`.
pub fn example1_acts() -> Vec<Act> {
    vec![act("X1", [7, 4, 1, 2]), act("X2", [6, 5, 3, 0])]
}

/// The two acts above plus `X3 = (a1, a4, a6, a7)`.
pub fn example2_acts() -> Vec<Act> {
    let mut acts = example1_acts();
    acts.push(act("X3", [0, 3, 5, 6]));
    acts
}

/// Pairs presented in the scripted session, in order.
pub fn example1_pairs() -> Vec<Pair> {
    vec![(7, 6), (5, 4), (2, 0), (3, 1)]
}

pub fn example1_labels() -> Vec<(Pair, Label)> {
    example1_pairs()
        .into_iter()
        .zip([2, 1, 3, 2].map(Label::Int))
        .collect()
}

pub fn example1_times() -> Vec<TimeAnswer> {
    example1_pairs()
        .into_iter()
        .zip([0.3, 0.5, 0.2, 0.35])
        .map(|((i, j), t)| TimeAnswer::strict(i, j, t))
        .collect()
}

/// `{π : π1 ≥ π2 ≥ π4 ≥ π3}`.
pub fn example1_credal() -> CredalSet {
    CredalSet::from_comparisons(4, &[(0, 1), (1, 3), (3, 2)]).expect("four states")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Example1Variant {
    Label,
    Time,
    Credal,
}

pub fn example1_problem(variant: Example1Variant) -> DecisionProblem {
    let credal = match variant {
        Example1Variant::Credal => example1_credal(),
        _ => CredalSet::uniform(4),
    };
    DecisionProblem::new(example1_acts(), credal, DecisionRule::Am)
}

/// Runs the scripted session with a decision check after every answer.
pub fn run_example1(variant: Example1Variant) -> Result<EarlyStopOutcome> {
    let problem = example1_problem(variant);
    let mut selector = ScriptedSelector::new(example1_pairs());
    let mut elicitor: Box<dyn Elicitor> = match variant {
        Example1Variant::Time => Box::new(TimeElicitor::new(
            TimeSession::new(EXAMPLE_N, TimeConfig::default())?,
            ScriptedTimes::new(example1_times()),
        )),
        _ => Box::new(BasicLabelElicitor::new(
            BasicLabelSession::with_consequences(default_consequences(EXAMPLE_N), EXAMPLE_LABELS, false)?,
            ScriptedLabels::new(example1_labels()),
        )),
    };
    elicit_until_decision(elicitor.as_mut(), &mut selector, &problem, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Example2Model {
    UnimodalPartial,
    BimodalTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    Random,
    Proportion,
    Subgroup,
}

/// How the simulated decision maker is questioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Example2Method {
    /// Basic label elicitation with five strength labels.
    #[default]
    Labels,
    /// Time elicitation with transitivity deduction.
    EfficientTime,
    /// Time elicitation asking every pair.
    BasicTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example2Config {
    pub model: Example2Model,
    pub strategy: Strategy,
    pub corpus_size: usize,
    pub lambda: f64,
    #[serde(default)]
    pub method: Example2Method,
    /// Resolve exact ties of the guided strategies at random instead of
    /// lexicographically.
    #[serde(default)]
    pub random_ties: bool,
}

impl Example2Config {
    /// Corpus size and spread used for each model in the worked example.
    pub fn standard(model: Example2Model, strategy: Strategy) -> Self {
        let (corpus_size, lambda) = match model {
            Example2Model::UnimodalPartial => (100, 1.0),
            Example2Model::BimodalTotal => (250, 0.5),
        };
        Self {
            model,
            strategy,
            corpus_size,
            lambda,
            method: Example2Method::Labels,
            random_ties: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_size == 0 || !(self.lambda > 0.0) {
            return Err(Error::InvalidConfig("corpus size and λ must be positive".into()));
        }
        Ok(())
    }

    /// Mode of the corpus model.
    pub fn model(&self) -> MallowsModel {
        match self.model {
            Example2Model::UnimodalPartial => MallowsModel {
                mode: example_r1(),
                lambda: self.lambda,
                bimodal: false,
                support: OrderSupport::PartialOrders,
            },
            Example2Model::BimodalTotal => MallowsModel {
                mode: total_order(&utility_ranking()),
                lambda: self.lambda,
                bimodal: true,
                support: OrderSupport::TotalOrders,
            },
        }
    }
}

/// Consequences ranked by decreasing example utility.
fn utility_ranking() -> Vec<usize> {
    let u = example_utility();
    let mut idx: Vec<usize> = (0..EXAMPLE_N).collect();
    idx.sort_by(|&a, &b| u[b].partial_cmp(&u[a]).expect("finite"));
    idx
}

/// Decision maker of one replication. Under the bimodal model it is drawn
/// from the model itself and gets the example utilities by rank.
pub fn example2_decision_maker<R: Rng>(cfg: &Example2Config, rng: &mut R) -> Result<GroundTruth> {
    match cfg.model {
        Example2Model::UnimodalPartial => Ok(example_truth()),
        Example2Model::BimodalTotal => {
            let center = linear_extension(&cfg.model().mode);
            let mut ranking = repeated_insertion(&center, (-2.0 / cfg.lambda).exp(), rng);
            if rng.gen_bool(0.5) {
                ranking.reverse();
            }
            let mut sorted = example_utility();
            sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
            let mut u = vec![0.0; EXAMPLE_N];
            for (pos, &a) in ranking.iter().enumerate() {
                u[a] = sorted[pos];
            }
            GroundTruth::from_utility(u, total_order(&ranking))
        }
    }
}

fn tie_break(cfg: &Example2Config, seed: u64) -> TieBreak {
    if cfg.random_ties {
        TieBreak::random(seed)
    } else {
        TieBreak::Lexicographic
    }
}

/// Questions needed until an act is proven optimal among the three acts,
/// with efficient time elicitation answered by the replication's decision
/// maker.
pub fn example2_replication(cfg: &Example2Config, seed: u64) -> Result<usize> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = example2_decision_maker(cfg, &mut rng)?;
    let corpus_seed: u64 = rng.gen();
    let selector_seed: u64 = rng.gen();
    let mut selector: Box<dyn PairSelector> = match cfg.strategy {
        Strategy::Random => Box::new(RandomSelector::new(selector_seed)),
        Strategy::Proportion => Box::new(ProportionSelector {
            corpus: sample_corpus(&cfg.model(), cfg.corpus_size, corpus_seed)?,
            tie_break: tie_break(cfg, selector_seed),
        }),
        Strategy::Subgroup => Box::new(SubgroupSelector {
            corpus: sample_corpus(&cfg.model(), cfg.corpus_size, corpus_seed)?,
            tie_break: tie_break(cfg, selector_seed),
        }),
    };
    let mut elicitor: Box<dyn Elicitor> = match cfg.method {
        Example2Method::Labels => Box::new(BasicLabelElicitor::new(
            BasicLabelSession::with_consequences(default_consequences(EXAMPLE_N), EXAMPLE_LABELS, false)?,
            LabelOracle::new(truth, EXAMPLE_LABELS)?.with_binning(LabelBinning::EqualWidth),
        )),
        Example2Method::EfficientTime | Example2Method::BasicTime => {
            let config = if cfg.method == Example2Method::BasicTime {
                TimeConfig::basic()
            } else {
                TimeConfig::default()
            };
            Box::new(TimeElicitor::new(
                TimeSession::new(EXAMPLE_N, config)?,
                TimeOracle::new(truth, DEFAULT_C_INF)?,
            ))
        }
    };
    let problem = DecisionProblem::new(example2_acts(), CredalSet::uniform(4), DecisionRule::Am);
    let out = elicit_until_decision(elicitor.as_mut(), selector.as_mut(), &problem, 1)?;
    Ok(out.steps)
}

/// Seed of replication `k` under base seed `seed`: the first output of
/// stream `k` of a ChaCha generator keyed by `seed`.
pub fn replication_seed(seed: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng.gen()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_order_has_three_incomparable_pairs() {
        let r1 = example_r1();
        assert!(r1.is_partial_order());
        let incomparable = r1.incomparable_part().len();
        assert_eq!(incomparable, 6);
    }

    #[test]
    fn equal_width_labeller_gives_scripted_labels() {
        let oracle = LabelOracle::new(example_truth(), EXAMPLE_LABELS)
            .unwrap()
            .with_binning(LabelBinning::EqualWidth);
        for (pair, label) in example1_labels() {
            assert_eq!(oracle.answer_unconditioned(pair), label);
        }
    }

    #[test]
    fn example_utilities_reproduce_exchange_chain() {
        let u = example_utility();
        let e = |i: usize, j: usize| u[i - 1] - u[j - 1];
        let chain = [e(3, 1), e(5, 2), e(7, 4), e(2, 1), e(8, 7), e(5, 3), e(7, 5), e(6, 5), e(4, 3)];
        assert!(chain.windows(2).all(|w| w[0] > w[1]));
        for x in [e(6, 4), e(4, 2), e(8, 6)] {
            assert_eq!(x, e(2, 1));
        }
    }
}
