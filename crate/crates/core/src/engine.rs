//! Client-driven elicitation: the caller fetches the suggested pair, answers
//! it (or any other pending pair) and the engine applies the answer, runs
//! the decision check and picks the next suggestion.
//!
//! The engine is rebuilt from its configuration and answer log alone, which
//! is what the HTTP service persists.

use serde::{Deserialize, Serialize};

use crate::decision::{choose, generalized_expectation_interval, DecisionProblem, DecisionRule};
use crate::elicit::{FirstPending, PairSelector, RandomSelector, ScriptedSelector};
use crate::error::{Error, Result};
use crate::guided::{OrderCorpus, ProportionSelector, SubgroupSelector};
use crate::label::{BasicLabelSession, LabelAnswer, LabelSession};
use crate::relation::Pair;
use crate::system::{default_consequences, PreferenceSystem};
use crate::time::{TimeAnswer, TimeConfig, TimeMode, TimeSession, DEFAULT_C_INF, DEFAULT_TIE_TOLERANCE};

fn default_c_inf() -> f64 {
    DEFAULT_C_INF
}

fn default_check_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Procedure {
    Time {
        #[serde(default)]
        mode: TimeMode,
        #[serde(default = "default_c_inf")]
        c_inf: f64,
    },
    Label {
        r: u32,
        #[serde(default)]
        hierarchical: bool,
    },
}

impl Procedure {
    pub fn kind(&self) -> &'static str {
        match self {
            Procedure::Time { .. } => "TIME",
            Procedure::Label { .. } => "LABEL",
        }
    }
}

/// How the engine suggests the next pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Guidance {
    #[default]
    First,
    Scripted {
        pairs: Vec<Pair>,
    },
    Random {
        seed: u64,
    },
    Proportion {
        corpus: OrderCorpus,
    },
    Subgroup {
        corpus: OrderCorpus,
    },
}

impl Guidance {
    fn selector(&self) -> Box<dyn PairSelector + Send> {
        match self {
            Guidance::First => Box::new(FirstPending),
            Guidance::Scripted { pairs } => Box::new(ScriptedSelector::new(pairs.clone())),
            Guidance::Random { seed } => Box::new(RandomSelector::new(*seed)),
            Guidance::Proportion { corpus } => Box::new(ProportionSelector::new(corpus.clone())),
            Guidance::Subgroup { corpus } => Box::new(SubgroupSelector::new(corpus.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Number of consequences.
    pub n: usize,
    pub procedure: Procedure,
    #[serde(default)]
    pub guidance: Guidance,
    /// Acts, credal set and rule for the early decision check; without one
    /// the session simply runs until every question is answered.
    #[serde(default)]
    pub decision: Option<DecisionProblem>,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.diagnose().map_err(|(_, e)| e)
    }

    /// Like [`validate`](Self::validate), also naming the offending
    /// top-level field.
    pub fn diagnose(&self) -> std::result::Result<(), (&'static str, Error)> {
        if self.n < 2 {
            return Err(("n", Error::InvalidConfig(format!("need at least 2 consequences, got {}", self.n))));
        }
        if self.check_every == 0 {
            return Err(("check_every", Error::InvalidConfig("check_every must be at least 1".into())));
        }
        self.check_procedure().map_err(|e| ("procedure", e))?;
        self.check_guidance().map_err(|e| ("guidance", e))?;
        if let Some(problem) = &self.decision {
            problem.validate(self.n).map_err(|e| ("decision", e))?;
        }
        Ok(())
    }

    fn check_procedure(&self) -> Result<()> {
        match self.procedure {
            Procedure::Time { mode, c_inf } => TimeConfig {
                mode,
                c_inf,
                tie_tolerance: DEFAULT_TIE_TOLERANCE,
            }
            .validate(),
            Procedure::Label { r, .. } if r < 1 => Err(Error::InvalidConfig("label count r must be at least 1".into())),
            Procedure::Label { .. } => Ok(()),
        }
    }

    fn check_guidance(&self) -> Result<()> {
        match &self.guidance {
            Guidance::Scripted { pairs } => {
                for &(i, j) in pairs {
                    for index in [i, j] {
                        if index >= self.n {
                            return Err(Error::IndexOutOfRange { index, size: self.n });
                        }
                    }
                }
                Ok(())
            }
            Guidance::Proportion { corpus } | Guidance::Subgroup { corpus } => {
                if corpus.ground_size != self.n {
                    return Err(Error::SizeMismatch {
                        left: self.n,
                        right: corpus.ground_size,
                    });
                }
                if corpus.is_empty() {
                    return Err(Error::EmptyCorpus);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionStatus {
    Active,
    Decided,
    Exhausted,
}

impl SessionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Active => "ACTIVE",
            SessionStatus::Decided => "DECIDED",
            SessionStatus::Exhausted => "EXHAUSTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Answer {
    Time(TimeAnswer),
    Label(LabelAnswer),
}

impl Answer {
    pub fn kind(&self) -> &'static str {
        match self {
            Answer::Time(_) => "TIME",
            Answer::Label(_) => "LABEL",
        }
    }

    pub fn pair(&self) -> Pair {
        match self {
            Answer::Time(a) => a.pair,
            Answer::Label(a) => a.pair,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Orientation {
    /// The respondent may answer either orientation.
    Free,
    /// The label refers to the pair exactly as given.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub answered: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextPair {
    pub pair: Pair,
    pub orientation: Orientation,
    pub round: usize,
    pub progress: Progress,
    /// Pairs the label should be judged against, for hierarchical labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<Pair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub status: SessionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice_set: Option<Vec<usize>>,
}

/// Read-only projection for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub status: SessionStatus,
    pub system: PreferenceSystem,
    /// Transitive reduction of the strict part of `R1`.
    pub hasse_edges: Vec<Pair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice_set: Option<Vec<usize>>,
    pub choice_set_is_lower_bound: bool,
    pub answered: usize,
    pub pending: Vec<Pair>,
}

/// Serialized engine state, compared byte for byte after replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub config: SessionConfig,
    pub answers: Vec<Answer>,
    pub status: SessionStatus,
    pub choice_set: Option<Vec<usize>>,
    pub choice_set_is_lower_bound: bool,
    pub suggested: Option<Pair>,
    pub system: PreferenceSystem,
}

#[derive(Debug, Clone)]
enum Procedural {
    Time(TimeSession),
    BasicLabel(BasicLabelSession),
    Label(LabelSession),
}

pub struct Engine {
    config: SessionConfig,
    state: Procedural,
    selector: Box<dyn PairSelector + Send>,
    answers: Vec<Answer>,
    since_check: usize,
    status: SessionStatus,
    choice_set: Option<Vec<usize>>,
    lower_bound: bool,
    suggested: Option<Pair>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("status", &self.status)
            .field("answers", &self.answers.len())
            .field("suggested", &self.suggested)
            .finish()
    }
}

impl Engine {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let consequences = default_consequences(config.n);
        let state = match config.procedure {
            Procedure::Time { mode, c_inf } => Procedural::Time(TimeSession::with_consequences(
                consequences,
                TimeConfig {
                    mode,
                    c_inf,
                    tie_tolerance: DEFAULT_TIE_TOLERANCE,
                },
            )?),
            Procedure::Label { r, hierarchical: false } => {
                Procedural::BasicLabel(BasicLabelSession::with_consequences(consequences, r, false)?)
            }
            Procedure::Label { r, hierarchical: true } => {
                Procedural::Label(LabelSession::with_consequences(consequences, r)?)
            }
        };
        let selector = config.guidance.selector();
        let mut engine = Self {
            config,
            state,
            selector,
            answers: Vec::new(),
            since_check: 0,
            status: SessionStatus::Active,
            choice_set: None,
            lower_bound: false,
            suggested: None,
        };
        engine.settle()?;
        Ok(engine)
    }

    /// Rebuilds an engine by feeding `answers` to a fresh one.
    pub fn replay(config: SessionConfig, answers: &[Answer]) -> Result<Self> {
        let mut engine = Self::new(config)?;
        for &answer in answers {
            engine.submit(answer)?;
        }
        Ok(engine)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn choice_set(&self) -> Option<&[usize]> {
        self.choice_set.as_deref()
    }

    pub fn pending(&self) -> Vec<Pair> {
        match &self.state {
            Procedural::Time(s) => s.next_unknown_pairs(),
            Procedural::BasicLabel(s) => s.pending_pairs(),
            Procedural::Label(s) => s.pending_pairs(),
        }
    }

    pub fn system(&self) -> PreferenceSystem {
        match &self.state {
            Procedural::Time(s) => s.system(),
            Procedural::BasicLabel(s) => s.system(),
            Procedural::Label(s) => s.provisional_system(),
        }
    }

    fn round(&self) -> usize {
        match &self.state {
            Procedural::Label(s) => s.round(),
            _ => 1,
        }
    }

    fn orientation(&self) -> Orientation {
        match &self.state {
            Procedural::Label(s) if s.round() > 1 => Orientation::Fixed,
            _ => Orientation::Free,
        }
    }

    /// The suggested question; repeated calls return the same pair until an
    /// answer arrives.
    pub fn next_pair(&self) -> Result<NextPair> {
        if self.status != SessionStatus::Active {
            return Err(Error::SessionClosed(self.status.as_str()));
        }
        let pair = self.suggested.ok_or(Error::NoUndecidedPairs)?;
        let context = match &self.state {
            Procedural::Label(s) => s.context_of(pair).map(|c| c.to_vec()),
            _ => None,
        };
        Ok(NextPair {
            pair,
            orientation: self.orientation(),
            round: self.round(),
            progress: Progress {
                answered: self.answers.len(),
                pending: self.pending().len(),
            },
            context,
        })
    }

    /// Applies one answer. Any pending pair may be answered, not only the
    /// suggested one; answers to pairs that are no longer pending are
    /// rejected as stale.
    pub fn submit(&mut self, answer: Answer) -> Result<SubmitOutcome> {
        if self.status != SessionStatus::Active {
            return Err(Error::SessionClosed(self.status.as_str()));
        }
        let expected = self.config.procedure.kind();
        if answer.kind() != expected {
            return Err(Error::KindMismatch {
                expected,
                got: answer.kind(),
            });
        }
        let (i, j) = answer.pair();
        let pending = self.pending();
        let is_pending = match self.orientation() {
            Orientation::Free => pending.iter().any(|&p| p == (i, j) || p == (j, i)),
            Orientation::Fixed => pending.contains(&(i, j)),
        };
        if !is_pending {
            return Err(Error::PairNotActive((i, j)));
        }
        match (&mut self.state, answer) {
            (Procedural::Time(s), Answer::Time(a)) => s.apply_answer(a)?,
            (Procedural::BasicLabel(s), Answer::Label(a)) => s.apply(a)?,
            (Procedural::Label(s), Answer::Label(a)) => {
                s.apply_label(a)?;
                if s.round_complete() {
                    s.advance_round()?;
                }
            }
            _ => unreachable!("kind checked above"),
        }
        self.answers.push(answer);
        self.since_check += 1;
        self.settle()?;
        Ok(SubmitOutcome {
            status: self.status,
            choice_set: self.choice_set.clone(),
        })
    }

    /// Runs the decision check due after the latest answer and picks the
    /// next suggestion.
    fn settle(&mut self) -> Result<()> {
        let pending = self.pending();
        if let Some(problem) = &self.config.decision {
            let w = problem.all_acts();
            if pending.is_empty() {
                let chosen = choose(&self.system(), problem, &w)?;
                self.status = if chosen.is_empty() {
                    SessionStatus::Exhausted
                } else {
                    SessionStatus::Decided
                };
                self.choice_set = Some(chosen);
                self.lower_bound = false;
            } else if self.since_check == self.config.check_every {
                self.since_check = 0;
                let chosen = choose(&self.system(), problem, &w)?;
                if !chosen.is_empty() {
                    self.status = SessionStatus::Decided;
                    self.choice_set = Some(chosen);
                    self.lower_bound = true;
                }
            }
        } else if pending.is_empty() {
            self.status = SessionStatus::Exhausted;
        }
        self.suggested = if self.status == SessionStatus::Active {
            let (i, j) = self.selector.select(&pending, &self.system())?;
            let fixed = self.orientation() == Orientation::Fixed;
            Some(if fixed && !pending.contains(&(i, j)) { (j, i) } else { (i, j) })
        } else {
            None
        };
        Ok(())
    }

    pub fn view(&self) -> Result<SessionView> {
        let system = self.system();
        let hasse_edges = system.r1().strict_part().with_diagonal().hasse_edges();
        let intervals = match &self.config.decision {
            Some(problem) if problem.rule == DecisionRule::Interval => Some(
                problem
                    .acts
                    .iter()
                    .map(|x| generalized_expectation_interval(&system, problem, x))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => None,
        };
        Ok(SessionView {
            status: self.status,
            hasse_edges,
            intervals,
            choice_set: self.choice_set.clone(),
            choice_set_is_lower_bound: self.lower_bound,
            answered: self.answers.len(),
            pending: if self.status == SessionStatus::Active { self.pending() } else { Vec::new() },
            system,
        })
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            config: self.config.clone(),
            answers: self.answers.clone(),
            status: self.status,
            choice_set: self.choice_set.clone(),
            choice_set_is_lower_bound: self.lower_bound,
            suggested: self.suggested,
            system: self.system(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{Act, CredalSet};
    use crate::label::Label;

    fn chain_config(procedure: Procedure) -> SessionConfig {
        SessionConfig {
            n: 3,
            procedure,
            guidance: Guidance::First,
            decision: Some(DecisionProblem::new(
                vec![Act::new("low", vec![2]), Act::new("high", vec![0])],
                CredalSet::uniform(1),
                DecisionRule::Am,
            )),
            check_every: 1,
        }
    }

    #[test]
    fn suggestion_is_stable_until_answered() {
        let engine = Engine::new(chain_config(Procedure::Label { r: 3, hierarchical: false })).unwrap();
        let a = engine.next_pair().unwrap();
        assert_eq!(a, engine.next_pair().unwrap());
        assert_eq!(a.pair, (0, 1));
        assert_eq!(a.orientation, Orientation::Free);
    }

    #[test]
    fn stale_and_mismatched_answers_are_rejected() {
        let mut engine = Engine::new(chain_config(Procedure::Label { r: 3, hierarchical: false })).unwrap();
        engine.submit(Answer::Label(LabelAnswer::new(1, 0, Label::Int(1)))).unwrap();
        assert!(matches!(
            engine.submit(Answer::Label(LabelAnswer::new(0, 1, Label::Int(2)))),
            Err(Error::PairNotActive(_))
        ));
        assert!(matches!(
            engine.submit(Answer::Time(TimeAnswer::strict(0, 2, 0.5))),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn decides_once_the_best_act_is_provably_better() {
        let mut engine = Engine::new(chain_config(Procedure::Time {
            mode: TimeMode::Efficient,
            c_inf: DEFAULT_C_INF,
        }))
        .unwrap();
        let out = engine.submit(Answer::Time(TimeAnswer::strict(0, 2, 0.5))).unwrap();
        assert_eq!(out.status, SessionStatus::Decided);
        assert_eq!(out.choice_set, Some(vec![1]));
        assert!(matches!(engine.next_pair(), Err(Error::SessionClosed("DECIDED"))));
    }

    #[test]
    fn sessions_without_a_problem_run_to_exhaustion() {
        let mut config = chain_config(Procedure::Label { r: 2, hierarchical: true });
        config.decision = None;
        let mut engine = Engine::new(config.clone()).unwrap();
        while engine.status() == SessionStatus::Active {
            let (i, j) = engine.next_pair().unwrap().pair;
            engine.submit(Answer::Label(LabelAnswer::new(i, j, Label::Int(1)))).unwrap();
        }
        assert_eq!(engine.status(), SessionStatus::Exhausted);
        let replayed = Engine::replay(config, engine.answers()).unwrap();
        assert_eq!(
            serde_json::to_string(&replayed.snapshot()).unwrap(),
            serde_json::to_string(&engine.snapshot()).unwrap()
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = chain_config(Procedure::Time {
            mode: TimeMode::Basic,
            c_inf: 0.0,
        });
        assert!(Engine::new(config.clone()).is_err());
        config.procedure = Procedure::Label { r: 5, hierarchical: false };
        config.decision.as_mut().unwrap().acts[0].outcomes = vec![9];
        assert!(Engine::new(config).is_err());
    }
}
