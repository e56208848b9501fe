//! Driving elicitation sessions question by question, with pluggable pair
//! selection and answer sources, and stopping as soon as the current
//! sub-system already proves an act optimal.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decision::{choose, DecisionProblem};
use crate::error::{Error, Result};
use crate::label::{BasicLabelSession, Label, LabelAnswer, LabelSession};
use crate::oracle::{LabelOracle, TimeOracle};
use crate::relation::{unordered, Pair};
use crate::system::PreferenceSystem;
use crate::time::{TimeAnswer, TimeSession};

/// Source of time answers for unordered questions `{i, j}`.
pub trait TimeRespondent {
    fn respond(&mut self, i: usize, j: usize) -> Result<TimeAnswer>;
}

impl TimeRespondent for TimeOracle {
    fn respond(&mut self, i: usize, j: usize) -> Result<TimeAnswer> {
        Ok(self.answer(i, j))
    }
}

/// Source of labels. `oriented == false` marks an unordered question, which
/// the respondent answers in the orientation of its choice.
pub trait LabelRespondent {
    fn respond(&mut self, pair: Pair, context: &[Pair], oriented: bool) -> Result<LabelAnswer>;
}

impl LabelRespondent for LabelOracle {
    fn respond(&mut self, (i, j): Pair, context: &[Pair], oriented: bool) -> Result<LabelAnswer> {
        if oriented {
            Ok(LabelAnswer::new(i, j, self.answer((i, j), context)))
        } else {
            Ok(self.answer_unordered(i, j, context))
        }
    }
}

/// Fixed answers keyed by unordered pair.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTimes {
    answers: BTreeMap<Pair, TimeAnswer>,
}

impl ScriptedTimes {
    pub fn new(answers: impl IntoIterator<Item = TimeAnswer>) -> Self {
        Self {
            answers: answers
                .into_iter()
                .map(|a| (unordered(a.pair.0, a.pair.1), a))
                .collect(),
        }
    }
}

impl TimeRespondent for ScriptedTimes {
    fn respond(&mut self, i: usize, j: usize) -> Result<TimeAnswer> {
        self.answers
            .get(&unordered(i, j))
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("no scripted answer for ({i}, {j})")))
    }
}

/// Fixed labels keyed by oriented pair.
#[derive(Debug, Clone, Default)]
pub struct ScriptedLabels {
    labels: BTreeMap<Pair, Label>,
}

impl ScriptedLabels {
    pub fn new(labels: impl IntoIterator<Item = (Pair, Label)>) -> Self {
        Self {
            labels: labels.into_iter().collect(),
        }
    }
}

impl LabelRespondent for ScriptedLabels {
    fn respond(&mut self, (i, j): Pair, _context: &[Pair], oriented: bool) -> Result<LabelAnswer> {
        if let Some(&l) = self.labels.get(&(i, j)) {
            return Ok(LabelAnswer::new(i, j, l));
        }
        if !oriented {
            if let Some(&l) = self.labels.get(&(j, i)) {
                return Ok(LabelAnswer::new(j, i, l));
            }
        }
        Err(Error::InvalidConfig(format!("no scripted label for ({i}, {j})")))
    }
}

/// An elicitation procedure paired with whoever answers its questions.
pub trait Elicitor {
    fn size(&self) -> usize;
    /// Questions that may be asked next.
    fn pending(&self) -> Vec<Pair>;
    fn ask(&mut self, pair: Pair) -> Result<()>;
    /// Sub-system justified by the answers so far.
    fn current_system(&self) -> PreferenceSystem;
    fn questions_asked(&self) -> usize;
}

pub struct TimeElicitor<R> {
    pub session: TimeSession,
    pub respondent: R,
}

impl<R: TimeRespondent> TimeElicitor<R> {
    pub fn new(session: TimeSession, respondent: R) -> Self {
        Self { session, respondent }
    }
}

impl<R: TimeRespondent> Elicitor for TimeElicitor<R> {
    fn size(&self) -> usize {
        self.session.size()
    }

    fn pending(&self) -> Vec<Pair> {
        self.session.next_unknown_pairs()
    }

    fn ask(&mut self, (i, j): Pair) -> Result<()> {
        let answer = self.respondent.respond(i, j)?;
        self.session.apply_answer(answer)
    }

    fn current_system(&self) -> PreferenceSystem {
        self.session.system()
    }

    fn questions_asked(&self) -> usize {
        self.session.log().len()
    }
}

pub struct BasicLabelElicitor<R> {
    pub session: BasicLabelSession,
    pub respondent: R,
    grid: Vec<Pair>,
}

impl<R: LabelRespondent> BasicLabelElicitor<R> {
    pub fn new(session: BasicLabelSession, respondent: R) -> Self {
        let n = session.size();
        let grid = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Self {
            session,
            respondent,
            grid,
        }
    }
}

impl<R: LabelRespondent> Elicitor for BasicLabelElicitor<R> {
    fn size(&self) -> usize {
        self.session.size()
    }

    fn pending(&self) -> Vec<Pair> {
        self.session.pending_pairs()
    }

    fn ask(&mut self, pair: Pair) -> Result<()> {
        let answer = self.respondent.respond(pair, &self.grid, false)?;
        self.session.apply(answer)
    }

    fn current_system(&self) -> PreferenceSystem {
        self.session.system()
    }

    fn questions_asked(&self) -> usize {
        self.session.log().len()
    }
}

/// Hierarchical labelling; rounds advance automatically once complete.
pub struct HierarchicalLabelElicitor<R> {
    pub session: LabelSession,
    pub respondent: R,
}

impl<R: LabelRespondent> HierarchicalLabelElicitor<R> {
    pub fn new(session: LabelSession, respondent: R) -> Self {
        Self { session, respondent }
    }
}

impl<R: LabelRespondent> Elicitor for HierarchicalLabelElicitor<R> {
    fn size(&self) -> usize {
        self.session.size()
    }

    fn pending(&self) -> Vec<Pair> {
        self.session.pending_pairs()
    }

    fn ask(&mut self, pair: Pair) -> Result<()> {
        let first_round = self.session.round() == 1;
        let context = self
            .session
            .context_of(pair)
            .ok_or(Error::PairNotActive(pair))?
            .to_vec();
        let answer = self.respondent.respond(pair, &context, !first_round)?;
        self.session.apply_label(answer)?;
        if self.session.round_complete() {
            self.session.advance_round()?;
        }
        Ok(())
    }

    fn current_system(&self) -> PreferenceSystem {
        self.session.provisional_system()
    }

    fn questions_asked(&self) -> usize {
        self.session.log().len()
    }
}

/// Chooses the next question among the pending ones.
pub trait PairSelector {
    fn select(&mut self, pending: &[Pair], current: &PreferenceSystem) -> Result<Pair>;
}

/// First pending pair in lexicographic order.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstPending;

impl PairSelector for FirstPending {
    fn select(&mut self, pending: &[Pair], _current: &PreferenceSystem) -> Result<Pair> {
        pending.iter().min().copied().ok_or(Error::NoUndecidedPairs)
    }
}

/// Uniformly random pending pair.
#[derive(Debug, Clone)]
pub struct RandomSelector {
    rng: ChaCha8Rng,
}

impl RandomSelector {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl PairSelector for RandomSelector {
    fn select(&mut self, pending: &[Pair], _current: &PreferenceSystem) -> Result<Pair> {
        pending.choose(&mut self.rng).copied().ok_or(Error::NoUndecidedPairs)
    }
}

/// Walks a fixed list of pairs, matched without orientation but returned as
/// written, then falls back to the first pending pair.
#[derive(Debug, Clone)]
pub struct ScriptedSelector {
    script: Vec<Pair>,
}

impl ScriptedSelector {
    pub fn new(script: Vec<Pair>) -> Self {
        Self { script }
    }
}

impl PairSelector for ScriptedSelector {
    fn select(&mut self, pending: &[Pair], current: &PreferenceSystem) -> Result<Pair> {
        for &(i, j) in &self.script {
            if pending.iter().any(|&p| p == (i, j) || p == (j, i)) {
                return Ok((i, j));
            }
        }
        FirstPending.select(pending, current)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopOutcome {
    /// Indices into the problem's acts.
    pub chosen: Vec<usize>,
    /// Questions asked.
    pub steps: usize,
    pub system: PreferenceSystem,
    /// True when elicitation stopped early: the returned acts are optimal,
    /// but other optimal acts may exist.
    pub choice_set_is_lower_bound: bool,
    pub asked: Vec<Pair>,
}

/// Asks questions until the chosen rule returns a nonempty choice set on
/// the current sub-system (evaluated every `check_every` answers) or no
/// questions remain.
pub fn elicit_until_decision(
    elicitor: &mut dyn Elicitor,
    selector: &mut dyn PairSelector,
    problem: &DecisionProblem,
    check_every: usize,
) -> Result<EarlyStopOutcome> {
    if check_every == 0 {
        return Err(Error::InvalidConfig("check_every must be at least 1".into()));
    }
    problem.validate(elicitor.size())?;
    let w = problem.all_acts();
    let mut asked = Vec::new();
    let mut since_check = 0;
    loop {
        let pending = elicitor.pending();
        if pending.is_empty() {
            break;
        }
        let current = elicitor.current_system();
        let pair = selector.select(&pending, &current)?;
        elicitor.ask(pair)?;
        asked.push(pair);
        since_check += 1;
        if since_check == check_every {
            since_check = 0;
            if !elicitor.pending().is_empty() {
                let system = elicitor.current_system();
                let chosen = choose(&system, problem, &w)?;
                if !chosen.is_empty() {
                    return Ok(EarlyStopOutcome {
                        chosen,
                        steps: elicitor.questions_asked(),
                        system,
                        choice_set_is_lower_bound: true,
                        asked,
                    });
                }
            }
        }
    }
    let system = elicitor.current_system();
    let chosen = choose(&system, problem, &w)?;
    Ok(EarlyStopOutcome {
        chosen,
        steps: elicitor.questions_asked(),
        system,
        choice_set_is_lower_bound: false,
        asked,
    })
}

/// Asks every remaining question and returns the final system.
pub fn elicit_fully(elicitor: &mut dyn Elicitor, selector: &mut dyn PairSelector) -> Result<PreferenceSystem> {
    loop {
        let pending = elicitor.pending();
        if pending.is_empty() {
            return Ok(elicitor.current_system());
        }
        let current = elicitor.current_system();
        let pair = selector.select(&pending, &current)?;
        elicitor.ask(pair)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{Act, CredalSet, DecisionRule};
    use crate::oracle::{random_ground_truth, TruthShape};
    use crate::time::TimeConfig;

    #[test]
    fn exhausting_a_chain_finds_the_best_constant_act() {
        let truth = random_ground_truth(4, 3, TruthShape::Chain).unwrap();
        let oracle = TimeOracle::new(truth.clone(), 1e6).unwrap();
        let mut el = TimeElicitor::new(TimeSession::new(4, TimeConfig::default()).unwrap(), oracle);
        let u = truth.utility().unwrap();
        let best = (0..4).max_by(|&a, &b| u.get(a).partial_cmp(&u.get(b)).unwrap()).unwrap();
        let worst = (0..4).min_by(|&a, &b| u.get(a).partial_cmp(&u.get(b)).unwrap()).unwrap();
        let problem = DecisionProblem::new(
            vec![Act::new("lo", vec![worst]), Act::new("hi", vec![best])],
            CredalSet::uniform(1),
            DecisionRule::Am,
        );
        let out = elicit_until_decision(&mut el, &mut FirstPending, &problem, 1).unwrap();
        assert_eq!(out.chosen, vec![1]);
        assert!(out.steps <= 6);
    }

    #[test]
    fn zero_cadence_is_rejected() {
        let truth = random_ground_truth(3, 1, TruthShape::Chain).unwrap();
        let oracle = TimeOracle::new(truth, 1e6).unwrap();
        let mut el = TimeElicitor::new(TimeSession::new(3, TimeConfig::default()).unwrap(), oracle);
        let problem = DecisionProblem::new(vec![Act::new("x", vec![0])], CredalSet::uniform(1), DecisionRule::Am);
        assert!(elicit_until_decision(&mut el, &mut FirstPending, &problem, 0).is_err());
    }

    #[test]
    fn scripted_selector_keeps_the_scripted_orientation() {
        let sys = PreferenceSystem::vacuous(crate::system::default_consequences(3));
        let mut s = ScriptedSelector::new(vec![(2, 0)]);
        assert_eq!(s.select(&[(0, 1), (0, 2)], &sys).unwrap(), (2, 0));
        assert_eq!(s.select(&[(1, 2)], &sys).unwrap(), (1, 2));
    }
}
