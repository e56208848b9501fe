//! Line-based elicitation for a human at a terminal, using the same engine
//! as the HTTP service.

use std::io::{BufRead, Write};

use prefsys_core::engine::{Answer, Engine, Orientation, SessionConfig, SessionStatus};
use prefsys_core::label::{Label, LabelAnswer};
use prefsys_core::relation::Pair;
use prefsys_core::system::PreferenceSystem;
use prefsys_core::time::{TimeAnswer, Verdict};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct TranscriptStep {
    pub pair: Pair,
    pub answer: Answer,
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub steps: Vec<TranscriptStep>,
    pub status: SessionStatus,
    /// Set when the session stopped because a decision was reached while
    /// questions were still open.
    pub stopped_early_at: Option<usize>,
    pub chosen: Option<Vec<String>>,
    pub quit: bool,
    pub system: PreferenceSystem,
}

#[derive(Debug, thiserror::Error)]
pub enum TerminalError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] prefsys_core::Error),
}

fn parse_label(text: &str) -> Option<Label> {
    match text {
        "n" | "N" => Some(Label::N),
        "c" | "C" => Some(Label::C),
        _ => text
            .parse::<u32>()
            .ok()
            .map(|k| if k == 0 { Label::Zero } else { Label::Int(k) }),
    }
}

/// Runs a session, reading one answer per line from `input`.
///
/// Label sessions take `n`, `c`, `0` or a strength `1..=r`; prefix `<` to
/// state that the second consequence is the preferred one. Time sessions
/// take `>` (first preferred), `<` (second preferred), `=` (indifferent)
/// or `?` (incomparable), and time the answer with `clock` (seconds). `q`
/// quits; the partial system is still returned.
pub fn run_session<R: BufRead, W: Write>(
    config: SessionConfig,
    input: &mut R,
    output: &mut W,
    clock: &mut dyn FnMut() -> f64,
) -> Result<Transcript, TerminalError> {
    let mut engine = Engine::new(config)?;
    let names: Vec<String> = engine.system().consequences().iter().map(|c| c.id.clone()).collect();
    let mut steps = Vec::new();
    let mut quit = false;
    let mut stopped_early_at = None;
    let is_time = engine.config().procedure.kind() == "TIME";

    while engine.status() == SessionStatus::Active {
        let next = engine.next_pair()?;
        let (i, j) = next.pair;
        if is_time {
            write!(output, "[{}] {} vs {} (> < = ? q): ", steps.len() + 1, names[i], names[j])?;
        } else {
            let hint = if next.orientation == Orientation::Free { "; '<' prefix: second is better" } else { "" };
            write!(
                output,
                "[{} round {}] {} over {} (n c 0 1..{}{}, q): ",
                steps.len() + 1,
                next.round,
                names[i],
                names[j],
                label_count(&engine),
                hint
            )?;
        }
        output.flush()?;
        let start = clock();
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            quit = true;
            break;
        }
        let elapsed = clock() - start;
        let text = line.trim();
        if text == "q" {
            quit = true;
            break;
        }
        let (answer, elapsed_ms) = if is_time {
            let verdict = match text {
                ">" => Verdict::IStrictlyPreferred,
                "<" => Verdict::JStrictlyPreferred,
                "=" => Verdict::Indifferent,
                "?" => Verdict::Incomparable,
                _ => {
                    writeln!(output, "unrecognized answer {text:?}")?;
                    continue;
                }
            };
            (Answer::Time(TimeAnswer::new(i, j, verdict, elapsed)), Some(elapsed * 1000.0))
        } else {
            let (pair, body) = match text.strip_prefix('<') {
                Some(rest) if next.orientation == Orientation::Free => ((j, i), rest.trim()),
                _ => ((i, j), text),
            };
            match parse_label(body) {
                Some(label) => (Answer::Label(LabelAnswer::new(pair.0, pair.1, label)), None),
                None => {
                    writeln!(output, "unrecognized label {text:?}")?;
                    continue;
                }
            }
        };
        match engine.submit(answer) {
            Ok(out) => {
                steps.push(TranscriptStep {
                    pair: (i, j),
                    answer,
                    elapsed_ms,
                });
                if out.status == SessionStatus::Decided && engine.view()?.choice_set_is_lower_bound {
                    stopped_early_at = Some(steps.len());
                    writeln!(output, "decision reached after step {}", steps.len())?;
                }
            }
            Err(e) => writeln!(output, "rejected: {e}")?,
        }
    }

    let system = engine.system();
    if quit {
        writeln!(output, "warning: session ended early; the system below is partial")?;
    }
    let chosen = match (&engine.config().decision, engine.choice_set()) {
        (Some(p), Some(c)) => Some(c.iter().map(|&k| p.acts[k].name.clone()).collect()),
        _ => None,
    };
    Ok(Transcript {
        steps,
        status: engine.status(),
        stopped_early_at,
        chosen,
        quit,
        system,
    })
}

fn label_count(engine: &Engine) -> u32 {
    match engine.config().procedure {
        prefsys_core::engine::Procedure::Label { r, .. } => r,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use prefsys_core::engine::{Guidance, Procedure};
    use prefsys_core::scenarios::{example1_pairs, example1_problem, Example1Variant};

    fn example1_config() -> SessionConfig {
        SessionConfig {
            n: 8,
            procedure: Procedure::Label { r: 5, hierarchical: false },
            guidance: Guidance::Scripted { pairs: example1_pairs() },
            decision: Some(example1_problem(Example1Variant::Label)),
            check_every: 1,
        }
    }

    fn ticking() -> impl FnMut() -> f64 {
        let mut t = 0.0;
        move || {
            t += 0.25;
            t
        }
    }

    #[test]
    fn example1_by_keyboard_stops_after_four_answers() {
        let mut input: &[u8] = b"2\n1\nx\n3\n2\n";
        let mut out = Vec::new();
        let t = run_session(example1_config(), &mut input, &mut out, &mut ticking()).unwrap();
        assert_eq!(t.status, SessionStatus::Decided);
        assert_eq!(t.stopped_early_at, Some(4));
        assert_eq!(t.chosen, Some(vec!["X1".to_string()]));
        assert!(String::from_utf8(out).unwrap().contains("unrecognized label"));
    }

    #[test]
    fn quitting_returns_the_partial_system() {
        let mut input: &[u8] = b"2\nq\n";
        let mut out = Vec::new();
        let t = run_session(example1_config(), &mut input, &mut out, &mut ticking()).unwrap();
        assert!(t.quit);
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.system.r1().strict_part().pairs(), vec![(7, 6)]);
        assert!(String::from_utf8(out).unwrap().contains("warning"));
    }

    #[test]
    fn time_answers_are_timed_by_the_clock() {
        let config = SessionConfig {
            n: 3,
            procedure: Procedure::Time {
                mode: prefsys_core::time::TimeMode::Efficient,
                c_inf: 1e6,
            },
            guidance: Guidance::First,
            decision: None,
            check_every: 1,
        };
        let mut input: &[u8] = b">\n>\n>\n";
        let mut out = Vec::new();
        let t = run_session(config, &mut input, &mut out, &mut ticking()).unwrap();
        assert_eq!(t.status, SessionStatus::Exhausted);
        assert!(!t.quit);
        assert!(t.steps.iter().all(|s| s.elapsed_ms == Some(250.0)));
    }
}
