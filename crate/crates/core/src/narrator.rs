//! Spoken descriptions of layout changes and button presses.
//!
//! Every description leads with the bracket type, then its location, then
//! its size. Rows and columns are counted from one. Durations assume a
//! speaking rate of 170 words per minute.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::BracketType;
use crate::geometry::{CellCoord, RectSpan};
use crate::tracker::{EventKind, LayoutSnapshot};

pub const WORDS_PER_MINUTE: f64 = 170.0;

pub const NO_HISTORY: &str = "No bracket information yet.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ButtonKind {
    RepeatLast,
    ReadAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Placed,
    Resized,
    Moved,
    Removed,
}

impl Verb {
    fn word(self) -> &'static str {
        match self {
            Verb::Placed => "placed",
            Verb::Resized => "resized",
            Verb::Moved => "moved",
            Verb::Removed => "removed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Bracket(Verb),
    Misalignment,
    Partial,
    Button(ButtonKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub word_count: usize,
    pub est_duration_s: f64,
    pub trigger: Trigger,
}

impl Utterance {
    pub fn new(text: String, trigger: Trigger) -> Self {
        let word_count = text.split_whitespace().count();
        Utterance {
            text,
            word_count,
            est_duration_s: word_count as f64 / WORDS_PER_MINUTE * 60.0,
            trigger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NarratorError {
    #[error("misalignment warning needs at least one cell")]
    NoCells,
}

fn sentence(bracket_type: BracketType, span: RectSpan, verb: Verb) -> String {
    if verb == Verb::Removed {
        return format!("{bracket_type} bracket removed.");
    }
    format!(
        "{bracket_type} bracket {verb}. Location: columns {} to {}, rows {} to {}. Size: {} columns by {} rows.",
        span.left() + 1,
        span.right() + 1,
        span.top() + 1,
        span.bottom() + 1,
        span.width(),
        span.height(),
        verb = verb.word(),
    )
}

/// Type, then location, then size. Removal omits geometry.
pub fn describe_bracket(bracket_type: BracketType, span: RectSpan, verb: Verb) -> Utterance {
    Utterance::new(sentence(bracket_type, span, verb), Trigger::Bracket(verb))
}

/// Names the most recently arrived cell, which is the last one in `cells`.
pub fn misalignment_utterance(
    cells: &[CellCoord],
    bracket_type: BracketType,
) -> Result<Utterance, NarratorError> {
    let corner = cells.last().ok_or(NarratorError::NoCells)?;
    let text = format!(
        "Warning: {bracket_type} bracket not recognized. Check corner at column {}, row {}.",
        corner.col() + 1,
        corner.row() + 1
    );
    Ok(Utterance::new(text, Trigger::Misalignment))
}

pub fn partial_utterance(cells: &[CellCoord], bracket_type: BracketType) -> Utterance {
    let n = cells.len();
    let text = format!(
        "{bracket_type} bracket incomplete. {n} {} still on the board.",
        if n == 1 { "corner" } else { "corners" }
    );
    Utterance::new(text, Trigger::Partial)
}

/// Utterance for a tracker event.
pub fn narrate_event(event: &EventKind) -> Utterance {
    match event {
        EventKind::BracketPlaced {
            bracket_type, span, ..
        } => describe_bracket(*bracket_type, *span, Verb::Placed),
        EventKind::BracketResized {
            bracket_type,
            new_span,
            ..
        } => describe_bracket(*bracket_type, *new_span, Verb::Resized),
        EventKind::BracketMoved {
            bracket_type,
            new_span,
            ..
        } => describe_bracket(*bracket_type, *new_span, Verb::Moved),
        EventKind::BracketRemoved { bracket_type, .. } => Utterance::new(
            format!("{bracket_type} bracket removed."),
            Trigger::Bracket(Verb::Removed),
        ),
        EventKind::MisalignmentWarning {
            bracket_type,
            cells,
        } => misalignment_utterance(cells, *bracket_type)
            .expect("tracker warnings always carry at least four cells"),
        EventKind::PartialPlacement {
            bracket_type,
            cells,
        } => partial_utterance(cells, *bracket_type),
    }
}

/// True for utterances the repeat-last button replays.
pub fn is_repeatable(utterance: &Utterance) -> bool {
    matches!(
        utterance.trigger,
        Trigger::Bracket(Verb::Placed | Verb::Resized | Verb::Moved)
    )
}

pub fn handle_button(
    kind: ButtonKind,
    snapshot: &LayoutSnapshot,
    last: Option<&Utterance>,
) -> Utterance {
    let trigger = Trigger::Button(kind);
    match kind {
        ButtonKind::RepeatLast => {
            let text = last.map_or_else(|| NO_HISTORY.to_string(), |u| u.text.clone());
            Utterance::new(text, trigger)
        }
        ButtonKind::ReadAll => {
            let n = snapshot.brackets.len();
            let mut text = format!(
                "{n} {} on the board.",
                if n == 1 { "bracket" } else { "brackets" }
            );
            for b in snapshot.reading_order() {
                text.push(' ');
                text.push_str(&sentence(b.bracket_type, b.span, Verb::Placed));
            }
            Utterance::new(text, trigger)
        }
    }
}

/// A small stateful wrapper remembering the last repeatable utterance.
#[derive(Debug, Clone, Default)]
pub struct Narrator {
    last: Option<Utterance>,
}

impl Narrator {
    pub fn new() -> Self {
        Narrator::default()
    }

    pub fn on_event(&mut self, event: &EventKind) -> Utterance {
        let utterance = narrate_event(event);
        if is_repeatable(&utterance) {
            self.last = Some(utterance.clone());
        }
        utterance
    }

    pub fn on_button(&self, kind: ButtonKind, snapshot: &LayoutSnapshot) -> Utterance {
        handle_button(kind, snapshot, self.last.as_ref())
    }

    pub fn last(&self) -> Option<&Utterance> {
        self.last.as_ref()
    }
}
