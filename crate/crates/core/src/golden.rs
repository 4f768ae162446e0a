//! Bundled reference traces.
//!
//! Each trace is built programmatically by [`TraceBuilder`] and also frozen
//! as a JSON-lines file under `golden/`; a test keeps the two in sync.
//! Bracket positions are our own choice, only the sizes matter.

use crate::decoder::BracketType;
use crate::geometry::{CellCoord, RectSpan};
use crate::matrix::DiodeMode;
use crate::narrator::ButtonKind;
use crate::session::{SessionTrace, TraceHeader, TraceRecord, WireEvent, SCAN_PERIOD_MS};

pub const TASK1_TRACE: &str = include_str!("../golden/task1.jsonl");
pub const TASK2_TRACE: &str = include_str!("../golden/task2.jsonl");
pub const MISALIGNMENT_TRACE: &str = include_str!("../golden/misalignment.jsonl");

pub const GOLDEN_SEED: u64 = 2024;

/// Scans between successive corner contacts when placing a bracket.
pub const CORNER_GAP: u64 = 4;
/// Scans of quiet after each placement.
pub const SETTLE_GAP: u64 = 20;

/// Builds a trace in virtual time. `t_ms` is derived from the tick.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    trace: SessionTrace,
    tick: u64,
}

impl TraceBuilder {
    pub fn new(seed: u64, diode_mode: DiodeMode) -> Self {
        TraceBuilder {
            trace: SessionTrace::new(TraceHeader::new(seed, diode_mode)),
            tick: 0,
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn wait(&mut self, scans: u64) -> &mut Self {
        self.tick += scans;
        self
    }

    pub fn event(&mut self, make: impl FnOnce(u64) -> WireEvent) -> &mut Self {
        let event = make(self.tick * SCAN_PERIOD_MS);
        self.trace.records.push(TraceRecord {
            tick: self.tick,
            event,
        });
        self
    }

    pub fn down(&mut self, cell: CellCoord, ohms: f64) -> &mut Self {
        self.event(|t_ms| WireEvent::CornerDown {
            t_ms,
            cell,
            resistance_ohms: ohms,
        })
    }

    pub fn up(&mut self, cell: CellCoord) -> &mut Self {
        self.event(|t_ms| WireEvent::CornerUp { t_ms, cell })
    }

    pub fn button(&mut self, kind: ButtonKind) -> &mut Self {
        self.event(|t_ms| WireEvent::Button { t_ms, kind })
    }

    /// Presses the four corners one at a time, then waits for the bracket
    /// to register.
    pub fn place(&mut self, bracket_type: BracketType, span: RectSpan) -> &mut Self {
        for (i, corner) in span.corners().into_iter().enumerate() {
            if i > 0 {
                self.wait(CORNER_GAP);
            }
            self.down(corner, bracket_type.nominal_ohms());
        }
        self.wait(SETTLE_GAP)
    }

    pub fn remove(&mut self, span: RectSpan) -> &mut Self {
        for (i, corner) in span.corners().into_iter().enumerate() {
            if i > 0 {
                self.wait(CORNER_GAP);
            }
            self.up(corner);
        }
        self.wait(SETTLE_GAP)
    }

    pub fn build(&self) -> SessionTrace {
        self.trace.clone()
    }
}

fn cell(row: u8, col: u8) -> CellCoord {
    CellCoord::new(row, col).expect("golden cells are on the board")
}

fn span(top: u8, left: u8, bottom: u8, right: u8) -> RectSpan {
    RectSpan::new(top, left, bottom, right).expect("golden spans are valid")
}

/// Task 1: four brackets of mixed type, then both buttons.
pub fn task1() -> SessionTrace {
    let mut b = TraceBuilder::new(GOLDEN_SEED, DiodeMode::WithDiodes);
    b.place(BracketType::Image, span(1, 1, 4, 5))
        .place(BracketType::Text, span(1, 7, 6, 10))
        .place(BracketType::Video, span(7, 2, 10, 6))
        .place(BracketType::Text, span(12, 1, 14, 10))
        .button(ButtonKind::ReadAll)
        .wait(SETTLE_GAP)
        .button(ButtonKind::RepeatLast);
    b.build()
}

/// Task 2: full-width banner, a six by six text block, a ten by two image
/// widened from eight columns by moving its right corners, and a two by two
/// video. Ends with a read-all.
pub fn task2() -> SessionTrace {
    let mut b = TraceBuilder::new(GOLDEN_SEED, DiodeMode::WithDiodes);
    let ohms = BracketType::Image.nominal_ohms();
    b.place(BracketType::Text, span(0, 0, 1, 11))
        .place(BracketType::Text, span(2, 0, 7, 5))
        .place(BracketType::Image, span(8, 0, 9, 7))
        .up(cell(8, 7))
        .wait(CORNER_GAP)
        .down(cell(8, 9), ohms)
        .wait(CORNER_GAP)
        .up(cell(9, 7))
        .wait(CORNER_GAP)
        .down(cell(9, 9), ohms)
        .wait(SETTLE_GAP)
        .place(BracketType::Video, span(14, 0, 15, 1))
        .button(ButtonKind::ReadAll);
    b.build()
}

/// An image corner re-seated one row too low, left long enough to trigger
/// the warning, then put back where it belongs.
pub fn misalignment() -> SessionTrace {
    let mut b = TraceBuilder::new(GOLDEN_SEED, DiodeMode::WithDiodes);
    let ohms = BracketType::Image.nominal_ohms();
    b.place(BracketType::Image, span(2, 3, 4, 6))
        .up(cell(4, 6))
        .wait(3)
        .down(cell(5, 6), ohms)
        .wait(60)
        .up(cell(5, 6))
        .wait(CORNER_GAP)
        .down(cell(4, 6), ohms)
        .wait(SETTLE_GAP)
        .button(ButtonKind::RepeatLast);
    b.build()
}

/// Bundled trace text for a task number.
pub fn task_trace(task: u8) -> Option<&'static str> {
    match task {
        1 => Some(TASK1_TRACE),
        2 => Some(TASK2_TRACE),
        _ => None,
    }
}
