//! The engine loop: one [`Session`] owns the simulated board and runs
//! scan → decode → track → narrate → render once per tick.
//!
//! Live servers call [`Session::scan`] at 20 Hz and [`Session::apply_event`]
//! whenever a client sends something. Replay drives the same two calls from
//! a [`SessionTrace`] in virtual time, so a recorded session reproduces the
//! same notification stream byte for byte.

mod trace;
mod wire;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decoder::{decode_frame, Anomaly};
use crate::matrix::{DiodeMode, MatrixSim};
use crate::narrator::{Narrator, Utterance};
use crate::render::{render, LayoutDoc};
use crate::tracker::{EventKind, LayoutSnapshot, Tracker, TrackerConfig, TrackerError};

pub use trace::{
    SessionTrace, TraceError, TraceErrorKind, TraceHeader, TraceRecord, TraceWriter,
    CONSTANTS_VERSION, TRACE_FORMAT, TRACE_VERSION,
};
pub use wire::{WireEvent, WireNotification};

pub const SCAN_HZ: u64 = 20;
pub const SCAN_PERIOD_MS: u64 = 1000 / SCAN_HZ;

/// Upper bound on scans run while waiting for the tracker to settle.
pub const MAX_SETTLE_SCANS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub seed: u64,
    pub diode_mode: DiodeMode,
    pub tracker: TrackerConfig,
}

impl SessionConfig {
    pub fn new(seed: u64, diode_mode: DiodeMode) -> Self {
        SessionConfig {
            seed,
            diode_mode,
            tracker: TrackerConfig::default(),
        }
    }
}

/// Why an event was refused. The engine state is untouched.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct Rejection {
    pub message: String,
}

impl Rejection {
    pub fn to_notification(&self, tick: u64) -> WireNotification {
        WireNotification::Error {
            tick,
            message: self.message.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    sim: MatrixSim,
    tracker: Tracker,
    narrator: Narrator,
    snapshot: LayoutSnapshot,
    html: String,
    anomalies: Vec<Anomaly>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, TrackerError> {
        let snapshot = LayoutSnapshot::default();
        Ok(Session {
            sim: MatrixSim::new(config.seed, config.diode_mode),
            tracker: Tracker::with_config(config.tracker)?,
            narrator: Narrator::new(),
            html: render(&snapshot),
            snapshot,
            anomalies: Vec::new(),
        })
    }

    pub fn from_header(header: &TraceHeader) -> Self {
        Session::new(SessionConfig::new(header.seed, header.diode_mode))
            .expect("default tracker config is valid")
    }

    /// Number of scans run so far.
    pub fn tick(&self) -> u64 {
        self.sim.tick()
    }

    pub fn snapshot(&self) -> &LayoutSnapshot {
        &self.snapshot
    }

    pub fn layout(&self) -> LayoutDoc {
        LayoutDoc::from_snapshot(&self.snapshot)
    }

    pub fn html(&self) -> &str {
        &self.html
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// What a newly connected client receives first.
    pub fn join_notification(&self) -> WireNotification {
        WireNotification::Snapshot {
            tick: self.tick(),
            layout: self.layout(),
        }
    }

    /// Applies one client event at the current tick.
    pub fn apply_event(&mut self, event: &WireEvent) -> Result<Vec<WireNotification>, Rejection> {
        let reject = |e: &dyn std::fmt::Display| Rejection {
            message: e.to_string(),
        };
        match *event {
            WireEvent::CornerDown {
                cell,
                resistance_ohms,
                ..
            } => self
                .sim
                .set_switch(cell, resistance_ohms, true)
                .map_err(|e| reject(&e))?,
            WireEvent::CornerUp { cell, .. } => self
                .sim
                .set_switch(cell, 0.0, false)
                .map_err(|e| reject(&e))?,
            WireEvent::SetDiodeMode { mode, .. } => self.sim.set_diode_mode(mode),
            WireEvent::SetSeed { seed, .. } => self.sim.reseed(seed),
            WireEvent::Button { kind, .. } => {
                let utterance = self.narrator.on_button(kind, &self.snapshot);
                return Ok(vec![self.utterance(&utterance)]);
            }
        }
        Ok(Vec::new())
    }

    fn utterance(&self, utterance: &Utterance) -> WireNotification {
        WireNotification::Utterance {
            tick: self.tick(),
            text: utterance.text.clone(),
            est_duration_s: utterance.est_duration_s,
        }
    }

    /// Runs one scan through the whole pipeline.
    pub fn scan(&mut self) -> Vec<WireNotification> {
        let frame = self.sim.scan_frame();
        let tick = frame.tick;
        let decoded = decode_frame(&frame);
        let events = self
            .tracker
            .ingest(&decoded.contacts)
            .expect("scan ticks strictly increase");

        let mut out = Vec::new();
        let mut layout_changed = false;
        for event in events {
            layout_changed |= !matches!(
                event.kind,
                EventKind::MisalignmentWarning { .. } | EventKind::PartialPlacement { .. }
            );
            let utterance = self.narrator.on_event(&event.kind);
            out.push(WireNotification::LayoutEvent {
                tick,
                event: event.kind,
            });
            out.push(self.utterance(&utterance));
        }

        if layout_changed {
            let snapshot = self.tracker.snapshot();
            if snapshot != self.snapshot {
                self.snapshot = snapshot;
                out.push(WireNotification::Snapshot {
                    tick,
                    layout: self.layout(),
                });
                let html = render(&self.snapshot);
                if html != self.html {
                    self.html = html;
                    out.push(WireNotification::Html {
                        tick,
                        document: self.html.clone(),
                    });
                }
            }
        }

        let anomalies: Vec<Anomaly> = decoded
            .anomalies
            .into_iter()
            .chain(self.tracker.anomalies())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if anomalies != self.anomalies {
            self.anomalies = anomalies;
            out.push(WireNotification::Anomaly {
                tick,
                anomalies: self.anomalies.clone(),
            });
        }
        out
    }

    /// Scans until `tick` scans have been run.
    pub fn advance_to(&mut self, tick: u64) -> Vec<WireNotification> {
        let mut out = Vec::new();
        while self.tick() < tick {
            out.extend(self.scan());
        }
        out
    }

    /// Scans until the tracker has nothing pending, so every timer that was
    /// running when input stopped has fired.
    pub fn settle(&mut self) -> Vec<WireNotification> {
        let mut out = Vec::new();
        let limit = self.tick() + MAX_SETTLE_SCANS;
        let min = self.tick() + u64::from(self.tracker.config().debounce_scans) + 1;
        while self.tick() < min || (!self.tracker.is_quiescent() && self.tick() < limit) {
            out.extend(self.scan());
        }
        out
    }
}

/// Everything a replay produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub notifications: Vec<WireNotification>,
    /// Canonical layout JSON, no trailing newline.
    pub layout_json: String,
    /// One utterance per line.
    pub transcript: String,
    pub html: String,
}

impl ReplayOutput {
    /// All notifications as JSON lines.
    pub fn notification_lines(&self) -> String {
        self.notifications
            .iter()
            .map(|n| n.to_line() + "\n")
            .collect()
    }
}

pub fn transcript(notifications: &[WireNotification]) -> String {
    notifications
        .iter()
        .filter_map(|n| match n {
            WireNotification::Utterance { text, .. } => Some(format!("{text}\n")),
            _ => None,
        })
        .collect()
}

/// Feeds a trace through a fresh engine in virtual time, then lets it settle.
pub fn replay(trace: &SessionTrace) -> ReplayOutput {
    let mut session = Session::from_header(&trace.header);
    let mut notifications = Vec::new();
    for record in &trace.records {
        notifications.extend(session.advance_to(record.tick));
        match session.apply_event(&record.event) {
            Ok(n) => notifications.extend(n),
            Err(rejection) => notifications.push(rejection.to_notification(session.tick())),
        }
    }
    notifications.extend(session.settle());
    ReplayOutput {
        transcript: transcript(&notifications),
        layout_json: session.layout().to_canonical(),
        html: session.html().to_string(),
        notifications,
    }
}

/// Parses and replays trace text.
pub fn replay_str(text: &str) -> Result<ReplayOutput, TraceError> {
    Ok(replay(&SessionTrace::parse(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::BracketType;
    use crate::geometry::{CellCoord, RectSpan};
    use crate::narrator::ButtonKind;

    fn cell(row: u8, col: u8) -> CellCoord {
        CellCoord::new(row, col).unwrap()
    }

    fn session() -> Session {
        Session::new(SessionConfig::new(42, DiodeMode::WithDiodes)).unwrap()
    }

    fn down(row: u8, col: u8, ohms: f64) -> WireEvent {
        WireEvent::CornerDown {
            t_ms: 0,
            cell: cell(row, col),
            resistance_ohms: ohms,
        }
    }

    #[test]
    fn four_corners_place_an_image() {
        let mut s = session();
        let mut out = Vec::new();
        for (r, c) in [(2, 3), (2, 6), (4, 3), (4, 6)] {
            out.extend(s.apply_event(&down(r, c, 1000.0)).unwrap());
        }
        out.extend(s.advance_to(2));
        let kinds: Vec<&str> = out
            .iter()
            .map(|n| match n {
                WireNotification::LayoutEvent { .. } => "layout_event",
                WireNotification::Utterance { .. } => "utterance",
                WireNotification::Snapshot { .. } => "snapshot",
                WireNotification::Html { .. } => "html",
                WireNotification::Anomaly { .. } => "anomaly",
                WireNotification::Error { .. } => "error",
            })
            .collect();
        assert_eq!(kinds, ["layout_event", "utterance", "snapshot", "html"]);
        match &out[0] {
            WireNotification::LayoutEvent {
                tick,
                event:
                    EventKind::BracketPlaced {
                        bracket_type, span, ..
                    },
            } => {
                assert_eq!(*tick, 2);
                assert_eq!(*bracket_type, BracketType::Image);
                assert_eq!(*span, RectSpan::new(2, 3, 4, 6).unwrap());
            }
            other => panic!("unexpected {other:?}"),
        }
        match &out[1] {
            WireNotification::Utterance { text, .. } => {
                assert!(text.starts_with("Image bracket placed."))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn read_all_on_empty_board() {
        let mut s = session();
        let out = s
            .apply_event(&WireEvent::Button {
                t_ms: 0,
                kind: ButtonKind::ReadAll,
            })
            .unwrap();
        assert_eq!(
            out,
            vec![WireNotification::Utterance {
                tick: 0,
                text: "0 brackets on the board.".into(),
                est_duration_s: 5.0 / 170.0 * 60.0,
            }]
        );
    }

    #[test]
    fn out_of_range_corner_is_rejected_without_state_change() {
        let mut s = session();
        let err = s.apply_event(&down(2, 3, 100.0)).unwrap_err();
        assert!(err.message.contains("180"), "{}", err.message);
        assert!(matches!(
            err.to_notification(0),
            WireNotification::Error { tick: 0, .. }
        ));
        assert!(s.advance_to(10).is_empty());
    }

    #[test]
    fn unclassifiable_resistor_is_reported_once() {
        let mut s = session();
        s.apply_event(&down(5, 5, 600.0)).unwrap();
        let out = s.advance_to(20);
        assert_eq!(out.len(), 1);
        assert!(
            matches!(&out[0], WireNotification::Anomaly { anomalies, .. } if anomalies.len() == 1)
        );
        s.apply_event(&WireEvent::CornerUp {
            t_ms: 0,
            cell: cell(5, 5),
        })
        .unwrap();
        let out = s.advance_to(21);
        assert!(
            matches!(&out[0], WireNotification::Anomaly { anomalies, .. } if anomalies.is_empty())
        );
    }

    #[test]
    fn ghosting_without_diodes_shows_phantom_bracket() {
        // Three Text corners of a square: with diodes nothing is placed, without
        // diodes the missing fourth corner reads as a phantom and completes it.
        let mut s = Session::new(SessionConfig::new(3, DiodeMode::WithoutDiodes)).unwrap();
        for (r, c) in [(0, 0), (0, 1), (1, 0)] {
            s.apply_event(&down(r, c, 330.0)).unwrap();
        }
        s.advance_to(5);
        assert_eq!(s.snapshot().brackets.len(), 1);

        let mut s = session();
        for (r, c) in [(0, 0), (0, 1), (1, 0)] {
            s.apply_event(&down(r, c, 330.0)).unwrap();
        }
        s.advance_to(5);
        assert!(s.snapshot().is_empty());
    }

    #[test]
    fn empty_trace_replays_to_empty_outputs() {
        let trace = SessionTrace::new(TraceHeader::new(1, DiodeMode::WithDiodes));
        let out = replay(&trace);
        assert_eq!(
            out.layout_json,
            r#"{"canvas":{"width":1560,"height":2080},"brackets":[]}"#
        );
        assert_eq!(out.transcript, "");
        assert_eq!(out.html, render(&LayoutSnapshot::default()));
        assert!(out.notifications.is_empty());
    }
}
