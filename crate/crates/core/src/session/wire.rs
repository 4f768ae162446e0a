//! JSON-lines wire protocol.
//!
//! Clients send physical-level [`WireEvent`]s (corner contacts and button
//! presses) and receive [`WireNotification`]s tagged with the engine tick.
//! Each message is one compact JSON object on its own line.

use serde::{Deserialize, Serialize};

use crate::decoder::Anomaly;
use crate::geometry::CellCoord;
use crate::matrix::DiodeMode;
use crate::narrator::ButtonKind;
use crate::render::LayoutDoc;
use crate::tracker::EventKind;

/// `t_ms` is the client's own clock and never influences the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireEvent {
    CornerDown {
        t_ms: u64,
        cell: CellCoord,
        resistance_ohms: f64,
    },
    CornerUp {
        t_ms: u64,
        cell: CellCoord,
    },
    Button {
        t_ms: u64,
        kind: ButtonKind,
    },
    SetDiodeMode {
        t_ms: u64,
        mode: DiodeMode,
    },
    SetSeed {
        t_ms: u64,
        seed: u64,
    },
}

impl WireEvent {
    pub fn t_ms(&self) -> u64 {
        match *self {
            WireEvent::CornerDown { t_ms, .. }
            | WireEvent::CornerUp { t_ms, .. }
            | WireEvent::Button { t_ms, .. }
            | WireEvent::SetDiodeMode { t_ms, .. }
            | WireEvent::SetSeed { t_ms, .. } => t_ms,
        }
    }

    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire events always serialise")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireNotification {
    LayoutEvent {
        tick: u64,
        event: EventKind,
    },
    Utterance {
        tick: u64,
        text: String,
        est_duration_s: f64,
    },
    Snapshot {
        tick: u64,
        layout: LayoutDoc,
    },
    Html {
        tick: u64,
        document: String,
    },
    /// Full current set of anomalous cells; an empty list clears them.
    Anomaly {
        tick: u64,
        anomalies: Vec<Anomaly>,
    },
    Error {
        tick: u64,
        message: String,
    },
}

impl WireNotification {
    pub fn tick(&self) -> u64 {
        match *self {
            WireNotification::LayoutEvent { tick, .. }
            | WireNotification::Utterance { tick, .. }
            | WireNotification::Snapshot { tick, .. }
            | WireNotification::Html { tick, .. }
            | WireNotification::Anomaly { tick, .. }
            | WireNotification::Error { tick, .. } => tick,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("notifications always serialise")
    }
}
