//! Append-only session trace.
//!
//! Line 1 is a [`TraceHeader`]; every following line is a [`TraceRecord`]
//! giving the engine tick at which a wire event was applied. Replaying the
//! records against a fresh engine reproduces the session exactly.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::wire::WireEvent;
use crate::matrix::DiodeMode;

pub const TRACE_FORMAT: &str = "gridboard-trace";
pub const TRACE_VERSION: u32 = 1;
/// Bumped whenever an electrical or timing constant changes, since old
/// traces would then replay differently.
pub const CONSTANTS_VERSION: &str = "grid12x16-adc10-vcc5-vd0.7-rref1000-noise0.025-db2-gr40-ma40";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub constants: String,
    pub seed: u64,
    pub diode_mode: DiodeMode,
}

impl TraceHeader {
    pub fn new(seed: u64, diode_mode: DiodeMode) -> Self {
        TraceHeader {
            format: TRACE_FORMAT.to_string(),
            version: TRACE_VERSION,
            constants: CONSTANTS_VERSION.to_string(),
            seed,
            diode_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub tick: u64,
    pub event: WireEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceErrorKind {
    #[error("empty trace")]
    Empty,
    #[error("bad header: {0}")]
    Header(String),
    #[error("unsupported trace: {0}")]
    Unsupported(String),
    #[error("bad record: {0}")]
    Record(String),
    #[error("tick {got} goes backwards from {previous}")]
    TickOrder { previous: u64, got: u64 },
}

/// A trace problem and the 1-based line it was found on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TraceError {
    pub line: usize,
    pub kind: TraceErrorKind,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trace line {}: {}", self.line, self.kind)
    }
}

impl SessionTrace {
    pub fn new(header: TraceHeader) -> Self {
        SessionTrace {
            header,
            records: Vec::new(),
        }
    }

    /// Parses a trace. A final line without a newline that does not parse is
    /// treated as a torn write and dropped.
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let err = |line, kind| TraceError { line, kind };
        let lines: Vec<&str> = text.lines().collect();
        let torn_tail = !text.ends_with('\n');

        let header_line = lines
            .first()
            .filter(|l| !l.trim().is_empty())
            .ok_or(err(1, TraceErrorKind::Empty))?;
        let header: TraceHeader = serde_json::from_str(header_line)
            .map_err(|e| err(1, TraceErrorKind::Header(e.to_string())))?;
        if header.format != TRACE_FORMAT || header.version != TRACE_VERSION {
            return Err(err(
                1,
                TraceErrorKind::Unsupported(format!("{} v{}", header.format, header.version)),
            ));
        }
        if header.constants != CONSTANTS_VERSION {
            return Err(err(
                1,
                TraceErrorKind::Unsupported(header.constants.clone()),
            ));
        }

        let mut trace = SessionTrace::new(header);
        for (index, line) in lines.iter().enumerate().skip(1) {
            let number = index + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: TraceRecord = match serde_json::from_str(line) {
                Ok(r) => r,
                Err(_) if torn_tail && number == lines.len() => break,
                Err(e) => return Err(err(number, TraceErrorKind::Record(e.to_string()))),
            };
            if let Some(previous) = trace.records.last().map(|r| r.tick) {
                if record.tick < previous {
                    return Err(err(
                        number,
                        TraceErrorKind::TickOrder {
                            previous,
                            got: record.tick,
                        },
                    ));
                }
            }
            trace.records.push(record);
        }
        Ok(trace)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialises");
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serialises"));
            out.push('\n');
        }
        out
    }
}

/// Writes a trace incrementally, flushing after every line.
pub struct TraceWriter<W: Write> {
    inner: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut inner: W, header: &TraceHeader) -> io::Result<Self> {
        serde_json::to_writer(&mut inner, header)?;
        inner.write_all(b"\n")?;
        inner.flush()?;
        Ok(TraceWriter { inner })
    }

    pub fn append(&mut self, record: &TraceRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner.write_all(b"\n")?;
        self.inner.flush()
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}
