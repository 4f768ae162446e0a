//! Incremental bracket inference from debounced corner contacts.
//!
//! Every decoded scan is fed to [`Tracker::ingest`]. Contacts are debounced
//! per cell, then grouped by type. Unassigned contacts of one type form a
//! pool; as soon as four of them sit on the corners of a rectangle a bracket
//! is placed. Lifting some corners of a placed bracket puts it into an
//! adjusting state for a grace period during which it can re-form (resize or
//! move) under the same id.

mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::{Anomaly, AnomalyReason, BracketType, ContactSet};
use crate::geometry::{CellCoord, RectSpan, CONNECTORS};

pub use oracle::{brute_force_group, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Consecutive identical observations needed to accept a contact change.
    pub debounce_scans: u32,
    /// Scans an adjusting bracket may stay incomplete without activity.
    pub grace_scans: u32,
    /// Scans a stuck pool of four or more contacts waits before warning.
    pub misalign_scans: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            debounce_scans: 2,
            grace_scans: 40,
            misalign_scans: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrackerError {
    #[error("tracker config values must all be at least 1: {0:?}")]
    InvalidConfig(TrackerConfig),
    #[error("contact set tick {got} does not follow previous tick {previous}")]
    ProtocolError { previous: u64, got: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BracketId(pub u64);

impl fmt::Display for BracketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketState {
    Placed,
    Adjusting,
    MisalignedPending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketInstance {
    pub id: BracketId,
    #[serde(rename = "type")]
    pub bracket_type: BracketType,
    pub span: RectSpan,
    pub state: BracketState,
    pub placed_tick: u64,
    pub last_change_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    BracketPlaced {
        id: BracketId,
        #[serde(rename = "type")]
        bracket_type: BracketType,
        span: RectSpan,
    },
    BracketResized {
        id: BracketId,
        #[serde(rename = "type")]
        bracket_type: BracketType,
        old_span: RectSpan,
        new_span: RectSpan,
    },
    BracketMoved {
        id: BracketId,
        #[serde(rename = "type")]
        bracket_type: BracketType,
        old_span: RectSpan,
        new_span: RectSpan,
    },
    BracketRemoved {
        id: BracketId,
        #[serde(rename = "type")]
        bracket_type: BracketType,
    },
    /// Cells are in arrival order, most recent last.
    MisalignmentWarning {
        #[serde(rename = "type")]
        bracket_type: BracketType,
        cells: Vec<CellCoord>,
    },
    /// Corners left behind when an adjusting bracket timed out.
    PartialPlacement {
        #[serde(rename = "type")]
        bracket_type: BracketType,
        cells: Vec<CellCoord>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEvent {
    pub tick: u64,
    pub kind: EventKind,
}

/// One bracket as seen by the renderer and narrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedBracket {
    pub id: BracketId,
    #[serde(rename = "type")]
    pub bracket_type: BracketType,
    pub span: RectSpan,
    pub placed_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayoutSnapshot {
    /// Sorted by id.
    pub brackets: Vec<PlacedBracket>,
}

impl LayoutSnapshot {
    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    /// Top-to-bottom, then left-to-right.
    pub fn reading_order(&self) -> Vec<PlacedBracket> {
        let mut out = self.brackets.clone();
        out.sort_by_key(|b| (b.span.top(), b.span.left(), b.id));
        out
    }

    /// Folds a layout event into the snapshot.
    pub fn apply(&mut self, event: &LayoutEvent) {
        match &event.kind {
            EventKind::BracketPlaced {
                id,
                bracket_type,
                span,
            } => match self.brackets.iter_mut().find(|b| b.id == *id) {
                Some(existing) => existing.span = *span,
                None => {
                    self.brackets.push(PlacedBracket {
                        id: *id,
                        bracket_type: *bracket_type,
                        span: *span,
                        placed_tick: event.tick,
                    });
                    self.brackets.sort_by_key(|b| b.id);
                }
            },
            EventKind::BracketResized { id, new_span, .. }
            | EventKind::BracketMoved { id, new_span, .. } => {
                if let Some(existing) = self.brackets.iter_mut().find(|b| b.id == *id) {
                    existing.span = *new_span;
                }
            }
            EventKind::BracketRemoved { id, .. } => self.brackets.retain(|b| b.id != *id),
            EventKind::MisalignmentWarning { .. } | EventKind::PartialPlacement { .. } => {}
        }
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a LayoutEvent>) -> Self {
        let mut snapshot = LayoutSnapshot::default();
        for event in events {
            snapshot.apply(event);
        }
        snapshot
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Debounce {
    candidate: Option<BracketType>,
    count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Pool,
    Bracket(BracketId),
    Conflict,
}

#[derive(Debug, Clone, Copy)]
struct Held {
    bracket_type: BracketType,
    arrival: u64,
    owner: Owner,
}

#[derive(Debug, Clone)]
struct Tracked {
    instance: BracketInstance,
    present: BTreeSet<CellCoord>,
    last_activity: u64,
}

#[derive(Debug, Clone)]
struct MisalignWatch {
    cells: Vec<CellCoord>,
    since: u64,
    warned: bool,
}

/// Ordering key for competing rectangles: latest-arriving corner first,
/// then area, then top-left position.
type RectKey = (u64, u32, u8, u8, u8, u8);

fn rect_key(span: RectSpan, arrivals: &BTreeMap<CellCoord, u64>) -> RectKey {
    let latest = span
        .corners()
        .iter()
        .map(|c| arrivals[c])
        .max()
        .unwrap_or(0);
    (
        latest,
        span.area(),
        span.top(),
        span.left(),
        span.bottom(),
        span.right(),
    )
}

/// Every rectangle whose four corners are all in `cells`.
fn rectangles_in(cells: &BTreeMap<CellCoord, u64>) -> Vec<RectSpan> {
    let mut by_row: BTreeMap<u8, Vec<u8>> = BTreeMap::new();
    for cell in cells.keys() {
        by_row.entry(cell.row()).or_default().push(cell.col());
    }
    let rows: Vec<(&u8, &Vec<u8>)> = by_row.iter().collect();
    let mut out = Vec::new();
    for (i, (&top, top_cols)) in rows.iter().enumerate() {
        for (&bottom, bottom_cols) in &rows[i + 1..] {
            let shared: Vec<u8> = top_cols
                .iter()
                .copied()
                .filter(|c| bottom_cols.contains(c))
                .collect();
            for (j, &left) in shared.iter().enumerate() {
                for &right in &shared[j + 1..] {
                    if let Ok(span) = RectSpan::new(top, left, bottom, right) {
                        out.push(span);
                    }
                }
            }
        }
    }
    out
}

fn best_rectangle(
    cells: &BTreeMap<CellCoord, u64>,
    required: &BTreeSet<CellCoord>,
) -> Option<RectSpan> {
    rectangles_in(cells)
        .into_iter()
        .filter(|span| required.iter().all(|&c| span.is_corner(c)))
        .min_by_key(|&span| rect_key(span, cells))
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    last_tick: Option<u64>,
    debounce: Vec<Debounce>,
    held: BTreeMap<CellCoord, Held>,
    brackets: BTreeMap<BracketId, Tracked>,
    next_id: u64,
    watches: BTreeMap<BracketType, MisalignWatch>,
}

impl Default for Tracker {
    fn default() -> Self {
        Tracker::with_config(TrackerConfig::default()).expect("default config is valid")
    }
}

impl Tracker {
    pub fn new() -> Self {
        Tracker::default()
    }

    pub fn with_config(config: TrackerConfig) -> Result<Self, TrackerError> {
        if config.debounce_scans == 0 || config.grace_scans == 0 || config.misalign_scans == 0 {
            return Err(TrackerError::InvalidConfig(config));
        }
        Ok(Tracker {
            config,
            last_tick: None,
            debounce: vec![Debounce::default(); CONNECTORS],
            held: BTreeMap::new(),
            brackets: BTreeMap::new(),
            next_id: 1,
            watches: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> TrackerConfig {
        self.config
    }

    pub fn ingest(&mut self, contacts: &ContactSet) -> Result<Vec<LayoutEvent>, TrackerError> {
        let tick = contacts.tick;
        if let Some(previous) = self.last_tick {
            if tick <= previous {
                return Err(TrackerError::ProtocolError {
                    previous,
                    got: tick,
                });
            }
        }
        self.last_tick = Some(tick);

        let mut events = Vec::new();
        let mut emit = |kind| events.push(LayoutEvent { tick, kind });

        let changes = self.debounce(&contacts.types_by_cell());
        self.apply_changes(tick, &changes, &mut emit);

        for &bracket_type in &BracketType::ALL {
            self.reform_adjusting(tick, bracket_type, &mut emit);
            self.place_from_pool(tick, bracket_type, &mut emit);
        }
        for &bracket_type in &BracketType::ALL {
            self.watch_misalignment(tick, bracket_type, &mut emit);
        }
        let expired = self.expire_grace(tick, &mut emit);
        for bracket_type in expired {
            self.place_from_pool(tick, bracket_type, &mut emit);
        }
        Ok(events)
    }

    /// Returns `(cell, old, new)` for every cell whose debounced state flips.
    fn debounce(
        &mut self,
        raw: &BTreeMap<CellCoord, BracketType>,
    ) -> Vec<(CellCoord, Option<BracketType>, Option<BracketType>)> {
        let mut changes = Vec::new();
        for cell in CellCoord::all() {
            let observed = raw.get(&cell).copied();
            let stable = self.held.get(&cell).map(|h| h.bracket_type);
            let slot = &mut self.debounce[cell.index()];
            if observed == stable {
                *slot = Debounce::default();
                continue;
            }
            if slot.candidate == observed && slot.count > 0 {
                slot.count += 1;
            } else {
                slot.candidate = observed;
                slot.count = 1;
            }
            if slot.count >= self.config.debounce_scans {
                *slot = Debounce::default();
                changes.push((cell, stable, observed));
            }
        }
        changes
    }

    fn apply_changes(
        &mut self,
        tick: u64,
        changes: &[(CellCoord, Option<BracketType>, Option<BracketType>)],
        emit: &mut impl FnMut(EventKind),
    ) {
        let mut touched = BTreeSet::new();
        let mut lost = BTreeSet::new();
        for &(cell, _, new) in changes {
            let mut was_supporting = false;
            if let Some(old) = self.held.remove(&cell) {
                match old.owner {
                    Owner::Bracket(id) => {
                        if let Some(tracked) = self.brackets.get_mut(&id) {
                            tracked.present.remove(&cell);
                        }
                        lost.insert(id);
                        was_supporting = true;
                        touched.insert(old.bracket_type);
                    }
                    Owner::Pool => {
                        touched.insert(old.bracket_type);
                    }
                    Owner::Conflict => {}
                }
            }
            if let Some(bracket_type) = new {
                let owner = if was_supporting {
                    Owner::Conflict
                } else {
                    touched.insert(bracket_type);
                    Owner::Pool
                };
                self.held.insert(
                    cell,
                    Held {
                        bracket_type,
                        arrival: tick,
                        owner,
                    },
                );
            }
        }

        for id in lost {
            let Some(tracked) = self.brackets.get_mut(&id) else {
                continue;
            };
            if tracked.present.is_empty() {
                let bracket_type = tracked.instance.bracket_type;
                self.brackets.remove(&id);
                emit(EventKind::BracketRemoved { id, bracket_type });
            } else if tracked.instance.state == BracketState::Placed {
                tracked.instance.state = BracketState::Adjusting;
                tracked.instance.last_change_tick = tick;
            }
        }

        for tracked in self.brackets.values_mut() {
            if tracked.instance.state != BracketState::Placed
                && touched.contains(&tracked.instance.bracket_type)
            {
                tracked.last_activity = tick;
            }
        }
    }

    fn pool(&self, bracket_type: BracketType) -> BTreeMap<CellCoord, u64> {
        self.held
            .iter()
            .filter(|(_, h)| h.owner == Owner::Pool && h.bracket_type == bracket_type)
            .map(|(&cell, h)| (cell, h.arrival))
            .collect()
    }

    fn claim(&mut self, id: BracketId, span: RectSpan) {
        for corner in span.corners() {
            if let Some(h) = self.held.get_mut(&corner) {
                h.owner = Owner::Bracket(id);
            }
        }
    }

    fn reform_adjusting(
        &mut self,
        tick: u64,
        bracket_type: BracketType,
        emit: &mut impl FnMut(EventKind),
    ) {
        let ids: Vec<BracketId> = self
            .brackets
            .values()
            .filter(|t| {
                t.instance.bracket_type == bracket_type && t.instance.state != BracketState::Placed
            })
            .map(|t| t.instance.id)
            .collect();
        for id in ids {
            let mut candidates = self.pool(bracket_type);
            let present = self.brackets[&id].present.clone();
            for cell in &present {
                candidates.insert(*cell, self.held[cell].arrival);
            }
            let Some(span) = best_rectangle(&candidates, &present) else {
                continue;
            };
            self.claim(id, span);
            let tracked = self.brackets.get_mut(&id).expect("id collected above");
            let old_span = tracked.instance.span;
            tracked.present = span.corners().into_iter().collect();
            tracked.instance.span = span;
            tracked.instance.state = BracketState::Placed;
            tracked.instance.last_change_tick = tick;
            emit(if old_span == span {
                EventKind::BracketPlaced {
                    id,
                    bracket_type,
                    span,
                }
            } else if old_span.same_size(span) {
                EventKind::BracketMoved {
                    id,
                    bracket_type,
                    old_span,
                    new_span: span,
                }
            } else {
                EventKind::BracketResized {
                    id,
                    bracket_type,
                    old_span,
                    new_span: span,
                }
            });
        }
    }

    fn place_from_pool(
        &mut self,
        tick: u64,
        bracket_type: BracketType,
        emit: &mut impl FnMut(EventKind),
    ) {
        loop {
            let pool = self.pool(bracket_type);
            let Some(span) = best_rectangle(&pool, &BTreeSet::new()) else {
                return;
            };
            let id = BracketId(self.next_id);
            self.next_id += 1;
            self.claim(id, span);
            self.brackets.insert(
                id,
                Tracked {
                    instance: BracketInstance {
                        id,
                        bracket_type,
                        span,
                        state: BracketState::Placed,
                        placed_tick: tick,
                        last_change_tick: tick,
                    },
                    present: span.corners().into_iter().collect(),
                    last_activity: tick,
                },
            );
            emit(EventKind::BracketPlaced {
                id,
                bracket_type,
                span,
            });
        }
    }

    /// Contacts of `bracket_type` waiting to become (part of) a rectangle:
    /// the pool plus the surviving corners of incomplete brackets.
    fn unresolved(&self, bracket_type: BracketType) -> Vec<(CellCoord, u64)> {
        let mut cells: Vec<(CellCoord, u64)> = self.pool(bracket_type).into_iter().collect();
        for tracked in self.brackets.values() {
            if tracked.instance.bracket_type == bracket_type
                && tracked.instance.state != BracketState::Placed
            {
                cells.extend(tracked.present.iter().map(|c| (*c, self.held[c].arrival)));
            }
        }
        cells
    }

    fn watch_misalignment(
        &mut self,
        tick: u64,
        bracket_type: BracketType,
        emit: &mut impl FnMut(EventKind),
    ) {
        let mut unresolved = self.unresolved(bracket_type);
        if unresolved.len() < 4 {
            self.watches.remove(&bracket_type);
            return;
        }
        let mut cells: Vec<CellCoord> = unresolved.iter().map(|(c, _)| *c).collect();
        cells.sort_unstable();

        let watch = match self.watches.get_mut(&bracket_type) {
            Some(w) if w.cells == cells => w,
            _ => {
                self.watches.insert(
                    bracket_type,
                    MisalignWatch {
                        cells,
                        since: tick,
                        warned: false,
                    },
                );
                return;
            }
        };
        if watch.warned || tick - watch.since < u64::from(self.config.misalign_scans) {
            return;
        }
        watch.warned = true;

        unresolved.sort_by_key(|&(cell, arrival)| (arrival, cell));
        emit(EventKind::MisalignmentWarning {
            bracket_type,
            cells: unresolved.into_iter().map(|(c, _)| c).collect(),
        });
        // the warning restarts the grace period so the user can fix the corner
        for tracked in self.brackets.values_mut() {
            if tracked.instance.bracket_type == bracket_type
                && tracked.instance.state != BracketState::Placed
            {
                tracked.instance.state = BracketState::MisalignedPending;
                tracked.last_activity = tick;
            }
        }
    }

    fn expire_grace(
        &mut self,
        tick: u64,
        emit: &mut impl FnMut(EventKind),
    ) -> BTreeSet<BracketType> {
        let grace = u64::from(self.config.grace_scans);
        let expired: Vec<BracketId> = self
            .brackets
            .values()
            .filter(|t| t.instance.state != BracketState::Placed && tick - t.last_activity >= grace)
            .map(|t| t.instance.id)
            .collect();
        let mut types = BTreeSet::new();
        for id in expired {
            let tracked = self.brackets.remove(&id).expect("id collected above");
            let bracket_type = tracked.instance.bracket_type;
            let mut survivors: Vec<(u64, CellCoord)> = tracked
                .present
                .iter()
                .map(|c| (self.held[c].arrival, *c))
                .collect();
            survivors.sort_unstable();
            for (_, cell) in &survivors {
                if let Some(h) = self.held.get_mut(cell) {
                    h.owner = Owner::Pool;
                }
            }
            emit(EventKind::BracketRemoved { id, bracket_type });
            emit(EventKind::PartialPlacement {
                bracket_type,
                cells: survivors.into_iter().map(|(_, c)| c).collect(),
            });
            types.insert(bracket_type);
        }
        types
    }

    /// Every live bracket, sorted by id. Adjusting brackets keep their last
    /// complete span.
    pub fn snapshot(&self) -> LayoutSnapshot {
        LayoutSnapshot {
            brackets: self
                .brackets
                .values()
                .map(|t| PlacedBracket {
                    id: t.instance.id,
                    bracket_type: t.instance.bracket_type,
                    span: t.instance.span,
                    placed_tick: t.instance.placed_tick,
                })
                .collect(),
        }
    }

    pub fn brackets(&self) -> impl Iterator<Item = &BracketInstance> {
        self.brackets.values().map(|t| &t.instance)
    }

    pub fn bracket(&self, id: BracketId) -> Option<&BracketInstance> {
        self.brackets.get(&id).map(|t| &t.instance)
    }

    /// Debounced contacts currently on the board.
    pub fn stable_contacts(&self) -> BTreeMap<CellCoord, BracketType> {
        self.held
            .iter()
            .map(|(&c, h)| (c, h.bracket_type))
            .collect()
    }

    /// Contacts rejected because they changed type under a bracket corner.
    pub fn anomalies(&self) -> Vec<Anomaly> {
        self.held
            .iter()
            .filter(|(_, h)| h.owner == Owner::Conflict)
            .map(|(&cell, _)| Anomaly {
                cell,
                reason: AnomalyReason::CellConflict,
            })
            .collect()
    }

    /// True when no further events can occur without new input: no pending
    /// debounce, no incomplete bracket and no unexpired misalignment timer.
    pub fn is_quiescent(&self) -> bool {
        self.debounce.iter().all(|d| d.count == 0)
            && self
                .brackets
                .values()
                .all(|t| t.instance.state == BracketState::Placed)
            && self.watches.values().all(|w| w.warned)
    }
}
