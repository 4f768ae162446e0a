//! Electrical model of the baseboard's key-switch matrix.
//!
//! Each bracket corner bridges one row line and one column line through its
//! type resistor. A scan drives one row at a time and reads every column
//! through a voltage divider against a 1 kΩ reference. With a series diode
//! per switch only the driven switches conduct; without diodes, current can
//! sneak through any chain of closed switches and produce phantom closures.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CellCoord, COLS, ROWS};

pub const VCC: f64 = 5.0;
pub const ADC_BITS: u32 = 10;
pub const ADC_MAX: u16 = (1 << ADC_BITS) - 1;
pub const V_DIODE: f64 = 0.7;
pub const R_REF: f64 = 1000.0;
pub const NOISE: f64 = 0.025;
pub const R_MIN: f64 = 180.0;
pub const R_MAX: f64 = 5500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElectricalConstants {
    pub vcc: f64,
    pub adc_bits: u32,
    pub v_diode: f64,
    pub r_ref: f64,
    pub noise: f64,
}

pub const ELECTRICAL: ElectricalConstants = ElectricalConstants {
    vcc: VCC,
    adc_bits: ADC_BITS,
    v_diode: V_DIODE,
    r_ref: R_REF,
    noise: NOISE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiodeMode {
    #[default]
    WithDiodes,
    WithoutDiodes,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("resistance {0} Ω is outside the sensable range 180..=5500 Ω")]
    OutOfRange(f64),
}

/// State of one connector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchState {
    pub cell: CellCoord,
    pub closed: bool,
    pub resistance_ohms: f64,
}

/// Result of one full pass over all 16 rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanFrame {
    pub tick: u64,
    #[serde(with = "readings_as_list")]
    pub readings: BTreeMap<CellCoord, u16>,
}

mod readings_as_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geometry::CellCoord;

    #[derive(Serialize, Deserialize)]
    struct Reading {
        cell: CellCoord,
        adc: u16,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<CellCoord, u16>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<Reading> = map
            .iter()
            .map(|(&cell, &adc)| Reading { cell, adc })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<CellCoord, u16>, D::Error> {
        let list = Vec::<Reading>::deserialize(d)?;
        Ok(list.into_iter().map(|r| (r.cell, r.adc)).collect())
    }
}

/// Column node voltage for a conducting switch of `resistance_ohms`.
pub fn divider_volts(resistance_ohms: f64) -> f64 {
    (VCC - V_DIODE) * R_REF / (R_REF + resistance_ohms)
}

/// Noiseless divider reading for a switch of `resistance_ohms`.
///
/// The column node sits at `(vcc - v_diode) * r_ref / (r_ref + R)` and is
/// quantised against `vcc` with round-half-away-from-zero.
pub fn ideal_adc(resistance_ohms: f64) -> u16 {
    let counts = (divider_volts(resistance_ohms) / VCC * f64::from(ADC_MAX)).round();
    counts.clamp(0.0, f64::from(ADC_MAX)) as u16
}

fn check_range(resistance_ohms: f64) -> Result<(), MatrixError> {
    if (R_MIN..=R_MAX).contains(&resistance_ohms) {
        Ok(())
    } else {
        Err(MatrixError::OutOfRange(resistance_ohms))
    }
}

/// Cells that read as closed when `closed` switches are physically closed.
///
/// With diodes this is the identity. Without diodes, rows and columns joined
/// by closed switches form connected components of a bipartite graph, and
/// every (row, col) pair inside a component conducts.
pub fn apparent_closures(
    closed: &std::collections::BTreeSet<CellCoord>,
    mode: DiodeMode,
) -> std::collections::BTreeSet<CellCoord> {
    match mode {
        DiodeMode::WithDiodes => closed.clone(),
        DiodeMode::WithoutDiodes => ghost_sources(closed).into_keys().collect(),
    }
}

/// Maps every apparent cell to the real closure whose resistance it reads.
/// Real closures map to themselves; phantoms map to the smallest (row, col)
/// real closure of their component.
fn ghost_sources(closed: &std::collections::BTreeSet<CellCoord>) -> BTreeMap<CellCoord, CellCoord> {
    let rows = ROWS as usize;
    let mut sets = UnionFind::new(rows + COLS as usize);
    for cell in closed {
        sets.union(cell.row() as usize, rows + cell.col() as usize);
    }

    // closed is sorted, so the first hit per component is its smallest cell
    let mut representative: BTreeMap<usize, CellCoord> = BTreeMap::new();
    for &cell in closed {
        representative
            .entry(sets.find(cell.row() as usize))
            .or_insert(cell);
    }

    let mut out = BTreeMap::new();
    for cell in CellCoord::all() {
        if closed.contains(&cell) {
            out.insert(cell, cell);
            continue;
        }
        let row_root = sets.find(cell.row() as usize);
        let col_root = sets.find(rows + cell.col() as usize);
        if row_root == col_root {
            if let Some(&src) = representative.get(&row_root) {
                out.insert(cell, src);
            }
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Tick-driven simulator of the switch matrix with a seeded noise stream.
#[derive(Debug, Clone)]
pub struct MatrixSim {
    switches: BTreeMap<CellCoord, f64>,
    mode: DiodeMode,
    rng: ChaCha8Rng,
    tick: u64,
}

impl MatrixSim {
    pub fn new(seed: u64, mode: DiodeMode) -> Self {
        MatrixSim {
            switches: BTreeMap::new(),
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            tick: 0,
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn diode_mode(&self) -> DiodeMode {
        self.mode
    }

    pub fn set_diode_mode(&mut self, mode: DiodeMode) {
        self.mode = mode;
    }

    /// Restarts the noise stream.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn set_switch(
        &mut self,
        cell: CellCoord,
        resistance_ohms: f64,
        closed: bool,
    ) -> Result<(), MatrixError> {
        if closed {
            check_range(resistance_ohms)?;
            self.switches.insert(cell, resistance_ohms);
        } else {
            self.switches.remove(&cell);
        }
        Ok(())
    }

    pub fn switch(&self, cell: CellCoord) -> SwitchState {
        match self.switches.get(&cell) {
            Some(&resistance_ohms) => SwitchState {
                cell,
                closed: true,
                resistance_ohms,
            },
            None => SwitchState {
                cell,
                closed: false,
                resistance_ohms: f64::INFINITY,
            },
        }
    }

    pub fn closed_cells(&self) -> std::collections::BTreeSet<CellCoord> {
        self.switches.keys().copied().collect()
    }

    /// Divider reading, optionally perturbed by a uniform ±2.5 % factor on
    /// the resistance drawn from this simulator's stream.
    pub fn divider_adc(&mut self, resistance_ohms: f64, noisy: bool) -> u16 {
        let effective = if noisy {
            resistance_ohms * self.rng.gen_range((1.0 - NOISE)..=(1.0 + NOISE))
        } else {
            resistance_ohms
        };
        ideal_adc(effective)
    }

    /// Drives rows 0..16 in order and reads every apparent closure.
    pub fn scan_frame(&mut self) -> ScanFrame {
        let sources = match self.mode {
            DiodeMode::WithDiodes => self.switches.keys().map(|&c| (c, c)).collect(),
            DiodeMode::WithoutDiodes => ghost_sources(&self.closed_cells()),
        };
        let mut readings = BTreeMap::new();
        // BTreeMap order on CellCoord is row-major, i.e. row activation order
        for (cell, source) in sources {
            let resistance = self.switches[&source];
            let adc = self.divider_adc(resistance, true);
            readings.insert(cell, adc);
        }
        self.tick += 1;
        ScanFrame {
            tick: self.tick,
            readings,
        }
    }
}
