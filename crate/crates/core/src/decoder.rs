//! Turns ADC counts back into resistances and bracket types.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::CellCoord;
use crate::matrix::{ScanFrame, ADC_MAX, R_REF, VCC, V_DIODE};

/// Relative half-width of each classification band.
pub const BAND: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketType {
    Text,
    Image,
    Video,
}

impl BracketType {
    pub const ALL: [BracketType; 3] = [BracketType::Text, BracketType::Image, BracketType::Video];

    /// Resistor fitted across each corner's diagonal pins.
    pub fn nominal_ohms(self) -> f64 {
        match self {
            BracketType::Text => 330.0,
            BracketType::Image => 1000.0,
            BracketType::Video => 3300.0,
        }
    }

    /// Capitalised name used in narration.
    pub fn label(self) -> &'static str {
        match self {
            BracketType::Text => "Text",
            BracketType::Image => "Image",
            BracketType::Video => "Video",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            BracketType::Text => "text",
            BracketType::Image => "image",
            BracketType::Video => "video",
        }
    }

    /// Inclusive acceptance band in ohms.
    pub fn band(self) -> (f64, f64) {
        let nominal = self.nominal_ohms();
        (nominal * (1.0 - BAND), nominal * (1.0 + BAND))
    }
}

impl fmt::Display for BracketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("ADC reading {0} is saturated")]
    SaturatedReading(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub cell: CellCoord,
    #[serde(rename = "type")]
    pub bracket_type: BracketType,
    pub measured_ohms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactSet {
    pub tick: u64,
    pub contacts: Vec<Contact>,
}

impl ContactSet {
    /// Builds a set from `(cell, type)` pairs at nominal resistance. Later
    /// duplicates of a cell replace earlier ones.
    pub fn from_types(
        tick: u64,
        cells: impl IntoIterator<Item = (CellCoord, BracketType)>,
    ) -> Self {
        let by_cell: BTreeMap<CellCoord, BracketType> = cells.into_iter().collect();
        ContactSet {
            tick,
            contacts: by_cell
                .into_iter()
                .map(|(cell, bracket_type)| Contact {
                    cell,
                    bracket_type,
                    measured_ohms: bracket_type.nominal_ohms(),
                })
                .collect(),
        }
    }

    pub fn types_by_cell(&self) -> BTreeMap<CellCoord, BracketType> {
        self.contacts
            .iter()
            .map(|c| (c.cell, c.bracket_type))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyReason {
    /// Resistance falls between classification bands.
    Unclassified,
    /// ADC pegged at 0 or full scale.
    Saturated,
    /// A different type appeared on a connector already holding a bracket corner.
    CellConflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anomaly {
    pub cell: CellCoord,
    pub reason: AnomalyReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodedFrame {
    pub contacts: ContactSet,
    pub anomalies: Vec<Anomaly>,
}

/// Inverts the divider: `R = r_ref * ((vcc - v_diode) * 1023 / (vcc * adc) - 1)`.
pub fn adc_to_resistance(adc: u16) -> Result<f64, DecodeError> {
    if adc == 0 || adc >= ADC_MAX {
        return Err(DecodeError::SaturatedReading(adc));
    }
    let ratio = (VCC - V_DIODE) * f64::from(ADC_MAX) / (VCC * f64::from(adc));
    Ok((R_REF * (ratio - 1.0)).max(0.0))
}

pub fn classify(ohms: f64) -> Option<BracketType> {
    BracketType::ALL.into_iter().find(|t| {
        let (lo, hi) = t.band();
        (lo..=hi).contains(&ohms)
    })
}

pub fn decode_frame(frame: &ScanFrame) -> DecodedFrame {
    let mut out = DecodedFrame {
        contacts: ContactSet {
            tick: frame.tick,
            contacts: Vec::new(),
        },
        anomalies: Vec::new(),
    };
    for (&cell, &adc) in &frame.readings {
        match adc_to_resistance(adc) {
            Ok(ohms) => match classify(ohms) {
                Some(bracket_type) => out.contacts.contacts.push(Contact {
                    cell,
                    bracket_type,
                    measured_ohms: ohms,
                }),
                None => out.anomalies.push(Anomaly {
                    cell,
                    reason: AnomalyReason::Unclassified,
                }),
            },
            Err(DecodeError::SaturatedReading(_)) => out.anomalies.push(Anomaly {
                cell,
                reason: AnomalyReason::Saturated,
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ideal_adc;
    use proptest::prelude::*;

    fn cell(row: u8, col: u8) -> CellCoord {
        CellCoord::new(row, col).unwrap()
    }

    #[test]
    fn inverse_divider_examples() {
        let image = adc_to_resistance(440).unwrap();
        assert!((image - 1000.0).abs() <= 4.0, "{image}");
        let text = adc_to_resistance(661).unwrap();
        assert!((text - 330.0).abs() <= 2.0, "{text}");
        assert_eq!(
            adc_to_resistance(1023),
            Err(DecodeError::SaturatedReading(1023))
        );
        assert_eq!(adc_to_resistance(0), Err(DecodeError::SaturatedReading(0)));
        // above the diode-limited ceiling the inverse goes negative and clamps
        assert_eq!(adc_to_resistance(1000), Ok(0.0));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(1012.0), Some(BracketType::Image));
        assert_eq!(classify(330.0), Some(BracketType::Text));
        assert_eq!(classify(600.0), None);
        assert_eq!(classify(0.0), None);
        assert_eq!(classify(5000.0), None);
    }

    #[test]
    fn nominals_are_well_separated() {
        for pair in BracketType::ALL.windows(2) {
            assert!(pair[1].nominal_ohms() / pair[0].nominal_ohms() >= 3.0);
        }
        for t in BracketType::ALL {
            assert!((180.0..=5500.0).contains(&t.nominal_ohms()));
        }
    }

    #[test]
    fn bands_are_disjoint() {
        for (i, a) in BracketType::ALL.iter().enumerate() {
            for b in &BracketType::ALL[i + 1..] {
                let (alo, ahi) = a.band();
                let (blo, bhi) = b.band();
                assert!(ahi < blo || bhi < alo, "{a} and {b} overlap");
            }
        }
    }

    #[test]
    fn decode_frame_examples() {
        let empty = ScanFrame {
            tick: 4,
            readings: BTreeMap::new(),
        };
        let decoded = decode_frame(&empty);
        assert!(decoded.contacts.contacts.is_empty());
        assert!(decoded.anomalies.is_empty());
        assert_eq!(decoded.contacts.tick, 4);

        let frame = ScanFrame {
            tick: 5,
            readings: BTreeMap::from([(cell(2, 3), 440)]),
        };
        let decoded = decode_frame(&frame);
        assert_eq!(
            decoded.contacts.types_by_cell(),
            BTreeMap::from([(cell(2, 3), BracketType::Image)])
        );

        // 900 counts inverts to a negative resistance, clamped to 0 Ω
        let frame = ScanFrame {
            tick: 6,
            readings: BTreeMap::from([(cell(2, 3), 900)]),
        };
        let decoded = decode_frame(&frame);
        assert!(decoded.contacts.contacts.is_empty());
        assert_eq!(
            decoded.anomalies,
            vec![Anomaly {
                cell: cell(2, 3),
                reason: AnomalyReason::Unclassified
            }]
        );

        let frame = ScanFrame {
            tick: 7,
            readings: BTreeMap::from([(cell(0, 0), 1023)]),
        };
        assert_eq!(
            decode_frame(&frame).anomalies[0].reason,
            AnomalyReason::Saturated
        );
    }

    #[test]
    fn worst_case_noise_stays_in_band() {
        for t in BracketType::ALL {
            for factor in [0.975, 1.025] {
                let adc = ideal_adc(t.nominal_ohms() * factor);
                let back = adc_to_resistance(adc).unwrap();
                assert_eq!(classify(back), Some(t), "{t} at x{factor}: {back}");
            }
        }
    }

    proptest! {
        #[test]
        fn classify_is_a_partition(ohms in 0.0f64..6000.0) {
            let hits = BracketType::ALL
                .iter()
                .filter(|t| {
                    let (lo, hi) = t.band();
                    (lo..=hi).contains(&ohms)
                })
                .count();
            prop_assert!(hits <= 1);
            prop_assert_eq!(hits == 1, classify(ohms).is_some());
        }

        #[test]
        fn decode_is_stateless(adcs in proptest::collection::vec(1u16..1023, 0..12)) {
            let readings: BTreeMap<_, _> = adcs
                .iter()
                .enumerate()
                .map(|(i, &a)| (CellCoord::from_index(i * 7).unwrap(), a))
                .collect();
            let frame = ScanFrame { tick: 1, readings };
            prop_assert_eq!(decode_frame(&frame), decode_frame(&frame));
        }
    }
}
