//! Exhaustive grouping of contacts into rectangles.
//!
//! Used as an independent check on the incremental tracker. It looks at a
//! single contact set with no history, tries every partition of each type's
//! contacts into disjoint 4-subsets, and keeps the largest partitions whose
//! parts are all rectangles.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decoder::{BracketType, ContactSet};
use crate::geometry::{CellCoord, RectSpan};

pub const MAX_ORACLE_CONTACTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("brute-force grouping supports at most 16 contacts, got {0}")]
    TooManyContacts(usize),
    #[error("{0} contacts admit more than one maximal rectangle grouping")]
    AmbiguousGrouping(BracketType),
}

fn as_rectangle(cells: [CellCoord; 4]) -> Option<RectSpan> {
    let rows: BTreeSet<u8> = cells.iter().map(|c| c.row()).collect();
    let cols: BTreeSet<u8> = cells.iter().map(|c| c.col()).collect();
    let distinct: BTreeSet<CellCoord> = cells.iter().copied().collect();
    if rows.len() != 2 || cols.len() != 2 || distinct.len() != 4 {
        return None;
    }
    // four distinct cells drawn from a 2x2 row/col product are that product
    let (top, bottom) = (*rows.first()?, *rows.last()?);
    let (left, right) = (*cols.first()?, *cols.last()?);
    RectSpan::new(top, left, bottom, right).ok()
}

/// Distinct largest packings of pairwise disjoint rectangles. Each input
/// rectangle carries the bitmask of the contacts it uses.
fn max_packings(rects: &[(u32, RectSpan)]) -> Vec<BTreeSet<RectSpan>> {
    fn search(
        rects: &[(u32, RectSpan)],
        start: usize,
        used: u32,
        chosen: &mut Vec<RectSpan>,
        best: &mut (usize, Vec<BTreeSet<RectSpan>>),
    ) {
        if chosen.len() > best.0 {
            *best = (chosen.len(), Vec::new());
        }
        if chosen.len() == best.0 {
            let set: BTreeSet<RectSpan> = chosen.iter().copied().collect();
            if !best.1.contains(&set) {
                best.1.push(set);
            }
        }
        for i in start..rects.len() {
            let (mask, span) = rects[i];
            if used & mask == 0 {
                chosen.push(span);
                search(rects, i + 1, used | mask, chosen, best);
                chosen.pop();
            }
        }
    }
    let mut best = (0, Vec::new());
    search(rects, 0, 0, &mut Vec::new(), &mut best);
    best.1
}

/// Groups `contacts` into `(type, span)` pairs, failing when the maximal
/// grouping of some type is not unique.
pub fn brute_force_group(
    contacts: &ContactSet,
) -> Result<BTreeSet<(BracketType, RectSpan)>, OracleError> {
    if contacts.contacts.len() > MAX_ORACLE_CONTACTS {
        return Err(OracleError::TooManyContacts(contacts.contacts.len()));
    }
    let mut out = BTreeSet::new();
    for bracket_type in BracketType::ALL {
        let cells: Vec<CellCoord> = contacts
            .contacts
            .iter()
            .filter(|c| c.bracket_type == bracket_type)
            .map(|c| c.cell)
            .collect();
        let n = cells.len();
        let mut rects = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        if let Some(span) = as_rectangle([cells[a], cells[b], cells[c], cells[d]]) {
                            let mask = (1 << a) | (1 << b) | (1 << c) | (1 << d);
                            rects.push((mask, span));
                        }
                    }
                }
            }
        }
        let packings = max_packings(&rects);
        match packings.as_slice() {
            [] => {}
            [only] => out.extend(only.iter().map(|&s| (bracket_type, s))),
            _ => return Err(OracleError::AmbiguousGrouping(bracket_type)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(row: u8, col: u8) -> CellCoord {
        CellCoord::new(row, col).unwrap()
    }

    fn span(t: u8, l: u8, b: u8, r: u8) -> RectSpan {
        RectSpan::new(t, l, b, r).unwrap()
    }

    fn contacts(bracket_type: BracketType, cells: &[(u8, u8)]) -> ContactSet {
        ContactSet::from_types(1, cells.iter().map(|&(r, c)| (cell(r, c), bracket_type)))
    }

    #[test]
    fn single_rectangle() {
        let set = contacts(BracketType::Image, &[(2, 3), (2, 6), (4, 3), (4, 6)]);
        assert_eq!(
            brute_force_group(&set),
            Ok(BTreeSet::from([(BracketType::Image, span(2, 3, 4, 6))]))
        );
    }

    #[test]
    fn two_disjoint_rectangles() {
        let cells = [
            (0, 0),
            (0, 2),
            (2, 0),
            (2, 2),
            (5, 5),
            (5, 7),
            (7, 5),
            (7, 7),
        ];
        let set = contacts(BracketType::Text, &cells);
        assert_eq!(
            brute_force_group(&set),
            Ok(BTreeSet::from([
                (BracketType::Text, span(0, 0, 2, 2)),
                (BracketType::Text, span(5, 5, 7, 7)),
            ]))
        );
    }

    #[test]
    fn side_by_side_rectangles_sharing_rows_are_ambiguous() {
        // Both rectangles use rows 0 and 2, so any two column pairs regroup
        // into rectangles: three distinct 2-rectangle partitions exist.
        let cells = [
            (0, 0),
            (0, 3),
            (2, 0),
            (2, 3),
            (0, 5),
            (0, 8),
            (2, 5),
            (2, 8),
        ];
        let set = contacts(BracketType::Text, &cells);
        assert_eq!(
            brute_force_group(&set),
            Err(OracleError::AmbiguousGrouping(BracketType::Text))
        );
    }

    #[test]
    fn offset_rectangles_group_uniquely() {
        let cells = [
            (0, 0),
            (0, 3),
            (2, 0),
            (2, 3),
            (3, 5),
            (3, 8),
            (5, 5),
            (5, 8),
        ];
        let set = contacts(BracketType::Text, &cells);
        assert_eq!(
            brute_force_group(&set),
            Ok(BTreeSet::from([
                (BracketType::Text, span(0, 0, 2, 3)),
                (BracketType::Text, span(3, 5, 5, 8)),
            ]))
        );
    }

    #[test]
    fn types_never_mix() {
        let mut set = contacts(BracketType::Text, &[(0, 0), (0, 1)]);
        set.contacts
            .extend(contacts(BracketType::Video, &[(1, 0), (1, 1)]).contacts);
        assert_eq!(brute_force_group(&set), Ok(BTreeSet::new()));
    }

    #[test]
    fn leftover_contacts_are_ignored() {
        let set = contacts(
            BracketType::Image,
            &[(2, 3), (2, 6), (4, 3), (4, 6), (9, 9)],
        );
        assert_eq!(
            brute_force_group(&set),
            Ok(BTreeSet::from([(BracketType::Image, span(2, 3, 4, 6))]))
        );
    }

    #[test]
    fn too_many_contacts() {
        let cells: Vec<(u8, u8)> = (0..17).map(|i| (i / 12, i % 12)).collect();
        let set = contacts(BracketType::Image, &cells);
        assert_eq!(
            brute_force_group(&set),
            Err(OracleError::TooManyContacts(17))
        );
    }
}
