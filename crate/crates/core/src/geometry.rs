//! Board coordinate system.
//!
//! The baseboard is a 12 column by 16 row grid with one connector per cell.
//! Cells are 0-indexed internally; only the narrator counts from one.
//! A [`RectSpan`] is the inclusive rectangle covered by one bracket and is
//! defined by its four corner cells.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COLS: u8 = 12;
pub const ROWS: u8 = 16;
pub const CONNECTORS: usize = COLS as usize * ROWS as usize;

pub const BOARD_MM: (u32, u32) = (420, 560);
pub const CANVAS_PX: (u32, u32) = (1560, 2080);
/// Stored rather than derived so the renderer can never drift from the grid.
pub const CELL_PX: u32 = 130;
pub const CELL_MM: u32 = 35;

/// Physical and on-screen dimensions of the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoardConstants {
    pub cols: u8,
    pub rows: u8,
    pub connectors: usize,
    pub board_mm: (u32, u32),
    pub canvas_px: (u32, u32),
    pub cell_px: u32,
    pub cell_mm: u32,
}

pub const BOARD: BoardConstants = BoardConstants {
    cols: COLS,
    rows: ROWS,
    connectors: CONNECTORS,
    board_mm: BOARD_MM,
    canvas_px: CANVAS_PX,
    cell_px: CELL_PX,
    cell_mm: CELL_MM,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("cell ({row}, {col}) is outside the 16x12 board")]
    CellOutOfRange { row: i64, col: i64 },
    #[error(
        "span top={top} left={left} bottom={bottom} right={right} is not a valid bracket rectangle"
    )]
    InvalidSpan {
        top: i64,
        left: i64,
        bottom: i64,
        right: i64,
    },
    #[error("expected exactly 4 corner cells, got {0}")]
    WrongCornerCount(usize),
    #[error("corner cells do not form a rectangle")]
    NotARectangle,
    #[error("pixel rect {0:?} is not aligned to the cell grid")]
    UnalignedPixels(PixelRect),
}

/// One connector position on the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCell")]
pub struct CellCoord {
    row: u8,
    col: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    row: i64,
    col: i64,
}

impl TryFrom<RawCell> for CellCoord {
    type Error = GeometryError;

    fn try_from(raw: RawCell) -> Result<Self, Self::Error> {
        CellCoord::checked(raw.row, raw.col)
    }
}

impl CellCoord {
    pub fn new(row: u8, col: u8) -> Result<Self, GeometryError> {
        Self::checked(row.into(), col.into())
    }

    fn checked(row: i64, col: i64) -> Result<Self, GeometryError> {
        if (0..ROWS as i64).contains(&row) && (0..COLS as i64).contains(&col) {
            Ok(CellCoord {
                row: row as u8,
                col: col as u8,
            })
        } else {
            Err(GeometryError::CellOutOfRange { row, col })
        }
    }

    pub fn row(self) -> u8 {
        self.row
    }

    pub fn col(self) -> u8 {
        self.col
    }

    /// Row-major index in `0..192`.
    pub fn index(self) -> usize {
        self.row as usize * COLS as usize + self.col as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < CONNECTORS).then(|| CellCoord {
            row: (index / COLS as usize) as u8,
            col: (index % COLS as usize) as u8,
        })
    }

    /// Every cell of the board in row-major (scan) order.
    pub fn all() -> impl Iterator<Item = CellCoord> {
        (0..CONNECTORS).filter_map(CellCoord::from_index)
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Inclusive rectangle of cells, at least 2x2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpan")]
pub struct RectSpan {
    top: u8,
    left: u8,
    bottom: u8,
    right: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpan {
    top: i64,
    left: i64,
    bottom: i64,
    right: i64,
}

impl TryFrom<RawSpan> for RectSpan {
    type Error = GeometryError;

    fn try_from(raw: RawSpan) -> Result<Self, Self::Error> {
        RectSpan::checked(raw.top, raw.left, raw.bottom, raw.right)
    }
}

impl RectSpan {
    pub fn new(top: u8, left: u8, bottom: u8, right: u8) -> Result<Self, GeometryError> {
        Self::checked(top.into(), left.into(), bottom.into(), right.into())
    }

    fn checked(top: i64, left: i64, bottom: i64, right: i64) -> Result<Self, GeometryError> {
        let valid = 0 <= top
            && top < bottom
            && bottom < ROWS as i64
            && 0 <= left
            && left < right
            && right < COLS as i64;
        if !valid {
            return Err(GeometryError::InvalidSpan {
                top,
                left,
                bottom,
                right,
            });
        }
        Ok(RectSpan {
            top: top as u8,
            left: left as u8,
            bottom: bottom as u8,
            right: right as u8,
        })
    }

    pub fn top(self) -> u8 {
        self.top
    }

    pub fn left(self) -> u8 {
        self.left
    }

    pub fn bottom(self) -> u8 {
        self.bottom
    }

    pub fn right(self) -> u8 {
        self.right
    }

    /// Width in columns.
    pub fn width(self) -> u8 {
        self.right - self.left + 1
    }

    /// Height in rows.
    pub fn height(self) -> u8 {
        self.bottom - self.top + 1
    }

    pub fn area(self) -> u32 {
        u32::from(self.width()) * u32::from(self.height())
    }

    /// The four corner cells: top-left, top-right, bottom-left, bottom-right.
    pub fn corners(self) -> [CellCoord; 4] {
        let cell = |row, col| CellCoord { row, col };
        [
            cell(self.top, self.left),
            cell(self.top, self.right),
            cell(self.bottom, self.left),
            cell(self.bottom, self.right),
        ]
    }

    pub fn is_corner(self, cell: CellCoord) -> bool {
        (cell.row == self.top || cell.row == self.bottom)
            && (cell.col == self.left || cell.col == self.right)
    }

    pub fn same_size(self, other: RectSpan) -> bool {
        self.width() == other.width() && self.height() == other.height()
    }
}

impl fmt::Display for RectSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "span({},{},{},{})",
            self.top, self.left, self.bottom, self.right
        )
    }
}

/// Rectangle on the 1560x2080 canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

pub fn span_to_px(span: RectSpan) -> PixelRect {
    PixelRect {
        x: u32::from(span.left) * CELL_PX,
        y: u32::from(span.top) * CELL_PX,
        width: u32::from(span.width()) * CELL_PX,
        height: u32::from(span.height()) * CELL_PX,
    }
}

/// Inverse of [`span_to_px`].
pub fn px_to_span(rect: PixelRect) -> Result<RectSpan, GeometryError> {
    let aligned = [rect.x, rect.y, rect.width, rect.height]
        .iter()
        .all(|v| v % CELL_PX == 0);
    if !aligned || rect.width == 0 || rect.height == 0 {
        return Err(GeometryError::UnalignedPixels(rect));
    }
    let left = i64::from(rect.x / CELL_PX);
    let top = i64::from(rect.y / CELL_PX);
    let right = left + i64::from(rect.width / CELL_PX) - 1;
    let bottom = top + i64::from(rect.height / CELL_PX) - 1;
    RectSpan::checked(top, left, bottom, right)
}

/// Recovers the span whose corners are exactly `corners`.
///
/// Fails with [`GeometryError::NotARectangle`] when the four cells are not
/// `{(r1,c1),(r1,c2),(r2,c1),(r2,c2)}` with `r1 < r2` and `c1 < c2`, which is
/// what a corner sitting one row off looks like.
pub fn corners_to_span(corners: &[CellCoord]) -> Result<RectSpan, GeometryError> {
    if corners.len() != 4 {
        return Err(GeometryError::WrongCornerCount(corners.len()));
    }
    let top = corners.iter().map(|c| c.row).min().unwrap_or(0);
    let bottom = corners.iter().map(|c| c.row).max().unwrap_or(0);
    let left = corners.iter().map(|c| c.col).min().unwrap_or(0);
    let right = corners.iter().map(|c| c.col).max().unwrap_or(0);
    let span = RectSpan::new(top, left, bottom, right).map_err(|_| GeometryError::NotARectangle)?;

    let mut given = corners.to_vec();
    given.sort_unstable();
    let mut expected = span.corners().to_vec();
    expected.sort_unstable();
    if given == expected {
        Ok(span)
    } else {
        Err(GeometryError::NotARectangle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(row: u8, col: u8) -> CellCoord {
        CellCoord::new(row, col).unwrap()
    }

    fn span(t: u8, l: u8, b: u8, r: u8) -> RectSpan {
        RectSpan::new(t, l, b, r).unwrap()
    }

    #[test]
    fn constants_are_consistent() {
        assert_eq!(CONNECTORS, 192);
        assert_eq!(CANVAS_PX.0 / u32::from(COLS), CELL_PX);
        assert_eq!(CANVAS_PX.1 / u32::from(ROWS), CELL_PX);
        assert_eq!(BOARD_MM.0 / u32::from(COLS), CELL_MM);
        assert_eq!(BOARD_MM.1 / u32::from(ROWS), CELL_MM);
    }

    #[test]
    fn span_to_px_examples() {
        let full = PixelRect {
            x: 0,
            y: 0,
            width: 1560,
            height: 2080,
        };
        assert_eq!(span_to_px(span(0, 0, 15, 11)), full);
        let video = PixelRect {
            x: 0,
            y: 1820,
            width: 260,
            height: 260,
        };
        assert_eq!(span_to_px(span(14, 0, 15, 1)), video);
        let banner = PixelRect {
            x: 0,
            y: 0,
            width: 1560,
            height: 260,
        };
        assert_eq!(span_to_px(span(0, 0, 1, 11)), banner);
    }

    #[test]
    fn invalid_spans_rejected() {
        assert!(RectSpan::new(0, 0, 16, 11).is_err());
        assert!(RectSpan::new(0, 0, 15, 12).is_err());
        assert!(RectSpan::new(3, 0, 3, 4).is_err());
        assert!(RectSpan::new(0, 5, 4, 5).is_err());
        assert!(RectSpan::new(5, 0, 4, 4).is_err());
        assert!(CellCoord::new(16, 0).is_err());
        assert!(CellCoord::new(0, 12).is_err());
    }

    #[test]
    fn corners_to_span_examples() {
        let got = corners_to_span(&[cell(2, 3), cell(2, 6), cell(4, 3), cell(4, 6)]);
        assert_eq!(got, Ok(span(2, 3, 4, 6)));

        let off_by_one_row = corners_to_span(&[cell(2, 3), cell(2, 6), cell(4, 3), cell(5, 6)]);
        assert_eq!(off_by_one_row, Err(GeometryError::NotARectangle));

        let minimal = corners_to_span(&[cell(7, 7), cell(7, 8), cell(8, 7), cell(8, 8)]);
        assert_eq!(minimal, Ok(span(7, 7, 8, 8)));
    }

    #[test]
    fn corners_to_span_degenerate_inputs() {
        assert_eq!(
            corners_to_span(&[cell(0, 0), cell(0, 1), cell(1, 0)]),
            Err(GeometryError::WrongCornerCount(3))
        );
        // duplicated corner
        assert_eq!(
            corners_to_span(&[cell(0, 0), cell(0, 1), cell(1, 0), cell(1, 0)]),
            Err(GeometryError::NotARectangle)
        );
        // four collinear cells
        assert_eq!(
            corners_to_span(&[cell(0, 0), cell(0, 1), cell(0, 2), cell(0, 3)]),
            Err(GeometryError::NotARectangle)
        );
    }

    #[test]
    fn serde_validates_ranges() {
        let ok: CellCoord = serde_json::from_str(r#"{"row":15,"col":11}"#).unwrap();
        assert_eq!(ok, cell(15, 11));
        assert!(serde_json::from_str::<CellCoord>(r#"{"row":16,"col":0}"#).is_err());
        assert!(serde_json::from_str::<CellCoord>(r#"{"row":-1,"col":0}"#).is_err());
        assert!(serde_json::from_str::<CellCoord>(r#"{"row":1,"col":0,"x":1}"#).is_err());
        assert!(
            serde_json::from_str::<RectSpan>(r#"{"top":2,"left":2,"bottom":2,"right":4}"#).is_err()
        );
        let s = span(2, 3, 4, 6);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"top":2,"left":3,"bottom":4,"right":6}"#);
        assert_eq!(serde_json::from_str::<RectSpan>(&text).unwrap(), s);
    }

    fn any_span() -> impl Strategy<Value = RectSpan> {
        (0u8..15, 0u8..11)
            .prop_flat_map(|(t, l)| (Just(t), Just(l), (t + 1)..16, (l + 1)..12))
            .prop_map(|(t, l, b, r)| RectSpan::new(t, l, b, r).unwrap())
    }

    proptest! {
        #[test]
        fn px_mapping_round_trips(s in any_span()) {
            let px = span_to_px(s);
            prop_assert!(px.x + px.width <= CANVAS_PX.0);
            prop_assert!(px.y + px.height <= CANVAS_PX.1);
            prop_assert_eq!(px.x % CELL_PX, 0);
            prop_assert_eq!(px.width % CELL_PX, 0);
            prop_assert_eq!(px_to_span(px), Ok(s));
        }

        #[test]
        fn corner_set_round_trips(s in any_span(), rot in 0usize..4) {
            let mut corners = s.corners();
            corners.rotate_left(rot);
            prop_assert_eq!(corners_to_span(&corners), Ok(s));
        }

        #[test]
        fn px_mapping_is_injective(a in any_span(), b in any_span()) {
            prop_assert_eq!(a == b, span_to_px(a) == span_to_px(b));
        }
    }
}
