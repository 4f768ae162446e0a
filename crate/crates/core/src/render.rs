//! Deterministic HTML and JSON renderings of a layout snapshot.
//!
//! The page is a single 1560x2080 px container with one absolutely
//! positioned child per bracket, in id order so later brackets stack on top.
//! Everything is inlined; the document never fetches anything.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::BracketType;
use crate::geometry::{span_to_px, PixelRect, RectSpan, CANVAS_PX};
use crate::tracker::{BracketId, LayoutSnapshot};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("malformed layout json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bracket {id} has an invalid span or pixel rect")]
    Geometry { id: BracketId },
    #[error("canvas must be {}x{}", CANVAS_PX.0, CANVAS_PX.1)]
    Canvas,
    #[error("brackets are not sorted by id")]
    Unsorted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutEntry {
    pub id: BracketId,
    #[serde(rename = "type")]
    pub bracket_type: BracketType,
    pub top: u8,
    pub left: u8,
    pub bottom: u8,
    pub right: u8,
    pub px: PixelRect,
}

/// Canonical machine-readable layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDoc {
    pub canvas: Canvas,
    pub brackets: Vec<LayoutEntry>,
}

impl LayoutDoc {
    pub fn from_snapshot(snapshot: &LayoutSnapshot) -> Self {
        let mut brackets: Vec<LayoutEntry> = snapshot
            .brackets
            .iter()
            .map(|b| LayoutEntry {
                id: b.id,
                bracket_type: b.bracket_type,
                top: b.span.top(),
                left: b.span.left(),
                bottom: b.span.bottom(),
                right: b.span.right(),
                px: span_to_px(b.span),
            })
            .collect();
        brackets.sort_by_key(|e| e.id);
        LayoutDoc {
            canvas: Canvas {
                width: CANVAS_PX.0,
                height: CANVAS_PX.1,
            },
            brackets,
        }
    }

    /// Compact JSON with fixed key order.
    pub fn to_canonical(&self) -> String {
        serde_json::to_string(self).expect("layout doc always serialises")
    }

    pub fn parse(text: &str) -> Result<Self, LayoutError> {
        let doc: LayoutDoc = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    fn validate(&self) -> Result<(), LayoutError> {
        if self.canvas.width != CANVAS_PX.0 || self.canvas.height != CANVAS_PX.1 {
            return Err(LayoutError::Canvas);
        }
        if self.brackets.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(LayoutError::Unsorted);
        }
        for e in &self.brackets {
            let span = RectSpan::new(e.top, e.left, e.bottom, e.right)
                .map_err(|_| LayoutError::Geometry { id: e.id })?;
            if span_to_px(span) != e.px {
                return Err(LayoutError::Geometry { id: e.id });
            }
        }
        Ok(())
    }
}

pub fn layout_json(snapshot: &LayoutSnapshot) -> String {
    LayoutDoc::from_snapshot(snapshot).to_canonical()
}

fn text_template(out: &mut String, px: PixelRect) {
    // one placeholder line per 40 px of height, capped so tiny blocks stay tidy
    let lines = (px.height / 40).clamp(1, 24);
    out.push_str("<div class=\"text-block\" style=\"padding:16px;\">\n");
    out.push_str("<h2 style=\"margin:0 0 12px 0;font:bold 28px sans-serif;\">Heading</h2>\n");
    for i in 0..lines.saturating_sub(1) {
        let width = if i % 3 == 2 { 70 } else { 100 };
        let _ = writeln!(
            out,
            "<p style=\"margin:0 0 14px 0;height:14px;width:{width}%;background:#d0d0d0;\"></p>"
        );
    }
    out.push_str("</div>\n");
}

fn image_template(out: &mut String, px: PixelRect) {
    let (w, h) = (px.width, px.height);
    let _ = writeln!(
        out,
        "<figure style=\"margin:0;width:100%;height:100%;\">\
<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\
<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#e4e4e4\"/>\
<line x1=\"0\" y1=\"0\" x2=\"{w}\" y2=\"{h}\" stroke=\"#9a9a9a\" stroke-width=\"2\"/>\
<line x1=\"{w}\" y1=\"0\" x2=\"0\" y2=\"{h}\" stroke=\"#9a9a9a\" stroke-width=\"2\"/>\
</svg></figure>"
    );
}

fn video_template(out: &mut String, px: PixelRect) {
    let (w, h) = (px.width, px.height);
    let r = w.min(h) / 4;
    let (cx, cy) = (w / 2, h / 2);
    let _ = writeln!(
        out,
        "<div class=\"player\" style=\"width:100%;height:100%;\">\
<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\
<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#303030\"/>\
<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{r}\" fill=\"#5a5a5a\"/>\
<polygon points=\"{},{} {},{} {},{}\" fill=\"#f0f0f0\"/>\
</svg></div>",
        cx - r / 2,
        cy - r / 2,
        cx - r / 2,
        cy + r / 2,
        cx + r / 2,
        cy,
    );
}

/// Standalone HTML page for `snapshot`, UTF-8 with a trailing newline.
pub fn render(snapshot: &LayoutSnapshot) -> String {
    let mut brackets = snapshot.brackets.clone();
    brackets.sort_by_key(|b| b.id);

    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<title>Layout preview</title>\n</head>\n<body style=\"margin:0;\">\n");
    let _ = writeln!(
        out,
        "<div id=\"canvas\" style=\"position:relative;width:{}px;height:{}px;background:#ffffff;overflow:hidden;\">",
        CANVAS_PX.0, CANVAS_PX.1
    );
    for (z, b) in brackets.iter().enumerate() {
        let px = span_to_px(b.span);
        let slug = b.bracket_type.slug();
        let _ = writeln!(
            out,
            "<div class=\"bracket bracket-{slug}\" data-id=\"{}\" data-type=\"{slug}\" \
style=\"position:absolute;left:{}px;top:{}px;width:{}px;height:{}px;z-index:{};\
box-sizing:border-box;border:2px solid #555555;background:#ffffff;overflow:hidden;\">",
            b.id.0,
            px.x,
            px.y,
            px.width,
            px.height,
            z + 1
        );
        match b.bracket_type {
            BracketType::Text => text_template(&mut out, px),
            BracketType::Image => image_template(&mut out, px),
            BracketType::Video => video_template(&mut out, px),
        }
        out.push_str("</div>\n");
    }
    out.push_str("</div>\n</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::PlacedBracket;
    use proptest::prelude::*;

    fn span(t: u8, l: u8, b: u8, r: u8) -> RectSpan {
        RectSpan::new(t, l, b, r).unwrap()
    }

    fn snapshot(items: &[(u64, BracketType, RectSpan)]) -> LayoutSnapshot {
        LayoutSnapshot {
            brackets: items
                .iter()
                .map(|&(id, bracket_type, span)| PlacedBracket {
                    id: BracketId(id),
                    bracket_type,
                    span,
                    placed_tick: 0,
                })
                .collect(),
        }
    }

    /// Pulls `(left, top, width, height)` out of every bracket element.
    fn child_rects(html: &str) -> Vec<(u32, u32, u32, u32)> {
        html.lines()
            .filter(|l| l.starts_with("<div class=\"bracket "))
            .map(|l| {
                let grab = |key: &str| -> u32 {
                    let start = l.find(key).unwrap() + key.len();
                    let end = start + l[start..].find("px").unwrap();
                    l[start..end].parse().unwrap()
                };
                (
                    grab(";left:"),
                    grab(";top:"),
                    grab(";width:"),
                    grab(";height:"),
                )
            })
            .collect()
    }

    #[test]
    fn empty_snapshot_renders_container_only() {
        let html = render(&LayoutSnapshot::default());
        assert!(html.contains("width:1560px;height:2080px"));
        assert!(child_rects(&html).is_empty());
        assert!(html.ends_with("</html>\n"));
    }

    #[test]
    fn video_in_bottom_left() {
        let html = render(&snapshot(&[(1, BracketType::Video, span(14, 0, 15, 1))]));
        assert_eq!(child_rects(&html), vec![(0, 1820, 260, 260)]);
        assert!(html.contains("data-type=\"video\""));
    }

    #[test]
    fn children_follow_id_order() {
        let snap = snapshot(&[
            (7, BracketType::Image, span(2, 6, 3, 11)),
            (2, BracketType::Text, span(0, 0, 1, 11)),
        ]);
        let html = render(&snap);
        let first = html.find("data-id=\"2\"").unwrap();
        let second = html.find("data-id=\"7\"").unwrap();
        assert!(first < second);
        assert!(html.contains("z-index:2;"));
    }

    #[test]
    fn layout_json_shapes() {
        assert_eq!(
            layout_json(&LayoutSnapshot::default()),
            r#"{"canvas":{"width":1560,"height":2080},"brackets":[]}"#
        );
        let one = layout_json(&snapshot(&[(1, BracketType::Image, span(2, 3, 4, 6))]));
        assert_eq!(
            one,
            r#"{"canvas":{"width":1560,"height":2080},"brackets":[{"id":1,"type":"image","top":2,"left":3,"bottom":4,"right":6,"px":{"x":390,"y":260,"width":520,"height":390}}]}"#
        );
        assert_eq!(LayoutDoc::parse(&one).unwrap().to_canonical(), one);
    }

    #[test]
    fn parse_rejects_inconsistent_documents() {
        let bad_px = r#"{"canvas":{"width":1560,"height":2080},"brackets":[{"id":1,"type":"image","top":2,"left":3,"bottom":4,"right":6,"px":{"x":0,"y":260,"width":520,"height":390}}]}"#;
        assert!(matches!(
            LayoutDoc::parse(bad_px),
            Err(LayoutError::Geometry { .. })
        ));
        let extra = r#"{"canvas":{"width":1560,"height":2080},"brackets":[],"x":1}"#;
        assert!(matches!(LayoutDoc::parse(extra), Err(LayoutError::Json(_))));
        let canvas = r#"{"canvas":{"width":100,"height":2080},"brackets":[]}"#;
        assert!(matches!(LayoutDoc::parse(canvas), Err(LayoutError::Canvas)));
    }

    fn any_span() -> impl Strategy<Value = RectSpan> {
        (0u8..15, 0u8..11)
            .prop_flat_map(|(t, l)| (Just(t), Just(l), (t + 1)..16, (l + 1)..12))
            .prop_map(|(t, l, b, r)| RectSpan::new(t, l, b, r).unwrap())
    }

    fn any_snapshot() -> impl Strategy<Value = LayoutSnapshot> {
        proptest::collection::vec((0usize..3, any_span()), 0..6).prop_map(|items| {
            let items: Vec<_> = items
                .into_iter()
                .enumerate()
                .map(|(i, (t, s))| (i as u64 + 1, BracketType::ALL[t], s))
                .collect();
            snapshot(&items)
        })
    }

    proptest! {
        #[test]
        fn geometry_fidelity_and_containment(snap in any_snapshot()) {
            let html = render(&snap);
            let rects = child_rects(&html);
            prop_assert_eq!(rects.len(), snap.brackets.len());
            for (b, (x, y, w, h)) in snap.brackets.iter().zip(rects) {
                let px = span_to_px(b.span);
                prop_assert_eq!((x, y, w, h), (px.x, px.y, px.width, px.height));
                prop_assert!(x + w <= 1560 && y + h <= 2080);
                prop_assert_eq!(x % 130, 0);
                prop_assert_eq!(w % 130, 0);
            }
            prop_assert_eq!(render(&snap), html);
        }

        #[test]
        fn layout_json_round_trips(snap in any_snapshot()) {
            let text = layout_json(&snap);
            let doc = LayoutDoc::parse(&text).unwrap();
            prop_assert_eq!(doc.to_canonical(), text);
        }
    }
}
