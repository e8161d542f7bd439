//! Compact textual layout of a screen, one element per line.

use super::{ElementKind, Point, Screen, CANVAS_SIZE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialLine {
    pub kind: ElementKind,
    pub label: String,
    pub center: Point,
    pub size: (i32, i32),
}

impl SpatialLine {
    pub fn render(&self) -> String {
        format!(
            "{} '{}' at ({}, {}) size ({}, {})",
            self.kind.as_str(),
            self.label,
            self.center.x,
            self.center.y,
            self.size.0,
            self.size.1
        )
    }
}

/// Header line followed by `kind 'label' at (cx, cy) size (w, h)` per
/// element, in element order.
pub fn render_spatial_description(screen: &Screen) -> String {
    let mut out = format!("screen {CANVAS_SIZE}x{CANVAS_SIZE}\n");
    for e in &screen.elements {
        let line = SpatialLine {
            kind: e.kind,
            label: e.label.clone(),
            center: e.bbox.center(),
            size: (e.bbox.width(), e.bbox.height()),
        };
        out.push_str(&line.render());
        out.push('\n');
    }
    out
}

fn pair(s: &str) -> Option<(i32, i32)> {
    let inner = s.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Inverse of [`render_spatial_description`]: canvas size and element lines.
pub fn parse_spatial_description(text: &str) -> Result<((i32, i32), Vec<SpatialLine>)> {
    let bad = |line: usize, message: &str| Error::Parse { line, message: message.to_string() };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let dims = header
        .strip_prefix("screen ")
        .and_then(|d| d.split_once('x'))
        .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
        .ok_or_else(|| bad(1, "bad header"))?;

    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let (kind, rest) = line.split_once(" '").ok_or_else(|| bad(n, "missing label"))?;
        let kind = ElementKind::parse(kind).ok_or_else(|| bad(n, "unknown kind"))?;
        let (label, rest) = rest.rsplit_once("' at ").ok_or_else(|| bad(n, "missing position"))?;
        let (center, size) = rest.split_once(" size ").ok_or_else(|| bad(n, "missing size"))?;
        let center = pair(center).ok_or_else(|| bad(n, "bad center"))?;
        let size = pair(size).ok_or_else(|| bad(n, "bad size"))?;
        out.push(SpatialLine {
            kind,
            label: label.to_string(),
            center: Point::new(center.0, center.1),
            size,
        });
    }
    Ok((dims, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_world, Element, ElementId, Rect, ScreenId, WorldParams};

    fn ok_screen() -> Screen {
        Screen {
            id: ScreenId(0),
            elements: vec![Element {
                id: ElementId(0),
                kind: ElementKind::Button,
                label: "OK".into(),
                bbox: Rect::new(10, 10, 50, 30),
            }],
        }
    }

    #[test]
    fn center_and_size_line() {
        let text = render_spatial_description(&ok_screen());
        assert!(text.contains("button 'OK' at (30, 20) size (40, 20)"), "{text}");
    }

    #[test]
    fn order_sensitive_and_deterministic() {
        let w = generate_world(7, WorldParams::default()).unwrap();
        let screen = w.screens.values().next().unwrap().clone();
        assert_eq!(render_spatial_description(&screen), render_spatial_description(&screen.clone()));
        let mut rev = screen.clone();
        rev.elements.reverse();
        assert_ne!(render_spatial_description(&screen), render_spatial_description(&rev));
    }

    #[test]
    fn round_trip_every_screen() {
        let w = generate_world(5, WorldParams { n_screens: 12, n_tasks: 3, min_elements: 2, max_elements: 20 }).unwrap();
        for screen in w.screens.values() {
            let text = render_spatial_description(screen);
            let (dims, lines) = parse_spatial_description(&text).unwrap();
            assert_eq!(dims, (CANVAS_SIZE, CANVAS_SIZE));
            assert_eq!(lines.len(), screen.elements.len());
            for (l, e) in lines.iter().zip(&screen.elements) {
                assert_eq!(l.label, e.label);
                assert_eq!(l.center, e.bbox.center());
                assert!((0..=CANVAS_SIZE).contains(&l.center.x) && (0..=CANVAS_SIZE).contains(&l.center.y));
            }
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_spatial_description("screen 1000x1000\nbutton OK at nowhere\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
