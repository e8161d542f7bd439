//! Parsing of raw model output: one `<think>` block, then the answer.

use crate::sim::{Action, Point, Rect};

const OPEN: &str = "<think>";
const CLOSE: &str = "</think>";

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOutput {
    pub think: String,
    pub answer: String,
    pub action: Option<Action>,
    pub bbox: Option<Rect>,
    pub point: Option<Point>,
}

/// Split `raw` into its think block and answer.
///
/// Valid output has exactly one opening and one closing tag, the opener
/// first with only whitespace before it, and a non-empty answer after the
/// closer. Anything else yields `None`.
pub fn parse_output(raw: &str) -> Option<ParsedOutput> {
    if raw.matches(OPEN).count() != 1 || raw.matches(CLOSE).count() != 1 {
        return None;
    }
    let open = raw.find(OPEN)?;
    let close = raw.find(CLOSE)?;
    if close < open || !raw[..open].trim().is_empty() {
        return None;
    }
    let think = raw[open + OPEN.len()..close].to_string();
    let answer = raw[close + CLOSE.len()..].trim().to_string();
    if answer.is_empty() {
        return None;
    }
    let action = parse_action(&answer);
    let point = match &action {
        Some(Action::Click(p)) => Some(*p),
        _ => parse_point(&answer),
    };
    let bbox = parse_bbox(&answer);
    Some(ParsedOutput { think, answer, action, bbox, point })
}

/// `name(args)` → (name, args); whitespace-tolerant.
fn call(s: &str) -> Option<(&str, &str)> {
    let s = s.trim();
    let open = s.find('(')?;
    let inner = s.strip_suffix(')')?;
    Some((s[..open].trim(), &inner[open + 1..]))
}

fn coord(s: &str) -> Option<i32> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then(|| v.round() as i32)
}

fn numbers(args: &str, n: usize) -> Option<Vec<i32>> {
    let parts: Vec<&str> = args.split(',').collect();
    if parts.len() != n {
        return None;
    }
    parts.into_iter().map(coord).collect()
}

fn text_arg(args: &str) -> Option<String> {
    let t = args.trim();
    let t = t
        .strip_prefix('"')
        .and_then(|u| u.strip_suffix('"'))
        .or_else(|| t.strip_prefix('\'').and_then(|u| u.strip_suffix('\'')))
        .unwrap_or(t)
        .trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// `click(x, y)`, `type(text)`, `answer(text)`, `back()` or bare `back`.
pub fn parse_action(s: &str) -> Option<Action> {
    let s = s.trim();
    if s == "back" {
        return Some(Action::Back);
    }
    let (name, args) = call(s)?;
    match name {
        "click" => {
            let v = numbers(args, 2)?;
            Some(Action::click(v[0], v[1]))
        }
        "type" => text_arg(args).map(Action::Type),
        "answer" => text_arg(args).map(Action::Answer),
        "back" if args.trim().is_empty() => Some(Action::Back),
        _ => None,
    }
}

/// `(x, y)`, `point(x, y)` or `click(x, y)`.
pub fn parse_point(s: &str) -> Option<Point> {
    let s = s.trim();
    let args = match call(s) {
        Some(("" | "point" | "click", args)) => args,
        _ => return None,
    };
    let v = numbers(args, 2)?;
    Some(Point::new(v[0], v[1]))
}

/// `[x1, y1, x2, y2]` or `bbox(x1, y1, x2, y2)`; must be a proper box.
pub fn parse_bbox(s: &str) -> Option<Rect> {
    let s = s.trim();
    let args = match s.strip_prefix('[').and_then(|u| u.strip_suffix(']')) {
        Some(inner) => inner,
        None => match call(s) {
            Some(("bbox", args)) => args,
            _ => return None,
        },
    };
    let v = numbers(args, 4)?;
    let r = Rect::new(v[0], v[1], v[2], v[3]);
    r.is_valid().then_some(r)
}

/// Free-text answer: the argument of `answer(…)` if present, else the
/// whole answer.
pub fn answer_text(answer: &str) -> String {
    match parse_action(answer) {
        Some(Action::Answer(t)) => t,
        _ => answer.trim().to_string(),
    }
}
