//! Text rendering of candidate outputs.

use crate::sim::{Action, Point, Rect};

pub fn agent(goal: &str, subgoal: &str, action: &Action) -> String {
    format!("<think>\nGoal: {goal}\nSub-goal: {subgoal}\n</think>\n{action}")
}

pub fn point(instruction: &str, p: Point) -> String {
    format!("<think>\n{instruction}\n</think>\n({}, {})", p.x, p.y)
}

pub fn bbox(instruction: &str, r: Rect) -> String {
    format!("<think>\n{instruction}\n</think>\n[{}, {}, {}, {}]", r.x_min, r.y_min, r.x_max, r.y_max)
}

pub fn answer(question: &str, text: &str) -> String {
    format!("<think>\n{question}\n</think>\nanswer({text})")
}

/// The same response with its closing tag dropped.
pub fn corrupt(text: &str) -> String {
    text.replacen("</think>", "", 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{extract_subgoal, parse_output};

    #[test]
    fn renderings_parse_back() {
        let a = Action::click(12, 34);
        let p = parse_output(&agent("Go to x", "open x", &a)).unwrap();
        assert_eq!(p.action, Some(a));
        assert_eq!(extract_subgoal(&p.think).as_deref(), Some("open x"));
        assert_eq!(parse_output(&point("i", Point::new(1, 2))).unwrap().point, Some(Point::new(1, 2)));
        assert_eq!(parse_output(&bbox("i", Rect::new(1, 2, 3, 4))).unwrap().bbox, Some(Rect::new(1, 2, 3, 4)));
        assert_eq!(parse_output(&answer("q", "3/4")).unwrap().answer, "answer(3/4)");
        assert!(parse_output(&corrupt(&answer("q", "3/4"))).is_none());
    }
}
