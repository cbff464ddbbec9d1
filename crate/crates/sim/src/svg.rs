//! SVG rendering of a trace: field lines, robot and ball paths, obstacles,
//! halos around the ball at approach waypoints, kicks and goals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use soccer_core::FieldSpec;

use crate::trace::{EventKind, TraceRow};

const SCALE: f64 = 60.0;
const MARGIN: f64 = 0.5;
const ROBOT_COLORS: [&str; 4] = ["#1f5fbf", "#c0392b", "#8e44ad", "#16a085"];
/// At most this many halos per robot are drawn.
const MAX_HALOS: usize = 40;

/// Renders `rows`. A trace without a config row is drawn on the default
/// field.
pub fn render_svg(rows: &[TraceRow]) -> Result<String, String> {
    let field = match rows.iter().find(|r| r.kind == EventKind::Config) {
        Some(config) => {
            let num = |k: &str| config.get_f64(k).ok_or(format!("config row lacks {k}"));
            FieldSpec {
                length: num("length")?,
                width: num("width")?,
                goal_width: num("goal_width")?,
                goal_area_length: num("goal_area_length")?,
                goal_area_width: num("goal_area_width")?,
                center_circle_radius: num("center_circle_radius")?,
                ..FieldSpec::default()
            }
        }
        None => FieldSpec::default(),
    };
    let (length, width, goal_width) = (field.length, field.width, field.goal_width);
    let (ga_len, ga_w, circle) = (field.goal_area_length, field.goal_area_width, field.center_circle_radius);
    let (hl, hw) = (length / 2.0, width / 2.0);
    let px = |x: f64| (x + hl + MARGIN) * SCALE;
    let py = |y: f64| (hw + MARGIN - y) * SCALE;
    let w = (length + 2.0 * MARGIN) * SCALE;
    let h = (width + 2.0 * MARGIN) * SCALE;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#2e7d32"/>"##);
    let line = |s: &mut String, x0: f64, y0: f64, x1: f64, y1: f64| {
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="white" stroke-width="3"/>"#,
            px(x0),
            py(y0),
            px(x1),
            py(y1)
        );
    };
    let _ = writeln!(
        s,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="white" stroke-width="3"/>"#,
        px(-hl),
        py(hw),
        length * SCALE,
        width * SCALE
    );
    line(&mut s, 0.0, -hw, 0.0, hw);
    let _ = writeln!(
        s,
        r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="none" stroke="white" stroke-width="3"/>"#,
        px(0.0),
        py(0.0),
        circle * SCALE
    );
    for sign in [-1.0, 1.0] {
        let x = sign * hl;
        let xi = sign * (hl - ga_len);
        line(&mut s, x, ga_w / 2.0, xi, ga_w / 2.0);
        line(&mut s, x, -ga_w / 2.0, xi, -ga_w / 2.0);
        line(&mut s, xi, -ga_w / 2.0, xi, ga_w / 2.0);
        for y in [-goal_width / 2.0, goal_width / 2.0] {
            let _ = writeln!(s, r##"<circle cx="{:.1}" cy="{:.1}" r="5" fill="#f1c40f"/>"##, px(x), py(y));
        }
    }

    let mut robots: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    let mut ball = Vec::new();
    for r in rows {
        match (r.kind, r.x, r.y) {
            (EventKind::Robot, Some(x), Some(y)) => robots.entry(r.actor.unwrap_or(0)).or_default().push((x, y)),
            (EventKind::Ball, Some(x), Some(y)) => ball.push((x, y)),
            (EventKind::Obstacle, Some(x), Some(y)) => {
                let radius = r.get_f64("radius").unwrap_or(0.15);
                let _ = writeln!(
                    s,
                    r##"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="#555" stroke="black"/>"##,
                    px(x),
                    py(y),
                    radius * SCALE
                );
            }
            _ => {}
        }
    }
    let poly = |s: &mut String, pts: &[(f64, f64)], color: &str, width: f64| {
        if pts.is_empty() {
            return;
        }
        let _ = write!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points=""#);
        // Thin long paths so the file stays small.
        let stride = (pts.len() / 4000).max(1);
        for (x, y) in pts.iter().step_by(stride) {
            let _ = write!(s, "{:.1},{:.1} ", px(*x), py(*y));
        }
        let _ = writeln!(s, r#""/>"#);
    };
    let mut halos: BTreeMap<u32, Vec<&TraceRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == EventKind::Halo) {
        halos.entry(r.actor.unwrap_or(0)).or_default().push(r);
    }
    for (id, hs) in &halos {
        let color = ROBOT_COLORS[*id as usize % ROBOT_COLORS.len()];
        let stride = hs.len().div_ceil(MAX_HALOS).max(1);
        for r in hs.iter().step_by(stride) {
            if let (Some(x), Some(y), Some(bx), Some(by), Some(radius)) =
                (r.x, r.y, r.get_f64("bx"), r.get_f64("by"), r.get_f64("radius"))
            {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="none" stroke="{color}" stroke-dasharray="4 3" opacity="0.5"/>"#,
                    px(bx),
                    py(by),
                    radius * SCALE
                );
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
            }
        }
    }
    for (id, pts) in &robots {
        poly(&mut s, pts, ROBOT_COLORS[*id as usize % ROBOT_COLORS.len()], 2.0);
    }
    poly(&mut s, &ball, "#ff9800", 1.5);
    for r in rows {
        match (r.kind, r.x, r.y) {
            (EventKind::Kick, Some(x), Some(y)) => {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="black"/>"#, px(x), py(y));
            }
            (EventKind::Goal, Some(x), Some(y)) => {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{:.1}" cy="{:.1}" r="9" fill="none" stroke="#ff1744" stroke-width="3"/>"##,
                    px(x),
                    py(y)
                );
            }
            _ => {}
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, TraceBuf};

    #[test]
    fn empty_trace_draws_the_default_field() {
        let svg = render_svg(&parse_trace(TraceBuf::new().as_str()).unwrap()).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn goal_marker_lands_in_the_goal_mouth() {
        let f = FieldSpec::default();
        let mut buf = TraceBuf::new();
        buf.row(0.0, EventKind::Config, None, None, None, None)
            .kv("length", f.length)
            .kv("width", f.width)
            .kv("goal_width", f.goal_width)
            .kv("goal_area_length", f.goal_area_length)
            .kv("goal_area_width", f.goal_area_width)
            .kv("center_circle_radius", f.center_circle_radius);
        buf.row(3.0, EventKind::Goal, None, Some(f.length / 2.0 + 0.1), Some(0.3), None).kv("team", "home");
        let svg = render_svg(&parse_trace(buf.as_str()).unwrap()).unwrap();
        let (cx, cy) = ((f.length + 0.1 + MARGIN) * SCALE, (f.width / 2.0 + MARGIN - 0.3) * SCALE);
        assert!(svg.contains(&format!(r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="9""#)));
    }
}
