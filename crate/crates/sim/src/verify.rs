//! Offline check of a trace against the hard invariants.

use std::collections::BTreeMap;

use soccer_core::behaviors::{BehaviourMode, GameMode};
use soccer_core::checks::{
    behaviour_edge_ok, certainty_in_range, far_case_pure, game_edge_ok, near_far_oscillations,
    radial_within_cap, target_outside_halo, within_view,
};
use soccer_core::perception::NoiseModel;
use soccer_core::Vec2;

use crate::trace::{EventKind, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub line: usize,
    pub kind: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for v in &self.violations {
            *out.entry(v.kind.to_string()).or_default() += 1;
        }
        out
    }
}

/// Obstacle-avoidance parameters the cap check needs, read from the config
/// row.
struct CapModel {
    d_repel: f64,
    influence: f64,
    v_cap: f64,
}

impl CapModel {
    fn cap(&self, d: f64) -> f64 {
        self.v_cap * (d - self.d_repel) / (self.influence - self.d_repel)
    }
}

pub fn verify_rows(rows: &[TraceRow]) -> VerifyReport {
    let mut report = VerifyReport {
        rows: rows.len(),
        violations: Vec::new(),
    };
    let mut flag = |line: usize, kind: &'static str, detail: String| {
        report.violations.push(Violation { line, kind, detail });
    };
    let Some(config) = rows.iter().find(|r| r.kind == EventKind::Config) else {
        flag(0, "config", "trace has no config row".into());
        return report;
    };
    let num = |k: &str| config.get_f64(k);
    let (Some(fov), Some(max_range), Some(d_repel), Some(influence), Some(v_cap)) =
        (num("fov"), num("max_range"), num("d_repel"), num("influence_radius"), num("v_cap"))
    else {
        flag(config.line, "config", "config row lacks view or avoidance parameters".into());
        return report;
    };
    let view = NoiseModel {
        fov,
        max_range,
        ..NoiseModel::default()
    };
    let caps = CapModel {
        d_repel,
        influence,
        v_cap,
    };

    let mut near_far: BTreeMap<u32, Vec<(u64, BehaviourMode, BehaviourMode, usize)>> = BTreeMap::new();
    for r in rows {
        match r.kind {
            EventKind::Cmd => {
                let (vx, vy) = (r.x.unwrap_or(0.0), r.y.unwrap_or(0.0));
                if let (Some(ox), Some(oy)) = (r.get_f64("ox"), r.get_f64("oy")) {
                    let o = Vec2::new(ox, oy);
                    let d = o.norm();
                    let u = o * (1.0 / d);
                    let radial = Vec2::new(vx, vy).dot(u);
                    let cap = caps.cap(d);
                    if !radial_within_cap(radial, cap) {
                        flag(r.line, "cap", format!("radial {radial} exceeds cap {cap} at distance {d}"));
                    }
                }
                if let Some(state) = r.get("state").and_then(BehaviourMode::from_name) {
                    if !far_case_pure(state, vy) {
                        flag(r.line, "far_purity", format!("vy = {vy} while walking far"));
                    }
                }
            }
            EventKind::Transition => {
                let (from, to) = (r.get("from").unwrap_or_default(), r.get("to").unwrap_or_default());
                let ok = match r.get("fsm") {
                    Some("behaviour") => match (BehaviourMode::from_name(from), BehaviourMode::from_name(to)) {
                        (Some(a), Some(b)) => {
                            if let (Some(actor), Some(step)) = (r.actor, r.get("step").and_then(|s| s.parse().ok())) {
                                near_far.entry(actor).or_default().push((step, a, b, r.line));
                            }
                            behaviour_edge_ok(a, b)
                        }
                        _ => false,
                    },
                    Some("game") => matches!(
                        (GameMode::from_name(from), GameMode::from_name(to)),
                        (Some(a), Some(b)) if game_edge_ok(a, b)
                    ),
                    _ => false,
                };
                if !ok {
                    flag(r.line, "edge", format!("undeclared transition {from} -> {to}"));
                }
            }
            EventKind::Halo => {
                if let (Some(x), Some(y), Some(bx), Some(by), Some(radius)) =
                    (r.x, r.y, r.get_f64("bx"), r.get_f64("by"), r.get_f64("radius"))
                {
                    if !target_outside_halo(Vec2::new(x, y), Vec2::new(bx, by), radius) {
                        flag(r.line, "halo", format!("target inside the {radius} m halo"));
                    }
                }
            }
            EventKind::Cluster => {
                if let Some(c) = r.get_f64("certainty") {
                    if !certainty_in_range(c) {
                        flag(r.line, "certainty", format!("certainty {c} outside [0, 1]"));
                    }
                }
            }
            EventKind::Obs => {
                if let (Some(x), Some(y)) = (r.x, r.y) {
                    if !within_view(Vec2::new(x, y), &view) {
                        flag(r.line, "fov", format!("observation at ({x}, {y}) outside the view"));
                    }
                }
            }
            _ => {}
        }
    }
    for steps in near_far.values() {
        let plain: Vec<_> = steps.iter().map(|&(s, a, b, _)| (s, a, b)).collect();
        for i in near_far_oscillations(&plain) {
            flag(steps[i].3, "oscillation", "near/far transition undone on the next step".into());
        }
    }
    report.violations.sort_by_key(|v| v.line);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, TraceBuf};

    fn base() -> TraceBuf {
        let mut buf = TraceBuf::new();
        buf.row(0.0, EventKind::Config, None, None, None, None)
            .kv("scenario", "avoidance_drill")
            .kv("seed", 1)
            .kv("fov", 2.6)
            .kv("max_range", 6.0)
            .kv("d_repel", 0.35)
            .kv("influence_radius", 1.5)
            .kv("v_cap", 0.4);
        buf
    }

    #[test]
    fn clean_rows_pass_and_edits_are_flagged() {
        let mut buf = base();
        // Obstacle 1 m ahead: cap = 0.4 * 0.65 / 1.15.
        buf.row(0.02, EventKind::Cmd, Some(0), Some(0.2), Some(0.0), Some(0.0))
            .kv("state", "go_behind_ball_far")
            .kv("ox", 1.0)
            .kv("oy", 0.0);
        buf.row(0.02, EventKind::Obs, Some(0), Some(1.0), Some(0.5), None).kv("what", "ball");
        assert!(verify_rows(&parse_trace(buf.as_str()).unwrap()).is_clean());

        buf.row(0.04, EventKind::Cmd, Some(0), Some(0.3), Some(0.0), Some(0.0))
            .kv("state", "go_behind_ball_far")
            .kv("ox", 1.0)
            .kv("oy", 0.0);
        buf.row(0.04, EventKind::Obs, Some(0), Some(-1.0), Some(0.0), None).kv("what", "ball");
        buf.row(0.04, EventKind::Transition, Some(0), None, None, None)
            .kv("fsm", "behaviour")
            .kv("from", "kick")
            .kv("to", "dribble")
            .kv("step", 2);
        let report = verify_rows(&parse_trace(buf.as_str()).unwrap());
        let kinds: Vec<(usize, &str)> = report.violations.iter().map(|v| (v.line, v.kind)).collect();
        assert_eq!(kinds, vec![(6, "cap"), (7, "fov"), (8, "edge")]);
    }
}
