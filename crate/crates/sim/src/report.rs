//! Per-run summary. Everything in a [`RunReport`] can be rebuilt from the
//! run's trace with [`RunReport::from_trace`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trace::{EventKind, TraceRow};
use crate::verify::verify_rows;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub time: f64,
    /// Scoring team, `home` or `away`.
    pub team: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockRecord {
    pub actor: u32,
    pub time: f64,
    pub label: String,
    /// Label the robot actually started from, when it started from one.
    pub truth: Option<String>,
    pub confirmed: bool,
}

impl LockRecord {
    pub fn correct(&self) -> Option<bool> {
        self.truth.as_ref().map(|t| *t == self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeOutcome {
    pub d_ramp: f64,
    pub speed: f64,
    pub friction: f64,
    pub latency: f64,
    pub kick_region_radius: f64,
    /// Closed-form trigger time: closest approach to the kick point minus
    /// the kick latency.
    pub ideal_trigger_time: f64,
    pub trigger_time: Option<f64>,
    /// Foot-to-ball distance when the kick fired.
    pub contact_distance: Option<f64>,
    pub goal: bool,
}

impl ChallengeOutcome {
    pub fn trigger_error(&self) -> Option<f64> {
        self.trigger_time.map(|t| t - self.ideal_trigger_time)
    }

    pub fn in_region(&self) -> bool {
        self.contact_distance
            .is_some_and(|d| d <= self.kick_region_radius)
    }
}

/// Time at which a ball released at `speed`, decelerating at `friction`,
/// has rolled `distance`; `None` if it stops short.
pub fn travel_time(distance: f64, speed: f64, friction: f64) -> Option<f64> {
    if friction == 0.0 {
        return (speed > 0.0).then(|| distance / speed);
    }
    let disc = speed * speed - 2.0 * friction * distance;
    (disc >= 0.0).then(|| (speed - disc.sqrt()) / friction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub score_home: u32,
    pub score_away: u32,
    pub goals: Vec<GoalRecord>,
    /// Counts keyed `fsm:from->to`.
    pub transitions: BTreeMap<String, u64>,
    pub locks: Vec<LockRecord>,
    pub collisions: u64,
    pub kicks: u64,
    pub rejected_kicks: u64,
    /// Hard-invariant violations by kind.
    pub violations: BTreeMap<String, u64>,
    pub challenge: Option<ChallengeOutcome>,
    /// File the trace was written to, if any.
    pub trace_file: Option<String>,
}

impl RunReport {
    pub fn new(scenario: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            score_home: 0,
            score_away: 0,
            goals: Vec::new(),
            transitions: BTreeMap::new(),
            locks: Vec::new(),
            collisions: 0,
            kicks: 0,
            rejected_kicks: 0,
            violations: BTreeMap::new(),
            challenge: None,
            trace_file: None,
        }
    }

    pub fn violation_count(&self) -> u64 {
        self.violations.values().sum()
    }

    pub fn transition_key(fsm: &str, from: &str, to: &str) -> String {
        format!("{fsm}:{from}->{to}")
    }

    /// Rebuilds the report from trace rows.
    pub fn from_trace(rows: &[TraceRow]) -> Result<Self, String> {
        let config = rows
            .iter()
            .find(|r| r.kind == EventKind::Config)
            .ok_or("trace has no config row")?;
        let scenario = config.get("scenario").ok_or("config row lacks scenario")?;
        let seed = config
            .get("seed")
            .and_then(|s| s.parse().ok())
            .ok_or("config row lacks seed")?;
        let mut report = RunReport::new(scenario, seed);
        for r in rows {
            match r.kind {
                EventKind::Goal => {
                    let team = r.get("team").unwrap_or_default().to_string();
                    if team == "home" {
                        report.score_home += 1;
                    } else {
                        report.score_away += 1;
                    }
                    report.goals.push(GoalRecord { time: r.time, team });
                }
                EventKind::Transition => {
                    let key = Self::transition_key(
                        r.get("fsm").unwrap_or_default(),
                        r.get("from").unwrap_or_default(),
                        r.get("to").unwrap_or_default(),
                    );
                    *report.transitions.entry(key).or_default() += 1;
                }
                EventKind::Lock => report.locks.push(LockRecord {
                    actor: r.actor.unwrap_or_default(),
                    time: r.time,
                    label: r.get("label").unwrap_or_default().to_string(),
                    truth: r.get("truth").map(str::to_string),
                    confirmed: r.get("confirmed") == Some("true"),
                }),
                EventKind::Collision => report.collisions += 1,
                EventKind::Kick => match r.get("phase") {
                    Some("contact") => report.kicks += 1,
                    Some("rejected") => report.rejected_kicks += 1,
                    _ => {}
                },
                _ => {}
            }
        }
        report.violations = verify_rows(rows).counts();
        if scenario == "moving_ball" {
            let num = |k: &str| config.get_f64(k).ok_or(format!("config row lacks {k}"));
            let (d_ramp, speed, friction, latency) = (num("d_ramp")?, num("speed")?, num("friction")?, num("latency")?);
            let kicks: Vec<&TraceRow> = rows.iter().filter(|r| r.kind == EventKind::Kick).collect();
            report.challenge = Some(ChallengeOutcome {
                d_ramp,
                speed,
                friction,
                latency,
                kick_region_radius: num("kick_region_radius")?,
                ideal_trigger_time: travel_time(d_ramp, speed, friction).unwrap_or(f64::INFINITY) - latency,
                trigger_time: kicks
                    .iter()
                    .find(|r| r.get("phase") == Some("triggered"))
                    .map(|r| r.time),
                contact_distance: kicks
                    .iter()
                    .find(|r| matches!(r.get("phase"), Some("contact" | "rejected")))
                    .and_then(|r| r.get_f64("distance")),
                goal: report.score_home > 0,
            });
        }
        Ok(report)
    }
}
