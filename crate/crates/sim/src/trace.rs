//! Per-step CSV trace.
//!
//! The first line is `#schema=1`, the second the column header. Floats are
//! written in Rust's shortest round-trip form, so reading a trace back gives
//! bit-identical values. `extra` holds `key=value` pairs separated by `;`.

use std::fmt::{Display, Write as _};
use std::path::Path;

pub const SCHEMA_LINE: &str = "#schema=1";
pub const HEADER: &str = "time,event_kind,actor_id,x,y,theta,extra";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    /// Parameters the verifier and renderer need, first data row.
    Config,
    Robot,
    Ball,
    Obstacle,
    Cmd,
    Transition,
    Halo,
    Cluster,
    Loc,
    Lock,
    Obs,
    Kick,
    Goal,
    BallOut,
    Collision,
    Estimate,
    Half,
    Restart,
}

impl EventKind {
    pub const ALL: [EventKind; 18] = [
        EventKind::Config,
        EventKind::Robot,
        EventKind::Ball,
        EventKind::Obstacle,
        EventKind::Cmd,
        EventKind::Transition,
        EventKind::Halo,
        EventKind::Cluster,
        EventKind::Loc,
        EventKind::Lock,
        EventKind::Obs,
        EventKind::Kick,
        EventKind::Goal,
        EventKind::BallOut,
        EventKind::Collision,
        EventKind::Estimate,
        EventKind::Half,
        EventKind::Restart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Config => "config",
            EventKind::Robot => "robot",
            EventKind::Ball => "ball",
            EventKind::Obstacle => "obstacle",
            EventKind::Cmd => "cmd",
            EventKind::Transition => "transition",
            EventKind::Halo => "halo",
            EventKind::Cluster => "cluster",
            EventKind::Loc => "loc",
            EventKind::Lock => "lock",
            EventKind::Obs => "obs",
            EventKind::Kick => "kick",
            EventKind::Goal => "goal",
            EventKind::BallOut => "ball_out",
            EventKind::Collision => "collision",
            EventKind::Estimate => "estimate",
            EventKind::Half => "half",
            EventKind::Restart => "restart",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("reading trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based line number in the file; 0 for rows not read from a file.
    pub line: usize,
    pub time: f64,
    pub kind: EventKind,
    pub actor: Option<u32>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub theta: Option<f64>,
    pub extra: Vec<(String, String)>,
}

impl TraceRow {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }
}

/// Appends rows to an in-memory trace.
pub struct TraceBuf {
    text: String,
}

impl Default for TraceBuf {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceBuf {
    pub fn new() -> Self {
        let mut text = String::with_capacity(1 << 20);
        text.push_str(SCHEMA_LINE);
        text.push('\n');
        text.push_str(HEADER);
        text.push('\n');
        Self { text }
    }

    /// Starts a row; the returned writer takes the `extra` pairs and ends the
    /// line when dropped.
    pub fn row(
        &mut self,
        time: f64,
        kind: EventKind,
        actor: Option<u32>,
        x: Option<f64>,
        y: Option<f64>,
        theta: Option<f64>,
    ) -> Extra<'_> {
        let t = &mut self.text;
        let _ = write!(t, "{time},{},", kind.name());
        if let Some(a) = actor {
            let _ = write!(t, "{a}");
        }
        for v in [x, y, theta] {
            t.push(',');
            if let Some(v) = v {
                let _ = write!(t, "{v}");
            }
        }
        t.push(',');
        Extra { text: t, first: true }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub struct Extra<'a> {
    text: &'a mut String,
    first: bool,
}

impl Extra<'_> {
    pub fn kv(mut self, key: &str, value: impl Display) -> Self {
        if !self.first {
            self.text.push(';');
        }
        self.first = false;
        let _ = write!(self.text, "{key}={value}");
        self
    }
}

impl Drop for Extra<'_> {
    fn drop(&mut self) {
        self.text.push('\n');
    }
}

fn parse_opt<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<Option<T>, TraceError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| TraceError::Parse {
        line,
        message: format!("bad {what} `{s}`"),
    })
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, message: &str| TraceError::Parse {
        line,
        message: message.to_string(),
    };
    match lines.next() {
        Some((_, l)) if l.trim_end() == SCHEMA_LINE => {}
        _ => return Err(err(1, "expected `#schema=1`")),
    }
    match lines.next() {
        Some((_, l)) if l.trim_end() == HEADER => {}
        _ => return Err(err(2, "expected the column header")),
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let line = i + 1;
        if l.is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.splitn(7, ',').collect();
        if cols.len() != 7 {
            return Err(err(line, "expected 7 columns"));
        }
        let time = parse_opt::<f64>(cols[0], line, "time")?.ok_or_else(|| err(line, "missing time"))?;
        let kind = EventKind::from_name(cols[1]).ok_or_else(|| err(line, &format!("unknown event kind `{}`", cols[1])))?;
        let mut extra = Vec::new();
        if !cols[6].is_empty() {
            for pair in cols[6].split(';') {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| err(line, &format!("bad extra pair `{pair}`")))?;
                extra.push((k.to_string(), v.to_string()));
            }
        }
        rows.push(TraceRow {
            line,
            time,
            kind,
            actor: parse_opt(cols[2], line, "actor_id")?,
            x: parse_opt(cols[3], line, "x")?,
            y: parse_opt(cols[4], line, "y")?,
            theta: parse_opt(cols[5], line, "theta")?,
            extra,
        });
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    parse_trace(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_roundtrip_exactly() {
        let mut buf = TraceBuf::new();
        let x = 0.1 + 0.2;
        buf.row(0.02, EventKind::Cmd, Some(1), Some(x), None, Some(-1e-300))
            .kv("state", "far")
            .kv("cap", 1.0 / 3.0);
        buf.row(0.04, EventKind::Goal, None, Some(4.5), Some(0.0), None);
        let rows = parse_trace(buf.as_str()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].x, Some(x));
        assert_eq!(rows[0].theta, Some(-1e-300));
        assert_eq!(rows[0].get_f64("cap"), Some(1.0 / 3.0));
        assert_eq!(rows[0].line, 3);
        assert_eq!(rows[1].actor, None);
        assert!(rows[1].extra.is_empty());
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = format!("{SCHEMA_LINE}\n{HEADER}\n0,robot,0,1,2,3,\n0,warp,0,,,,\n");
        match parse_trace(&text) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_trace("time\n").is_err());
    }
}
