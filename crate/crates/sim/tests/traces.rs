use std::path::PathBuf;

use soccer_sim::config::LoadError;
use soccer_sim::trace::{parse_trace, EventKind};
use soccer_sim::verify::verify_rows;
use soccer_sim::{run, RunConfig, RunReport};

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    RunConfig::load(&path, &[]).unwrap()
}

#[test]
fn report_matches_replay_of_its_trace() {
    for name in ["approach_drill", "avoidance_drill", "moving_ball"] {
        let out = run(&config(name), 3).unwrap();
        let rows = parse_trace(&out.trace).unwrap();
        assert_eq!(RunReport::from_trace(&rows).unwrap(), out.report, "{name}");
        assert!(verify_rows(&rows).is_clean(), "{name}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let cfg = config("avoidance_drill");
    assert_eq!(run(&cfg, 11).unwrap().trace, run(&cfg, 11).unwrap().trace);
    assert_ne!(run(&cfg, 11).unwrap().trace, run(&cfg, 12).unwrap().trace);
}

#[test]
fn hand_edited_command_is_flagged_at_its_line() {
    let out = run(&config("avoidance_drill"), 2).unwrap();
    let rows = parse_trace(&out.trace).unwrap();
    let target = rows
        .iter()
        .find(|r| r.kind == EventKind::Cmd && r.get("ox").is_some())
        .expect("a command row under avoidance");
    let (ox, oy) = (target.get_f64("ox").unwrap(), target.get_f64("oy").unwrap());
    let d = ox.hypot(oy);
    // Full speed straight at the obstacle.
    let (vx, vy) = (ox / d, oy / d);

    let mut lines: Vec<String> = out.trace.lines().map(str::to_string).collect();
    let idx = target.line - 1;
    let mut fields: Vec<String> = lines[idx].split(',').map(str::to_string).collect();
    fields[3] = vx.to_string();
    fields[4] = vy.to_string();
    lines[idx] = fields.join(",");
    let edited = lines.join("\n") + "\n";

    let report = verify_rows(&parse_trace(&edited).unwrap());
    let caps: Vec<usize> = report.violations.iter().filter(|v| v.kind == "cap").map(|v| v.line).collect();
    assert_eq!(caps, vec![target.line]);
}

#[test]
fn missing_field_length_is_named() {
    let mut value = serde_json::to_value(RunConfig::default()).unwrap();
    value["field"].as_object_mut().unwrap().remove("length");
    let err = RunConfig::from_json(&value.to_string(), &[]).unwrap_err();
    assert!(matches!(err, LoadError::Invalid(_)), "{err:?}");
    assert!(err.to_string().contains("field.length"), "{err}");
}

#[test]
fn unknown_key_and_bad_override_are_rejected() {
    let text = serde_json::to_string(&RunConfig::default()).unwrap();
    assert!(RunConfig::from_json(&text, &["sim.not_a_key=1".into()]).is_err());
    assert!(RunConfig::from_json(&text, &["sim.dt=-1".into()]).is_err());
    let cfg = RunConfig::from_json(&text, &["behavior.halo_radius=0.7".into()]).unwrap();
    assert_eq!(cfg.behavior.halo_radius, 0.7);
}
