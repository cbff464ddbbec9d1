//! Run configuration: one JSON document with a section per module, plus
//! `section.key=value` overrides from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use soccer_core::agent::AgentParams;
use soccer_core::behaviors::BehaviorParams;
use soccer_core::kick_timing::KickTimingParams;
use soccer_core::localization::LocalizationParams;
use soccer_core::perception::{ClusterParams, HeightClass, NoiseModel, SignatureModels};
use soccer_core::sim::{ScenarioConfig, ScenarioName};
use soccer_core::{ConfigError, FieldSpec, SimParams};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad override `{0}`: expected section.key=value")]
    Override(String),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Perception-side agent parameters that are not cluster or localization
/// settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionSection {
    pub height_class: HeightClass,
    pub height_scale: f64,
    pub classify_threshold: f64,
    pub signatures: SignatureModels,
    pub confirm_window: usize,
}

impl Default for PerceptionSection {
    fn default() -> Self {
        let a = AgentParams::default();
        Self {
            height_class: a.height_class,
            height_scale: a.height_scale,
            classify_threshold: a.classify_threshold,
            signatures: a.signatures,
            confirm_window: a.confirm_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(flatten)]
    pub layout: ScenarioConfig,
    /// Seconds per half.
    pub half_duration: f64,
    pub halves: u32,
    /// Walk-back time after a goal and at the start of a half.
    pub positioning_duration: f64,
    /// Time at which robot 0 is taken off and re-enters at the sideline.
    pub restart_at: Option<f64>,
    pub drill_timeout: f64,
    /// Rolling deceleration of the moving-ball challenge ball.
    pub challenge_friction: f64,
    /// Localization rows are written every this many steps once locked.
    pub loc_trace_every: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            name: "match".into(),
            layout: ScenarioConfig::default(),
            half_duration: 600.0,
            halves: 2,
            positioning_duration: 10.0,
            restart_at: None,
            drill_timeout: 60.0,
            challenge_friction: 0.0,
            loc_trace_every: 10,
        }
    }
}

impl ScenarioSection {
    pub fn kind(&self) -> Result<ScenarioName, ConfigError> {
        ScenarioName::parse(&self.name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.kind()?;
        self.layout.validate()?;
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(key, "must be finite and > 0"))
            }
        };
        positive("half_duration", self.half_duration)?;
        positive("drill_timeout", self.drill_timeout)?;
        if self.halves == 0 {
            return Err(ConfigError::new("halves", "must be >= 1"));
        }
        if !self.positioning_duration.is_finite() || self.positioning_duration < 0.0 {
            return Err(ConfigError::new("positioning_duration", "must be finite and >= 0"));
        }
        if self.restart_at.is_some_and(|t| !t.is_finite() || t < 0.0) {
            return Err(ConfigError::new("restart_at", "must be finite and >= 0"));
        }
        if !self.challenge_friction.is_finite() || self.challenge_friction < 0.0 {
            return Err(ConfigError::new("challenge_friction", "must be finite and >= 0"));
        }
        if self.loc_trace_every == 0 {
            return Err(ConfigError::new("loc_trace_every", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub sim: SimParams,
    pub noise: NoiseModel,
    pub behavior: BehaviorParams,
    pub localization: LocalizationParams,
    pub clusters: ClusterParams,
    pub perception: PerceptionSection,
    pub kick_timing: KickTimingParams,
    pub scenario: ScenarioSection,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            field: FieldSpec::default(),
            sim: SimParams::default(),
            noise: NoiseModel::default(),
            behavior: BehaviorParams::default(),
            localization: LocalizationParams::default(),
            clusters: ClusterParams::default(),
            perception: PerceptionSection::default(),
            kick_timing: KickTimingParams::default(),
            scenario: ScenarioSection::default(),
            seeds: vec![1],
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            behavior: self.behavior,
            localization: self.localization,
            clusters: self.clusters,
            height_class: self.perception.height_class,
            height_scale: self.perception.height_scale,
            classify_threshold: self.perception.classify_threshold,
            signatures: self.perception.signatures.clone(),
            confirm_window: self.perception.confirm_window,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.field.validate().map_err(|e| e.in_section("field"))?;
        self.sim.validate().map_err(|e| e.in_section("sim"))?;
        self.noise.validate().map_err(|e| e.in_section("noise"))?;
        self.agent_params().validate()?;
        self.kick_timing.validate().map_err(|e| e.in_section("kick_timing"))?;
        self.scenario.validate().map_err(|e| e.in_section("scenario"))?;
        if self.seeds.is_empty() {
            return Err(ConfigError::new("seeds", "must list at least one seed"));
        }
        Ok(())
    }

    /// Reads a config file and applies `overrides`.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, overrides)
    }

    /// Parses a config document. The `field` section must give every key;
    /// other sections fall back to defaults key by key. Unknown keys are
    /// rejected.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self, LoadError> {
        let mut value: Value = serde_json::from_str(text)?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let defaults = serde_json::to_value(RunConfig::default())?;
        check_known_keys(&value, &defaults, "")?;
        let field_keys = defaults["field"].as_object().map(|m| m.keys().cloned().collect::<Vec<_>>());
        for key in field_keys.unwrap_or_default() {
            if value.get("field").and_then(|f| f.get(&key)).is_none() {
                return Err(ConfigError::new(format!("field.{key}"), "is required").into());
            }
        }
        let config: RunConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }
}

fn check_known_keys(value: &Value, defaults: &Value, prefix: &str) -> Result<(), ConfigError> {
    let (Some(obj), Some(known)) = (value.as_object(), defaults.as_object()) else {
        return Ok(());
    };
    for (k, v) in obj {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match known.get(k) {
            None => return Err(ConfigError::new(key, "unknown key")),
            // Signature histograms and similar leaves are free-form.
            Some(d) if d.is_object() => check_known_keys(v, d, &key)?,
            Some(_) => {}
        }
    }
    Ok(())
}

/// Applies `section.key=value`. The value is read as JSON when it parses and
/// as a bare string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), LoadError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| LoadError::Override(spec.to_string()))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(LoadError::Override(spec.to_string()));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for k in &keys[..keys.len() - 1] {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(k.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    if !node.is_object() {
        *node = Value::Object(Map::new());
    }
    node.as_object_mut()
        .expect("object")
        .insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}

/// Parses `7`, `1..100` (inclusive) or `1,5,9`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, ConfigError> {
    let bad = || ConfigError::new("seeds", "expected N, A..B or a comma list");
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}
