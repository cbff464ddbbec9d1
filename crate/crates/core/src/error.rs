use alloc::string::String;

/// A configuration value that violates its constraint. `key` is relative to
/// the owning section (`length`, not `field.length`).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("`{key}` violates constraint: {constraint}")]
pub struct ConfigError {
    pub key: String,
    pub constraint: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    /// Prefixes the key with its config section, e.g. `field.` + `length`.
    pub fn in_section(mut self, section: &str) -> Self {
        self.key = alloc::format!("{section}.{}", self.key);
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid state: {0}")]
    State(&'static str),
    #[error("unknown robot id {0}")]
    UnknownRobot(u32),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("measurements out of order: t2 = {t2} is not after t1 = {t1}")]
    Ordering { t1: f64, t2: f64 },
    #[error("ball stalled: smoothed speed {speed} m/s is at or below the floor {floor} m/s")]
    StalledBall { speed: f64, floor: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
