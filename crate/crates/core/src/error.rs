//! Error types shared across the engine.

use thiserror::Error;

/// Configuration parsing or validation failure. Every variant names the
/// offending key or line so a bad config is diagnosable from the message
/// alone.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("config line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },

    #[error("config line {line}: unknown key '{key}' in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },

    #[error("[{section}] {key}: {constraint}")]
    Invalid {
        section: &'static str,
        key: &'static str,
        constraint: String,
    },

    #[error("ABLATRON_SEED: {0}")]
    BadSeedOverride(String),

    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

impl ConfigError {
    pub fn invalid(
        section: &'static str,
        key: &'static str,
        constraint: impl Into<String>,
    ) -> Self {
        ConfigError::Invalid {
            section,
            key,
            constraint: constraint.into(),
        }
    }
}

/// Physics-level failure from an engine operation.
#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("repetition rate {rate_hz} Hz outside (0, {max_hz}] Hz")]
    RateOutOfRange { rate_hz: f64, max_hz: f64 },

    #[error("pulse at {time_s} s falls outside every gating on-interval")]
    PulseOutsideGate { time_s: f64 },

    #[error("no isotope with mass number {0} in the species table")]
    UnknownIsotope(u32),

    #[error("no ion core transition named '{0}'")]
    UnknownTransition(String),

    #[error("trap operating point is unstable: q = {q:.4} outside (0, 0.908)")]
    UnstableTrap { q: f64 },

    #[error("pressure step dt = {dt} s exceeds the stability bound {bound} s")]
    UnstableTimestep { dt: f64, bound: f64 },

    #[error("trace too short: need at least {needed} bins, got {got}")]
    DegenerateTrace { needed: usize, got: usize },
}
