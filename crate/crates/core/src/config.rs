//! Per-turn timing and quota configuration.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub &'static str);

/// Deadlines, locks and quotas that shape every turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlineConfig {
    /// Time the worker has to answer, counted from transcript delivery.
    pub worker_budget: Duration,
    /// Suggestions cannot be picked until this much time has passed.
    pub suggestion_lock: Duration,
    /// The warning cue fires when this much budget remains.
    pub warning_at_remaining: Duration,
    /// Device listening window.
    pub listening_window: Duration,
    /// Minimum spacing between two calls to the same suggester.
    pub suggester_min_interval: Duration,
    /// Suggestions requested per transcript variant.
    pub per_variant_quota: usize,
    /// Repaired alternatives generated per user message.
    pub alternatives_count: usize,
    /// Timer granularity of the live server.
    pub tick: Duration,
    /// Per-call timeout applied to suggesters.
    pub suggester_timeout: Duration,
}

impl Default for DeadlineConfig {
    fn default() -> Self {
        Self {
            worker_budget: Duration::from_secs(25),
            suggestion_lock: Duration::from_secs(5),
            warning_at_remaining: Duration::from_secs(10),
            listening_window: Duration::from_secs(10),
            suggester_min_interval: Duration::from_secs(1),
            per_variant_quota: 5,
            alternatives_count: 3,
            tick: Duration::from_millis(100),
            suggester_timeout: Duration::from_secs(3),
        }
    }
}

impl DeadlineConfig {
    pub fn validate(self) -> Result<Self, ConfigError> {
        validate_config(self)
    }
}

/// Returns `cfg` unchanged when every invariant holds, else the first violation.
pub fn validate_config(cfg: DeadlineConfig) -> Result<DeadlineConfig, ConfigError> {
    let positive = [
        (cfg.worker_budget, "worker_budget must be > 0"),
        (cfg.suggestion_lock, "suggestion_lock must be > 0"),
        (cfg.warning_at_remaining, "warning_at_remaining must be > 0"),
        (cfg.listening_window, "listening_window must be > 0"),
        (cfg.suggester_min_interval, "suggester_min_interval must be > 0"),
        (cfg.tick, "tick must be > 0"),
        (cfg.suggester_timeout, "suggester_timeout must be > 0"),
    ];
    for (value, message) in positive {
        if value.is_zero() {
            return Err(ConfigError(message));
        }
    }
    if cfg.suggestion_lock >= cfg.worker_budget {
        return Err(ConfigError("suggestion_lock must be < worker_budget"));
    }
    if cfg.warning_at_remaining >= cfg.worker_budget {
        return Err(ConfigError("warning_at_remaining must be < worker_budget"));
    }
    if cfg.per_variant_quota < 1 {
        return Err(ConfigError("per_variant_quota must be >= 1"));
    }
    Ok(cfg)
}
