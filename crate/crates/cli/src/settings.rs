//! Flat `key = value` configuration with flag overrides.
//!
//! A config file and the command line both reduce to the same string map;
//! flags are applied on top of the file, and the merged map is converted to a
//! typed [`RunConfig`] in one place.

use std::collections::BTreeMap;
use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use relay_core::device::CutoffModel;
use relay_core::DeadlineConfig;
use relay_gateway::WorkerModel;

/// Bad input from the user: unknown keys, unparsable values, missing files.
/// Maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Every key a config file may set, with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "base seed for every random choice"),
    ("listen", "HTTP/WebSocket listen address"),
    ("tcp_listen", "line-delimited TCP listen address, or `off`"),
    ("token", "shared secret clients pass as ?token="),
    ("lexicon", "pronouncing dictionary file (bundled when unset)"),
    ("features", "phoneme feature table (bundled when unset)"),
    ("corpus", "one sentence per line (bundled when unset)"),
    ("pairs", "prompt<TAB>reply dialogue pairs (bundled when unset)"),
    ("script", "device script for simulate"),
    ("out", "report output directory"),
    ("worker_model", "button, typist or absent"),
    ("noise_del", "phoneme deletion probability"),
    ("noise_sub", "phoneme substitution probability"),
    ("k", "retrieval depth for repair-eval"),
    ("sample", "sentences probed by repair-eval"),
    ("times", "augmented copies per sentence"),
    ("budget_ms", "worker budget per turn"),
    ("lock_ms", "suggestion lock"),
    ("warning_ms", "remaining time at the warning cue"),
    ("listening_window_ms", "device listening window"),
    ("max_pause_ms", "pause that ends an utterance"),
    ("suggester_interval_ms", "minimum spacing of suggester calls"),
    ("suggester_timeout_ms", "per-call suggester timeout"),
    ("tick_ms", "server timer granularity"),
    ("quota", "suggestions per transcript variant"),
    ("alternatives", "repaired alternatives per message"),
    ("suggestions", "fetch automatic suggestions (true/false)"),
    ("typing_ms_per_char", "typist speed in simulate"),
];

/// Raw merged settings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Lines are `key = value`; `#` starts a comment. Later keys win.
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().replace('-', "_");
            check_key(&key)?;
            map.insert(key, value.trim().to_owned());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), UsageError> {
        let key = key.replace('-', "_");
        check_key(&key)?;
        self.0.insert(key, value.into());
        Ok(())
    }

    /// Applies `KEY=VALUE` strings from the command line.
    pub fn set_pairs<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<(), UsageError> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {pair:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| usage(format!("{key} = {v:?}: {e}"))))
            .transpose()
    }

    fn millis(&self, key: &str, default: Duration) -> Result<Duration, UsageError> {
        Ok(self.typed::<u64>(key)?.map_or(default, Duration::from_millis))
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>, UsageError> {
        match self.get(key) {
            None => Ok(None),
            Some(p) => {
                let p = PathBuf::from(p);
                if !p.exists() {
                    return Err(usage(format!("{key}: {} does not exist", p.display())));
                }
                Ok(Some(p))
            }
        }
    }
}

fn check_key(key: &str) -> Result<(), UsageError> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(usage(format!("unknown config key {key:?}")))
    }
}

/// Where bundled data may be replaced by files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataPaths {
    pub lexicon: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub listen: SocketAddr,
    pub tcp_listen: Option<SocketAddr>,
    pub token: Option<String>,
    pub data: DataPaths,
    pub script: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub worker: WorkerModel,
    pub noise_del: Option<f64>,
    pub noise_sub: Option<f64>,
    pub k: usize,
    pub sample: usize,
    pub times: usize,
    pub deadline: DeadlineConfig,
    pub cutoff: CutoffModel,
    pub suggestions: bool,
    pub typing_per_char: Duration,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, UsageError> {
        let d = DeadlineConfig::default();
        let deadline = DeadlineConfig {
            worker_budget: s.millis("budget_ms", d.worker_budget)?,
            suggestion_lock: s.millis("lock_ms", d.suggestion_lock)?,
            warning_at_remaining: s.millis("warning_ms", d.warning_at_remaining)?,
            listening_window: s.millis("listening_window_ms", d.listening_window)?,
            suggester_min_interval: s.millis("suggester_interval_ms", d.suggester_min_interval)?,
            per_variant_quota: s.typed("quota")?.unwrap_or(d.per_variant_quota),
            alternatives_count: s.typed("alternatives")?.unwrap_or(d.alternatives_count),
            tick: s.millis("tick_ms", d.tick)?,
            suggester_timeout: s.millis("suggester_timeout_ms", d.suggester_timeout)?,
        }
        .validate()
        .map_err(|e| usage(e.to_string()))?;
        let c = CutoffModel::default();
        let cutoff = CutoffModel::new(
            s.millis("max_pause_ms", c.max_pause)?,
            deadline.listening_window,
            c.no_speech_close,
        )
        .map_err(|e| usage(e.to_string()))?;
        let tcp_listen = match s.get("tcp_listen") {
            None | Some("off") => None,
            Some(_) => s.typed("tcp_listen")?,
        };
        let probability = |key: &str| -> Result<Option<f64>, UsageError> {
            let p = s.typed::<f64>(key)?;
            if p.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return Err(usage(format!("{key} must lie in [0, 1]")));
            }
            Ok(p)
        };
        Ok(Self {
            seed: s.typed("seed")?.unwrap_or(0),
            listen: s.typed("listen")?.unwrap_or_else(|| "127.0.0.1:8080".parse().expect("literal")),
            tcp_listen,
            token: s.get("token").map(str::to_owned),
            data: DataPaths {
                lexicon: s.path("lexicon")?,
                features: s.path("features")?,
                corpus: s.path("corpus")?,
                pairs: s.path("pairs")?,
            },
            script: s.path("script")?,
            out: s.get("out").map(PathBuf::from),
            worker: s.typed("worker_model")?.unwrap_or(WorkerModel::Absent),
            noise_del: probability("noise_del")?,
            noise_sub: probability("noise_sub")?,
            k: s.typed("k")?.unwrap_or(3),
            sample: s.typed("sample")?.unwrap_or(1000),
            times: s.typed("times")?.unwrap_or(5),
            deadline,
            cutoff,
            suggestions: s.typed("suggestions")?.unwrap_or(true),
            typing_per_char: s.millis("typing_ms_per_char", Duration::from_millis(250))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut s = Settings::parse("# run\nseed = 3\nworker-model = button # inline\n\nk=5\n").unwrap();
        assert_eq!(s.get("worker_model"), Some("button"));
        s.set("seed", "9").unwrap();
        let cfg = RunConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.worker, WorkerModel::Button);
        assert_eq!(cfg.deadline, DeadlineConfig::default());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::parse("seed 3").is_err());
        assert!(Settings::parse("colour = red").is_err());
        let bad = |k: &str, v: &str| {
            let mut s = Settings::default();
            s.set(k, v).unwrap();
            RunConfig::from_settings(&s).is_err()
        };
        assert!(bad("seed", "-1"));
        assert!(bad("noise_del", "1.5"));
        assert!(bad("lock_ms", "30000"));
        assert!(bad("worker_model", "lazy"));
        assert!(bad("corpus", "/definitely/not/here.txt"));
        assert!(bad("max_pause_ms", "20000"));
    }

    #[test]
    fn deadline_overrides() {
        let mut s = Settings::default();
        s.set_pairs(["budget_ms=1500", "lock_ms=300", "warning_ms=500", "tcp_listen=127.0.0.1:0"]).unwrap();
        let cfg = RunConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.deadline.worker_budget, Duration::from_millis(1500));
        assert_eq!(cfg.tcp_listen, Some("127.0.0.1:0".parse().unwrap()));
        assert!(s.set_pairs(["nope"]).is_err());
    }
}
