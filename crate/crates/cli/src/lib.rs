//! The `relay` command line: serve the gateway, run scripted simulations,
//! evaluate transcript repair, generate training pairs and summarize latency
//! CSVs.
//!
//! Settings come from an optional flat `key = value` file (`--config`) with
//! flags layered on top. Exit codes: 0 ok, 1 usage, 2 runtime failure.

pub mod commands;
pub mod settings;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use settings::{RunConfig, Settings, UsageError};

#[derive(Debug, Parser)]
#[command(name = "relay", version, about = "Human-in-the-loop voice relay")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` settings file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "ADDR")]
    pub listen: Option<String>,
    #[arg(long, global = true, value_name = "FILE")]
    pub script: Option<PathBuf>,
    /// button, typist or absent.
    #[arg(long, global = true, value_name = "MODEL")]
    pub worker_model: Option<String>,
    #[arg(long, global = true, value_name = "P")]
    pub noise_del: Option<f64>,
    #[arg(long, global = true, value_name = "P")]
    pub noise_sub: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub sample: Option<usize>,
    /// Augmented copies per sentence.
    #[arg(long, global = true)]
    pub times: Option<usize>,
    #[arg(long, global = true)]
    pub token: Option<String>,
    /// Report output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Any config key, e.g. `--set budget_ms=20000`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the WebSocket/TCP gateway until interrupted.
    Serve,
    /// Play a device script against the hub with a synthetic worker.
    Simulate,
    /// Measure how often retrieval recovers corrupted corpus sentences.
    RepairEval,
    /// Write phoneme-to-text training pairs.
    Augment,
    /// Summarize a latency CSV.
    Report {
        /// Defaults to `latency.csv` under `--out`.
        csv: Option<PathBuf>,
    },
    /// List the config keys.
    Keys,
}

impl Common {
    pub fn settings(&self) -> Result<Settings, UsageError> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let path = |p: &PathBuf| p.display().to_string();
        let flags: [(&str, Option<String>); 11] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("listen", self.listen.clone()),
            ("script", self.script.as_ref().map(path)),
            ("worker_model", self.worker_model.clone()),
            ("noise_del", self.noise_del.map(|v| v.to_string())),
            ("noise_sub", self.noise_sub.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("sample", self.sample.map(|v| v.to_string())),
            ("times", self.times.map(|v| v.to_string())),
            ("token", self.token.clone()),
            ("out", self.out.as_ref().map(path)),
        ];
        s.set_pairs(self.set.iter().map(String::as_str))?;
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        Ok(s)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return 1;
            }
            let _ = write!(out, "{rendered}");
            return 0;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = RunConfig::from_settings(&cli.common.settings()?)?;
    match &cli.command {
        Command::Serve => commands::run_serve(&cfg, out),
        Command::Simulate => commands::run_simulate(&cfg, out).map(drop),
        Command::RepairEval => commands::run_repair_eval(&cfg, out),
        Command::Augment => commands::run_augment(&cfg, out).map(drop),
        Command::Report { csv } => commands::run_report(&cfg, csv.as_deref(), out).map(drop),
        Command::Keys => {
            for (key, help) in settings::KEYS {
                writeln!(out, "{key:<22} {help}")?;
            }
            Ok(())
        }
    }
}
