use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};

use relay_core::data;
use relay_core::device::Script;
use relay_core::metrics::{self, render_summary, summarize, write_histogram};
use relay_core::phonetics::{Lexicon, PhonemeInventory};
use relay_core::repair::{
    build_corpus_index, evaluate_repair, load_corpus_file, write_training_pairs, CorpusIndex,
    NoiseParams, RetrievalRepair,
};
use relay_core::suggest::{CorpusReplySuggester, DialogueCorpus};
use relay_core::{Inventory, Summary};
use relay_gateway::{simulate, HubConfig, ServerConfig, SimComponents, SimConfig, SimReport};

use crate::settings::{DataPaths, RunConfig, UsageError};

pub const LATENCY_CSV: &str = "latency.csv";
pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const EVENT_LOG: &str = "events.jsonl";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const TRAINING_PAIRS: &str = "training_pairs.tsv";

/// Lexicon, feature table, corpus and dialogue pairs, from files or bundled.
pub struct Resources {
    pub lexicon: Arc<Lexicon>,
    pub inventory: Inventory,
    pub index: Arc<CorpusIndex>,
    pub replies: Arc<DialogueCorpus>,
}

impl Resources {
    pub fn load(paths: &DataPaths) -> Result<Self> {
        let lexicon = match &paths.lexicon {
            Some(p) => Lexicon::load(p, data::letter_rules())?,
            None => data::lexicon(),
        };
        let inventory = match &paths.features {
            Some(p) => PhonemeInventory::load(p)?,
            None => data::inventory(),
        };
        lexicon.check_inventory(&inventory)?;
        let index = match &paths.corpus {
            Some(p) => load_corpus_file(p, &lexicon)?,
            None => build_corpus_index(&data::corpus_sentences(), &lexicon, "bundled corpus")?,
        };
        let replies = match &paths.pairs {
            Some(p) => DialogueCorpus::load(p, &lexicon)?,
            None => DialogueCorpus::parse(data::DIALOGUE_PAIRS, &lexicon)?,
        };
        Ok(Self {
            lexicon: Arc::new(lexicon),
            inventory,
            index: Arc::new(index),
            replies: Arc::new(replies),
        })
    }

    pub fn components(&self) -> SimComponents {
        SimComponents {
            repair: Arc::new(RetrievalRepair::new(self.index.clone(), self.lexicon.clone())),
            suggester: Arc::new(CorpusReplySuggester::new(self.replies.clone(), self.lexicon.clone())),
            replies: self.replies.clone(),
            lexicon: self.lexicon.clone(),
        }
    }
}

fn hub_config(cfg: &RunConfig) -> HubConfig {
    HubConfig {
        deadline: cfg.deadline.clone(),
        seed: cfg.seed,
        suggestions: cfg.suggestions,
    }
}

fn noise(cfg: &RunConfig, default: f64) -> Result<NoiseParams> {
    Ok(NoiseParams::new(
        cfg.noise_del.unwrap_or(default),
        cfg.noise_sub.unwrap_or(default),
        cfg.seed,
    )?)
}

/// Used when no script is given: the first ten corpus sentences, 250 ms apart.
pub fn default_script() -> Script {
    let sentences: Vec<_> = data::corpus_sentences().into_iter().take(10).collect();
    Script::from_sentences(&sentences, Duration::from_millis(250))
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn run_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<SimReport> {
    let script = match &cfg.script {
        Some(p) => Script::load(p)?,
        None => default_script(),
    };
    let resources = Resources::load(&cfg.data)?;
    let sim_cfg = SimConfig {
        hub: hub_config(cfg),
        cutoff: cfg.cutoff,
        worker: cfg.worker,
        asr_noise: noise(cfg, 0.0)?,
        typing_per_char: cfg.typing_per_char,
    };
    let report = simulate(&script, &sim_cfg, &resources.components());
    let summary: Summary = summarize(&report.records, None);
    let mut text = format!(
        "simulate worker={} seed={} turns={} abandoned={} finished_at_s={:.3}\n",
        cfg.worker,
        cfg.seed,
        report.records.len(),
        report.abandoned.len(),
        report.finished_at.as_millis() as f64 / 1000.0,
    );
    text.push_str(&render_summary(&summary));
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &cfg.out {
        create_out_dir(dir)?;
        metrics::export_csv(&dir.join(LATENCY_CSV), &report.records)?;
        metrics::export_histogram(&dir.join(HISTOGRAM_CSV), &report.records, cfg.deadline.worker_budget)?;
        write_file(&dir.join(EVENT_LOG), &report.event_log_text())?;
        write_file(&dir.join(SUMMARY_TXT), &text)?;
    }
    Ok(report)
}

pub fn run_repair_eval(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if cfg.k == 0 {
        return Err(UsageError("k must be >= 1".into()).into());
    }
    let resources = Resources::load(&cfg.data)?;
    let params = noise(cfg, 0.0)?;
    let report = evaluate_repair(&resources.index, &resources.inventory, params, cfg.k, cfg.sample);
    let hits = |rate: f64| (rate * report.sample as f64).round() as usize;
    let text = format!(
        "repair-eval seed={} noise_del={} noise_sub={} k={} corpus={}\n\
         sample {}\ntop1_rate {:.6} ({}/{})\ntop{}_rate {:.6} ({}/{})\nmean_distance {:.6}\n",
        cfg.seed,
        params.p_delete,
        params.p_substitute,
        cfg.k,
        resources.index.len(),
        report.sample,
        report.top1_rate,
        hits(report.top1_rate),
        report.sample,
        cfg.k,
        report.topk_rate,
        hits(report.topk_rate),
        report.sample,
        report.mean_distance,
    );
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &cfg.out {
        create_out_dir(dir)?;
        write_file(&dir.join("repair_eval.txt"), &text)?;
    }
    Ok(())
}

pub fn run_augment(cfg: &RunConfig, out: &mut dyn Write) -> Result<usize> {
    let resources = Resources::load(&cfg.data)?;
    let params = noise(cfg, NoiseParams::default().p_delete)?;
    match &cfg.out {
        Some(dir) => {
            create_out_dir(dir)?;
            let path = dir.join(TRAINING_PAIRS);
            let file = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
            let mut w = BufWriter::new(file);
            let n = write_training_pairs(&mut w, &resources.index, cfg.times, params, &resources.inventory)?;
            w.flush()?;
            writeln!(
                out,
                "wrote {n} pairs ({} sentences x {} rounds) to {}",
                resources.index.len(),
                cfg.times + 1,
                path.display()
            )?;
            Ok(n)
        }
        None => Ok(write_training_pairs(out, &resources.index, cfg.times, params, &resources.inventory)?),
    }
}

pub fn run_report(cfg: &RunConfig, csv: Option<&Path>, out: &mut dyn Write) -> Result<Summary> {
    let default = cfg.out.as_ref().map(|d| d.join(LATENCY_CSV));
    let path = csv
        .or(default.as_deref())
        .ok_or_else(|| UsageError("report needs a CSV path or --out".into()))?;
    let records = metrics::load_csv(path)?;
    let summary: Summary = summarize(&records, None);
    let mut text = render_summary(&summary);
    let mut hist = Vec::new();
    write_histogram(&mut hist, &records, cfg.deadline.worker_budget)?;
    text.push_str(&String::from_utf8(hist).expect("histogram is ascii"));
    out.write_all(text.as_bytes())?;
    Ok(summary)
}

pub fn run_serve(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let token = cfg
        .token
        .clone()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| UsageError("serve needs --token or `token` in the config".into()))?;
    let resources = Resources::load(&cfg.data)?;
    let parts = resources.components();
    let server_cfg = ServerConfig {
        listen: cfg.listen,
        tcp_listen: cfg.tcp_listen,
        token,
        hub: hub_config(cfg),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let handle = relay_gateway::serve(server_cfg, parts.repair, parts.suggester, relay_gateway::system_clock())
            .await
            .context("cannot start server")?;
        write!(out, "listening on http://{}", handle.http_addr)?;
        if let Some(tcp) = handle.tcp_addr {
            write!(out, " and tcp://{tcp}")?;
        }
        writeln!(out)?;
        out.flush()?;
        tokio::signal::ctrl_c().await?;
        let records = handle.metrics.snapshot();
        handle.shutdown().await;
        tracing::info!(turns = records.len(), "server stopped");
        if let Some(dir) = &cfg.out {
            create_out_dir(dir)?;
            metrics::export_csv(&dir.join(LATENCY_CSV), &records)?;
        }
        anyhow::Ok(())
    })
}
