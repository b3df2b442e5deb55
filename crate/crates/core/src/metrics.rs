//! Latency records and the aggregate views over them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::model::{LatencyRecord, ResponseKind, TurnId};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("negative latency {0} s rejected")]
    NegativeLatency(f64),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Builds a record from a latency in seconds, refusing negative or non-finite values.
pub fn record_from_seconds(
    turn_id: TurnId,
    kind: ResponseKind,
    seconds: f64,
) -> Result<LatencyRecord, MetricsError> {
    if !seconds.is_finite() || seconds < 0.0 {
        return Err(MetricsError::NegativeLatency(seconds));
    }
    Ok(LatencyRecord {
        turn_id,
        latency: Duration::from_secs_f64(seconds),
        kind,
    })
}

/// Append-only record store shared by all sessions.
#[derive(Debug, Default)]
pub struct MetricsStore {
    records: Mutex<Vec<LatencyRecord>>,
}

impl MetricsStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, rec: LatencyRecord) {
        self.lock().push(rec);
    }

    pub fn record_seconds(
        &self,
        turn_id: TurnId,
        kind: ResponseKind,
        seconds: f64,
    ) -> Result<(), MetricsError> {
        self.record(record_from_seconds(turn_id, kind, seconds)?);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Consistent copy of everything recorded so far.
    pub fn snapshot(&self) -> Vec<LatencyRecord> {
        self.lock().clone()
    }

    pub fn summarize<F: Real>(&self, filter: Option<ResponseKind>) -> LatencySummary<F> {
        summarize(&self.snapshot(), filter)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Vec<LatencyRecord>> {
        // A panic while holding the lock cannot leave a half-pushed Vec.
        self.records.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindStats<F> {
    pub count: usize,
    pub mean: Option<F>,
    pub sd: Option<F>,
}

/// Summary statistics in seconds. Statistics are `None` when nothing matched.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencySummary<F> {
    pub count: usize,
    pub mean: Option<F>,
    /// Population standard deviation.
    pub sd: Option<F>,
    pub p50: Option<F>,
    pub p90: Option<F>,
    pub by_kind: BTreeMap<ResponseKind, KindStats<F>>,
}

/// Summarizes `records`, optionally only those of one kind.
///
/// Values are sorted before any arithmetic, so the result depends only on the
/// multiset of latencies and not on recording order.
pub fn summarize<F: Real>(
    records: &[LatencyRecord],
    filter: Option<ResponseKind>,
) -> LatencySummary<F> {
    let selected: Vec<&LatencyRecord> = records
        .iter()
        .filter(|r| filter.is_none_or(|k| r.kind == k))
        .collect();
    let values = sorted_seconds::<F>(selected.iter().copied());
    let mut by_kind = BTreeMap::new();
    for kind in ResponseKind::ALL {
        let of_kind = sorted_seconds::<F>(selected.iter().copied().filter(|r| r.kind == kind));
        if of_kind.is_empty() {
            continue;
        }
        let (mean, sd) = mean_sd(&of_kind);
        by_kind.insert(
            kind,
            KindStats {
                count: of_kind.len(),
                mean,
                sd,
            },
        );
    }
    let (mean, sd) = mean_sd(&values);
    LatencySummary {
        count: values.len(),
        mean,
        sd,
        p50: quantile(&values, 0.5),
        p90: quantile(&values, 0.9),
        by_kind,
    }
}

fn sorted_seconds<'a, F: Real>(records: impl Iterator<Item = &'a LatencyRecord>) -> Vec<F> {
    let mut nanos: Vec<u128> = records.map(|r| r.latency.as_nanos()).collect();
    nanos.sort_unstable();
    nanos
        .into_iter()
        .map(|n| F::from_f64_lossy(n as f64 / 1e9))
        .collect()
}

fn mean_sd<F: Real>(sorted: &[F]) -> (Option<F>, Option<F>) {
    if sorted.is_empty() {
        return (None, None);
    }
    let n = F::from_count(sorted.len());
    let mean = sorted.iter().fold(F::zero(), |acc, &v| acc + v) / n;
    let var = sorted
        .iter()
        .fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean))
        / n;
    (Some(mean), Some(var.max(F::zero()).sqrt()))
}

/// Linear-interpolation quantile of sorted values (the "type 7" definition).
pub fn quantile<F: Real>(sorted: &[F], q: f64) -> Option<F> {
    let last = sorted.len().checked_sub(1)?;
    let h = q.clamp(0.0, 1.0) * last as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(last);
    let frac = F::from_f64_lossy(h - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub const CSV_HEADER: &str = "turn_id,kind,latency_seconds";
pub const HISTOGRAM_HEADER: &str = "bin_start,bin_end,count";

/// One line per record, latency in seconds with millisecond precision.
pub fn write_csv<W: Write>(out: &mut W, records: &[LatencyRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let ms = r.latency.as_millis();
        writeln!(out, "{},{},{}.{:03}", r.turn_id, r.kind, ms / 1000, ms % 1000)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<LatencyRecord>, MetricsError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| MetricsError::Io {
            path: PathBuf::from("<input>"),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || (line_no == 1 && line == CSV_HEADER) {
            continue;
        }
        let malformed = |reason: String| MetricsError::Malformed {
            line: line_no,
            reason,
        };
        let mut fields = line.rsplitn(3, ',');
        let (Some(secs), Some(kind), Some(turn)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(malformed("expected 3 fields".into()));
        };
        let kind: ResponseKind = kind.parse().map_err(|e| malformed(format!("{e}")))?;
        let secs: f64 = secs
            .parse()
            .map_err(|_| malformed(format!("bad latency {secs:?}")))?;
        records.push(record_from_seconds(TurnId(turn.to_owned()), kind, secs)?);
    }
    Ok(records)
}

/// Counts per 1 s bin over `[0, budget + 5)`. Latencies past the last bin
/// are counted in it, so the counts always sum to the number of records.
pub fn histogram(records: &[LatencyRecord], worker_budget: Duration) -> Vec<(u64, u64, usize)> {
    let bins = (worker_budget.as_secs_f64().ceil() as u64 + 5).max(1);
    let mut counts = vec![0usize; bins as usize];
    for r in records {
        let bin = r.latency.as_secs().min(bins - 1);
        counts[bin as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as u64, i as u64 + 1, c))
        .collect()
}

pub fn write_histogram<W: Write>(
    out: &mut W,
    records: &[LatencyRecord],
    worker_budget: Duration,
) -> io::Result<()> {
    writeln!(out, "{HISTOGRAM_HEADER}")?;
    for (start, end, count) in histogram(records, worker_budget) {
        writeln!(out, "{start},{end},{count}")?;
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut io::BufWriter<std::fs::File>) -> io::Result<()>) -> Result<(), MetricsError> {
    let wrap = |source| MetricsError::Io {
        path: path.to_owned(),
        source,
    };
    let file = std::fs::File::create(path).map_err(wrap)?;
    let mut out = io::BufWriter::new(file);
    f(&mut out).and_then(|()| out.flush()).map_err(wrap)
}

pub fn export_csv(path: &Path, records: &[LatencyRecord]) -> Result<(), MetricsError> {
    write_file(path, |out| write_csv(out, records))
}

pub fn export_histogram(
    path: &Path,
    records: &[LatencyRecord],
    worker_budget: Duration,
) -> Result<(), MetricsError> {
    write_file(path, |out| write_histogram(out, records, worker_budget))
}

pub fn load_csv(path: &Path) -> Result<Vec<LatencyRecord>, MetricsError> {
    let file = std::fs::File::open(path).map_err(|source| MetricsError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv(io::BufReader::new(file))
}

/// Plain-text report, stable for a given summary.
pub fn render_summary<F: Real>(summary: &LatencySummary<F>) -> String {
    let fmt = |v: Option<F>| v.map_or_else(|| "n/a".to_owned(), |v| format!("{:.3}", v.to_f64_lossy()));
    let mut s = String::new();
    let _ = writeln!(s, "# latency in seconds; sd is the population standard deviation");
    let _ = writeln!(s, "count {}", summary.count);
    let _ = writeln!(s, "mean {}", fmt(summary.mean));
    let _ = writeln!(s, "sd {}", fmt(summary.sd));
    let _ = writeln!(s, "p50 {}", fmt(summary.p50));
    let _ = writeln!(s, "p90 {}", fmt(summary.p90));
    for (kind, stats) in &summary.by_kind {
        let _ = writeln!(
            s,
            "kind {kind} count {} mean {} sd {}",
            stats.count,
            fmt(stats.mean),
            fmt(stats.sd)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(i: usize, kind: ResponseKind, ms: u64) -> LatencyRecord {
        LatencyRecord {
            turn_id: TurnId(format!("t{i}")),
            latency: Duration::from_millis(ms),
            kind,
        }
    }

    #[test]
    fn single_record() {
        let store = MetricsStore::new();
        store.record(rec(0, ResponseKind::Typed, 17_680));
        let s: LatencySummary<f64> = store.summarize(None);
        assert_eq!(s.count, 1);
        assert!((s.mean.unwrap() - 17.68).abs() < 1e-12);
        assert_eq!(s.sd, Some(0.0));
    }

    #[test]
    fn ten_and_twenty() {
        let records = [rec(0, ResponseKind::Typed, 10_000), rec(1, ResponseKind::Typed, 20_000)];
        let s = summarize::<f64>(&records, None);
        assert_eq!(s.mean, Some(15.0));
        assert_eq!(s.sd, Some(5.0));
        assert_eq!(s.p50, Some(15.0));
        assert_eq!(s.p90, Some(19.0));
        let s32 = summarize::<f32>(&records, None);
        assert_eq!(s32.sd, Some(5.0));
    }

    #[test]
    fn empty_store_has_no_statistics() {
        let s = MetricsStore::new().summarize::<f64>(None);
        assert_eq!(s.count, 0);
        assert_eq!(s.mean, None);
        assert_eq!(s.p90, None);
        assert!(s.by_kind.is_empty());
    }

    #[test]
    fn negative_latency_rejected() {
        let store = MetricsStore::new();
        assert!(matches!(
            store.record_seconds(TurnId::from("t"), ResponseKind::Typed, -0.5),
            Err(MetricsError::NegativeLatency(_))
        ));
        assert!(store.is_empty());
    }

    #[test]
    fn three_hundred_fifty_turns() {
        let store = MetricsStore::new();
        for i in 0..350 {
            let kind = ResponseKind::ALL[i % ResponseKind::ALL.len()];
            store.record(rec(i, kind, 1_000 + i as u64 * 50));
        }
        let s = store.summarize::<f64>(None);
        assert_eq!(s.count, 350);
        assert_eq!(s.by_kind.values().map(|k| k.count).sum::<usize>(), 350);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            rec(1, ResponseKind::Typed, 17_680),
            rec(2, ResponseKind::DefaultButton, 10_040),
            rec(3, ResponseKind::TimeoutDefault, 25_000),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(1), Some("t1,typed,17.680"));
        assert_eq!(read_csv(&buf[..]).unwrap(), records);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let bad = format!("{CSV_HEADER}\nt1,typed,1.0\nt2,shouted,2.0\n");
        match read_csv(bad.as_bytes()) {
            Err(MetricsError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_csv("t1,typed,-3".as_bytes()),
            Err(MetricsError::NegativeLatency(_))
        ));
    }

    #[test]
    fn histogram_clamps_into_edge_bins() {
        let records = [
            rec(0, ResponseKind::Typed, 0),
            rec(1, ResponseKind::Typed, 999),
            rec(2, ResponseKind::Typed, 25_000),
            rec(3, ResponseKind::Typed, 31_000),
            rec(4, ResponseKind::Typed, 300_000),
        ];
        let bins = histogram(&records, Duration::from_secs(25));
        assert_eq!(bins.len(), 30);
        assert_eq!(bins[0], (0, 1, 2));
        assert_eq!(bins[25].2, 1);
        assert_eq!(bins[29], (29, 30, 2));
    }

    #[test]
    fn render_mentions_population_sd() {
        let s = summarize::<f64>(&[rec(0, ResponseKind::Suggested, 6_000)], None);
        let text = render_summary(&s);
        assert!(text.starts_with("# latency in seconds; sd is the population"));
        assert!(text.contains("kind suggested count 1 mean 6.000 sd 0.000"));
    }

    fn arb_records() -> impl Strategy<Value = Vec<LatencyRecord>> {
        prop::collection::vec((0usize..6, 0u64..60_000), 0..80).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (k, ms))| rec(i, ResponseKind::ALL[k], ms))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn order_independent(records in arb_records(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut crate::seed::rng_for(seed, &[]));
            prop_assert_eq!(summarize::<f64>(&records, None), summarize::<f64>(&shuffled, None));
        }

        #[test]
        fn kinds_partition_the_total(records in arb_records()) {
            let total = summarize::<f64>(&records, None);
            let filtered: usize = ResponseKind::ALL
                .iter()
                .map(|&k| summarize::<f64>(&records, Some(k)).count)
                .sum();
            prop_assert_eq!(filtered, total.count);
            prop_assert_eq!(total.by_kind.values().map(|k| k.count).sum::<usize>(), total.count);
            if let Some(sd) = total.sd {
                prop_assert!(sd >= 0.0);
            }
        }

        #[test]
        fn histogram_conserves_mass(records in arb_records(), budget in 1u64..40) {
            let bins = histogram(&records, Duration::from_secs(budget));
            prop_assert_eq!(bins.len() as u64, budget + 5);
            prop_assert_eq!(bins.iter().map(|b| b.2).sum::<usize>(), records.len());
        }
    }
}
