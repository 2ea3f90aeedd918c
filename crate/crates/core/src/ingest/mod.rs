//! Archive ingestion: parse, filter, measure and aggregate.

mod filter;
pub mod reader;
mod record;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use filter::{classify_device, filter_record, DeviceClass, DropReason, FilterConfig, FilterOutcome};
pub use record::{parse_record, source_label, Parsed, SkipReason, TweetRecord};

use crate::charcount::{self, CountingSchedule, WeightedLength};
use crate::histstore::{CohortKey, HistStore};
use crate::Result;

/// A record that passed every filter, with its measured length.
#[derive(Debug, Clone)]
pub struct Kept {
    pub record: TweetRecord,
    pub device: DeviceClass,
    /// Normalized display text.
    pub display_text: String,
    pub length: WeightedLength,
    /// Longer than the day's limit plus 10%.
    pub anomalous: bool,
}

#[derive(Debug, Clone)]
pub enum LineOutcome {
    Kept(Box<Kept>),
    Dropped(DropReason),
}

/// Turns archive lines into kept tweets or drop reasons.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub filter: FilterConfig,
    pub counting: CountingSchedule,
    pub max_len: usize,
}

impl Classifier {
    pub fn new(filter: FilterConfig, counting: CountingSchedule, max_len: usize) -> Self {
        Classifier {
            filter,
            counting,
            max_len,
        }
    }

    pub fn classify_line(&self, line: &[u8]) -> LineOutcome {
        match parse_record(line) {
            Parsed::Skip(reason) => LineOutcome::Dropped(reason.into()),
            Parsed::Record(record) => self.classify_record(record),
        }
    }

    pub fn classify_record(&self, record: TweetRecord) -> LineOutcome {
        let device = match filter_record(&record, &self.filter) {
            FilterOutcome::Drop(reason) => return LineOutcome::Dropped(reason),
            FilterOutcome::Keep(device) => device,
        };
        let config = self.counting.for_day(record.day());
        let Ok(display) = charcount::extract_display_text(&record) else {
            return LineOutcome::Dropped(DropReason::MalformedRange);
        };
        let display_text = config.normalization_form.apply(&display);
        let length = charcount::weighted_length(&display_text, config);
        if length.0 == 0 {
            return LineOutcome::Dropped(DropReason::Empty);
        }
        if length.0 > self.max_len {
            return LineOutcome::Dropped(DropReason::LengthOverflow);
        }
        LineOutcome::Kept(Box::new(Kept {
            anomalous: config.is_anomalous(length),
            record,
            device,
            display_text,
            length,
        }))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub records_in: u64,
    pub kept: u64,
    pub kept_by_device: BTreeMap<DeviceClass, u64>,
    pub drops: BTreeMap<DropReason, u64>,
    pub anomalies: u64,
}

impl Tally {
    pub fn record(&mut self, outcome: &LineOutcome) {
        self.records_in += 1;
        match outcome {
            LineOutcome::Kept(kept) => {
                self.kept += 1;
                *self.kept_by_device.entry(kept.device).or_default() += 1;
                if kept.anomalous {
                    self.anomalies += 1;
                }
            }
            LineOutcome::Dropped(reason) => *self.drops.entry(*reason).or_default() += 1,
        }
    }

    pub fn merge_from(&mut self, other: &Tally) {
        self.records_in += other.records_in;
        self.kept += other.kept;
        for (k, v) in &other.kept_by_device {
            *self.kept_by_device.entry(*k).or_default() += v;
        }
        for (k, v) in &other.drops {
            *self.drops.entry(*k).or_default() += v;
        }
        self.anomalies += other.anomalies;
    }

    pub fn dropped(&self) -> u64 {
        self.drops.values().sum()
    }

    /// Every line read was either kept or dropped for exactly one reason.
    pub fn is_conserved(&self) -> bool {
        self.records_in == self.kept + self.dropped()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardReport {
    pub path: String,
    pub records: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    #[serde(flatten)]
    pub tally: Tally,
    pub shards: Vec<ShardReport>,
}

impl IngestSummary {
    pub fn failed_shards(&self) -> impl Iterator<Item = &ShardReport> {
        self.shards.iter().filter(|s| s.error.is_some())
    }
}

/// Runs `step` on every kept tweet of every shard, in parallel across shards
/// on the current rayon pool. Per-shard accumulators are merged in shard
/// order, so the result does not depend on scheduling.
pub fn fold_kept<A, I, S, M>(
    shards: &[PathBuf],
    classifier: &Classifier,
    init: I,
    step: S,
    merge: M,
) -> (A, IngestSummary)
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &Kept) + Sync,
    M: Fn(&mut A, A),
{
    let per_shard: Vec<(A, Tally, ShardReport)> = shards
        .par_iter()
        .map(|path| {
            let mut acc = init();
            let mut tally = Tally::default();
            let result = reader::for_each_line(path, &mut |line| {
                let outcome = classifier.classify_line(line);
                tally.record(&outcome);
                if let LineOutcome::Kept(kept) = &outcome {
                    step(&mut acc, kept);
                }
            });
            let report = ShardReport {
                path: path.display().to_string(),
                records: tally.records_in,
                error: result.err().map(|e| e.to_string()),
            };
            (acc, tally, report)
        })
        .collect();

    let mut acc = init();
    let mut summary = IngestSummary::default();
    for (shard_acc, tally, report) in per_shard {
        merge(&mut acc, shard_acc);
        summary.tally.merge_from(&tally);
        summary.shards.push(report);
    }
    (acc, summary)
}

pub struct IngestOutput {
    pub store: HistStore,
    pub summary: IngestSummary,
}

/// Aggregates kept tweets into per-(day, language, device) histograms.
pub fn ingest(shards: &[PathBuf], classifier: &Classifier) -> IngestOutput {
    let max_len = classifier.max_len;
    let (store, summary) = fold_kept(
        shards,
        classifier,
        || HistStore::new(max_len),
        |store, kept| {
            let key = CohortKey::new(kept.record.day(), kept.record.lang.clone(), kept.device);
            store.add(key, kept.length.0, 1);
        },
        |store, other| store.merge_from(&other).expect("same max_len"),
    );
    IngestOutput { store, summary }
}

/// Discovers shards under `inputs` and ingests them.
pub fn ingest_paths(inputs: &[PathBuf], classifier: &Classifier) -> Result<IngestOutput> {
    let shards = reader::discover_shards(inputs)?;
    Ok(ingest(&shards, classifier))
}
