//! Per-cohort length histograms and their CSV persistence.
//!
//! The on-disk table is `day,lang,device,length,count`, one row per non-zero
//! bin, sorted by day, language, device and length. Lines starting with `#`
//! carry provenance and are ignored on read. A `.gz` suffix selects gzip.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::DeviceClass;
use crate::{Error, Result};

pub const DEFAULT_MAX_LEN: usize = 280;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CohortKey {
    pub day: NaiveDate,
    pub lang: String,
    pub device: DeviceClass,
}

impl CohortKey {
    pub fn new(day: NaiveDate, lang: impl Into<String>, device: DeviceClass) -> Self {
        CohortKey {
            day,
            lang: lang.into(),
            device,
        }
    }
}

impl Ord for CohortKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.day
            .cmp(&other.day)
            .then_with(|| self.lang.cmp(&other.lang))
            .then_with(|| self.device.as_str().cmp(other.device.as_str()))
    }
}

impl PartialOrd for CohortKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Integer counts indexed by weighted length `1..=max_len`. Index 0 is unused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl LengthHistogram {
    pub fn new(max_len: usize) -> Self {
        LengthHistogram {
            counts: vec![0; max_len + 1],
            total: 0,
        }
    }

    /// Builds a histogram from counts for lengths `1..=counts.len()`.
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut h = LengthHistogram::new(counts.len());
        for (i, &c) in counts.iter().enumerate() {
            h.add_count(i + 1, c);
        }
        h
    }

    pub fn max_len(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Count at `length`; zero outside `1..=max_len`.
    pub fn count(&self, length: usize) -> u64 {
        if length == 0 {
            0
        } else {
            self.counts.get(length).copied().unwrap_or(0)
        }
    }

    /// Counts for lengths `1..=max_len`.
    pub fn counts(&self) -> &[u64] {
        &self.counts[1..]
    }

    /// # Panics
    /// If `length` is 0 or above `max_len`.
    pub fn add_count(&mut self, length: usize, count: u64) {
        assert!(
            (1..=self.max_len()).contains(&length),
            "length {length} outside 1..={}",
            self.max_len()
        );
        self.counts[length] += count;
        self.total += count;
    }

    pub fn add(&mut self, length: usize) {
        self.add_count(length, 1);
    }

    pub fn merge(&self, other: &LengthHistogram) -> Result<LengthHistogram> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &LengthHistogram) -> Result<()> {
        if self.max_len() != other.max_len() {
            return Err(Error::Dimension {
                left: self.max_len(),
                right: other.max_len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    /// Normalized density indexed by length; element 0 is always 0.
    pub fn density(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::Undefined("density of an empty histogram".into()));
        }
        let total = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / total).collect())
    }

    pub fn mean_length(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Undefined("mean of an empty histogram".into()));
        }
        let sum: u128 = self
            .counts
            .iter()
            .enumerate()
            .map(|(l, &c)| l as u128 * c as u128)
            .sum();
        Ok(sum as f64 / self.total as f64)
    }

    /// Share of tweets strictly longer than `c`.
    pub fn fraction_exceeding(&self, c: usize) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Undefined("fraction of an empty histogram".into()));
        }
        let above: u64 = self.counts.iter().skip(c + 1).sum();
        Ok(above as f64 / self.total as f64)
    }
}

pub fn merge(a: &LengthHistogram, b: &LengthHistogram) -> Result<LengthHistogram> {
    a.merge(b)
}

pub fn fraction_exceeding(h: &LengthHistogram, c: usize) -> Result<f64> {
    h.fraction_exceeding(c)
}

/// A set of cohort histograms sharing one `max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistStore {
    max_len: usize,
    cohorts: BTreeMap<CohortKey, LengthHistogram>,
}

#[derive(Debug, Deserialize)]
struct Row {
    day: NaiveDate,
    lang: String,
    device: String,
    length: usize,
    count: u64,
}

impl HistStore {
    pub fn new(max_len: usize) -> Self {
        HistStore {
            max_len,
            cohorts: BTreeMap::new(),
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn add(&mut self, key: CohortKey, length: usize, count: u64) {
        let max_len = self.max_len;
        self.cohorts
            .entry(key)
            .or_insert_with(|| LengthHistogram::new(max_len))
            .add_count(length, count);
    }

    pub fn insert(&mut self, key: CohortKey, hist: LengthHistogram) -> Result<()> {
        if hist.max_len() != self.max_len {
            return Err(Error::Dimension {
                left: self.max_len,
                right: hist.max_len(),
            });
        }
        if hist.total() == 0 {
            return Ok(());
        }
        match self.cohorts.get_mut(&key) {
            Some(existing) => existing.merge_from(&hist),
            None => {
                self.cohorts.insert(key, hist);
                Ok(())
            }
        }
    }

    pub fn merge_from(&mut self, other: &HistStore) -> Result<()> {
        for (key, hist) in &other.cohorts {
            self.insert(key.clone(), hist.clone())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &CohortKey) -> Option<&LengthHistogram> {
        self.cohorts.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CohortKey, &LengthHistogram)> {
        self.cohorts.iter()
    }

    pub fn len(&self) -> usize {
        self.cohorts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cohorts.is_empty()
    }

    /// Days that have at least one tweet in any cohort.
    pub fn days(&self) -> BTreeSet<NaiveDate> {
        self.cohorts.keys().map(|k| k.day).collect()
    }

    pub fn languages(&self) -> BTreeSet<String> {
        self.cohorts.keys().map(|k| k.lang.clone()).collect()
    }

    /// Merged histogram over matching cohorts. `None` selects everything
    /// along that axis; an empty selection yields an empty histogram.
    pub fn query(
        &self,
        days: Option<(NaiveDate, NaiveDate)>,
        langs: Option<&BTreeSet<String>>,
        devices: Option<&[DeviceClass]>,
    ) -> LengthHistogram {
        let mut out = LengthHistogram::new(self.max_len);
        let range = match days {
            Some((from, to)) if from > to => return out,
            Some((from, to)) => {
                let lo = CohortKey::new(from, "", DeviceClass::Mobile);
                let hi = to.succ_opt().map(|d| CohortKey::new(d, "", DeviceClass::Mobile));
                match hi {
                    Some(hi) => self.cohorts.range(lo..hi),
                    None => self.cohorts.range(lo..),
                }
            }
            None => self.cohorts.range(..),
        };
        for (key, hist) in range {
            if langs.is_some_and(|set| !set.contains(&key.lang)) {
                continue;
            }
            if devices.is_some_and(|set| !set.contains(&key.device)) {
                continue;
            }
            out.merge_from(hist).expect("store histograms share max_len");
        }
        out
    }

    pub fn query_day(
        &self,
        day: NaiveDate,
        langs: Option<&BTreeSet<String>>,
        devices: Option<&[DeviceClass]>,
    ) -> LengthHistogram {
        self.query(Some((day, day)), langs, devices)
    }

    /// Writes the sparse CSV table. Provenance lines are prefixed with `# `.
    /// The file is written to a temporary sibling and renamed into place.
    pub fn write_csv(&self, path: &Path, preamble: &[String]) -> Result<()> {
        let tmp = tmp_path(path);
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let gz = path.extension().is_some_and(|e| e == "gz");
        let written = if gz {
            let mut enc =
                flate2::write::GzEncoder::new(BufWriter::new(file), flate2::Compression::default());
            self.write_to(&mut enc, preamble)
                .and_then(|()| enc.finish()?.flush())
        } else {
            let mut w = BufWriter::new(file);
            self.write_to(&mut w, preamble)
        };
        written.map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, sink: &mut W, preamble: &[String]) -> std::io::Result<()> {
        for line in preamble {
            writeln!(sink, "# {line}")?;
        }
        writeln!(sink, "day,lang,device,length,count")?;
        for (key, hist) in &self.cohorts {
            for (i, &count) in hist.counts().iter().enumerate() {
                if count > 0 {
                    writeln!(
                        sink,
                        "{},{},{},{},{}",
                        key.day,
                        key.lang,
                        key.device.as_str(),
                        i + 1,
                        count
                    )?;
                }
            }
        }
        sink.flush()
    }

    pub fn to_csv_string(&self, preamble: &[String]) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf, preamble)
            .expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads a table written by [`HistStore::write_csv`]. `max_len` grows to
    /// fit the longest row if needed.
    pub fn read_csv(path: &Path, max_len: usize) -> Result<Self> {
        let text = crate::ingest::reader::read_to_string(path)?;
        Self::from_csv_str(&text, max_len)
            .map_err(|e| match e {
                Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
                other => other,
            })
    }

    pub fn from_csv_str(text: &str, max_len: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::parse("histogram store", e))?;
            if row.length == 0 {
                return Err(Error::parse("histogram store", "length 0 row"));
            }
            rows.push(row);
        }
        let max_len = rows.iter().map(|r| r.length).max().unwrap_or(0).max(max_len);
        let mut store = HistStore::new(max_len);
        for row in rows {
            let device: DeviceClass = row.device.parse()?;
            store.add(CohortKey::new(row.day, row.lang, device), row.length, row.count);
        }
        Ok(store)
    }
}

fn tmp_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
