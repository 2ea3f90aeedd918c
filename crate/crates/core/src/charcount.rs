//! Weighted tweet-length counting.
//!
//! Text is normalized, then every code point contributes its weight: 1 when it
//! falls inside one of the configured light ranges, otherwise the default
//! weight. The classic rules count everything as 1 against a 140 limit; the
//! weighted rules count CJK and most non-Latin scripts as 2 against 280.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::ingest::TweetRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationForm {
    Nfc,
    Nfd,
    Nfkc,
    Nfkd,
}

impl NormalizationForm {
    pub fn apply(self, text: &str) -> String {
        match self {
            NormalizationForm::Nfc => text.nfc().collect(),
            NormalizationForm::Nfd => text.nfd().collect(),
            NormalizationForm::Nfkc => text.nfkc().collect(),
            NormalizationForm::Nfkd => text.nfkd().collect(),
        }
    }
}

impl fmt::Display for NormalizationForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationForm::Nfc => "NFC",
            NormalizationForm::Nfd => "NFD",
            NormalizationForm::Nfkc => "NFKC",
            NormalizationForm::Nfkd => "NFKD",
        })
    }
}

impl FromStr for NormalizationForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NFC" => Ok(NormalizationForm::Nfc),
            "NFD" => Ok(NormalizationForm::Nfd),
            "NFKC" => Ok(NormalizationForm::Nfkc),
            "NFKD" => Ok(NormalizationForm::Nfkd),
            other => Err(Error::Config(format!("unknown normalization form {other:?}"))),
        }
    }
}

/// Length of a text in weighted units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct WeightedLength(pub usize);

impl WeightedLength {
    pub fn value(self) -> usize {
        self.0
    }
}

impl fmt::Display for WeightedLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingConfig {
    pub normalization_form: NormalizationForm,
    pub default_weight: usize,
    /// Sorted, non-overlapping inclusive code-point ranges that weigh 1.
    pub light_ranges: Vec<(u32, u32)>,
    pub max_weighted_length: usize,
}

impl CountingConfig {
    pub fn new(
        normalization_form: NormalizationForm,
        default_weight: usize,
        light_ranges: Vec<(u32, u32)>,
        max_weighted_length: usize,
    ) -> Result<Self> {
        let config = CountingConfig {
            normalization_form,
            default_weight,
            light_ranges,
            max_weighted_length,
        };
        config.validate()?;
        Ok(config)
    }

    /// Every code point weighs 1; limit 140.
    pub fn pre2017() -> Self {
        CountingConfig {
            normalization_form: NormalizationForm::Nfc,
            default_weight: 1,
            light_ranges: Vec::new(),
            max_weighted_length: 140,
        }
    }

    /// Default weight 2 with the Latin/punctuation ranges at weight 1; limit 280.
    pub fn post2017() -> Self {
        CountingConfig {
            normalization_form: NormalizationForm::Nfc,
            default_weight: 2,
            light_ranges: vec![
                (0x0000, 0x10FF),
                (0x2000, 0x200D),
                (0x2010, 0x201F),
                (0x2032, 0x2037),
            ],
            max_weighted_length: 280,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "pre2017" => Some(Self::pre2017()),
            "post2017" => Some(Self::post2017()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.default_weight) {
            return Err(Error::Config(format!(
                "default_weight must be 1 or 2, got {}",
                self.default_weight
            )));
        }
        if self.max_weighted_length == 0 {
            return Err(Error::Config("max_weighted_length must be positive".into()));
        }
        for &(lo, hi) in &self.light_ranges {
            if lo > hi || hi > 0x10FFFF {
                return Err(Error::Config(format!("invalid range {lo:04X}-{hi:04X}")));
            }
        }
        for pair in self.light_ranges.windows(2) {
            if pair[0].1 >= pair[1].0 {
                return Err(Error::Config(format!(
                    "ranges {:04X}-{:04X} and {:04X}-{:04X} are unsorted or overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(())
    }

    pub fn weight(&self, c: char) -> usize {
        let cp = c as u32;
        let light = self
            .light_ranges
            .binary_search_by(|&(lo, hi)| {
                if hi < cp {
                    std::cmp::Ordering::Less
                } else if lo > cp {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok();
        if light {
            1
        } else {
            self.default_weight
        }
    }

    pub fn light_ranges(&self) -> impl Iterator<Item = RangeInclusive<u32>> + '_ {
        self.light_ranges.iter().map(|&(lo, hi)| lo..=hi)
    }

    /// Rows longer than the limit plus 10% point at a counting problem
    /// rather than real text.
    pub fn is_anomalous(&self, length: WeightedLength) -> bool {
        length.0 * 10 > self.max_weighted_length * 11
    }

    /// Parses the plain key/value format:
    ///
    /// ```text
    /// # comment
    /// normalization = NFC
    /// default_weight = 2
    /// light_ranges = 0000-10FF, 2000-200D
    /// max_weighted_length = 280
    /// ```
    pub fn parse(input: &str) -> Result<Self> {
        let mut form = NormalizationForm::Nfc;
        let mut default_weight = None;
        let mut ranges = Vec::new();
        let mut limit = None;
        for (lineno, raw) in input.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ctx = || format!("counting config line {}", lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(ctx(), "expected key = value"))?;
            let value = value.trim();
            match key.trim() {
                "normalization" | "normalization_form" => form = value.parse()?,
                "default_weight" => {
                    default_weight = Some(value.parse().map_err(|e| Error::parse(ctx(), e))?)
                }
                "light_ranges" | "ranges" => {
                    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        ranges.push(parse_range(item).map_err(|e| Error::parse(ctx(), e))?);
                    }
                }
                "max_weighted_length" | "limit" => {
                    limit = Some(value.parse().map_err(|e| Error::parse(ctx(), e))?)
                }
                other => return Err(Error::parse(ctx(), format!("unknown key {other:?}"))),
            }
        }
        CountingConfig::new(
            form,
            default_weight.ok_or_else(|| Error::Config("missing default_weight".into()))?,
            ranges,
            limit.ok_or_else(|| Error::Config("missing max_weighted_length".into()))?,
        )
    }

    pub fn to_config_string(&self) -> String {
        let ranges: Vec<String> = self
            .light_ranges
            .iter()
            .map(|(lo, hi)| format!("{lo:04X}-{hi:04X}"))
            .collect();
        format!(
            "normalization = {}\ndefault_weight = {}\nlight_ranges = {}\nmax_weighted_length = {}\n",
            self.normalization_form,
            self.default_weight,
            ranges.join(", "),
            self.max_weighted_length
        )
    }

    /// Loads a built-in config by name, or a config file from disk.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(config) = Self::builtin(name_or_path) {
            return Ok(config);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn parse_range(item: &str) -> std::result::Result<(u32, u32), String> {
    let hex = |s: &str| {
        let s = s.trim();
        let s = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("U+"))
            .unwrap_or(s);
        u32::from_str_radix(s, 16).map_err(|e| format!("bad hex {s:?}: {e}"))
    };
    match item.split_once('-') {
        Some((lo, hi)) => Ok((hex(lo)?, hex(hi)?)),
        None => {
            let cp = hex(item)?;
            Ok((cp, cp))
        }
    }
}

/// Which counting rules applied to a tweet, possibly depending on its day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountingSchedule {
    Fixed(CountingConfig),
    Dated {
        switch_day: NaiveDate,
        before: CountingConfig,
        after: CountingConfig,
    },
}

impl CountingSchedule {
    /// Classic rules before the switch, weighted rules from the switch day on.
    pub fn historical() -> Self {
        CountingSchedule::Dated {
            switch_day: crate::switch_day(),
            before: CountingConfig::pre2017(),
            after: CountingConfig::post2017(),
        }
    }

    /// `auto` selects the historical schedule; anything else is a fixed config.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if name_or_path == "auto" {
            Ok(Self::historical())
        } else {
            Ok(CountingSchedule::Fixed(CountingConfig::load(name_or_path)?))
        }
    }

    pub fn for_day(&self, day: NaiveDate) -> &CountingConfig {
        match self {
            CountingSchedule::Fixed(config) => config,
            CountingSchedule::Dated {
                switch_day,
                before,
                after,
            } => {
                if day < *switch_day {
                    before
                } else {
                    after
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CountingSchedule::Fixed(config) => config.to_config_string(),
            CountingSchedule::Dated {
                switch_day,
                before,
                after,
            } => format!(
                "switch_day = {switch_day}\n[before]\n{}[after]\n{}",
                before.to_config_string(),
                after.to_config_string()
            ),
        }
    }
}

/// Decodes and normalizes raw bytes.
pub fn normalize_text(raw: &[u8], form: NormalizationForm) -> Result<String> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(form.apply(text))
}

pub fn weighted_length(text: &str, config: &CountingConfig) -> WeightedLength {
    WeightedLength(text.chars().map(|c| config.weight(c)).sum())
}

/// The code-point slice of the record's text covered by its display range,
/// or the whole text when the record has no range.
pub fn extract_display_text(record: &TweetRecord) -> Result<String> {
    let Some((start, end)) = record.display_range else {
        return Ok(record.text.clone());
    };
    if start > end {
        return Err(Error::MalformedRecord(format!(
            "display range [{start}, {end}) is inverted"
        )));
    }
    let len = record.text.chars().count();
    if end > len {
        return Err(Error::MalformedRecord(format!(
            "display range [{start}, {end}) exceeds text of {len} code points"
        )));
    }
    Ok(record.text.chars().skip(start).take(end - start).collect())
}

/// Display slice, normalization and weighting in one step.
pub fn tweet_length(record: &TweetRecord, config: &CountingConfig) -> Result<WeightedLength> {
    let display = extract_display_text(record)?;
    let normalized = config.normalization_form.apply(&display);
    Ok(weighted_length(&normalized, config))
}
