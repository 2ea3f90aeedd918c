use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::TweetRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    Mobile,
    Web,
    Excluded,
}

impl DeviceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceClass::Web => "web",
            DeviceClass::Mobile => "mobile",
            DeviceClass::Excluded => "excluded",
        }
    }
}

impl fmt::Display for DeviceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "web" => Ok(DeviceClass::Web),
            "mobile" => Ok(DeviceClass::Mobile),
            "excluded" => Ok(DeviceClass::Excluded),
            other => Err(Error::Config(format!("unknown device class {other:?}"))),
        }
    }
}

/// Why a line did not make it into a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    DeleteEvent,
    Retweet,
    Unparseable,
    MissingFields,
    Source,
    Language,
    Date,
    MalformedRange,
    Empty,
    LengthOverflow,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::DeleteEvent => "delete_event",
            DropReason::Retweet => "retweet",
            DropReason::Unparseable => "unparseable",
            DropReason::MissingFields => "missing_fields",
            DropReason::Source => "source",
            DropReason::Language => "language",
            DropReason::Date => "date",
            DropReason::MalformedRange => "malformed_range",
            DropReason::Empty => "empty",
            DropReason::LengthOverflow => "length_overflow",
        }
    }
}

impl From<super::SkipReason> for DropReason {
    fn from(reason: super::SkipReason) -> Self {
        use super::SkipReason;
        match reason {
            SkipReason::DeleteEvent => DropReason::DeleteEvent,
            SkipReason::Retweet => DropReason::Retweet,
            SkipReason::Unparseable => DropReason::Unparseable,
            SkipReason::MissingFields => DropReason::MissingFields,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOutcome {
    Keep(DeviceClass),
    Drop(DropReason),
}

/// Inclusion rules: which clients, languages and days count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub allowed_sources: BTreeSet<String>,
    /// Languages where the limit was doubled.
    pub treated: BTreeSet<String>,
    /// Languages that kept their effective limit (CJK).
    pub control: BTreeSet<String>,
    pub date_range: (NaiveDate, NaiveDate),
    /// Where whitelisted "Mobile Web" clients land.
    #[serde(default = "default_mobile_web")]
    pub mobile_web_as: DeviceClass,
}

fn default_mobile_web() -> DeviceClass {
    DeviceClass::Web
}

const DEFAULT_SOURCES: &[&str] = &[
    "Twitter Web Client",
    "Twitter Web App",
    "Mobile Web",
    "Mobile Web (M2)",
    "Mobile Web (M5)",
    "Twitter for iPhone",
    "Twitter for Android",
    "Twitter for iPad",
    "Twitter for Windows Phone",
    "Twitter Lite",
    "Twitter for Android Lite",
];

const DEFAULT_TREATED: &[&str] = &[
    "ar", "ca", "de", "el", "en", "es", "fa", "fr", "hi", "in", "it", "nl", "pl", "pt", "ru",
    "sv", "th", "tl", "tr", "ur",
];

const DEFAULT_CONTROL: &[&str] = &["ja", "ko", "zh"];

const MOBILE_MARKERS: &[&str] = &["iPhone", "Android", "iPad", "Windows Phone", "Lite"];

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            allowed_sources: DEFAULT_SOURCES.iter().map(|s| s.to_string()).collect(),
            treated: DEFAULT_TREATED.iter().map(|s| s.to_string()).collect(),
            control: DEFAULT_CONTROL.iter().map(|s| s.to_string()).collect(),
            date_range: (
                NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date"),
                NaiveDate::from_ymd_opt(2019, 10, 31).expect("valid date"),
            ),
            mobile_web_as: DeviceClass::Web,
        }
    }
}

impl FilterConfig {
    pub fn languages(&self) -> impl Iterator<Item = &String> {
        self.treated.iter().chain(self.control.iter())
    }

    pub fn has_language(&self, lang: &str) -> bool {
        self.treated.contains(lang) || self.control.contains(lang)
    }

    pub fn validate(&self) -> Result<()> {
        if self.allowed_sources.is_empty() {
            return Err(Error::Config("allowed_sources is empty".into()));
        }
        if self.treated.is_empty() && self.control.is_empty() {
            return Err(Error::Config("no languages configured".into()));
        }
        if let Some(both) = self.treated.intersection(&self.control).next() {
            return Err(Error::Config(format!("{both:?} is both treated and control")));
        }
        if self.date_range.0 > self.date_range.1 {
            return Err(Error::Config("date_range is inverted".into()));
        }
        if self.mobile_web_as == DeviceClass::Excluded {
            return Err(Error::Config("mobile_web_as must be web or mobile".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: FilterConfig =
            toml::from_str(text).map_err(|e| Error::parse("filter config", e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("filter config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn classify_device(&self, source_label: &str) -> DeviceClass {
        if !self.allowed_sources.contains(source_label) {
            return DeviceClass::Excluded;
        }
        if source_label.contains("Web") {
            if source_label.contains("Mobile Web") {
                self.mobile_web_as
            } else {
                DeviceClass::Web
            }
        } else if MOBILE_MARKERS.iter().any(|m| source_label.contains(m)) {
            DeviceClass::Mobile
        } else {
            DeviceClass::Excluded
        }
    }
}

/// Classifies a client label under the default whitelist.
pub fn classify_device(source_label: &str) -> DeviceClass {
    thread_local! {
        static DEFAULT: FilterConfig = FilterConfig::default();
    }
    DEFAULT.with(|cfg| cfg.classify_device(source_label))
}

pub fn filter_record(record: &TweetRecord, cfg: &FilterConfig) -> FilterOutcome {
    if record.is_delete_event {
        return FilterOutcome::Drop(DropReason::DeleteEvent);
    }
    if record.is_retweet {
        return FilterOutcome::Drop(DropReason::Retweet);
    }
    let device = cfg.classify_device(&record.source_label);
    if device == DeviceClass::Excluded {
        return FilterOutcome::Drop(DropReason::Source);
    }
    if !cfg.has_language(&record.lang) {
        return FilterOutcome::Drop(DropReason::Language);
    }
    let day = record.day();
    if day < cfg.date_range.0 || day > cfg.date_range.1 {
        return FilterOutcome::Drop(DropReason::Date);
    }
    FilterOutcome::Keep(device)
}
