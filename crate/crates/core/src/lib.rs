//! Core algorithms for measuring how a hard text-length limit shapes what
//! people write.
//!
//! The pipeline runs in stages:
//!
//! * [`charcount`] turns raw text into weighted lengths under a counting
//!   configuration (the classic 140-unit rules or the weighted 280-unit rules).
//! * [`ingest`] streams archive shards, filters tweets and aggregates them into
//!   per-cohort length histograms.
//! * [`histstore`] persists those histograms as a sparse CSV table.
//! * [`lengthmodel`] fits a log-normal body to a length density, locates the
//!   cramming threshold and measures cramming and run-over.
//! * [`cramsim`] simulates the draft/edit/abandon process forward and serves as
//!   ground truth for the estimators.
//! * [`analytics`] builds daily series, bootstrap intervals, the
//!   difference-in-differences estimate, thread counts, rank correlations and
//!   lexicon curves on top of the above.

pub mod analytics;
pub mod charcount;
pub mod cramsim;
mod error;
pub mod histstore;
pub mod ingest;
pub mod lengthmodel;
pub mod normal;
pub mod report;

pub use charcount::{CountingConfig, CountingSchedule, WeightedLength};
pub use cramsim::{SimConfig, SimResult};
pub use error::{Error, Result};
pub use histstore::{CohortKey, HistStore, LengthHistogram};
pub use ingest::{DeviceClass, FilterConfig, TweetRecord};
pub use lengthmodel::{CramEstimate, FitResult};

/// Day on which the 280-unit limit replaced the 140-unit limit.
pub fn switch_day() -> chrono::NaiveDate {
    chrono::NaiveDate::from_ymd_opt(2017, 11, 7).expect("valid date")
}
