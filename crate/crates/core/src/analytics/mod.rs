//! Series, statistics and corpus-level analyses on top of the length model.

mod bootstrap;
mod did;
mod lexicon;
mod series;
mod spearman;
mod threads;

pub use bootstrap::{bootstrap_ci, percentile, BootstrapCi};
pub use did::{build_did_panel, did_estimate, DiDResult, Group, PanelRow, Period};
pub use lexicon::{category_curves, tokenize, CategoryCurve, CategoryCurves, CurveBuilder, Lexicon, Pattern};
pub use series::{
    daily_series, rolling_mean, DailyParams, DailySeries, Gap, LimitSchedule, Quantity, SeriesPoint,
};
pub use spearman::{average_ranks, spearman, spearman_exact_p, SpearmanResult};
pub use threads::{detect_pagination, estimate_threads, ThreadCounter, ThreadEstimate, DEFAULT_MAX_THREAD};
