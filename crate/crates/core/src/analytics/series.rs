use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::histstore::HistStore;
use crate::ingest::DeviceClass;
use crate::lengthmodel::{self, ModelOptions};
use crate::{Error, Result};

/// What a daily series measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Quantity {
    /// Cramming at the given limit, or at the day's enforced limit.
    Cramming(Option<usize>),
    FractionExceeding(usize),
    /// Run-over of the day's fit at a hypothetical limit.
    Runover(f64),
    /// Limit whose run-over equals the target fraction.
    SolvedLimit(f64),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Cramming(None) => write!(f, "cramming"),
            Quantity::Cramming(Some(l)) => write!(f, "cramming@{l}"),
            Quantity::FractionExceeding(c) => write!(f, "fraction_exceeding@{c}"),
            Quantity::Runover(c) => write!(f, "runover@{c}"),
            Quantity::SolvedLimit(r) => write!(f, "solved_limit@{r}"),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    /// Accepts the display form, plus `fraction@c` and `solved@r` shorthands.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |detail: String| Error::parse("quantity", detail);
        let (name, arg) = match s.split_once('@') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let float = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| bad(format!("{name} needs @value")))?;
            a.parse().map_err(|_| bad(format!("bad value {a:?}")))
        };
        let int = |a: Option<&str>| -> Result<usize> {
            let a = a.ok_or_else(|| bad(format!("{name} needs @length")))?;
            a.parse().map_err(|_| bad(format!("bad length {a:?}")))
        };
        match name {
            "cramming" => Ok(Quantity::Cramming(arg.map(|_| int(arg)).transpose()?)),
            "fraction" | "fraction_exceeding" => Ok(Quantity::FractionExceeding(int(arg)?)),
            "runover" => Ok(Quantity::Runover(float(arg)?)),
            "solved" | "solved_limit" => Ok(Quantity::SolvedLimit(float(arg)?)),
            other => Err(bad(format!("unknown quantity {other:?}"))),
        }
    }
}

/// Enforced limit by day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitSchedule {
    pub switch_day: NaiveDate,
    pub before: usize,
    pub after: usize,
}

impl Default for LimitSchedule {
    fn default() -> Self {
        LimitSchedule {
            switch_day: crate::switch_day(),
            before: 140,
            after: 280,
        }
    }
}

impl LimitSchedule {
    pub fn fixed(limit: usize) -> Self {
        LimitSchedule {
            switch_day: NaiveDate::MIN,
            before: limit,
            after: limit,
        }
    }

    pub fn for_day(&self, day: NaiveDate) -> usize {
        if day < self.switch_day {
            self.before
        } else {
            self.after
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyParams {
    pub limits: LimitSchedule,
    pub model: ModelOptions,
    /// Inclusive day span; defaults to the store's first and last day.
    pub days: Option<(NaiveDate, NaiveDate)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub day: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub day: NaiveDate,
    /// `missing` or `fit_error`.
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub quantity: Quantity,
    /// Present days, strictly increasing.
    pub points: Vec<SeriesPoint>,
    pub gaps: Vec<Gap>,
}

impl DailySeries {
    pub fn new(quantity: Quantity) -> Self {
        DailySeries {
            quantity,
            points: Vec::new(),
            gaps: Vec::new(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Points restricted to `[from, to]`.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.day >= from && p.day <= to)
            .map(|p| p.value)
            .collect()
    }

    pub fn value_on(&self, day: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by_key(&day, |p| p.day)
            .ok()
            .map(|i| self.points[i].value)
    }
}

enum DayOutcome {
    Value(f64),
    Gap(Gap),
}

/// Runs the requested estimator on each day's merged histogram. Days without
/// tweets and days whose fit fails become gaps.
pub fn daily_series(
    store: &HistStore,
    quantity: Quantity,
    devices: &[DeviceClass],
    langs: Option<&BTreeSet<String>>,
    params: &DailyParams,
) -> DailySeries {
    let days: Vec<NaiveDate> = match params.days {
        Some((from, to)) => from.iter_days().take_while(|d| *d <= to).collect(),
        None => {
            let present = store.days();
            match (present.first(), present.last()) {
                (Some(&from), Some(&to)) => from.iter_days().take_while(|d| *d <= to).collect(),
                _ => Vec::new(),
            }
        }
    };

    let outcomes: Vec<(NaiveDate, DayOutcome)> = days
        .par_iter()
        .map(|&day| (day, evaluate_day(store, day, quantity, devices, langs, params)))
        .collect();

    let mut series = DailySeries::new(quantity);
    for (day, outcome) in outcomes {
        match outcome {
            DayOutcome::Value(value) => series.points.push(SeriesPoint { day, value }),
            DayOutcome::Gap(gap) => series.gaps.push(gap),
        }
    }
    series
}

fn evaluate_day(
    store: &HistStore,
    day: NaiveDate,
    quantity: Quantity,
    devices: &[DeviceClass],
    langs: Option<&BTreeSet<String>>,
    params: &DailyParams,
) -> DayOutcome {
    let h = store.query_day(day, langs, Some(devices));
    if h.is_empty() {
        return DayOutcome::Gap(Gap {
            day,
            reason: "missing".into(),
            detail: None,
        });
    }
    let enforced = params.limits.for_day(day);
    let value = match quantity {
        Quantity::FractionExceeding(c) => h.fraction_exceeding(c),
        Quantity::Cramming(limit) => {
            lengthmodel::estimate(&h, limit.unwrap_or(enforced), &params.model).map(|e| e.cramming)
        }
        Quantity::Runover(c) => {
            lengthmodel::estimate(&h, enforced, &params.model).map(|e| e.runover_at(c))
        }
        Quantity::SolvedLimit(r) => lengthmodel::estimate(&h, enforced, &params.model)
            .and_then(|e| lengthmodel::solve_limit(&e.fit, r)),
    };
    match value {
        Ok(v) => DayOutcome::Value(v),
        Err(e) => DayOutcome::Gap(Gap {
            day,
            reason: "fit_error".into(),
            detail: Some(e.to_string()),
        }),
    }
}

/// Trailing mean over up to `window` most recent present points.
pub fn rolling_mean(series: &DailySeries, window: usize) -> DailySeries {
    let window = window.max(1);
    let points = series
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let from = (i + 1).saturating_sub(window);
            let slice = &series.points[from..=i];
            SeriesPoint {
                day: p.day,
                value: slice.iter().map(|q| q.value).sum::<f64>() / slice.len() as f64,
            }
        })
        .collect();
    DailySeries {
        quantity: series.quantity,
        points,
        gaps: series.gaps.clone(),
    }
}
