//! Difference-in-differences on a treated/control × pre/post panel.
//!
//! With two binary factors and their interaction the OLS design is saturated,
//! so the coefficients are exactly the cell-mean contrasts:
//! `alpha = ȳ(c,pre)`, `beta = ȳ(t,pre) − ȳ(c,pre)`,
//! `gamma = ȳ(c,post) − ȳ(c,pre)` and `delta` the difference of differences.
//! The interaction's homoskedastic variance is `s² · Σ 1/n_cell`.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::histstore::HistStore;
use crate::ingest::DeviceClass;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Treated,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub day: NaiveDate,
    pub group: Group,
    pub period: Period,
    /// Log of the day's mean tweet length.
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiDResult {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub delta_se: f64,
    /// Relative effect `e^delta − 1`.
    pub effect: f64,
    /// 95% interval for `delta`.
    pub delta_ci95: (f64, f64),
    /// 95% interval for the relative effect.
    pub ci95: (f64, f64),
    pub n: usize,
}

fn cell_index(group: Group, period: Period) -> usize {
    match (group, period) {
        (Group::Control, Period::Pre) => 0,
        (Group::Control, Period::Post) => 1,
        (Group::Treated, Period::Pre) => 2,
        (Group::Treated, Period::Post) => 3,
    }
}

/// Order-independent sum: values are sorted before accumulation.
fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

pub fn did_estimate(panel: &[PanelRow]) -> Result<DiDResult> {
    let mut cells: [Vec<f64>; 4] = Default::default();
    for row in panel {
        if !row.y.is_finite() {
            return Err(Error::Design(format!("non-finite outcome on {}", row.day)));
        }
        cells[cell_index(row.group, row.period)].push(row.y);
    }
    let names = ["control/pre", "control/post", "treated/pre", "treated/post"];
    for (cell, name) in cells.iter().zip(names) {
        if cell.is_empty() {
            return Err(Error::Design(format!("cell {name} is empty")));
        }
    }
    let means: Vec<f64> = cells
        .iter_mut()
        .map(|c| {
            let n = c.len() as f64;
            stable_sum(c) / n
        })
        .collect();
    let alpha = means[0];
    let gamma = means[1] - means[0];
    let beta = means[2] - means[0];
    let delta = (means[3] - means[2]) - (means[1] - means[0]);

    let n = panel.len();
    let mut squared: Vec<f64> = cells
        .iter()
        .zip(&means)
        .flat_map(|(cell, m)| cell.iter().map(move |y| (y - m) * (y - m)))
        .collect();
    let ssr = stable_sum(&mut squared);
    let inv_counts: f64 = cells.iter().map(|c| 1.0 / c.len() as f64).sum();
    let (delta_se, crit) = if n > 4 {
        let df = (n - 4) as f64;
        let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Design(e.to_string()))?;
        ((ssr / df * inv_counts).sqrt(), t.inverse_cdf(0.975))
    } else {
        (f64::NAN, f64::NAN)
    };
    let delta_ci95 = (delta - crit * delta_se, delta + crit * delta_se);
    Ok(DiDResult {
        alpha,
        beta,
        gamma,
        delta,
        delta_se,
        effect: delta.exp_m1(),
        delta_ci95,
        ci95: (delta_ci95.0.exp_m1(), delta_ci95.1.exp_m1()),
        n,
    })
}

/// One row per (day, group) with tweets: `y = ln(mean length)` over the
/// group's languages on that day. Days outside both periods are left out.
pub fn build_did_panel(
    store: &HistStore,
    treated: &BTreeSet<String>,
    control: &BTreeSet<String>,
    pre: (NaiveDate, NaiveDate),
    post: (NaiveDate, NaiveDate),
    devices: &[DeviceClass],
) -> Vec<PanelRow> {
    let mut rows = Vec::new();
    for (period, (from, to)) in [(Period::Pre, pre), (Period::Post, post)] {
        for day in from.iter_days().take_while(|d| *d <= to) {
            for (group, langs) in [(Group::Treated, treated), (Group::Control, control)] {
                let h = store.query_day(day, Some(langs), Some(devices));
                if let Ok(mean) = h.mean_length() {
                    rows.push(PanelRow {
                        day,
                        group,
                        period,
                        y: mean.ln(),
                    });
                }
            }
        }
    }
    rows
}
