//! Log-normal length model with cramming and run-over.
//!
//! The body of the length density is fitted by least squares with a free
//! amplitude, leaving out the tail at and beyond the cramming threshold (the
//! rightmost local minimum of the smoothed density below the limit).
//! Cramming is the clipped excess of the empirical density over the fitted
//! curve on `[threshold, limit]`; run-over at `c` is the fitted distribution's
//! tail mass beyond `c`.

use serde::{Deserialize, Serialize};

use crate::histstore::LengthHistogram;
use crate::normal;
use crate::{Error, Result};

pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;
pub const DEFAULT_FIT_LOWER_BOUND: usize = 5;
const MIN_SUPPORT: usize = 10;
const MAX_ITERATIONS: usize = 500;
const STEP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mu: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub threshold: usize,
    /// Lengths `[lo, hi)` that entered the fit.
    pub fit_range: (usize, usize),
    pub sse: f64,
    pub limit: usize,
    pub iterations: usize,
}

impl FitResult {
    /// Fitted curve `A·f(l; μ, σ)` at length `l`.
    pub fn curve(&self, length: f64) -> f64 {
        self.amplitude * normal::lognormal_pdf(length, self.mu, self.sigma)
    }

    pub fn runover(&self, c: f64) -> f64 {
        runover(self, c)
    }
}

/// Cramming at the enforced limit plus the fit it was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CramEstimate {
    pub cramming: f64,
    pub fit: FitResult,
}

impl CramEstimate {
    pub fn runover_at(&self, c: f64) -> f64 {
        runover(&self.fit, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub smoothing_window: usize,
    pub fit_lower_bound: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            fit_lower_bound: DEFAULT_FIT_LOWER_BOUND,
        }
    }
}

/// Centered moving average; windows are truncated at both ends.
pub fn smooth(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Domain(format!("smoothing window must be odd, got {window}")));
    }
    if window == 1 {
        return Ok(values.to_vec());
    }
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}

/// Smoothed normalized density indexed by length (element 0 stays 0).
pub fn smooth_density(h: &LengthHistogram, window: usize) -> Result<Vec<f64>> {
    let density = h.density()?;
    let mut out = vec![0.0];
    out.extend(smooth(&density[1..], window)?);
    Ok(out)
}

/// Largest `i` in `[limit/2, limit-1]` with `d[i] < d[i-1]` and
/// `d[i] <= d[i+1]`; `floor(0.9·limit)` when there is none.
///
/// `density` is indexed by length and must cover `0..=limit`.
pub fn find_cramming_threshold(density: &[f64], limit: usize) -> Result<usize> {
    if limit < 10 {
        return Err(Error::LimitTooSmall(limit));
    }
    if density.len() <= limit {
        return Err(Error::Dimension {
            left: density.len().saturating_sub(1),
            right: limit,
        });
    }
    let found = (limit / 2..limit)
        .rev()
        .find(|&i| density[i] < density[i - 1] && density[i] <= density[i + 1]);
    Ok(found.unwrap_or(limit * 9 / 10))
}

struct Sample {
    length: f64,
    log_length: f64,
    value: f64,
}

#[derive(Clone, Copy)]
struct Params {
    mu: f64,
    sigma: f64,
    amplitude: f64,
}

fn sse(samples: &[Sample], p: Params) -> f64 {
    samples
        .iter()
        .map(|s| {
            let r = s.value - p.amplitude * normal::lognormal_pdf(s.length, p.mu, p.sigma);
            r * r
        })
        .sum()
}

/// Least-squares fit of `A·f(l; μ, σ)` to `density[l]` for `l` in
/// `[fit_range.0, fit_range.1)`. `fit_range.1` is recorded as the threshold.
///
/// Levenberg–Marquardt with an analytic Jacobian, started from the median and
/// spread of log lengths over the fit range and `A = 1`.
pub fn fit_lognormal(density: &[f64], fit_range: (usize, usize), limit: usize) -> Result<FitResult> {
    let (lo, hi) = fit_range;
    let lo = lo.max(1);
    if hi > density.len() || lo >= hi {
        return Err(Error::Fit(format!(
            "fit range [{lo}, {hi}) is empty or outside the density (len {})",
            density.len()
        )));
    }
    if hi > limit {
        return Err(Error::Fit(format!("threshold {hi} exceeds the limit {limit}")));
    }
    let samples: Vec<Sample> = (lo..hi)
        .map(|l| Sample {
            length: l as f64,
            log_length: (l as f64).ln(),
            value: density[l],
        })
        .collect();
    if samples.iter().any(|s| !s.value.is_finite() || s.value < 0.0) {
        return Err(Error::Fit("density must be finite and non-negative".into()));
    }
    let support = samples.iter().filter(|s| s.value > 0.0).count();
    if support < MIN_SUPPORT {
        return Err(Error::Fit(format!(
            "need at least {MIN_SUPPORT} lengths with positive density in [{lo}, {hi}), found {support}"
        )));
    }

    let mass: f64 = samples.iter().map(|s| s.value).sum();
    let mean_log = samples.iter().map(|s| s.value * s.log_length).sum::<f64>() / mass;
    let var_log = samples
        .iter()
        .map(|s| s.value * (s.log_length - mean_log).powi(2))
        .sum::<f64>()
        / mass;
    if var_log <= 0.0 {
        return Err(Error::Fit("log lengths have zero variance".into()));
    }
    let mut cumulative = 0.0;
    let median = samples
        .iter()
        .find(|s| {
            cumulative += s.value;
            cumulative >= 0.5 * mass
        })
        .map(|s| s.length)
        .unwrap_or(samples[samples.len() / 2].length);

    let mut params = Params {
        mu: median.ln(),
        sigma: var_log.sqrt(),
        amplitude: 1.0,
    };
    let mut current = sse(&samples, params);
    let mut lambda = 1e-3;
    let result = |p: Params, sse: f64, iterations: usize| FitResult {
        mu: p.mu,
        sigma: p.sigma,
        amplitude: p.amplitude,
        threshold: hi,
        fit_range: (lo, hi),
        sse,
        limit,
        iterations,
    };

    for iteration in 1..=MAX_ITERATIONS {
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for s in &samples {
            let f = normal::lognormal_pdf(s.length, params.mu, params.sigma);
            let z = (s.log_length - params.mu) / params.sigma;
            let model = params.amplitude * f;
            let grad = [
                model * z / params.sigma,
                model * (z * z - 1.0) / params.sigma,
                f,
            ];
            let r = s.value - model;
            for i in 0..3 {
                jtr[i] += grad[i] * r;
                for j in 0..3 {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }

        loop {
            let mut damped = jtj;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(f64::MIN_POSITIVE);
            }
            let step = solve3(damped, jtr);
            let candidate = step.map(|d| Params {
                mu: params.mu + d[0],
                sigma: params.sigma + d[1],
                amplitude: params.amplitude + d[2],
            });
            if let (Some(d), Some(cand)) = (step, candidate) {
                if cand.sigma > 0.0 {
                    let next = sse(&samples, cand);
                    if next <= current {
                        let small = [
                            (d[0], params.mu),
                            (d[1], params.sigma),
                            (d[2], params.amplitude),
                        ]
                        .iter()
                        .all(|&(delta, value)| delta.abs() <= STEP_TOLERANCE * value.abs().max(1e-12));
                        params = cand;
                        current = next;
                        lambda = (lambda / 10.0).max(1e-12);
                        if small {
                            return Ok(result(params, current, iteration));
                        }
                        break;
                    }
                }
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No damped step lowers the objective: we are at a local
                // optimum to working precision.
                return Ok(result(params, current, iteration));
            }
        }
    }
    Err(Error::FitNotConverged {
        iterations: MAX_ITERATIONS,
        best: Box::new(result(params, current, MAX_ITERATIONS)),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Σ over `[threshold, limit]` of `max(0, density[l] − A·f(l))`.
pub fn cramming_size(h: &LengthHistogram, fit: &FitResult) -> Result<f64> {
    let density = h.density()?;
    Ok(cramming_from_density(&density, fit))
}

pub fn cramming_from_density(density: &[f64], fit: &FitResult) -> f64 {
    (fit.threshold..=fit.limit)
        .map(|l| {
            let empirical = density.get(l).copied().unwrap_or(0.0);
            (empirical - fit.curve(l as f64)).max(0.0)
        })
        .sum()
}

/// Tail mass of the normalized fitted log-normal beyond `c`.
pub fn runover(fit: &FitResult, c: f64) -> f64 {
    normal::lognormal_sf(c, fit.mu, fit.sigma)
}

/// The limit `c*` whose run-over equals `target`.
pub fn solve_limit(fit: &FitResult, target: f64) -> Result<f64> {
    solve_limit_params(fit.mu, fit.sigma, target)
}

pub fn solve_limit_params(mu: f64, sigma: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target run-over must lie in (0, 1), got {target}")));
    }
    Ok((mu + sigma * normal::quantile(1.0 - target)).exp())
}

/// Threshold detection, fit and cramming for one histogram at `limit`.
pub fn estimate(h: &LengthHistogram, limit: usize, options: &ModelOptions) -> Result<CramEstimate> {
    if h.max_len() < limit {
        return Err(Error::Dimension {
            left: h.max_len(),
            right: limit,
        });
    }
    let density = h.density()?;
    let smoothed = smooth_density(h, options.smoothing_window)?;
    let threshold = find_cramming_threshold(&smoothed, limit)?;
    let fit = fit_lognormal(&density, (options.fit_lower_bound, threshold), limit)?;
    Ok(CramEstimate {
        cramming: cramming_from_density(&density, &fit),
        fit,
    })
}
