use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
    pub seed: u64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap of the mean. Each resample draws whole days with
/// replacement; `lo`/`hi` are the `(1 ± level)/2` percentiles of the
/// resample means.
pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<BootstrapCi> {
    if values.is_empty() {
        return Err(Error::Domain("bootstrap of an empty sample".into()));
    }
    if resamples == 0 {
        return Err(Error::Domain("bootstrap needs at least one resample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        mean,
        lo: percentile(&means, tail),
        hi: percentile(&means, 1.0 - tail),
        level,
        resamples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_input() {
        let ci = bootstrap_ci(&[0.25; 40], 1000, 0.95, 1).unwrap();
        assert_eq!((ci.mean, ci.lo, ci.hi), (0.25, 0.25, 0.25));
    }

    #[test]
    fn reproducible() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        assert_eq!(
            bootstrap_ci(&values, 1000, 0.95, 9).unwrap(),
            bootstrap_ci(&values, 1000, 0.95, 9).unwrap()
        );
        assert_ne!(
            bootstrap_ci(&values, 1000, 0.95, 9).unwrap(),
            bootstrap_ci(&values, 1000, 0.95, 10).unwrap()
        );
    }

    #[test]
    fn clt_half_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(2017);
        let values: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let ci = bootstrap_ci(&values, 1000, 0.95, 5).unwrap();
        let half = (ci.hi - ci.lo) / 2.0;
        let expected = 1.96 / (1000f64).sqrt();
        assert!((half - expected).abs() < 0.2 * expected, "{half} vs {expected}");
        assert!(ci.lo < ci.mean && ci.mean < ci.hi);
    }

    #[test]
    fn symmetric_input_contains_mean() {
        let values: Vec<f64> = (-20..=20).map(|i| i as f64).collect();
        let ci = bootstrap_ci(&values, 500, 0.95, 3).unwrap();
        assert!(ci.lo <= ci.mean && ci.mean <= ci.hi);
    }

    #[test]
    fn errors() {
        assert!(bootstrap_ci(&[], 1000, 0.95, 0).is_err());
        assert!(bootstrap_ci(&[1.0], 0, 0.95, 0).is_err());
        assert!(bootstrap_ci(&[1.0], 10, 1.0, 0).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert_eq!(percentile(&s, 1.0), 4.0);
        assert_eq!(percentile(&s, 0.5), 2.5);
    }
}
