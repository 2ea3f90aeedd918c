//! Thread-length estimation from `i/k` pagination markers.
//!
//! Under a uniform sampling rate `epsilon`, a thread of length `k` leaves
//! `epsilon·k` sampled tweets in expectation, so `m_k = n_k / (epsilon·k)`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MAX_THREAD: u32 = 50;

fn pagination_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"(?:^|[^\p{Alphabetic}\p{Nd}/.,])(\d{1,4})\s*/\s*(\d{1,4})\s*$")
            .expect("valid pattern")
    })
}

/// Trailing `i/k` marker with `1 <= i <= k <= max_k`.
pub fn detect_pagination(text: &str, max_k: u32) -> Option<(u32, u32)> {
    let caps = pagination_pattern().captures(text)?;
    let i: u32 = caps[1].parse().ok()?;
    let k: u32 = caps[2].parse().ok()?;
    (1 <= i && i <= k && k <= max_k).then_some((i, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadEstimate {
    pub epsilon: f64,
    /// Observed tweets per thread length (unpaginated tweets under k = 1).
    pub n: BTreeMap<u32, u64>,
    /// Estimated number of threads per length.
    pub m: BTreeMap<u32, f64>,
    /// `m` normalized to sum to 1.
    pub distribution: BTreeMap<u32, f64>,
}

/// Applies `m_k = n_k / (epsilon · k)` to paginated counts, folding
/// `unpaginated` tweets into `k = 1`.
pub fn estimate_threads(
    paginated: &BTreeMap<u32, u64>,
    unpaginated: u64,
    epsilon: f64,
) -> Result<ThreadEstimate> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("sampling rate must lie in (0, 1], got {epsilon}")));
    }
    let mut n = paginated.clone();
    if let Some(k) = n.keys().find(|&&k| k == 0) {
        return Err(Error::Domain(format!("thread length {k} is invalid")));
    }
    if unpaginated > 0 || !n.is_empty() {
        *n.entry(1).or_default() += unpaginated;
    }
    let m: BTreeMap<u32, f64> = n
        .iter()
        .map(|(&k, &count)| (k, count as f64 / (epsilon * k as f64)))
        .collect();
    let total: f64 = m.values().sum();
    let distribution = m
        .iter()
        .map(|(&k, &v)| (k, if total > 0.0 { v / total } else { 0.0 }))
        .collect();
    Ok(ThreadEstimate {
        epsilon,
        n,
        m,
        distribution,
    })
}

/// Accumulates pagination counts over a stream of texts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadCounter {
    pub paginated: BTreeMap<u32, u64>,
    pub unpaginated: u64,
    pub max_k: u32,
}

impl ThreadCounter {
    pub fn new(max_k: u32) -> Self {
        ThreadCounter {
            max_k,
            ..ThreadCounter::default()
        }
    }

    pub fn observe(&mut self, text: &str) {
        match detect_pagination(text, self.max_k) {
            Some((_, k)) => *self.paginated.entry(k).or_default() += 1,
            None => self.unpaginated += 1,
        }
    }

    pub fn merge_from(&mut self, other: &ThreadCounter) {
        for (k, v) in &other.paginated {
            *self.paginated.entry(*k).or_default() += v;
        }
        self.unpaginated += other.unpaginated;
    }

    pub fn estimate(&self, epsilon: f64) -> Result<ThreadEstimate> {
        estimate_threads(&self.paginated, self.unpaginated, epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pagination_markers() {
        let k = DEFAULT_MAX_THREAD;
        assert_eq!(detect_pagination("final thoughts 3/7", k), Some((3, 7)));
        assert_eq!(detect_pagination("final thoughts 3 / 7  ", k), Some((3, 7)));
        assert_eq!(detect_pagination("(2/2)", k), None);
        assert_eq!(detect_pagination("1/1", k), Some((1, 1)));
        assert_eq!(detect_pagination("im 1/2 way done with this", k), None);
        assert_eq!(detect_pagination("update 7/3", k), None);
        assert_eq!(detect_pagination("part 0/3", k), None);
        assert_eq!(detect_pagination("thread 2/51", k), None);
        assert_eq!(detect_pagination("see 10/31/2019", k), None);
        assert_eq!(detect_pagination("v1.2/3", k), None);
        assert_eq!(detect_pagination("abc2/3", k), None);
    }

    #[test]
    fn estimator_cases() {
        let n = BTreeMap::from([(2, 40), (3, 0)]);
        let est = estimate_threads(&n, 0, 0.01).unwrap();
        assert_eq!(est.m[&2], 2000.0);
        assert_eq!(est.m[&3], 0.0);
        assert!(estimate_threads(&n, 0, 0.0).is_err());
        assert!(estimate_threads(&n, 0, -0.5).is_err());
        assert!(estimate_threads(&BTreeMap::from([(0, 1)]), 0, 0.01).is_err());
    }

    #[test]
    fn unpaginated_count_as_single_threads() {
        let est = estimate_threads(&BTreeMap::from([(1, 5), (4, 8)]), 95, 0.01).unwrap();
        assert_eq!(est.n[&1], 100);
        assert_eq!(est.m[&1], 10_000.0);
        assert_eq!(est.m[&4], 200.0);
        let sum: f64 = est.distribution.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counter_merges() {
        let mut a = ThreadCounter::new(DEFAULT_MAX_THREAD);
        a.observe("hello 1/3");
        a.observe("plain");
        let mut b = ThreadCounter::new(DEFAULT_MAX_THREAD);
        b.observe("world 2/3");
        a.merge_from(&b);
        assert_eq!(a.paginated[&3], 2);
        assert_eq!(a.unpaginated, 1);
    }

    #[test]
    fn unbiased_over_replicates() {
        // 10^4 threads of length 3 sampled at 1%, averaged over 200 runs:
        // the mean estimate must sit within 3 standard errors of the truth.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (threads, k, eps) = (10_000u64, 3u32, 0.01);
        let runs = 200;
        let estimates: Vec<f64> = (0..runs)
            .map(|_| {
                let sampled = (0..threads * k as u64).filter(|_| rng.random::<f64>() < eps).count() as u64;
                estimate_threads(&BTreeMap::from([(k, sampled)]), 0, eps).unwrap().m[&k]
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / runs as f64;
        let sd_single = ((threads * k as u64) as f64 * eps * (1.0 - eps)).sqrt() / (eps * k as f64);
        let se = sd_single / (runs as f64).sqrt();
        assert!((mean - threads as f64).abs() < 3.0 * se, "{mean} vs {threads} (se {se})");
    }
}
