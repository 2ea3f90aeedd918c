use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    /// Two-sided p-value from the t approximation.
    pub p_value: f64,
    pub n: usize,
}

/// 1-based ranks; ties share the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 pairs, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Domain("inputs must be finite".into()));
    }
    Ok(())
}

fn rho_of_ranks(rx: &[f64], ry: &[f64]) -> Result<f64> {
    pearson(rx, ry).ok_or_else(|| Error::Undefined("correlation of a constant input".into()))
}

/// Spearman's rank correlation with a two-sided t-approximation p-value.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<SpearmanResult> {
    check(xs, ys)?;
    let rho = rho_of_ranks(&average_ranks(xs), &average_ranks(ys))?;
    let n = xs.len();
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?;
        2.0 * dist.sf(t.abs())
    };
    Ok(SpearmanResult { rho, p_value, n })
}

/// Exact two-sided permutation p-value: the share of orderings of `ys`
/// whose |rho| reaches the observed one. Limited to `n <= 10`.
pub fn spearman_exact_p(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check(xs, ys)?;
    if xs.len() > 10 {
        return Err(Error::Domain("exact permutation test is limited to n <= 10".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let observed = rho_of_ranks(&rx, &ry)?.abs();
    let mut perm = ry.clone();
    let (mut hits, mut total) = (0u64, 0u64);
    // Heap's algorithm, iterative
    let n = perm.len();
    let mut c = vec![0usize; n];
    let mut visit = |p: &[f64]| {
        total += 1;
        if let Some(r) = pearson(&rx, p) {
            if r.abs() >= observed - 1e-12 {
                hits += 1;
            }
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}
