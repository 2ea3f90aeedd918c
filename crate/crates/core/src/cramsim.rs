//! Forward simulation of drafting, editing and abandoning tweets.
//!
//! Each draft gets an intended length from a rounded log-normal. Drafts over
//! the limit go through edit rounds: the author abandons with probability
//! `1 − p`, otherwise deletes characters in proportion to the excess; a
//! truncated draft that fits is sent if it reads as a valid sentence
//! (probability `q`), otherwise it goes around again.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::histstore::LengthHistogram;
use crate::normal;
use crate::{Error, Result};

/// Draws per independent random stream.
const STREAM_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mu: f64,
    pub sigma: f64,
    pub limit: usize,
    /// Probability of editing rather than abandoning in a round.
    pub p: f64,
    /// Probability that a truncation that fits is a valid sentence.
    pub q: f64,
    /// Deletion per round is `ceil(alpha · excess)`.
    pub alpha: f64,
    pub max_rounds: usize,
    pub seed: u64,
    /// Multiply `alpha` by a uniform factor in `[0.8, 1.2]` each round.
    #[serde(default)]
    pub jitter: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mu: 3.9,
            sigma: 0.9,
            limit: 140,
            p: 0.7,
            q: 0.5,
            alpha: 1.0,
            max_rounds: 20,
            seed: 0,
            jitter: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.mu.is_finite() {
            return bad(format!("mu must be finite, got {}", self.mu));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.limit == 0 {
            return bad("limit must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p) || !(0.0..=1.0).contains(&self.q) {
            return bad(format!("p and q must lie in [0, 1], got {} and {}", self.p, self.q));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub histogram: LengthHistogram,
    pub n_drawn: u64,
    pub n_emitted: u64,
    pub n_abandoned: u64,
    /// Emitted tweets whose intended length exceeded the limit.
    pub n_edited_emitted: u64,
    /// Analytic tail mass of the intended distribution beyond the limit.
    pub true_runover: f64,
}

impl SimResult {
    /// Share of emitted tweets that had to be edited to fit.
    pub fn edited_fraction(&self) -> f64 {
        self.n_edited_emitted as f64 / self.n_emitted as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOutcome {
    Emitted(usize),
    Abandoned,
    Continue(usize),
}

/// `round(exp(N(mu, sigma²)))`, at least 1.
pub fn draw_intended_length<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> usize {
    let z: f64 = rng.sample(StandardNormal);
    let length = (mu + sigma * z).exp().round();
    // float-to-int casts saturate
    (length as usize).max(1)
}

/// One edit round for a draft of length `x`.
///
/// Deletes `ceil(alpha · (x − L))` characters, and at least one, so a draft
/// that already fits but was rejected as invalid keeps shrinking.
pub fn edit_round<R: Rng + ?Sized>(x: usize, cfg: &SimConfig, rng: &mut R) -> EditOutcome {
    let edit: f64 = rng.random();
    if edit >= cfg.p {
        return EditOutcome::Abandoned;
    }
    let alpha = if cfg.jitter {
        cfg.alpha * rng.random_range(0.8..=1.2)
    } else {
        cfg.alpha
    };
    let excess = x.saturating_sub(cfg.limit) as f64;
    let deletion = ((alpha * excess).ceil() as usize).max(1);
    let shortened = x.saturating_sub(deletion);
    if shortened <= cfg.limit {
        let valid: f64 = rng.random();
        if valid < cfg.q {
            return EditOutcome::Emitted(shortened.max(1));
        }
    }
    EditOutcome::Continue(shortened)
}

#[derive(Default)]
struct Counts {
    drawn: u64,
    emitted: u64,
    abandoned: u64,
    edited_emitted: u64,
}

fn run_stream(cfg: &SimConfig, stream: u64, draws: u64, hist: &mut LengthHistogram) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut counts = Counts::default();
    for _ in 0..draws {
        counts.drawn += 1;
        let intended = draw_intended_length(cfg.mu, cfg.sigma, &mut rng);
        if intended <= cfg.limit {
            hist.add(intended);
            counts.emitted += 1;
            continue;
        }
        let mut x = intended;
        let mut emitted = None;
        for _ in 0..cfg.max_rounds {
            match edit_round(x, cfg, &mut rng) {
                EditOutcome::Emitted(len) => {
                    emitted = Some(len);
                    break;
                }
                EditOutcome::Abandoned => break,
                EditOutcome::Continue(len) => x = len,
            }
        }
        match emitted {
            Some(len) => {
                hist.add(len);
                counts.emitted += 1;
                counts.edited_emitted += 1;
            }
            None => counts.abandoned += 1,
        }
    }
    counts
}

/// Runs `n` independent drafts. Draws are split into fixed-size streams, each
/// seeded from `(seed, stream index)`, so the result is identical for any
/// thread count.
pub fn simulate(cfg: &SimConfig, n: u64) -> Result<SimResult> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Domain("simulate needs n >= 1".into()));
    }
    let streams = n.div_ceil(STREAM_CHUNK);
    let parts: Vec<(LengthHistogram, Counts)> = (0..streams)
        .into_par_iter()
        .map(|stream| {
            let draws = STREAM_CHUNK.min(n - stream * STREAM_CHUNK);
            let mut hist = LengthHistogram::new(cfg.limit);
            let counts = run_stream(cfg, stream, draws, &mut hist);
            (hist, counts)
        })
        .collect();

    let mut histogram = LengthHistogram::new(cfg.limit);
    let mut total = Counts::default();
    for (hist, counts) in parts {
        histogram.merge_from(&hist)?;
        total.drawn += counts.drawn;
        total.emitted += counts.emitted;
        total.abandoned += counts.abandoned;
        total.edited_emitted += counts.edited_emitted;
    }
    Ok(SimResult {
        histogram,
        n_drawn: total.drawn,
        n_emitted: total.emitted,
        n_abandoned: total.abandoned,
        n_edited_emitted: total.edited_emitted,
        true_runover: normal::lognormal_sf(cfg.limit as f64, cfg.mu, cfg.sigma),
    })
}
