//! Length-conditioned category frequencies from a user-supplied lexicon.
//!
//! Lexicon files hold one block per category:
//!
//! ```text
//! # comment
//! [Work]
//! work
//! job*
//! ```
//!
//! Patterns are matched against lowercased tokens (text split on anything
//! that is not alphanumeric); a trailing `*` makes a prefix pattern.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::charcount::{self, CountingConfig};
use crate::ingest::TweetRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    Exact(String),
    Prefix(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim().to_lowercase();
        let pattern = match raw.strip_suffix('*') {
            Some(prefix) => Pattern::Prefix(prefix.to_string()),
            None => Pattern::Exact(raw),
        };
        match &pattern {
            Pattern::Exact(s) | Pattern::Prefix(s) if s.is_empty() => {
                Err(Error::Config("empty lexicon pattern".into()))
            }
            _ => Ok(pattern),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Exact(word) => token == word,
            Pattern::Prefix(prefix) => token.starts_with(prefix.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    /// Categories in file order.
    pub categories: Vec<(String, Vec<Pattern>)>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut categories: Vec<(String, Vec<Pattern>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::parse("lexicon", format!("line {}: empty category name", lineno + 1)));
                }
                if categories.iter().any(|(n, _)| n == name) {
                    return Err(Error::parse("lexicon", format!("duplicate category {name:?}")));
                }
                categories.push((name.to_string(), Vec::new()));
                continue;
            }
            let Some((_, patterns)) = categories.last_mut() else {
                return Err(Error::parse(
                    "lexicon",
                    format!("line {}: pattern before any [Category] header", lineno + 1),
                ));
            };
            patterns.push(Pattern::parse(line)?);
        }
        if let Some((name, _)) = categories.iter().find(|(_, p)| p.is_empty()) {
            return Err(Error::parse("lexicon", format!("category {name:?} has no patterns")));
        }
        if categories.is_empty() {
            return Err(Error::parse("lexicon", "no categories"));
        }
        Ok(Lexicon { categories })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// For each category, whether any token matches.
    pub fn matches(&self, tokens: &[String]) -> Vec<bool> {
        self.categories
            .iter()
            .map(|(_, patterns)| {
                tokens
                    .iter()
                    .any(|t| patterns.iter().any(|p| p.matches(t)))
            })
            .collect()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCurve {
    pub name: String,
    /// Share of tweets with at least one match among all tweets.
    pub overall: f64,
    /// Indexed by length; `None` where no tweet has that length.
    pub freq: Vec<Option<f64>>,
    /// `freq / overall`; `None` where `freq` is undefined or `overall` is 0.
    pub enrichment: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCurves {
    /// Tweets per length, index 0 unused.
    pub tweets: Vec<u64>,
    pub categories: Vec<CategoryCurve>,
}

/// Accumulates per-length match counts.
#[derive(Debug, Clone)]
pub struct CurveBuilder<'a> {
    lexicon: &'a Lexicon,
    tweets: Vec<u64>,
    hits: Vec<Vec<u64>>,
}

impl<'a> CurveBuilder<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        CurveBuilder {
            lexicon,
            tweets: vec![0],
            hits: vec![vec![0]; lexicon.categories.len()],
        }
    }

    fn grow(&mut self, length: usize) {
        if self.tweets.len() <= length {
            self.tweets.resize(length + 1, 0);
            for h in &mut self.hits {
                h.resize(length + 1, 0);
            }
        }
    }

    pub fn observe(&mut self, length: usize, text: &str) {
        if length == 0 {
            return;
        }
        self.grow(length);
        self.tweets[length] += 1;
        let tokens = tokenize(text);
        for (hits, matched) in self.hits.iter_mut().zip(self.lexicon.matches(&tokens)) {
            if matched {
                hits[length] += 1;
            }
        }
    }

    pub fn merge_from(&mut self, other: &CurveBuilder<'_>) {
        self.grow(other.tweets.len() - 1);
        for (a, b) in self.tweets.iter_mut().zip(&other.tweets) {
            *a += b;
        }
        for (mine, theirs) in self.hits.iter_mut().zip(&other.hits) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    pub fn finish(&self) -> CategoryCurves {
        let total: u64 = self.tweets.iter().sum();
        let categories = self
            .lexicon
            .categories
            .iter()
            .zip(&self.hits)
            .map(|((name, _), hits)| {
                let matched: u64 = hits.iter().sum();
                let overall = if total > 0 {
                    matched as f64 / total as f64
                } else {
                    0.0
                };
                let freq: Vec<Option<f64>> = self
                    .tweets
                    .iter()
                    .zip(hits)
                    .map(|(&n, &h)| (n > 0).then(|| h as f64 / n as f64))
                    .collect();
                let enrichment = freq
                    .iter()
                    .map(|f| f.filter(|_| overall > 0.0).map(|f| f / overall))
                    .collect();
                CategoryCurve {
                    name: name.clone(),
                    overall,
                    freq,
                    enrichment,
                }
            })
            .collect();
        CategoryCurves {
            tweets: self.tweets.clone(),
            categories,
        }
    }
}

/// Curves over records measured with `config`. Records whose display range
/// is malformed are skipped.
pub fn category_curves<'r>(
    records: impl IntoIterator<Item = &'r TweetRecord>,
    lexicon: &Lexicon,
    config: &CountingConfig,
) -> CategoryCurves {
    let mut builder = CurveBuilder::new(lexicon);
    for record in records {
        let Ok(display) = charcount::extract_display_text(record) else {
            continue;
        };
        let text = config.normalization_form.apply(&display);
        let length = charcount::weighted_length(&text, config);
        builder.observe(length.0, &text);
    }
    builder.finish()
}
