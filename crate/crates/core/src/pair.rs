use std::fmt;

use crate::error::{Error, Result};
use crate::token::{is_token, normalize_token};

/// An adverb and its antonym; the adverb is the positive class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub adverb: String,
    pub antonym: String,
}

pub const DEFAULT_PAIRS: [(&str, &str); 11] = [
    ("upwards", "downwards"),
    ("forwards", "backwards"),
    ("outdoor", "indoor"),
    ("slowly", "quickly"),
    ("gently", "firmly"),
    ("out", "in"),
    ("partially", "completely"),
    ("properly", "improperly"),
    ("periodically", "continuously"),
    ("instantly", "gradually"),
    ("off", "on"),
];

impl Pair {
    pub fn new(adverb: &str, antonym: &str) -> Result<Pair> {
        let (adverb, antonym) = (normalize_token(adverb), normalize_token(antonym));
        for t in [&adverb, &antonym] {
            if !is_token(t) {
                return Err(Error::Config(format!("`{t}` is not a valid class token")));
            }
        }
        if adverb == antonym {
            return Err(Error::Config(format!("pair `{adverb}` has identical classes")));
        }
        Ok(Pair { adverb, antonym })
    }

    /// Stem used for per-pair files, `adverb_antonym`.
    pub fn stem(&self) -> String {
        format!("{}_{}", self.adverb, self.antonym)
    }

    /// `Some(true)` for the adverb, `Some(false)` for the antonym.
    pub fn polarity(&self, label: &str) -> Option<bool> {
        if label == self.adverb {
            Some(true)
        } else if label == self.antonym {
            Some(false)
        } else {
            None
        }
    }

    pub fn class(&self, positive: bool) -> &str {
        if positive {
            &self.adverb
        } else {
            &self.antonym
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.adverb, self.antonym)
    }
}

pub fn default_pairs() -> Vec<Pair> {
    DEFAULT_PAIRS
        .iter()
        .map(|(a, b)| Pair::new(a, b).expect("built-in pair"))
        .collect()
}

/// Parse a pair list: one `adverb/antonym` per line, `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<Pair>> {
    let mut out: Vec<Pair> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once('/')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `adverb/antonym`, got `{line}`")))?;
        let pair = Pair::new(a.trim(), b.trim()).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if out.contains(&pair) {
            return Err(Error::DuplicateKey {
                line: i + 1,
                key: pair.to_string(),
            });
        }
        out.push(pair);
    }
    Ok(out)
}
