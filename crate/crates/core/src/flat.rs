//! Flat word sequences for masked language modelling, and the import of
//! per-behaviour summary vectors computed from them.
//!
//! One time-step becomes 19 words:
//!
//! ```text
//! person magnitude 18.3 angle n operation area small movement in place medium place top left top right bottom left
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behaviour::ObjectBehaviour;
use crate::error::{Error, Result};
use crate::features::WordVectors;
use crate::io::derive_seed;

pub const MAX_WORDS: usize = 512;
pub const MASK: &str = "[MASK]";
pub const WORDS_PER_STEP: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Object,
    Prompt,
    Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatBehaviour {
    pub key: String,
    pub words: Vec<String>,
    pub roles: Vec<Role>,
}

impl FlatBehaviour {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// Role of the word at `position` in a flat line; the template repeats
/// every [`WORDS_PER_STEP`] words.
pub fn role_at(position: usize) -> Role {
    match position % WORDS_PER_STEP {
        0 => Role::Object,
        2 | 4 | 7 | 11 | 13..=18 => Role::Value,
        _ => Role::Prompt,
    }
}

const PROMPTS: [(usize, &str); 8] = [
    (1, "magnitude"),
    (3, "angle"),
    (5, "operation"),
    (6, "area"),
    (8, "movement"),
    (9, "in"),
    (10, "place"),
    (12, "place"),
];

pub fn flatten(b: &ObjectBehaviour) -> FlatBehaviour {
    let mut words = Vec::with_capacity(b.steps.len() * WORDS_PER_STEP);
    let mut roles = Vec::with_capacity(words.capacity());
    let mut push = |w: String, r: Role| {
        words.push(w);
        roles.push(r);
    };
    for s in &b.steps {
        push(b.object_label.clone(), Role::Object);
        push("magnitude".into(), Role::Prompt);
        push(s.magnitude.to_string(), Role::Value);
        push("angle".into(), Role::Prompt);
        push(s.sector.token().into(), Role::Value);
        push("operation".into(), Role::Prompt);
        push("area".into(), Role::Prompt);
        push(s.area.clone(), Role::Value);
        for p in ["movement", "in", "place"] {
            push(p.into(), Role::Prompt);
        }
        push(s.movement.clone(), Role::Value);
        push("place".into(), Role::Prompt);
        for (v, h) in s.placement.0 {
            push(v.token().into(), Role::Value);
            push(h.token().into(), Role::Value);
        }
    }
    words.truncate(MAX_WORDS);
    roles.truncate(MAX_WORDS);
    FlatBehaviour {
        key: b.key(),
        words,
        roles,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSample {
    pub key: String,
    pub tokens: Vec<String>,
    /// `(position, original word)` for every masked position, ascending.
    pub targets: Vec<(usize, String)>,
}

impl MaskedSample {
    /// Undo the masking.
    pub fn restore(&self) -> Vec<String> {
        let mut out = self.tokens.clone();
        for (i, w) in &self.targets {
            out[*i] = w.clone();
        }
        out
    }
}

/// Mask each value word independently with probability `rate`.
pub fn mask_values(f: &FlatBehaviour, rate: f64, seed: u64) -> Result<MaskedSample> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("mask rate {rate} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &f.key));
    let mut tokens = f.words.clone();
    let mut targets = Vec::new();
    for (i, role) in f.roles.iter().enumerate() {
        if *role == Role::Value && rng.gen::<f64>() < rate {
            targets.push((i, std::mem::replace(&mut tokens[i], MASK.to_string())));
        }
    }
    Ok(MaskedSample {
        key: f.key.clone(),
        tokens,
        targets,
    })
}

/// `<clip_id>#<object_label>\t<words>` per line.
pub fn corpus_text(flat: &[FlatBehaviour]) -> String {
    let mut out = String::new();
    for f in flat {
        let _ = writeln!(out, "{}\t{}", f.key, f.text());
    }
    out
}

/// Parse a corpus written by [`corpus_text`], rebuilding roles by position.
pub fn parse_corpus(text: &str) -> Result<Vec<FlatBehaviour>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (key, words) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected `key<TAB>words`"))?;
        let words: Vec<String> = words.split(' ').map(String::from).collect();
        if words.len() > MAX_WORDS {
            return Err(Error::parse(i + 1, format!("{} words exceed {MAX_WORDS}", words.len())));
        }
        for (pos, w) in words.iter().enumerate() {
            let offset = pos % WORDS_PER_STEP;
            if let Some((_, want)) = PROMPTS.iter().find(|(o, _)| *o == offset) {
                if w != want {
                    return Err(Error::parse(i + 1, format!("word {pos}: expected `{want}`, got `{w}`")));
                }
            }
        }
        out.push(FlatBehaviour {
            key: key.to_string(),
            roles: (0..words.len()).map(role_at).collect(),
            words,
        });
    }
    Ok(out)
}

/// As [`corpus_text`], plus a third field of `pos:word` targets.
pub fn masked_corpus_text(samples: &[MaskedSample]) -> String {
    let mut out = String::new();
    for s in samples {
        let targets: Vec<String> = s.targets.iter().map(|(i, w)| format!("{i}:{w}")).collect();
        let _ = writeln!(out, "{}\t{}\t{}", s.key, s.tokens.join(" "), targets.join(" "));
    }
    out
}

/// Parse a masked corpus back into samples.
pub fn parse_masked_corpus(text: &str) -> Result<Vec<MaskedSample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [key, words, targets] = fields[..] else {
            return Err(Error::parse(i + 1, "expected three tab-separated fields"));
        };
        let tokens: Vec<String> = words.split(' ').map(String::from).collect();
        let mut parsed = Vec::new();
        for t in targets.split(' ').filter(|t| !t.is_empty()) {
            let (pos, word) = t
                .split_once(':')
                .ok_or_else(|| Error::parse(i + 1, format!("bad target `{t}`")))?;
            let pos: usize = pos
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad position `{pos}`")))?;
            if tokens.get(pos).map(String::as_str) != Some(MASK) {
                return Err(Error::parse(i + 1, format!("position {pos} is not masked")));
            }
            parsed.push((pos, word.to_string()));
        }
        out.push(MaskedSample {
            key: key.to_string(),
            tokens,
            targets: parsed,
        });
    }
    Ok(out)
}

/// Load summary vectors keyed by `<clip_id>#<object_label>`.
pub fn import_summary_vectors(path: impl AsRef<Path>) -> Result<WordVectors> {
    let path = path.as_ref();
    let table = WordVectors::load(path)?;
    if let Some(bad) = table.tokens().iter().find(|k| !k.contains('#')) {
        return Err(Error::Config(format!("{}: key `{bad}` is not <clip_id>#<object>", path.display())));
    }
    Ok(table)
}

/// Fail listing every key absent from the table.
pub fn require_keys<'a>(table: &WordVectors, keys: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let missing: Vec<String> = keys
        .into_iter()
        .filter(|k| table.get(k).is_none())
        .map(String::from)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingSummaries(missing))
    }
}
