//! Batch-wise exhaustive search for single-step indicator rules.
//!
//! Each bias has a small, fully enumerated hypothesis space of rule bodies:
//!
//! | bias            | bodies                                   |
//! |-----------------|------------------------------------------|
//! | magnitude       | non-vacuous bucket ranges, O(B²)         |
//! | operation area  | non-vacuous bucket ranges, O(B²)         |
//! | angle           | 8 anchors × reaches with `cw + acw <= 6` |
//! | cell occupancy  | 3 levels × 8 patterns                    |
//!
//! A candidate is one optional body per class. A bodyless member is the
//! default: it claims exactly the behaviours the other rule does not fire on.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asp::{bodyless_text, Arc, MAX_ARC_REACH, Bias, CellPattern, IndicatorRule, Range, RuleBody};
use crate::behaviour::{BucketFamily, BucketScheme, Horiz, ObjectBehaviour, Sector, Vert, PLACEMENT_LEVELS};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::pair::Pair;

pub const BATCH_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub pair: Pair,
    pub positives: Vec<ObjectBehaviour>,
    pub negatives: Vec<ObjectBehaviour>,
    pub seed: u64,
}

/// Stream shuffled behaviours of each class into balanced batches of
/// [`BATCH_SIZE`] + [`BATCH_SIZE`]; leftovers of the larger class are unused.
pub fn sample_batches(
    pair: &Pair,
    adverb: &[ObjectBehaviour],
    antonym: &[ObjectBehaviour],
    seed: u64,
) -> Result<Vec<Batch>> {
    if adverb.len() < BATCH_SIZE || antonym.len() < BATCH_SIZE {
        return Err(Error::InsufficientData {
            pair: pair.to_string(),
            needed: BATCH_SIZE,
            adverb: adverb.len(),
            antonym: antonym.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..adverb.len()).collect();
    let mut neg: Vec<usize> = (0..antonym.len()).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let count = adverb.len().min(antonym.len()) / BATCH_SIZE;
    Ok((0..count)
        .map(|k| {
            let take = |idx: &[usize], src: &[ObjectBehaviour]| {
                idx[k * BATCH_SIZE..(k + 1) * BATCH_SIZE]
                    .iter()
                    .map(|&i| src[i].clone())
                    .collect()
            };
            Batch {
                pair: pair.clone(),
                positives: take(&pos, adverb),
                negatives: take(&neg, antonym),
                seed,
            }
        })
        .collect())
}

fn range_bodies(family: &BucketFamily) -> Vec<Range> {
    let n = family.len();
    let name = |i: usize| Some(family.name(i).to_string());
    // a lower bound on the first bucket or an upper bound on the last is vacuous
    let lowers = std::iter::once(None).chain((1..n).map(Some));
    let mut out = Vec::new();
    for lo in lowers {
        for hi in std::iter::once(None).chain((0..n.saturating_sub(1)).map(Some)) {
            match (lo, hi) {
                (None, None) => {}
                (Some(l), Some(h)) if l > h => {}
                _ => out.push(Range {
                    lower: lo.and_then(name),
                    upper: hi.and_then(name),
                }),
            }
        }
    }
    out
}

/// Every rule body in a bias's hypothesis space, in a fixed order.
pub fn hypothesis_space(bias: Bias, scheme: &BucketScheme) -> Vec<RuleBody> {
    match bias {
        Bias::Magnitude => range_bodies(&scheme.magnitude).into_iter().map(RuleBody::Magnitude).collect(),
        Bias::OperationArea => range_bodies(&scheme.area).into_iter().map(RuleBody::OperationArea).collect(),
        Bias::Angle => {
            let mut out = Vec::new();
            for anchor in Sector::CLOCKWISE {
                for cw in 0..=MAX_ARC_REACH {
                    for acw in 0..=MAX_ARC_REACH - cw {
                        out.push(RuleBody::Angle(Arc {
                            anchor,
                            clockwise: cw as u8,
                            anticlockwise: acw as u8,
                        }));
                    }
                }
            }
            out
        }
        Bias::CellOccupancy => {
            let mut out = Vec::new();
            for level in 0..PLACEMENT_LEVELS as u8 {
                for vert in Vert::ALL {
                    for horiz in Horiz::ALL {
                        out.push(CellPattern {
                            level,
                            vert: Some(vert),
                            horiz: Some(horiz),
                        });
                    }
                }
                for vert in Vert::ALL {
                    out.push(CellPattern {
                        level,
                        vert: Some(vert),
                        horiz: None,
                    });
                }
                for horiz in Horiz::ALL {
                    out.push(CellPattern {
                        level,
                        vert: None,
                        horiz: Some(horiz),
                    });
                }
            }
            out.into_iter().map(RuleBody::CellOccupancy).collect()
        }
    }
}

/// Fixed-width bitset over the behaviours of one batch.
#[derive(Clone, PartialEq, Eq)]
struct Mask(Vec<u64>);

impl Mask {
    fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Mask {
        let mut words = vec![0u64; n.div_ceil(64)];
        for i in (0..n).filter(|&i| f(i)) {
            words[i / 64] |= 1 << (i % 64);
        }
        Mask(words)
    }
}

/// Count of behaviours classified correctly. `None` is a bodyless rule,
/// which claims the complement of the other side.
fn correct(adv: Option<&Mask>, ant: Option<&Mask>, pos: &Mask, neg: &Mask) -> u32 {
    let mut n = 0;
    for i in 0..pos.0.len() {
        let (a, b) = match (adv, ant) {
            (Some(a), Some(b)) => (a.0[i], b.0[i]),
            (Some(a), None) => (a.0[i], !a.0[i]),
            (None, Some(b)) => (!b.0[i], b.0[i]),
            (None, None) => return 0,
        };
        n += (a & !b & pos.0[i]).count_ones() + (b & !a & neg.0[i]).count_ones();
    }
    n
}

/// Cost of a candidate pair; smaller is better.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cost {
    pub misclassified: u32,
    pub literals: usize,
    pub text: (String, String),
}

struct Candidate {
    body: Option<RuleBody>,
    fires: Option<Mask>,
    literals: usize,
    adverb_text: String,
    antonym_text: String,
}

/// Best rule pair for one bias over one batch.
///
/// Returns the adverb rule then the antonym rule, omitting a bodyless
/// member; empty when the winner is right on at most half the batch.
pub fn induce_for_bias(batch: &Batch, bias: Bias, scheme: &BucketScheme) -> Vec<IndicatorRule> {
    match search(batch, bias, scheme) {
        Some((adv, ant, _)) => {
            let mut out = Vec::new();
            if let Some(b) = adv {
                out.push(IndicatorRule::new(batch.pair.adverb.clone(), b));
            }
            if let Some(b) = ant {
                out.push(IndicatorRule::new(batch.pair.antonym.clone(), b));
            }
            out
        }
        None => Vec::new(),
    }
}

/// Exhaustive search; `None` when no candidate beats one half.
pub fn search(batch: &Batch, bias: Bias, scheme: &BucketScheme) -> Option<(Option<RuleBody>, Option<RuleBody>, Cost)> {
    let all: Vec<&ObjectBehaviour> = batch.positives.iter().chain(&batch.negatives).collect();
    let n = all.len();
    let n_pos = batch.positives.len();
    let pos = Mask::from_fn(n, |i| i < n_pos);
    let neg = Mask::from_fn(n, |i| i >= n_pos);
    let pair = &batch.pair;

    let mut cands = vec![Candidate {
        body: None,
        fires: None,
        literals: 0,
        adverb_text: bodyless_text(&pair.adverb),
        antonym_text: bodyless_text(&pair.antonym),
    }];
    for body in hypothesis_space(bias, scheme) {
        let fires = Mask::from_fn(n, |i| all[i].steps.iter().any(|s| body.holds_at(s, scheme)));
        cands.push(Candidate {
            literals: body.literal_count(),
            adverb_text: IndicatorRule::new(pair.adverb.clone(), body.clone()).to_string(),
            antonym_text: IndicatorRule::new(pair.antonym.clone(), body.clone()).to_string(),
            fires: Some(fires),
            body: Some(body),
        });
    }

    let mut best: Option<(usize, usize, u32, usize)> = None;
    for (i, a) in cands.iter().enumerate() {
        for (j, b) in cands.iter().enumerate() {
            let miss = n as u32 - correct(a.fires.as_ref(), b.fires.as_ref(), &pos, &neg);
            let lits = a.literals + b.literals;
            let better = match best {
                None => true,
                Some((bi, bj, bm, bl)) => {
                    (miss, lits) < (bm, bl)
                        || ((miss, lits) == (bm, bl)
                            && (&a.adverb_text, &b.antonym_text) < (&cands[bi].adverb_text, &cands[bj].antonym_text))
                }
            };
            if better {
                best = Some((i, j, miss, lits));
            }
        }
    }
    let (i, j, miss, lits) = best?;
    if 2 * (n as u32 - miss) <= n as u32 {
        return None;
    }
    let cost = Cost {
        misclassified: miss,
        literals: lits,
        text: (cands[i].adverb_text.clone(), cands[j].antonym_text.clone()),
    };
    Some((cands[i].body.clone(), cands[j].body.clone(), cost))
}

/// Rules induced for one pair; duplicates across batches are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedRuleSet {
    pub pair: Pair,
    pub rules: Vec<IndicatorRule>,
}

impl InducedRuleSet {
    pub fn counts(&self) -> BTreeMap<Bias, usize> {
        let mut out: BTreeMap<Bias, usize> = Bias::ALL.iter().map(|b| (*b, 0)).collect();
        for r in &self.rules {
            *out.entry(r.bias()).or_default() += 1;
        }
        out
    }

    pub fn multiplicity(&self, rule: &IndicatorRule) -> usize {
        self.rules.iter().filter(|r| *r == rule).count()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// `adverb|antonym|bias<TAB>rule` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let _ = writeln!(out, "{}|{}|{}\t{}", self.pair.adverb, self.pair.antonym, r.bias(), r);
        }
        out
    }

    pub fn parse(text: &str, pair: &Pair) -> Result<InducedRuleSet> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::parse(i + 1, m);
            let (tag, body) = line.split_once('\t').ok_or_else(|| err("missing tab after tag".into()))?;
            let parts: Vec<&str> = tag.split('|').collect();
            let [adv, ant, bias] = parts.as_slice() else {
                return Err(err(format!("tag `{tag}` is not adverb|antonym|bias")));
            };
            if *adv != pair.adverb || *ant != pair.antonym {
                return Err(err(format!("tag `{tag}` does not belong to {pair}")));
            }
            let rule: IndicatorRule = body.parse().map_err(|e: Error| err(e.to_string()))?;
            if Bias::from_token(bias) != Some(rule.bias()) {
                return Err(err(format!("bias tag `{bias}` does not match rule")));
            }
            if rule.head != pair.adverb && rule.head != pair.antonym {
                return Err(err(format!("rule head `{}` is not in {pair}", rule.head)));
            }
            rules.push(rule);
        }
        Ok(InducedRuleSet {
            pair: pair.clone(),
            rules,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>, pair: &Pair) -> Result<InducedRuleSet> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, pair).map_err(|e| e.in_file(path))
    }
}

/// Union over batches × biases, ordered by batch, then bias, then rule.
pub fn collect_indicators(pair: &Pair, batches: &[Batch], scheme: &BucketScheme) -> InducedRuleSet {
    let jobs: Vec<(usize, Bias)> = (0..batches.len())
        .flat_map(|b| Bias::ALL.into_iter().map(move |bias| (b, bias)))
        .collect();
    let rules = jobs
        .par_iter()
        .map(|&(b, bias)| induce_for_bias(&batches[b], bias, scheme))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    InducedRuleSet {
        pair: pair.clone(),
        rules,
    }
}
