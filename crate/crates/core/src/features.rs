//! Feature vectors: rule-firing bits or imported summary vectors, followed by
//! the action-type embedding.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::asp::{rule_fires, IndicatorRule};
use crate::behaviour::{BucketScheme, ObjectBehaviour};
use crate::error::{Error, Result};
use crate::io::{read_text, write_atomic};

/// Token → vector table in the textual word-vector format: a `count dim`
/// header, then one `token v1 .. vdim` line per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Append an entry; `line` is used only for error reporting.
    pub fn insert(&mut self, token: String, vector: Vec<f64>, line: usize) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                line,
                message: format!("`{token}` has {} values, expected {}", vector.len(), self.dim),
            });
        }
        if self.index.contains_key(&token) {
            return Err(Error::DuplicateKey { line, key: token });
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.values.extend(vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing `count dim` header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(1, format!("bad header `{header}`")))?;
        let [count, dim] = nums[..] else {
            return Err(Error::parse(1, format!("header must be `count dim`, got `{header}`")));
        };
        if dim == 0 {
            return Err(Error::parse(1, "dimension must be positive"));
        }
        let mut table = WordVectors::new(dim);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("line is nonblank").to_string();
            let vector: Vec<f64> = parts
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::parse(i + 1, format!("bad value `{v}`")))
                })
                .collect::<Result<_>>()?;
            table.insert(token, vector, i + 1)?;
        }
        if table.len() != count {
            return Err(Error::parse(1, format!("header declares {count} entries, found {}", table.len())));
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?).map_err(|e| e.in_file(path))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(t);
            for v in &self.values[i * self.dim..(i + 1) * self.dim] {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

/// Action-embedding lookups that fall back to zeros, remembering misses.
pub struct ActionEmbedder<'a> {
    table: &'a WordVectors,
    missing: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl<'a> ActionEmbedder<'a> {
    pub fn new(table: &'a WordVectors) -> Self {
        ActionEmbedder {
            table,
            missing: Default::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn embed(&self, action: &str) -> Vec<f64> {
        match self.table.get(action) {
            Some(v) => v.to_vec(),
            None => {
                if self.missing.borrow_mut().insert(action.to_string()) {
                    log::warn!("action `{action}` has no embedding; using zeros");
                }
                vec![0.0; self.table.dim()]
            }
        }
    }

    /// Distinct tokens that fell back to zeros, sorted.
    pub fn missing(&self) -> Vec<String> {
        self.missing.borrow().iter().cloned().collect()
    }
}

/// Bit `i` is 1 iff `rules[i]` fires on `b`.
pub fn indicator_vector(b: &ObjectBehaviour, rules: &[IndicatorRule], scheme: &BucketScheme) -> Vec<u8> {
    rules.iter().map(|r| rule_fires(r, b, scheme) as u8).collect()
}

/// Repeat the smaller class cyclically until both classes have equal size.
pub fn balance_by_repetition<T: Clone>(first: &[T], second: &[T], names: (&str, &str)) -> Result<(Vec<T>, Vec<T>)> {
    if first.is_empty() {
        return Err(Error::EmptyClass(names.0.to_string()));
    }
    if second.is_empty() {
        return Err(Error::EmptyClass(names.1.to_string()));
    }
    let n = first.len().max(second.len());
    let cycle = |xs: &[T]| xs.iter().cycle().take(n).cloned().collect();
    Ok((cycle(first), cycle(second)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    Indicator,
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub clip_id: String,
    pub object_label: String,
    /// Class token, or empty when unlabelled.
    pub label: String,
    pub values: Vec<f64>,
}

/// `[bits | action embedding]`.
pub fn indicator_features(
    b: &ObjectBehaviour,
    action: &str,
    label: &str,
    rules: &[IndicatorRule],
    scheme: &BucketScheme,
    embedder: &ActionEmbedder,
) -> FeatureVector {
    let mut values: Vec<f64> = indicator_vector(b, rules, scheme).into_iter().map(f64::from).collect();
    values.extend(embedder.embed(action));
    FeatureVector {
        clip_id: b.clip_id.clone(),
        object_label: b.object_label.clone(),
        label: label.to_string(),
        values,
    }
}

/// `[summary vector | action embedding]`.
pub fn summary_features(
    b: &ObjectBehaviour,
    action: &str,
    label: &str,
    summaries: &WordVectors,
    embedder: &ActionEmbedder,
) -> Result<FeatureVector> {
    let key = b.key();
    let summary = summaries
        .get(&key)
        .ok_or_else(|| Error::MissingSummaries(vec![key.clone()]))?;
    let mut values = summary.to_vec();
    values.extend(embedder.embed(action));
    Ok(FeatureVector {
        clip_id: b.clip_id.clone(),
        object_label: b.object_label.clone(),
        label: label.to_string(),
        values,
    })
}

/// CSV with header `clip_id,object,label,v0..vN`.
pub fn features_to_csv(rows: &[FeatureVector]) -> Result<String> {
    let dim = rows.first().map_or(0, |r| r.values.len());
    let mut out = String::from("clip_id,object,label");
    for i in 0..dim {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');
    for r in rows {
        if r.values.len() != dim {
            return Err(Error::FeatureLength {
                expected: dim,
                got: r.values.len(),
            });
        }
        let _ = write!(out, "{},{},{}", r.clip_id, r.object_label, r.label);
        for v in &r.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn features_from_csv(text: &str) -> Result<Vec<FeatureVector>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty feature file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[..3] != ["clip_id", "object", "label"] {
        return Err(Error::parse(1, "header must start with `clip_id,object,label`"));
    }
    let dim = cols.len() - 3;
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != dim + 3 {
            return Err(Error::Dimension {
                line: i + 1,
                message: format!("{} columns, expected {}", f.len(), dim + 3),
            });
        }
        let values = f[3..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| Error::parse(i + 1, format!("bad value `{v}`"))))
            .collect::<Result<_>>()?;
        out.push(FeatureVector {
            clip_id: f[0].to_string(),
            object_label: f[1].to_string(),
            label: f[2].to_string(),
            values,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::{Range, RuleBody};
    use crate::behaviour::{BehaviourStep, Placement, Sector, Tenths};
    use proptest::prelude::*;

    fn person(mag: f64) -> ObjectBehaviour {
        ObjectBehaviour {
            clip_id: "toy".into(),
            object_label: "person".into(),
            steps: vec![BehaviourStep {
                time_step: 1,
                magnitude: Tenths::from_f64(mag),
                sector: Sector::N,
                area: "small".into(),
                movement: "small".into(),
                placement: Placement::of_point(0.3, 0.3),
            }],
        }
    }

    fn mag_rule(head: &str, lo: Option<&str>, hi: Option<&str>) -> IndicatorRule {
        IndicatorRule::new(
            head,
            RuleBody::Magnitude(Range {
                lower: lo.map(String::from),
                upper: hi.map(String::from),
            }),
        )
    }

    #[test]
    fn load_small_table() {
        let t = WordVectors::parse("2 3\nrun 1 0 0.5\njump -1 2 3e-1\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("jump"), Some(&[-1.0, 2.0, 0.3][..]));
        assert_eq!(WordVectors::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn ragged_and_duplicate_lines() {
        let e = WordVectors::parse("2 3\nrun 1 0 0.5\njump 1 2\n").unwrap_err();
        assert!(matches!(e, Error::Dimension { line: 3, .. }), "{e:?}");
        let e = WordVectors::parse("2 1\nrun 1\nrun 2\n").unwrap_err();
        assert!(matches!(e, Error::DuplicateKey { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn absent_action_is_zero_and_recorded() {
        let t = WordVectors::parse("1 2\nrun 1 1\n").unwrap();
        let e = ActionEmbedder::new(&t);
        assert_eq!(e.embed("swim"), vec![0.0, 0.0]);
        assert_eq!(e.embed("run"), vec![1.0, 1.0]);
        e.embed("swim");
        assert_eq!(e.missing(), vec!["swim".to_string()]);
    }

    #[test]
    fn toy_person_bits() {
        let s = BucketScheme::default();
        let rules = [
            mag_rule("strange", Some("five_to_ten"), Some("fifteen_to_twenty")),
            mag_rule("not_strange", None, Some("zero_to_five")),
        ];
        assert_eq!(indicator_vector(&person(7.0), &rules, &s), vec![1, 0]);
        assert!(indicator_vector(&person(7.0), &[], &s).is_empty());
    }

    #[test]
    fn balancing_is_cyclic() {
        let (a, b) = balance_by_repetition(&[0, 1, 2], &[10, 11, 12, 13, 14, 15, 16], ("a", "b")).unwrap();
        assert_eq!(a, vec![0, 1, 2, 0, 1, 2, 0]);
        assert_eq!(b.len(), 7);
        let (a, _) = balance_by_repetition(&[9], &[1, 2, 3, 4], ("a", "b")).unwrap();
        assert_eq!(a, vec![9; 4]);
        let (a, b) = balance_by_repetition(&[1; 5], &[2; 5], ("a", "b")).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        assert!(matches!(balance_by_repetition::<u8>(&[], &[1], ("a", "b")), Err(Error::EmptyClass(c)) if c == "a"));
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![FeatureVector {
            clip_id: "c1".into(),
            object_label: "car".into(),
            label: "slowly".into(),
            values: vec![1.0, 0.0, 0.25],
        }];
        let text = features_to_csv(&rows).unwrap();
        assert!(text.starts_with("clip_id,object,label,v0,v1,v2\n"));
        assert_eq!(features_from_csv(&text).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn permuting_rules_permutes_bits(mags in prop::collection::vec(0.0f64..60.0, 1..6), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let s = BucketScheme::default();
            let names: Vec<&str> = s.magnitude.names().collect();
            let mut rules = Vec::new();
            for (i, lo) in names.iter().enumerate().skip(1) {
                rules.push(mag_rule("x", Some(lo), None));
                rules.push(mag_rule("x", None, Some(names[i - 1])));
            }
            let mut b = person(0.0);
            b.steps = mags.iter().enumerate().map(|(i, m)| BehaviourStep { time_step: i as u32 + 1, magnitude: Tenths::from_f64(*m), ..b.steps[0].clone() }).collect();
            let mut perm: Vec<usize> = (0..rules.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<IndicatorRule> = perm.iter().map(|&i| rules[i].clone()).collect();
            let bits = indicator_vector(&b, &rules, &s);
            let pbits = indicator_vector(&b, &permuted, &s);
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(pbits[k], bits[i]);
            }
        }
    }
}
