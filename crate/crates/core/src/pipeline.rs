//! Stage functions over on-disk artifacts, and the chained end-to-end run.
//!
//! Work directory written by [`run_pipeline`]:
//!
//! ```text
//! behaviours.jsonl              one ClipBehaviours per line
//! asp/<clip>.lp                 program per clip, with background facts
//! split.tsv                     clip_id, label, train|test
//! rules/<pair>.rules            induced indicator multiset (indicator mode)
//! features/<pair>.{train,test}.csv
//! models/<pair>.model
//! reports/report.txt, report.csv, predictions.tsv
//! run-manifest.json             config fingerprint and sha256 of inputs and outputs
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asp::{emit_program, generate_background, parse_program, AspProgram};
use crate::behaviour::{extract_behaviours, BucketScheme, ObjectBehaviour, DEFAULT_WINDOW};
use crate::classify::{majority_vote, score_pair, ClipPrediction, EvalReport, LabelledClip, PairScore};
use crate::error::{Error, Result};
use crate::features::{
    balance_by_repetition, features_from_csv, features_to_csv, indicator_features, summary_features,
    ActionEmbedder, FeatureVector, WordVectors,
};
use crate::flat::{import_summary_vectors, require_keys};
use crate::induce::{collect_indicators, sample_batches, InducedRuleSet};
use crate::io::{derive_seed, read_text, sha256_hex, write_atomic};
use crate::kv;
use crate::obs::{load_observations, load_rasters, resolve_flow};
use crate::pair::{default_pairs, Pair};
use crate::svm::{self, SvmModel, SvmParams};
use crate::token::{is_token, normalize_token};

pub const CLIP_INDEX: &str = "clips.tsv";
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

/// One row of `clips.tsv`: `clip_id \t action \t label,label,..`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipEntry {
    pub clip_id: String,
    pub action: String,
    pub labels: Vec<String>,
}

fn valid_clip_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
}

/// Parse a clip index. A first line starting with `clip_id` is a header.
pub fn parse_clip_index(text: &str) -> Result<Vec<ClipEntry>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || (i == 0 && line.starts_with("clip_id")) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (id, action, labels) = match fields[..] {
            [id, action] => (id, action, ""),
            [id, action, labels] => (id, action, labels),
            _ => return Err(Error::parse(line_no, "expected `clip_id<TAB>action<TAB>labels`")),
        };
        if !valid_clip_id(id) {
            return Err(Error::parse(line_no, format!("bad clip id `{id}`")));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateKey {
                line: line_no,
                key: id.to_string(),
            });
        }
        let token = |s: &str| {
            let t = normalize_token(s);
            if is_token(&t) {
                Ok(t)
            } else {
                Err(Error::parse(line_no, format!("`{s}` is not a lowercase token")))
            }
        };
        out.push(ClipEntry {
            clip_id: id.to_string(),
            action: token(action)?,
            labels: labels
                .split(',')
                .filter(|l| !l.trim().is_empty())
                .map(token)
                .collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

pub fn load_clip_index(path: impl AsRef<Path>) -> Result<Vec<ClipEntry>> {
    let path = path.as_ref();
    parse_clip_index(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// Extracted behaviours of one clip with its index metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipBehaviours {
    pub clip_id: String,
    pub action: String,
    pub labels: Vec<String>,
    pub behaviours: Vec<ObjectBehaviour>,
    /// Low-confidence objects set aside during extraction.
    #[serde(default)]
    pub unknown_objects: usize,
}

/// Observation files: `<clip>.jsonl`, plus `<clip>.flow` when detections
/// lack inline flow statistics.
pub fn clip_input_paths(obs_dir: &Path, clip_id: &str) -> (PathBuf, PathBuf) {
    (
        obs_dir.join(format!("{clip_id}.jsonl")),
        obs_dir.join(format!("{clip_id}.flow")),
    )
}

pub fn extract_clip(obs_dir: &Path, entry: &ClipEntry, scheme: &BucketScheme, window: usize) -> Result<ClipBehaviours> {
    let (obs, flow) = clip_input_paths(obs_dir, &entry.clip_id);
    extract_files(&obs, flow.exists().then_some(flow.as_path()), entry, scheme, window)
}

/// Extract one clip from explicit observation and raster files.
pub fn extract_files(
    obs: &Path,
    flow: Option<&Path>,
    entry: &ClipEntry,
    scheme: &BucketScheme,
    window: usize,
) -> Result<ClipBehaviours> {
    let mut frames = load_observations(obs)?;
    let rasters = flow.map(load_rasters).transpose()?;
    resolve_flow(&mut frames, rasters.as_deref()).map_err(|e| e.in_file(obs))?;
    let ex = extract_behaviours(&entry.clip_id, &frames, scheme, window).map_err(|e| e.in_file(obs))?;
    Ok(ClipBehaviours {
        clip_id: entry.clip_id.clone(),
        action: entry.action.clone(),
        labels: entry.labels.clone(),
        behaviours: ex.behaviours,
        unknown_objects: ex.unknown.len(),
    })
}

/// Extract every clip listed in `obs_dir/clips.tsv`, in index order.
pub fn extract_dir(obs_dir: &Path, scheme: &BucketScheme, window: usize) -> Result<Vec<ClipBehaviours>> {
    let index = load_clip_index(obs_dir.join(CLIP_INDEX))?;
    index
        .par_iter()
        .map(|e| extract_clip(obs_dir, e, scheme, window))
        .collect()
}

pub fn behaviours_to_jsonl(clips: &[ClipBehaviours]) -> String {
    let mut out = String::new();
    for c in clips {
        out.push_str(&serde_json::to_string(c).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn behaviours_from_jsonl(text: &str) -> Result<Vec<ClipBehaviours>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}

pub fn load_behaviours(path: impl AsRef<Path>) -> Result<Vec<ClipBehaviours>> {
    let path = path.as_ref();
    behaviours_from_jsonl(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// `(file name, program text)` per clip, background included.
pub fn emit_programs(clips: &[ClipBehaviours], scheme: &BucketScheme) -> Vec<(String, String)> {
    let background = generate_background(scheme);
    clips
        .par_iter()
        .map(|c| {
            let p = AspProgram::from_behaviours(
                &c.clip_id,
                Some(&c.action),
                &c.labels,
                &c.behaviours,
                background.clone(),
            );
            (format!("{}.lp", c.clip_id), emit_program(&p))
        })
        .collect()
}

/// Read every `*.lp` in `dir`, sorted by file name.
pub fn load_programs(dir: &Path) -> Result<Vec<ClipBehaviours>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "lp") {
            paths.push(p);
        }
    }
    paths.sort();
    paths
        .par_iter()
        .map(|p| {
            let program = parse_program(&read_text(p)?).map_err(|e| e.in_file(p))?;
            let behaviours = program.behaviours().map_err(|e| e.in_file(p))?;
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(ClipBehaviours {
                clip_id: if program.clip_id.is_empty() { stem } else { program.clip_id },
                action: program.action.unwrap_or_default(),
                labels: program.adverb_labels,
                behaviours,
                unknown_objects: 0,
            })
        })
        .collect()
}

/// Train/test assignment per `(clip_id, label)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split(pub BTreeMap<(String, String), bool>);

impl Split {
    pub fn is_train(&self, clip_id: &str, label: &str) -> Option<bool> {
        self.0.get(&(clip_id.to_string(), label.to_string())).copied()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("clip_id\tlabel\tsplit\n");
        for ((clip, label), train) in &self.0 {
            let _ = writeln!(out, "{clip}\t{label}\t{}", if *train { "train" } else { "test" });
        }
        out
    }

    pub fn parse(text: &str) -> Result<Split> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let [clip, label, role] = f[..] else {
                return Err(Error::parse(i + 1, "expected `clip_id<TAB>label<TAB>train|test`"));
            };
            let train = match role {
                "train" => true,
                "test" => false,
                _ => return Err(Error::parse(i + 1, format!("bad split `{role}`"))),
            };
            if map.insert((clip.to_string(), label.to_string()), train).is_some() {
                return Err(Error::DuplicateKey {
                    line: i + 1,
                    key: format!("{clip}/{label}"),
                });
            }
        }
        Ok(Split(map))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Split> {
        let path = path.as_ref();
        Split::parse(&read_text(path)?).map_err(|e| e.in_file(path))
    }
}

/// Per label token, shuffle its clips and send `round(fraction · n)` of them
/// to training.
pub fn stratified_split(clips: &[ClipBehaviours], pairs: &[Pair], seed: u64, train_fraction: f64) -> Result<Split> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::Config(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let labels: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|p| [p.adverb.as_str(), p.antonym.as_str()])
        .collect();
    let mut map = BTreeMap::new();
    for label in labels {
        let mut ids: Vec<&str> = clips
            .iter()
            .filter(|c| c.labels.iter().any(|l| l == label))
            .map(|c| c.clip_id.as_str())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("split:{label}")));
        ids.shuffle(&mut rng);
        let n_train = (train_fraction * ids.len() as f64).round() as usize;
        for (k, id) in ids.into_iter().enumerate() {
            map.insert((id.to_string(), label.to_string()), k < n_train);
        }
    }
    Ok(Split(map))
}

/// A clip carrying exactly one of a pair's labels.
#[derive(Debug, Clone, Copy)]
pub struct Member<'a> {
    pub clip: &'a ClipBehaviours,
    pub positive: bool,
    pub train: bool,
}

impl Member<'_> {
    pub fn label<'p>(&self, pair: &'p Pair) -> &'p str {
        pair.class(self.positive)
    }
}

/// Clips relevant to `pair`. Without a split every member is training data;
/// clips missing from a given split are skipped.
pub fn pair_members<'a>(pair: &Pair, clips: &'a [ClipBehaviours], split: Option<&Split>) -> Vec<Member<'a>> {
    let mut out = Vec::new();
    for clip in clips {
        let pos = clip.labels.contains(&pair.adverb);
        let neg = clip.labels.contains(&pair.antonym);
        if pos == neg {
            if pos {
                log::warn!("clip {} carries both {} and {}; skipped", clip.clip_id, pair.adverb, pair.antonym);
            }
            continue;
        }
        let train = match split {
            None => Some(true),
            Some(s) => s.is_train(&clip.clip_id, pair.class(pos)),
        };
        if let Some(train) = train {
            out.push(Member {
                clip,
                positive: pos,
                train,
            });
        }
    }
    out
}

fn training_behaviours(members: &[Member], positive: bool) -> Vec<ObjectBehaviour> {
    members
        .iter()
        .filter(|m| m.train && m.positive == positive)
        .flat_map(|m| m.clip.behaviours.iter().cloned())
        .collect()
}

/// Balance training behaviours, batch them and induce the indicator multiset.
pub fn induce_pair(pair: &Pair, members: &[Member], scheme: &BucketScheme, seed: u64) -> Result<InducedRuleSet> {
    let pos = training_behaviours(members, true);
    let neg = training_behaviours(members, false);
    let (pos, neg) = balance_by_repetition(&pos, &neg, (&pair.adverb, &pair.antonym))?;
    let batches = sample_batches(pair, &pos, &neg, derive_seed(seed, &format!("induce:{}", pair.stem())))?;
    Ok(collect_indicators(pair, &batches, scheme))
}

/// As [`induce_pair`], but a pair without enough data yields no rules.
pub fn induce_pair_or_empty(pair: &Pair, members: &[Member], scheme: &BucketScheme, seed: u64) -> Result<InducedRuleSet> {
    match induce_pair(pair, members, scheme, seed) {
        Err(e @ (Error::InsufficientData { .. } | Error::EmptyClass(_))) => {
            log::warn!("{pair}: {e}; no rules induced");
            Ok(InducedRuleSet {
                pair: pair.clone(),
                rules: Vec::new(),
            })
        }
        other => other,
    }
}

pub fn rules_path(dir: &Path, pair: &Pair) -> PathBuf {
    dir.join(format!("{}.rules", pair.stem()))
}

pub fn model_path(dir: &Path, pair: &Pair) -> PathBuf {
    dir.join(format!("{}.model", pair.stem()))
}

pub fn features_path(dir: &Path, pair: &Pair, train: bool) -> PathBuf {
    dir.join(format!("{}.{}.csv", pair.stem(), if train { "train" } else { "test" }))
}

/// What precedes the action embedding in each feature vector.
#[derive(Debug, Clone, Copy)]
pub enum FeatureInput<'a> {
    Indicator(&'a InducedRuleSet),
    Summary(&'a WordVectors),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairFeatures {
    /// Balanced by repetition when both classes are present.
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
}

pub fn featurize_pair(
    pair: &Pair,
    members: &[Member],
    input: FeatureInput,
    scheme: &BucketScheme,
    embedder: &ActionEmbedder,
) -> Result<PairFeatures> {
    let mut train_pos = Vec::new();
    let mut train_neg = Vec::new();
    let mut test = Vec::new();
    for m in members {
        let label = m.label(pair);
        for b in &m.clip.behaviours {
            let row = match input {
                FeatureInput::Indicator(rules) => {
                    indicator_features(b, &m.clip.action, label, &rules.rules, scheme, embedder)
                }
                FeatureInput::Summary(table) => summary_features(b, &m.clip.action, label, table, embedder)?,
            };
            match (m.train, m.positive) {
                (true, true) => train_pos.push(row),
                (true, false) => train_neg.push(row),
                (false, _) => test.push(row),
            }
        }
    }
    let train = match balance_by_repetition(&train_pos, &train_neg, (&pair.adverb, &pair.antonym)) {
        Ok((p, n)) => p.into_iter().chain(n).collect(),
        Err(e) => {
            log::warn!("{pair}: {e}; training rows left unbalanced");
            train_pos.into_iter().chain(train_neg).collect()
        }
    };
    Ok(PairFeatures { train, test })
}

/// Every `<clip>#<object>` key the members need from a summary table.
pub fn summary_keys(members: &[Member]) -> Vec<String> {
    members
        .iter()
        .flat_map(|m| m.clip.behaviours.iter().map(ObjectBehaviour::key))
        .collect()
}

fn polarity_of(pair: &Pair, row: &FeatureVector) -> Result<bool> {
    pair.polarity(&row.label).ok_or_else(|| {
        Error::Config(format!(
            "row {}#{}: label `{}` is not in {pair}",
            row.clip_id, row.object_label, row.label
        ))
    })
}

/// Shuffle rows by the derived seed, then train.
pub fn train_pair(pair: &Pair, rows: &[FeatureVector], params: &SvmParams, seed: u64) -> Result<SvmModel> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("train:{}", pair.stem())));
    order.shuffle(&mut rng);
    let x: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].values.clone()).collect();
    let y: Vec<bool> = order.iter().map(|&i| polarity_of(pair, &rows[i])).collect::<Result<_>>()?;
    let (mut model, solution) = svm::train(&x, &y, params).map_err(|e| match e {
        Error::Svm(m) => Error::Svm(format!("{pair}: {m}")),
        other => other,
    })?;
    log::info!(
        "{pair}: {} support vectors after {} iterations",
        model.support.len(),
        solution.iterations
    );
    model.classes = Some(pair.clone());
    Ok(model)
}

/// Group rows by clip in first-appearance order.
pub fn group_by_clip(rows: &[FeatureVector]) -> Vec<(&str, Vec<&FeatureVector>)> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&FeatureVector>> = BTreeMap::new();
    for r in rows {
        let g = groups.entry(&r.clip_id).or_default();
        if g.is_empty() {
            order.push(&r.clip_id);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|id| (id, groups.remove(id).expect("grouped")))
        .collect()
}

/// Test rows as labelled clips; every object of a clip must share its label.
pub fn labelled_clips(pair: &Pair, rows: &[FeatureVector]) -> Result<Vec<LabelledClip>> {
    group_by_clip(rows)
        .into_iter()
        .map(|(id, objs)| {
            let positive = polarity_of(pair, objs[0])?;
            for o in &objs {
                if polarity_of(pair, o)? != positive {
                    return Err(Error::Config(format!("clip {id} mixes labels of {pair}")));
                }
            }
            Ok(LabelledClip {
                clip_id: id.to_string(),
                positive,
                objects: objs.into_iter().cloned().collect(),
            })
        })
        .collect()
}

/// Predict each object and vote per clip; labels are ignored.
pub fn predict_rows(model: &SvmModel, rows: &[FeatureVector]) -> Result<Vec<ClipPrediction>> {
    group_by_clip(rows)
        .into_iter()
        .map(|(id, objs)| {
            let votes = objs
                .iter()
                .map(|o| Ok((o.object_label.clone(), model.predict(&o.values)?)))
                .collect::<Result<Vec<_>>>()?;
            majority_vote(id, votes)
        })
        .collect()
}

/// Clip predictions for one pair, each with its truth when the clip is labelled.
pub type PairPredictions = (Pair, Vec<(ClipPrediction, Option<bool>)>);

/// `pair clip_id predicted truth tie votes` per clip.
pub fn predictions_tsv(rows: &[PairPredictions]) -> String {
    let mut out = String::from("pair\tclip_id\tpredicted\ttruth\ttie\tvotes\n");
    for (pair, preds) in rows {
        for (p, truth) in preds {
            let votes: Vec<String> = p
                .votes
                .iter()
                .map(|(o, v)| format!("{o}:{}", pair.class(*v)))
                .collect();
            let _ = writeln!(
                out,
                "{pair}\t{}\t{}\t{}\t{}\t{}",
                p.clip_id,
                pair.class(p.positive),
                truth.map_or("", |t| pair.class(t)),
                p.tie,
                votes.join(",")
            );
        }
    }
    out
}

/// Outcome of evaluating one pair.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub score: PairScore,
    pub predictions: Vec<(ClipPrediction, Option<bool>)>,
}

/// Score one pair; a missing model gives an empty score.
pub fn evaluate_pair(pair: &Pair, model: Option<&SvmModel>, test_rows: &[FeatureVector]) -> Result<PairEvaluation> {
    let Some(model) = model else {
        log::warn!("{pair}: no model; excluded from the average");
        return Ok(PairEvaluation {
            score: PairScore::empty(pair.clone()),
            predictions: Vec::new(),
        });
    };
    let clips = labelled_clips(pair, test_rows)?;
    if clips.is_empty() {
        log::warn!("{pair}: no test clips; excluded from the average");
    }
    let (score, preds) = score_pair(pair, model, &clips)?;
    let predictions = preds
        .into_iter()
        .zip(&clips)
        .map(|(p, c)| (p, Some(c.positive)))
        .collect();
    Ok(PairEvaluation { score, predictions })
}

/// Load models and test features from directories. Without `allow_missing`
/// every absent model file is reported at once.
pub fn evaluate_dirs(
    pairs: &[Pair],
    features_dir: &Path,
    models_dir: &Path,
    allow_missing: bool,
) -> Result<Vec<PairEvaluation>> {
    let missing: Vec<PathBuf> = pairs
        .iter()
        .map(|p| model_path(models_dir, p))
        .filter(|p| !p.exists())
        .collect();
    if !allow_missing && !missing.is_empty() {
        return Err(Error::MissingModels(missing));
    }
    pairs
        .iter()
        .map(|pair| {
            let path = model_path(models_dir, pair);
            let model = if path.exists() { Some(SvmModel::load(&path)?) } else { None };
            let rows = load_features(features_path(features_dir, pair, false))?;
            evaluate_pair(pair, model.as_ref(), &rows)
        })
        .collect()
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    let path = path.as_ref();
    features_from_csv(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// Settings for [`run_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub obs_dir: PathBuf,
    pub work_dir: PathBuf,
    /// Defaults to `obs_dir/embeddings.txt` when that file exists.
    pub embeddings: Option<PathBuf>,
    /// Switches features from rule indicators to imported summaries.
    pub summary_vectors: Option<PathBuf>,
    pub scheme: BucketScheme,
    pub window: usize,
    pub seed: u64,
    pub svm: SvmParams,
    pub pairs: Vec<Pair>,
    pub train_fraction: f64,
}

impl PipelineConfig {
    pub fn new(obs_dir: impl Into<PathBuf>, work_dir: impl Into<PathBuf>, seed: u64) -> Self {
        PipelineConfig {
            obs_dir: obs_dir.into(),
            work_dir: work_dir.into(),
            embeddings: None,
            summary_vectors: None,
            scheme: BucketScheme::default(),
            window: DEFAULT_WINDOW,
            seed,
            svm: SvmParams::default(),
            pairs: default_pairs(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }

    /// Apply `key = value` settings. Relative paths resolve against `base`.
    /// Returns whether a seed was set.
    pub fn apply_kv(&mut self, text: &str, base: &Path) -> Result<bool> {
        let mut scheme_text = String::new();
        let mut seeded = false;
        for e in kv::parse(text)? {
            let bad = |what: &str| Error::parse(e.line, format!("{}: {what} `{}`", e.key, e.value));
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad("not a number"));
            let path = || base.join(&e.value);
            match e.key.as_str() {
                "obs_dir" => self.obs_dir = path(),
                "work_dir" => self.work_dir = path(),
                "embeddings" => self.embeddings = Some(path()),
                "summary_vectors" => self.summary_vectors = Some(path()),
                "window" => self.window = e.value.parse().map_err(|_| bad("not a count"))?,
                "seed" => {
                    self.seed = e.value.parse().map_err(|_| bad("not a seed"))?;
                    seeded = true;
                }
                "c" => self.svm.c = num(&e.value)?,
                "gamma" => self.svm.gamma = if e.value == "auto" { None } else { Some(num(&e.value)?) },
                "tol" => self.svm.tol = num(&e.value)?,
                "train_fraction" => self.train_fraction = num(&e.value)?,
                "pairs" => {
                    self.pairs = e
                        .value
                        .split(',')
                        .map(|p| {
                            let (a, b) = p.trim().split_once('/').ok_or_else(|| bad("not adverb/antonym"))?;
                            Pair::new(a, b)
                        })
                        .collect::<Result<_>>()?
                }
                "area" | "operation_area" | "movement" | "movement_in_place" | "magnitude" => {
                    let _ = writeln!(scheme_text, "{} = {}", e.key, e.value);
                }
                _ => return Err(Error::parse(e.line, format!("unknown key `{}`", e.key))),
            }
        }
        if !scheme_text.is_empty() {
            self.scheme = BucketScheme::parse(&scheme_text)?;
        }
        Ok(seeded)
    }

    /// Every setting that affects results, paths excluded.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "window = {}", self.window);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "c = {}", self.svm.c);
        let _ = writeln!(out, "gamma = {}", self.svm.gamma.map_or("auto".into(), |g| g.to_string()));
        let _ = writeln!(out, "tol = {}", self.svm.tol);
        let _ = writeln!(out, "train_fraction = {}", self.train_fraction);
        let pairs: Vec<String> = self.pairs.iter().map(Pair::to_string).collect();
        let _ = writeln!(out, "pairs = {}", pairs.join(","));
        let _ = writeln!(
            out,
            "features = {}",
            if self.summary_vectors.is_some() { "summary" } else { "indicator" }
        );
        out.push_str(&self.scheme.to_config());
        out
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }

    fn embeddings_path(&self) -> Option<PathBuf> {
        self.embeddings.clone().or_else(|| {
            let p = self.obs_dir.join("embeddings.txt");
            p.exists().then_some(p)
        })
    }
}

/// Files written under a root, with their digests.
struct Outputs<'a> {
    root: &'a Path,
    digests: BTreeMap<String, String>,
}

impl Outputs<'_> {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(self.root.join(rel), bytes)?;
        self.digests.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub rules: Vec<InducedRuleSet>,
    pub clips: usize,
    pub unknown_objects: usize,
}

/// Chain every stage; see the module docs for the files produced.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutcome> {
    let fingerprint = cfg.fingerprint();
    let mut out = Outputs {
        root: &cfg.work_dir,
        digests: BTreeMap::new(),
    };
    let mut inputs = BTreeMap::new();

    let index_path = cfg.obs_dir.join(CLIP_INDEX);
    inputs.insert(CLIP_INDEX.to_string(), digest_file(&index_path)?);
    for e in load_clip_index(&index_path)? {
        let (obs, flow) = clip_input_paths(&cfg.obs_dir, &e.clip_id);
        for p in [obs, flow] {
            if p.exists() {
                let name = p.file_name().expect("file").to_string_lossy().into_owned();
                inputs.insert(name, digest_file(&p)?);
            }
        }
    }

    let extracted = extract_dir(&cfg.obs_dir, &cfg.scheme, cfg.window)?;
    let unknown_objects = extracted.iter().map(|c| c.unknown_objects).sum();
    out.put("behaviours.jsonl", behaviours_to_jsonl(&extracted).as_bytes())?;
    for (name, text) in emit_programs(&extracted, &cfg.scheme) {
        out.put(&format!("asp/{name}"), text.as_bytes())?;
    }
    // downstream stages read the programs back, as the per-stage commands do
    let mut clips = load_programs(&cfg.work_dir.join("asp"))?;
    let order: BTreeMap<&str, usize> = extracted
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clip_id.as_str(), i))
        .collect();
    clips.retain(|c| order.contains_key(c.clip_id.as_str()));
    clips.sort_by_key(|c| order[c.clip_id.as_str()]);

    let split = stratified_split(&clips, &cfg.pairs, cfg.seed, cfg.train_fraction)?;
    out.put("split.tsv", split.to_tsv().as_bytes())?;

    let table = match cfg.embeddings_path() {
        Some(p) => {
            inputs.insert("embeddings".into(), digest_file(&p)?);
            WordVectors::load(&p)?
        }
        None => {
            log::warn!("no action embeddings; features carry no action component");
            WordVectors::new(0)
        }
    };
    let summaries = match &cfg.summary_vectors {
        Some(p) => {
            inputs.insert("summary_vectors".into(), digest_file(p)?);
            Some(import_summary_vectors(p)?)
        }
        None => None,
    };
    let members: Vec<Vec<Member>> = cfg
        .pairs
        .iter()
        .map(|p| pair_members(p, &clips, Some(&split)))
        .collect();

    let mut rules = Vec::new();
    if let Some(table) = &summaries {
        let keys: BTreeSet<String> = members.iter().flat_map(|m| summary_keys(m)).collect();
        require_keys(table, keys.iter().map(String::as_str))?;
    } else {
        rules = cfg
            .pairs
            .iter()
            .zip(&members)
            .map(|(p, m)| induce_pair_or_empty(p, m, &cfg.scheme, cfg.seed))
            .collect::<Result<Vec<_>>>()?;
        for r in &rules {
            out.put(&format!("rules/{}.rules", r.pair.stem()), r.to_text().as_bytes())?;
        }
    }

    let embedder = ActionEmbedder::new(&table);
    let mut features = Vec::with_capacity(cfg.pairs.len());
    for (i, pair) in cfg.pairs.iter().enumerate() {
        let input = match &summaries {
            Some(t) => FeatureInput::Summary(t),
            None => FeatureInput::Indicator(&rules[i]),
        };
        let f = featurize_pair(pair, &members[i], input, &cfg.scheme, &embedder)?;
        out.put(&format!("features/{}.train.csv", pair.stem()), features_to_csv(&f.train)?.as_bytes())?;
        out.put(&format!("features/{}.test.csv", pair.stem()), features_to_csv(&f.test)?.as_bytes())?;
        features.push(f);
    }
    let missing_actions = if table.dim() > 0 { embedder.missing() } else { Vec::new() };

    let models: Vec<Option<SvmModel>> = cfg
        .pairs
        .par_iter()
        .zip(&features)
        .map(|(pair, f)| match train_pair(pair, &f.train, &cfg.svm, cfg.seed) {
            Ok(m) => Ok(Some(m)),
            Err(Error::Svm(msg)) => {
                log::warn!("{msg}; no model trained");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    for (pair, m) in cfg.pairs.iter().zip(&models) {
        if let Some(m) = m {
            out.put(&format!("models/{}.model", pair.stem()), m.to_text().as_bytes())?;
        }
    }

    let evals = cfg
        .pairs
        .iter()
        .zip(&models)
        .zip(&features)
        .map(|((pair, m), f)| evaluate_pair(pair, m.as_ref(), &f.test))
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport {
        scores: evals.iter().map(|e| e.score.clone()).collect(),
        fingerprint: fingerprint.clone(),
        missing_actions,
    };
    let preds: Vec<_> = cfg
        .pairs
        .iter()
        .cloned()
        .zip(evals.into_iter().map(|e| e.predictions))
        .collect();
    out.put("reports/report.txt", report.to_text().as_bytes())?;
    out.put("reports/report.csv", report.to_csv().as_bytes())?;
    out.put("reports/predictions.tsv", predictions_tsv(&preds).as_bytes())?;

    let manifest = serde_json::json!({
        "config": cfg.canonical(),
        "config_fingerprint": fingerprint,
        "inputs": inputs,
        "outputs": out.digests,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("json") + "\n";
    write_atomic(cfg.work_dir.join("run-manifest.json"), text.as_bytes())?;

    Ok(RunOutcome {
        report,
        rules,
        clips: clips.len(),
        unknown_objects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn clip(id: &str, labels: &[&str]) -> ClipBehaviours {
        ClipBehaviours {
            clip_id: id.into(),
            action: "run".into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            behaviours: vec![],
            unknown_objects: 0,
        }
    }

    #[test]
    fn clip_index_parsing() {
        let idx = parse_clip_index("clip_id\taction\tlabels\nc1\trun-fast\tslowly, in\nc2\tcook\t\n").unwrap();
        assert_eq!(idx[0].action, "run_fast");
        assert_eq!(idx[0].labels, vec!["slowly", "in"]);
        assert!(idx[1].labels.is_empty());
        assert!(matches!(
            parse_clip_index("c1\trun\tx\nc1\trun\ty\n"),
            Err(Error::DuplicateKey { line: 2, .. })
        ));
        assert!(parse_clip_index("c 1\trun\tx\n").is_err());
        assert!(parse_clip_index("c1\tRun\tx\n").is_err());
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let clips: Vec<_> = (0..20)
            .map(|i| clip(&format!("c{i:02}"), if i < 10 { &["slowly"] } else { &["quickly"] }))
            .collect();
        let pairs = vec![Pair::new("slowly", "quickly").unwrap()];
        let s = stratified_split(&clips, &pairs, 3, 0.7).unwrap();
        for label in ["slowly", "quickly"] {
            let train = s.0.iter().filter(|((_, l), t)| l == label && **t).count();
            assert_eq!(train, 7);
        }
        assert_eq!(s, stratified_split(&clips, &pairs, 3, 0.7).unwrap());
        assert_ne!(s, stratified_split(&clips, &pairs, 4, 0.7).unwrap());
        assert_eq!(Split::parse(&s.to_tsv()).unwrap(), s);
    }

    #[test]
    fn members_skip_ambiguous_clips() {
        let clips = vec![clip("a", &["in"]), clip("b", &["out"]), clip("c", &["in", "out"]), clip("d", &[])];
        let pair = Pair::new("out", "in").unwrap();
        let m = pair_members(&pair, &clips, None);
        let ids: Vec<(&str, bool)> = m.iter().map(|m| (m.clip.clip_id.as_str(), m.positive)).collect();
        assert_eq!(ids, vec![("a", false), ("b", true)]);
    }

    #[test]
    fn config_keys() {
        let mut cfg = PipelineConfig::new("obs", "work", 0);
        let seeded = cfg
            .apply_kv(
                "seed = 9\nc = 2.5\ngamma = 0.5\npairs = slowly/quickly, in/out\nwindow = 3\nembeddings = e.txt\n",
                Path::new("/base"),
            )
            .unwrap();
        assert!(seeded);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.svm.c, 2.5);
        assert_eq!(cfg.svm.gamma, Some(0.5));
        assert_eq!(cfg.pairs.len(), 2);
        assert_eq!(cfg.embeddings, Some(PathBuf::from("/base/e.txt")));
        assert!(matches!(cfg.apply_kv("colour = red\n", Path::new(".")), Err(Error::Parse { line: 1, .. })));
        let before = cfg.fingerprint();
        cfg.work_dir = "elsewhere".into();
        assert_eq!(cfg.fingerprint(), before);
        cfg.seed = 10;
        assert_ne!(cfg.fingerprint(), before);
    }

    #[test]
    fn behaviours_jsonl_roundtrip() {
        let fx = synthetic::planted(3, 1);
        let dir = tempfile::tempdir().unwrap();
        fx.write(dir.path()).unwrap();
        let clips = extract_dir(dir.path(), &BucketScheme::default(), DEFAULT_WINDOW).unwrap();
        assert_eq!(clips.len(), 3);
        assert_eq!(behaviours_from_jsonl(&behaviours_to_jsonl(&clips)).unwrap(), clips);
    }

    #[test]
    fn programs_reload_to_the_same_behaviours() {
        let fx = synthetic::planted(4, 2);
        let dir = tempfile::tempdir().unwrap();
        fx.write(dir.path()).unwrap();
        let scheme = BucketScheme::default();
        let clips = extract_dir(dir.path(), &scheme, DEFAULT_WINDOW).unwrap();
        let asp = dir.path().join("asp");
        for (name, text) in emit_programs(&clips, &scheme) {
            write_atomic(asp.join(name), text.as_bytes()).unwrap();
        }
        let back = load_programs(&asp).unwrap();
        assert_eq!(back, clips);
    }

    #[test]
    fn missing_models_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let pairs = default_pairs();
        match evaluate_dirs(&pairs[..2], dir.path(), dir.path(), false) {
            Err(Error::MissingModels(p)) => {
                assert_eq!(p.len(), 2);
                assert!(p[0].ends_with("upwards_downwards.model"));
            }
            other => panic!("{other:?}"),
        }
    }
}
