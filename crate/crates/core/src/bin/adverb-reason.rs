use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adverb_reason::asp::{emit_program, generate_background, AspProgram};
use adverb_reason::behaviour::{BucketScheme, DEFAULT_WINDOW};
use adverb_reason::classify::EvalReport;
use adverb_reason::features::{features_to_csv, ActionEmbedder, WordVectors};
use adverb_reason::flat::{
    corpus_text, flatten, import_summary_vectors, mask_values, masked_corpus_text, parse_corpus, require_keys,
};
use adverb_reason::induce::InducedRuleSet;
use adverb_reason::io::{read_text, sha256_hex, write_atomic};
use adverb_reason::pair::{default_pairs, parse_pairs, Pair};
use adverb_reason::pipeline::{self as stage, FeatureInput, PipelineConfig, Split};
use adverb_reason::svm::{SvmModel, SvmParams};
use adverb_reason::{Error, Result};

/// Object-behaviour facts, indicator rules and adverb classifiers for video clips.
#[derive(Parser)]
#[command(name = "adverb-reason", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Observations to behaviours: one clip to an ASP program, or a directory to JSONL.
    Extract(ExtractArgs),
    /// Behaviours JSONL to one ASP program per clip.
    Emit(EmitArgs),
    /// Induce indicator rules per pair from ASP programs.
    Induce(InduceArgs),
    /// Write train/test feature CSVs per pair.
    Featurize(FeaturizeArgs),
    /// Train one SVM per pair.
    Train(TrainArgs),
    /// Predict clips with one model and print votes.
    Predict(PredictArgs),
    /// Score test features against trained models.
    Evaluate(EvaluateArgs),
    /// Flat word corpus from ASP programs.
    Flatten(FlattenArgs),
    /// Mask value words of a flat corpus.
    Mask(MaskArgs),
    /// Run every stage from observations to report.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SchemeArg {
    /// Bucket boundaries as `key = value` text.
    #[arg(long)]
    scheme: Option<PathBuf>,
}

impl SchemeArg {
    fn load(&self) -> Result<BucketScheme> {
        match &self.scheme {
            Some(p) => BucketScheme::load(p),
            None => Ok(BucketScheme::default()),
        }
    }
}

#[derive(Args)]
struct PairsArg {
    /// `adverb/antonym` per line; defaults to the 11 standard pairs.
    #[arg(long)]
    pairs: Option<PathBuf>,
}

impl PairsArg {
    fn load(&self) -> Result<Vec<Pair>> {
        match &self.pairs {
            Some(p) => parse_pairs(&read_text(p)?).map_err(|e| e.in_file(p)),
            None => Ok(default_pairs()),
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// One clip's observation JSONL.
    #[arg(long, conflicts_with = "obs_dir", required_unless_present = "obs_dir")]
    obs: Option<PathBuf>,
    /// Flow rasters for `--obs`.
    #[arg(long, requires = "obs")]
    flow: Option<PathBuf>,
    /// Directory with `clips.tsv` and per-clip observation files.
    #[arg(long)]
    obs_dir: Option<PathBuf>,
    /// Clip id for `--obs`; defaults to the file stem.
    #[arg(long, requires = "obs")]
    clip_id: Option<String>,
    #[arg(long, requires = "obs")]
    action: Option<String>,
    /// Comma-separated labels for `--obs`.
    #[arg(long, requires = "obs", value_delimiter = ',')]
    labels: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[command(flatten)]
    scheme: SchemeArg,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long)]
    behaviours: PathBuf,
    #[arg(long)]
    asp_dir: PathBuf,
    #[command(flatten)]
    scheme: SchemeArg,
}

#[derive(Args)]
struct InduceArgs {
    #[arg(long)]
    asp_dir: PathBuf,
    #[arg(long)]
    rules_dir: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Train/test assignment; without it every clip is training data.
    #[arg(long)]
    split: Option<PathBuf>,
    #[command(flatten)]
    pairs: PairsArg,
    #[command(flatten)]
    scheme: SchemeArg,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    asp_dir: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Indicator features from `<pair>.rules` files.
    #[arg(long, required_unless_present = "summary_vectors", conflicts_with = "summary_vectors")]
    rules_dir: Option<PathBuf>,
    /// Summary features keyed `<clip_id>#<object>`.
    #[arg(long)]
    summary_vectors: Option<PathBuf>,
    /// Action-type word vectors.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    split: Option<PathBuf>,
    #[command(flatten)]
    pairs: PairsArg,
    #[command(flatten)]
    scheme: SchemeArg,
}

#[derive(Args)]
struct SvmArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Kernel width; `1 / (dim · variance)` when absent.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

impl SvmArgs {
    fn params(&self) -> SvmParams {
        SvmParams {
            c: self.c,
            gamma: self.gamma,
            tol: self.tol,
            ..SvmParams::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features_dir: PathBuf,
    #[arg(long)]
    models_dir: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    svm: SvmArgs,
    #[command(flatten)]
    pairs: PairsArg,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV; the label column is ignored.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    features_dir: PathBuf,
    #[arg(long)]
    models_dir: PathBuf,
    /// Text table destination; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV table destination.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Report pairs without a model as n/a instead of failing.
    #[arg(long)]
    allow_missing: bool,
    #[command(flatten)]
    pairs: PairsArg,
}

#[derive(Args)]
struct FlattenArgs {
    #[arg(long, conflicts_with = "behaviours", required_unless_present = "behaviours")]
    asp_dir: Option<PathBuf>,
    #[arg(long)]
    behaviours: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    rate: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// `key = value` settings; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    obs_dir: Option<PathBuf>,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    summary_vectors: Option<PathBuf>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    pairs: PairsArg,
}

/// Usage problems found after parsing; exit 2.
struct Usage(String);

enum Failure {
    Usage(Usage),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_split(path: Option<&PathBuf>) -> Result<Option<Split>> {
    path.map(Split::load).transpose()
}

fn extract(a: ExtractArgs) -> Result<()> {
    let scheme = a.scheme.load()?;
    if let Some(dir) = &a.obs_dir {
        let clips = stage::extract_dir(dir, &scheme, a.window)?;
        return emit(a.out.as_deref(), &stage::behaviours_to_jsonl(&clips));
    }
    let obs = a.obs.expect("clap requires --obs or --obs-dir");
    let stem = obs.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let index = format!(
        "{}\t{}\t{}\n",
        a.clip_id.as_deref().unwrap_or(&stem),
        a.action.as_deref().unwrap_or("none"),
        a.labels.join(",")
    );
    let entry = stage::parse_clip_index(&index)?.remove(0);
    let clip = stage::extract_files(&obs, a.flow.as_deref(), &entry, &scheme, a.window)?;
    let action = a.action.is_some().then_some(clip.action.as_str());
    let program = AspProgram::from_behaviours(
        &clip.clip_id,
        action,
        &clip.labels,
        &clip.behaviours,
        generate_background(&scheme),
    );
    emit(a.out.as_deref(), &emit_program(&program))
}

fn emit_cmd(a: EmitArgs) -> Result<()> {
    let scheme = a.scheme.load()?;
    let clips = stage::load_behaviours(&a.behaviours)?;
    for (name, text) in stage::emit_programs(&clips, &scheme) {
        write_atomic(a.asp_dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

fn induce(a: InduceArgs) -> Result<()> {
    let scheme = a.scheme.load()?;
    let pairs = a.pairs.load()?;
    let clips = stage::load_programs(&a.asp_dir)?;
    let split = load_split(a.split.as_ref())?;
    for pair in &pairs {
        let members = stage::pair_members(pair, &clips, split.as_ref());
        let rules = stage::induce_pair_or_empty(pair, &members, &scheme, a.seed)?;
        log::info!("{pair}: {} rules", rules.len());
        rules.save(stage::rules_path(&a.rules_dir, pair))?;
    }
    Ok(())
}

fn featurize(a: FeaturizeArgs) -> Result<()> {
    let scheme = a.scheme.load()?;
    let pairs = a.pairs.load()?;
    let clips = stage::load_programs(&a.asp_dir)?;
    let split = load_split(a.split.as_ref())?;
    let table = match &a.embeddings {
        Some(p) => WordVectors::load(p)?,
        None => WordVectors::new(0),
    };
    let embedder = ActionEmbedder::new(&table);
    let summaries = a.summary_vectors.as_ref().map(import_summary_vectors).transpose()?;
    let members: Vec<_> = pairs
        .iter()
        .map(|p| stage::pair_members(p, &clips, split.as_ref()))
        .collect();
    if let Some(t) = &summaries {
        let keys: Vec<String> = members.iter().flat_map(|m| stage::summary_keys(m)).collect();
        require_keys(t, keys.iter().map(String::as_str))?;
    }
    for (pair, members) in pairs.iter().zip(&members) {
        let rules;
        let input = match (&summaries, &a.rules_dir) {
            (Some(t), _) => FeatureInput::Summary(t),
            (None, Some(dir)) => {
                rules = InducedRuleSet::load(stage::rules_path(dir, pair), pair)?;
                FeatureInput::Indicator(&rules)
            }
            (None, None) => unreachable!("clap requires one feature source"),
        };
        let f = stage::featurize_pair(pair, members, input, &scheme, &embedder)?;
        write_atomic(stage::features_path(&a.out_dir, pair, true), features_to_csv(&f.train)?.as_bytes())?;
        write_atomic(stage::features_path(&a.out_dir, pair, false), features_to_csv(&f.test)?.as_bytes())?;
    }
    if a.embeddings.is_some() && !embedder.missing().is_empty() {
        log::warn!("actions without embedding: {}", embedder.missing().join(" "));
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let pairs = a.pairs.load()?;
    let params = a.svm.params();
    for pair in &pairs {
        let rows = stage::load_features(stage::features_path(&a.features_dir, pair, true))?;
        match stage::train_pair(pair, &rows, &params, a.seed) {
            Ok(model) => model.save(stage::model_path(&a.models_dir, pair))?,
            Err(Error::Svm(msg)) => log::warn!("{msg}; no model written"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = SvmModel::load(&a.model)?;
    let rows = stage::load_features(&a.features)?;
    let preds = stage::predict_rows(&model, &rows)?;
    let pair = model
        .classes
        .clone()
        .ok_or_else(|| Error::Config(format!("{}: model has no class names", a.model.display())))?;
    let text = stage::predictions_tsv(&[(pair, preds.into_iter().map(|p| (p, None)).collect())]);
    emit(a.out.as_deref(), &text)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let pairs = a.pairs.load()?;
    let evals = stage::evaluate_dirs(&pairs, &a.features_dir, &a.models_dir, a.allow_missing)?;
    let mut digest_input = String::new();
    for pair in &pairs {
        let path = stage::model_path(&a.models_dir, pair);
        if path.exists() {
            digest_input.push_str(&read_text(path)?);
        }
    }
    let report = EvalReport {
        scores: evals.into_iter().map(|e| e.score).collect(),
        fingerprint: sha256_hex(digest_input.as_bytes()),
        missing_actions: Vec::new(),
    };
    emit(a.report.as_deref(), &report.to_text())?;
    if let Some(p) = &a.csv {
        write_atomic(p, report.to_csv().as_bytes())?;
    }
    Ok(())
}

fn flatten_cmd(a: FlattenArgs) -> Result<()> {
    let clips = match (&a.asp_dir, &a.behaviours) {
        (Some(dir), _) => stage::load_programs(dir)?,
        (None, Some(p)) => stage::load_behaviours(p)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let flat: Vec<_> = clips.iter().flat_map(|c| c.behaviours.iter().map(flatten)).collect();
    emit(a.out.as_deref(), &corpus_text(&flat))
}

fn mask(a: MaskArgs) -> Result<()> {
    let corpus = parse_corpus(&read_text(&a.corpus)?).map_err(|e| e.in_file(&a.corpus))?;
    let samples = corpus
        .iter()
        .map(|f| mask_values(f, a.rate, a.seed))
        .collect::<Result<Vec<_>>>()?;
    emit(a.out.as_deref(), &masked_corpus_text(&samples))
}

fn pipeline(a: PipelineArgs) -> std::result::Result<(), Failure> {
    let mut cfg = PipelineConfig::new("", "", 0);
    let mut seeded = false;
    if let Some(path) = &a.config {
        let base = path.parent().unwrap_or(Path::new("."));
        seeded = cfg
            .apply_kv(&read_text(path)?, base)
            .map_err(|e| e.in_file(path))?;
    }
    if let Some(d) = a.obs_dir {
        cfg.obs_dir = d;
    }
    if let Some(d) = a.work_dir {
        cfg.work_dir = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
        seeded = true;
    }
    if a.embeddings.is_some() {
        cfg.embeddings = a.embeddings;
    }
    if a.summary_vectors.is_some() {
        cfg.summary_vectors = a.summary_vectors;
    }
    if let Some(c) = a.c {
        cfg.svm.c = c;
    }
    if a.gamma.is_some() {
        cfg.svm.gamma = a.gamma;
    }
    if a.pairs.pairs.is_some() {
        cfg.pairs = a.pairs.load()?;
    }
    if !seeded {
        return Err(Usage("pipeline needs a seed (--seed or `seed =` in the config)".into()).into());
    }
    if cfg.obs_dir.as_os_str().is_empty() || cfg.work_dir.as_os_str().is_empty() {
        return Err(Usage("pipeline needs --obs-dir and --work-dir (or config keys)".into()).into());
    }
    let outcome = stage::run_pipeline(&cfg)?;
    print!("{}", outcome.report.to_text());
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Extract(a) => extract(a)?,
        Command::Emit(a) => emit_cmd(a)?,
        Command::Induce(a) => induce(a)?,
        Command::Featurize(a) => featurize(a)?,
        Command::Train(a) => train(a)?,
        Command::Predict(a) => predict(a)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::Flatten(a) => flatten_cmd(a)?,
        Command::Mask(a) => mask(a)?,
        Command::Pipeline(a) => pipeline(a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
