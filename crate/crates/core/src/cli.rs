//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 some conversations or methods were skipped
//! (diagnostics on stderr), 2 fatal input error.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::confidence::{self, ConfidenceAnnotation, ConfidenceConfig, Method, SpectralBasis};
use crate::error::{Error, Result};
use crate::ingest::{self, CorpusManifest, ManifestEntry};
use crate::metrics::{DerBreakdown, ScoringConfig};
use crate::selection::{self, Criterion, PartitionMode, ScoredConversation};
use crate::spectral::{self, SpectralParams, DEFAULT_MAX_SPEAKERS};
use crate::synth::{self, ErrorBias, SynthSpec};
use crate::types::{Diarization, EmbeddingTrack};

#[derive(Debug, Parser)]
#[command(name = "diarconf", version, about = "Confidence scoring and covered-DER evaluation for speaker diarization")]
pub struct Cli {
    /// Worker threads for per-conversation work (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral-clustering diarization of every conversation's embeddings.
    Diarize(DiarizeArgs),
    /// Confidence scores for every hypothesis segment.
    Score(ScoreArgs),
    /// DER and covered DER at fixed coverage targets.
    Evaluate(EvaluateArgs),
    /// Covered DER over a grid of coverage targets.
    Sweep(SweepArgs),
    /// Pick a global score threshold on a validation corpus.
    Threshold(ThresholdArgs),
    /// Duration-weighted score histograms.
    Histogram(HistogramArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DiarizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_SPEAKERS)]
    pub max_speakers: usize,
    /// Use this speaker count instead of the eigen-gap estimate.
    #[arg(long)]
    pub num_speakers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated subset of cosine,local,silhouette,spectral.
    #[arg(long, value_delimiter = ',', default_value = "cosine,local,silhouette")]
    pub methods: Vec<Method>,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Seconds excluded on each side of every reference boundary.
    #[arg(long, default_value_t = 0.25)]
    pub collar: f64,
    /// Score regions where several reference speakers overlap.
    #[arg(long)]
    pub include_overlap: bool,
}

impl ScoringArgs {
    fn config(&self) -> Result<ScoringConfig> {
        ScoringConfig::new(self.collar, !self.include_overlap)
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Confidence CSV as written by `score`.
    #[arg(long)]
    pub confidence: PathBuf,
    /// Restrict to these methods (default: every method in the CSV).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Rank segments across the whole corpus instead of per conversation.
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Coverage targets; 1.0 is always added.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.9")]
    pub coverage: Vec<f64>,
    /// Also emit one row per conversation.
    #[arg(long)]
    pub per_conversation: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Coverage targets (default 0.30 to 1.00 in steps of 0.05).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Validation corpus.
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// `ratio` (cDER / coverage) or `min-coverage:<fraction>`.
    #[arg(long, default_value = "ratio")]
    pub criterion: Criterion,
    /// Test corpus the chosen thresholds are applied to.
    #[arg(long, requires = "test_confidence")]
    pub test_manifest: Option<PathBuf>,
    #[arg(long, requires = "test_manifest")]
    pub test_confidence: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub confidence: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub conversations: usize,
    #[arg(long, default_value_t = 4)]
    pub num_speakers: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Conversation length in seconds.
    #[arg(long, default_value_t = 120.0)]
    pub length: f64,
    #[arg(long, default_value_t = 2.0)]
    pub turn_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub turn_max: f64,
    #[arg(long, default_value_t = 100.0)]
    pub concentration: f64,
    /// Concentration of per-turn voice drift (`inf` disables it).
    #[arg(long, default_value_t = synth::TURN_CONCENTRATION)]
    pub turn_concentration: f64,
    /// Minimum angle between speaker directions, degrees.
    #[arg(long, default_value_t = 60.0)]
    pub min_angle: f64,
    #[arg(long, default_value_t = 0.15)]
    pub error_rate: f64,
    /// `random` or `distance_correlated`.
    #[arg(long, default_value = "distance_correlated")]
    pub error_bias: ErrorBias,
    /// Conversation ids are this prefix plus a three-digit index.
    #[arg(long, default_value = "conv")]
    pub prefix: String,
}

/// Non-fatal outcome of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some conversations or methods were skipped.
    Skipped,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Skipped => 1,
        }
    }
}

#[derive(Debug, Default)]
struct Report {
    skipped: bool,
}

impl Report {
    fn warn(&mut self, msg: impl std::fmt::Display) {
        eprintln!("warning: {msg}");
    }

    fn skip(&mut self, msg: impl std::fmt::Display) {
        eprintln!("warning: skipped {msg}");
        self.skipped = true;
    }

    fn status(&self) -> Status {
        if self.skipped {
            Status::Skipped
        } else {
            Status::Success
        }
    }
}

/// Parse arguments from the process and run; returns the exit code.
pub fn main() -> i32 {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Status> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Diarize(a) => cmd_diarize(a),
        Command::Score(a) => cmd_score(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Histogram(a) => cmd_histogram(a),
        Command::Synth(a) => cmd_synth(a),
    })
}

/// Write through a temporary file in the same directory, then rename.
fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Conversation id made safe for use as a file name.
fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect()
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn load_manifest(path: &Path, report: &mut Report) -> Result<CorpusManifest> {
    let m = CorpusManifest::load(path).map_err(|e| Error::InvalidArgument(format!("manifest {}: {e}", path.display())))?;
    if m.conversations.is_empty() {
        report.warn(format!("manifest {} lists no conversations", path.display()));
    }
    Ok(m)
}

fn load_track(m: &CorpusManifest, e: &ManifestEntry) -> std::result::Result<EmbeddingTrack<f64>, String> {
    let path = m.resolve(&e.embeddings);
    let track: EmbeddingTrack<f64> = open(&path)
        .and_then(ingest::parse_embeddings_csv)
        .map_err(|err| format!("conversation '{}': embeddings {}: {err}", e.id, path.display()))?;
    if track.conversation_id() != e.id {
        return Err(format!(
            "conversation '{}': embeddings {} belong to '{}'",
            e.id,
            path.display(),
            track.conversation_id()
        ));
    }
    Ok(track)
}

/// Fail with every message at once so all bad inputs are reported.
fn fatal_if_any(errors: Vec<String>) -> Result<()> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(errors.join("\n")))
    }
}

fn load_tracks(m: &CorpusManifest) -> Result<Vec<EmbeddingTrack<f64>>> {
    let loaded: Vec<_> = m.conversations.par_iter().map(|e| load_track(m, e)).collect();
    let (ok, bad): (Vec<_>, Vec<_>) = loaded.into_iter().partition(|r| r.is_ok());
    fatal_if_any(bad.into_iter().filter_map(|r| r.err()).collect())?;
    Ok(ok.into_iter().filter_map(|r| r.ok()).collect())
}

/// One conversation's diarization out of an RTTM file. `Ok(None)` means the
/// file has no segments for it.
fn load_rttm(path: &Path, id: &str) -> std::result::Result<(Option<Diarization>, Vec<String>), String> {
    let parsed = open(path).and_then(ingest::parse_rttm).map_err(|e| format!("{}: {e}", path.display()))?;
    let warnings = parsed.warnings.iter().map(|w| format!("{}:{}: {}", path.display(), w.line, w.message)).collect();
    let mut diarizations = parsed.diarizations;
    Ok((diarizations.remove(id), warnings))
}

fn cmd_diarize(a: &DiarizeArgs) -> Result<Status> {
    let mut report = Report::default();
    let manifest = load_manifest(&a.manifest, &mut report)?;
    fs::create_dir_all(&a.out)?;
    let tracks = load_tracks(&manifest)?;
    let params = SpectralParams { max_speakers: a.max_speakers, num_speakers: a.num_speakers };
    let results: Vec<_> = tracks.par_iter().map(|t| spectral::spectral_diarize(t, &params)).collect();

    let mut combined = Vec::new();
    let mut entries = Vec::new();
    for ((entry, track), result) in manifest.conversations.iter().zip(&tracks).zip(results) {
        let sd = match result {
            Ok(sd) => sd,
            Err(e) => {
                report.skip(format!("conversation '{}': {e}", entry.id));
                continue;
            }
        };
        let stem = file_stem(&entry.id);
        let rttm_name = format!("{stem}.rttm");
        write_atomic(&a.out.join(&rttm_name), |w| ingest::write_rttm([&sd.diarization], w))?;
        let basis = SpectralBasis::from_decomposition(entry.id.as_str(), &sd.decomposition, &sd.assignment);
        let windows: Vec<_> = track.embeddings().iter().map(|e| e.interval).collect();
        write_atomic(&a.out.join(format!("{stem}.basis.csv")), |w| ingest::write_basis_csv(&basis, &windows, w))?;
        entries.push(ManifestEntry {
            id: entry.id.clone(),
            embeddings: absolute(&manifest.resolve(&entry.embeddings)),
            hypothesis: Some(PathBuf::from(rttm_name)),
            reference: entry.reference.as_ref().map(|r| absolute(&manifest.resolve(r))),
        });
        combined.push(sd.diarization);
    }
    write_atomic(&a.out.join("all.rttm"), |w| ingest::write_rttm(&combined, w))?;
    let out_manifest = CorpusManifest::new(entries)?;
    write_atomic(&a.out.join("manifest.json"), |w| Ok(w.write_all(out_manifest.to_json()?.as_bytes())?))?;
    Ok(report.status())
}

/// Sidecar written by `diarize` next to a hypothesis RTTM.
fn basis_path(hypothesis: &Path) -> PathBuf {
    hypothesis.with_extension("basis.csv")
}

fn load_basis(path: &Path, track: &EmbeddingTrack<f64>) -> std::result::Result<SpectralBasis<f64>, String> {
    let (basis, windows) = open(path)
        .and_then(ingest::parse_basis_csv::<f64, _>)
        .map_err(|e| format!("basis {}: {e}", path.display()))?;
    let same_windows = windows.len() == track.len()
        && windows.iter().zip(track.embeddings()).all(|(w, e)| (w.start() - e.interval.start()).abs() < 5e-4 && (w.end() - e.interval.end()).abs() < 5e-4);
    if basis.conversation_id != track.conversation_id() || !same_windows {
        return Err(format!("basis {} does not match the embedding track", path.display()));
    }
    Ok(basis)
}

enum ScoreOutcome {
    Scored { annotations: Vec<ConfidenceAnnotation>, notes: Vec<(bool, String)> },
    Skipped(String),
}

fn score_conversation(m: &CorpusManifest, entry: &ManifestEntry, track: &EmbeddingTrack<f64>, methods: &[Method]) -> Result<ScoreOutcome> {
    let Some(hyp) = &entry.hypothesis else {
        return Ok(ScoreOutcome::Skipped(format!("conversation '{}': no hypothesis in manifest", entry.id)));
    };
    let hyp_path = m.resolve(hyp);
    let (d, warnings) =
        load_rttm(&hyp_path, &entry.id).map_err(|e| Error::InvalidArgument(format!("conversation '{}': hypothesis {e}", entry.id)))?;
    let mut notes: Vec<(bool, String)> = warnings.into_iter().map(|w| (false, w)).collect();
    let d = d.unwrap_or_else(|| {
        notes.push((false, format!("conversation '{}': no hypothesis segments in {}", entry.id, hyp_path.display())));
        Diarization::empty(entry.id.as_str())
    });
    let basis = if methods.contains(&Method::Spectral) {
        let p = basis_path(&hyp_path);
        if p.exists() {
            match load_basis(&p, track) {
                Ok(b) => Some(b),
                Err(e) => {
                    notes.push((false, format!("conversation '{}': {e}", entry.id)));
                    None
                }
            }
        } else {
            None
        }
    } else {
        None
    };
    let cfg = ConfidenceConfig::default();
    let mut annotations = Vec::new();
    for &method in methods {
        match confidence::score(method, &d, track, basis.as_ref(), &cfg) {
            Ok(a) => annotations.extend(a),
            Err(e) => notes.push((true, format!("conversation '{}', method {method}: {e}", entry.id))),
        }
    }
    Ok(ScoreOutcome::Scored { annotations, notes })
}

fn dedup_methods(methods: &[Method]) -> Vec<Method> {
    let mut m = methods.to_vec();
    m.sort();
    m.dedup();
    m
}

fn cmd_score(a: &ScoreArgs) -> Result<Status> {
    let mut report = Report::default();
    let methods = dedup_methods(&a.methods);
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no confidence methods selected".into()));
    }
    let manifest = load_manifest(&a.manifest, &mut report)?;
    fs::create_dir_all(&a.out)?;
    let tracks = load_tracks(&manifest)?;
    let outcomes: Vec<Result<ScoreOutcome>> = manifest
        .conversations
        .par_iter()
        .zip(&tracks)
        .map(|(e, t)| score_conversation(&manifest, e, t, &methods))
        .collect();
    let mut all = Vec::new();
    let mut fatal = Vec::new();
    for o in outcomes {
        match o {
            Err(e) => fatal.push(e.to_string()),
            Ok(ScoreOutcome::Skipped(msg)) => report.skip(msg),
            Ok(ScoreOutcome::Scored { annotations, notes }) => {
                for (skipped, msg) in notes {
                    if skipped {
                        report.skip(msg)
                    } else {
                        report.warn(msg)
                    }
                }
                all.extend(annotations);
            }
        }
    }
    fatal_if_any(fatal)?;
    write_atomic(&a.out.join("confidence.csv"), |w| ingest::write_confidence_csv(&all, w))?;
    Ok(report.status())
}

/// Per method, the conversations that can be evaluated.
struct ScoredCorpus {
    methods: Vec<(Method, Vec<ScoredConversation>)>,
}

fn load_scored_corpus(a: &CorpusArgs, report: &mut Report) -> Result<ScoredCorpus> {
    let manifest = load_manifest(&a.manifest, report)?;
    let annotations = open(&a.confidence)
        .and_then(ingest::parse_confidence_csv)
        .map_err(|e| Error::InvalidArgument(format!("confidence {}: {e}", a.confidence.display())))?;
    let mut by_method: BTreeMap<Method, BTreeMap<String, Vec<ConfidenceAnnotation>>> = BTreeMap::new();
    for ann in annotations {
        by_method.entry(ann.method).or_default().entry(ann.segment.conversation_id.clone()).or_default().push(ann);
    }
    let methods = if a.methods.is_empty() { by_method.keys().copied().collect() } else { dedup_methods(&a.methods) };
    for m in &methods {
        if !by_method.contains_key(m) {
            report.warn(format!("method {m} has no scores in {}", a.confidence.display()));
        }
    }

    type Loaded = std::result::Result<Option<(Diarization, Diarization)>, String>;
    let load = |e: &ManifestEntry| -> Loaded {
        let (Some(r), Some(h)) = (&e.reference, &e.hypothesis) else { return Ok(None) };
        let side = |p: &PathBuf, what: &str| -> std::result::Result<(Diarization, Vec<String>), String> {
            let (d, w) = load_rttm(&manifest.resolve(p), &e.id).map_err(|err| format!("conversation '{}': {what} {err}", e.id))?;
            Ok((d.unwrap_or_else(|| Diarization::empty(e.id.as_str())), w))
        };
        let (reference, _) = side(r, "reference")?;
        let (hypothesis, _) = side(h, "hypothesis")?;
        Ok(Some((reference, hypothesis)))
    };
    let loaded: Vec<Loaded> = manifest.conversations.par_iter().map(load).collect();
    let mut fatal = Vec::new();
    let mut pairs = Vec::new();
    for (entry, l) in manifest.conversations.iter().zip(loaded) {
        match l {
            Err(msg) => fatal.push(msg),
            Ok(None) => report.skip(format!("conversation '{}': reference or hypothesis missing from manifest", entry.id)),
            Ok(Some(p)) => pairs.push((entry.id.clone(), p)),
        }
    }
    fatal_if_any(fatal)?;

    let mut out = Vec::new();
    for m in methods {
        let scores = by_method.remove(&m).unwrap_or_default();
        let mut corpus = Vec::new();
        for (id, (reference, hypothesis)) in &pairs {
            match scores.get(id) {
                Some(anns) => corpus.push(ScoredConversation {
                    reference: reference.clone(),
                    hypothesis: hypothesis.clone(),
                    annotations: anns.clone(),
                }),
                None if hypothesis.is_empty() => corpus.push(ScoredConversation {
                    reference: reference.clone(),
                    hypothesis: hypothesis.clone(),
                    annotations: Vec::new(),
                }),
                None => report.skip(format!("conversation '{id}', method {m}: no confidence scores")),
            }
        }
        out.push((m, corpus));
    }
    Ok(ScoredCorpus { methods: out })
}

fn partition_mode(a: &CorpusArgs) -> PartitionMode {
    if a.pooled {
        PartitionMode::Pooled
    } else {
        PartitionMode::PerConversation
    }
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn breakdown_cells(b: &DerBreakdown) -> [String; 5] {
    [
        format!("{:.6}", b.miss),
        format!("{:.6}", b.false_alarm),
        format!("{:.6}", b.speaker_error),
        format!("{:.6}", b.scored_speech),
        fmt_rate(b.der()),
    ]
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<Status> {
    let mut report = Report::default();
    let cfg = a.corpus.scoring.config()?;
    let mut targets = a.coverage.clone();
    targets.push(1.0);
    let targets = selection::normalize_grid(&targets)?;
    let corpus = load_scored_corpus(&a.corpus, &mut report)?;
    fs::create_dir_all(&a.out)?;
    let mode = partition_mode(&a.corpus);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (method, convs) in &corpus.methods {
        let points: Vec<_> = targets.par_iter().map(|&t| selection::evaluate_at_coverage(convs, t, &cfg, mode)).collect();
        for (t, p) in targets.iter().zip(&points) {
            let mut row = vec!["ALL".to_owned(), method.to_string(), format!("{t:.6}"), format!("{:.6}", p.achieved_coverage)];
            row.extend(breakdown_cells(&p.breakdown));
            rows.push(row);
            if a.per_conversation {
                for (c, (part, b)) in convs.iter().zip(&p.per_conversation) {
                    let mut row = vec![
                        c.hypothesis.conversation_id().to_owned(),
                        method.to_string(),
                        format!("{t:.6}"),
                        format!("{:.6}", part.achieved_coverage),
                    ];
                    row.extend(breakdown_cells(b));
                    rows.push(row);
                }
            }
        }
    }
    let header = [
        "conversation_id",
        "method",
        "coverage_target",
        "achieved_coverage",
        "miss",
        "false_alarm",
        "speaker_error",
        "scored_speech",
        "der",
    ];
    write_csv(&a.out.join("metrics.csv"), &header, &rows)?;
    Ok(report.status())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(header)?;
        for r in rows {
            c.write_record(r)?;
        }
        c.flush()?;
        Ok(())
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Status> {
    let mut report = Report::default();
    let cfg = a.corpus.scoring.config()?;
    let grid = if a.grid.is_empty() { selection::default_grid() } else { selection::normalize_grid(&a.grid)? };
    let corpus = load_scored_corpus(&a.corpus, &mut report)?;
    fs::create_dir_all(&a.out)?;
    let mode = partition_mode(&a.corpus);
    let mut rows = Vec::new();
    for (method, convs) in &corpus.methods {
        let points: Vec<_> = grid.par_iter().map(|&t| selection::evaluate_at_coverage(convs, t, &cfg, mode)).collect();
        for (t, p) in grid.iter().zip(points) {
            rows.push(vec![method.to_string(), format!("{t:.6}"), format!("{:.6}", p.achieved_coverage), fmt_rate(p.cder())]);
        }
    }
    write_csv(&a.out.join("curve.csv"), &["method", "coverage_target", "achieved_coverage", "cder"], &rows)?;
    Ok(report.status())
}

fn cmd_threshold(a: &ThresholdArgs) -> Result<Status> {
    let mut report = Report::default();
    let cfg = a.corpus.scoring.config()?;
    let validation = load_scored_corpus(&a.corpus, &mut report)?;
    fs::create_dir_all(&a.out)?;
    let mut chosen = Vec::new();
    for (method, convs) in &validation.methods {
        match selection::select_global_threshold(convs, *method, a.criterion, &cfg) {
            Ok(t) => {
                let json = serde_json::to_string_pretty(&t)?;
                write_atomic(&a.out.join(format!("threshold_{method}.json")), |w| Ok(w.write_all(json.as_bytes())?))?;
                chosen.push(t);
            }
            Err(e) => report.skip(format!("method {method}: {e}")),
        }
    }
    if let (Some(manifest), Some(confidence)) = (&a.test_manifest, &a.test_confidence) {
        let test_args = CorpusArgs {
            manifest: manifest.clone(),
            confidence: confidence.clone(),
            methods: chosen.iter().map(|t| t.method).collect(),
            scoring: ScoringArgs { collar: a.corpus.scoring.collar, include_overlap: a.corpus.scoring.include_overlap },
            pooled: false,
        };
        let test = load_scored_corpus(&test_args, &mut report)?;
        let mut rows = Vec::new();
        for t in &chosen {
            let Some((_, convs)) = test.methods.iter().find(|(m, _)| *m == t.method) else { continue };
            let p = selection::evaluate_at_threshold(convs, t.threshold, &cfg);
            let mut row = vec![t.method.to_string(), t.threshold.to_string(), format!("{:.6}", p.achieved_coverage)];
            row.extend(breakdown_cells(&p.breakdown));
            rows.push(row);
        }
        let header =
            ["method", "threshold", "achieved_coverage", "miss", "false_alarm", "speaker_error", "scored_speech", "cder"];
        write_csv(&a.out.join("test_metrics.csv"), &header, &rows)?;
    }
    Ok(report.status())
}

fn cmd_histogram(a: &HistogramArgs) -> Result<Status> {
    let report = Report::default();
    let annotations = open(&a.confidence)
        .and_then(ingest::parse_confidence_csv)
        .map_err(|e| Error::InvalidArgument(format!("confidence {}: {e}", a.confidence.display())))?;
    let mut by_method: BTreeMap<Method, Vec<ConfidenceAnnotation>> = BTreeMap::new();
    for ann in annotations {
        by_method.entry(ann.method).or_default().push(ann);
    }
    if !a.methods.is_empty() {
        let keep = dedup_methods(&a.methods);
        by_method.retain(|m, _| keep.contains(m));
    }
    fs::create_dir_all(&a.out)?;
    let mut rows = Vec::new();
    for (method, anns) in &by_method {
        for b in selection::histogram(anns, a.bins)? {
            rows.push(vec![method.to_string(), b.low.to_string(), b.high.to_string(), format!("{:.6}", b.duration), b.count.to_string()]);
        }
    }
    write_csv(&a.out.join("histogram.csv"), &["method", "bin_low", "bin_high", "duration", "count"], &rows)?;
    Ok(report.status())
}

fn cmd_synth(a: &SynthArgs) -> Result<Status> {
    let spec = SynthSpec {
        seed: a.seed,
        num_speakers: a.num_speakers,
        dim: a.dim,
        conversation_length: a.length,
        turn_length: (a.turn_min, a.turn_max),
        concentration: a.concentration,
        turn_concentration: a.turn_concentration,
        inter_speaker_min_angle: a.min_angle,
        error_rate: a.error_rate,
        error_bias: a.error_bias,
        ..SynthSpec::default()
    };
    spec.validate()?;
    fs::create_dir_all(&a.out)?;
    let ids: Vec<String> = (0..a.conversations).map(|i| format!("{}{i:03}", a.prefix)).collect();
    let convs: Vec<_> =
        ids.par_iter().enumerate().map(|(i, id)| synth::generate(&spec, id, i as u64)).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let mut error_rows = Vec::new();
    for (id, c) in ids.iter().zip(&convs) {
        let stem = file_stem(id);
        let (emb, reference, hypothesis) = (format!("{stem}.emb.csv"), format!("{stem}.ref.rttm"), format!("{stem}.hyp.rttm"));
        write_atomic(&a.out.join(&emb), |w| ingest::write_embeddings_csv(&c.track, w))?;
        write_atomic(&a.out.join(&reference), |w| ingest::write_rttm([&c.reference], w))?;
        write_atomic(&a.out.join(&hypothesis), |w| ingest::write_rttm([&c.hypothesis], w))?;
        for (s, m) in c.hypothesis.segments().iter().zip(&c.error_mask) {
            error_rows.push(vec![
                id.clone(),
                format!("{:.3}", s.start()),
                format!("{:.3}", s.end()),
                s.speaker.clone(),
                u8::from(*m).to_string(),
            ]);
        }
        entries.push(ManifestEntry {
            id: id.clone(),
            embeddings: emb.into(),
            hypothesis: Some(hypothesis.into()),
            reference: Some(reference.into()),
        });
    }
    write_csv(&a.out.join("errors.csv"), &["conversation_id", "start", "end", "speaker", "corrupted"], &error_rows)?;
    let manifest = CorpusManifest::new(entries)?;
    write_atomic(&a.out.join("manifest.json"), |w| Ok(w.write_all(manifest.to_json()?.as_bytes())?))?;
    Ok(Status::Success)
}
