//! On-disk formats.
//!
//! * RTTM: `SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>`
//! * embeddings CSV: `conversation_id,start,end,e0,...,e{D-1}`
//! * confidence CSV: `conversation_id,start,end,speaker,method,score`
//! * spectral basis sidecar CSV: `conversation_id,start,end,label,b0,...,b{S-1}`
//! * corpus manifest JSON: `{"conversations":[{"id","embeddings","hypothesis","reference"}]}`
//!
//! Times are written with three decimals (millisecond resolution).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::confidence::{ConfidenceAnnotation, Method, SpectralBasis};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::TimeInterval;
use crate::types::{Diarization, Embedding, EmbeddingTrack, Segment};

const NA: &str = "<NA>";

/// One `SPEAKER` line of an RTTM file.
#[derive(Debug, Clone, PartialEq)]
pub struct RttmRecord {
    pub file_id: String,
    pub channel: String,
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

/// Non-fatal problem found while parsing; the offending line was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RttmParse {
    pub diarizations: BTreeMap<String, Diarization>,
    pub warnings: Vec<Diagnostic>,
}

fn parse_time(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("{what} '{field}' is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("{what} '{field}' is not finite") });
    }
    Ok(v)
}

/// Parse one RTTM line. `Ok(None)` for blank lines, comments and record types
/// other than `SPEAKER`.
pub fn parse_rttm_line(text: &str, line: usize) -> Result<Option<RttmRecord>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    match fields.first() {
        None => return Ok(None),
        Some(f) if f.starts_with('#') || *f != "SPEAKER" => return Ok(None),
        _ => {}
    }
    if !(9..=10).contains(&fields.len()) {
        return Err(Error::Parse { line, message: format!("expected 9 or 10 fields, found {}", fields.len()) });
    }
    let onset = parse_time(fields[3], "onset", line)?;
    let duration = parse_time(fields[4], "duration", line)?;
    if onset < 0.0 {
        return Err(Error::Parse { line, message: format!("negative onset {onset}") });
    }
    Ok(Some(RttmRecord {
        file_id: fields[1].to_owned(),
        channel: fields[2].to_owned(),
        onset,
        duration,
        speaker: fields[7].to_owned(),
    }))
}

/// Parse RTTM text into one diarization per file id.
///
/// Malformed `SPEAKER` lines are errors carrying the line number. Records
/// with a non-positive duration are skipped and reported in `warnings`.
pub fn parse_rttm<R: BufRead>(reader: R) -> Result<RttmParse> {
    let mut by_file: BTreeMap<String, Vec<Segment>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let Some(rec) = parse_rttm_line(&text?, line)? else { continue };
        if rec.duration <= 0.0 {
            let message = format!("zero or negative duration {} for speaker '{}'; segment skipped", rec.duration, rec.speaker);
            warnings.push(Diagnostic { line, message });
            continue;
        }
        // onset + duration drifts by an ulp; snapping to 1 ns keeps decimal end times exact
        let end = ((rec.onset + rec.duration) * 1e9).round() / 1e9;
        let interval = TimeInterval::new(rec.onset, end)
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let seg = Segment::new(rec.file_id.clone(), interval, rec.speaker)
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        by_file.entry(rec.file_id).or_default().push(seg);
    }
    let diarizations = by_file
        .into_iter()
        .map(|(id, segs)| Diarization::new(id.clone(), segs).map(|d| (id, d)))
        .collect::<Result<_>>()?;
    Ok(RttmParse { diarizations, warnings })
}

fn ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Write RTTM `SPEAKER` lines, conversations in map order.
pub fn write_rttm<'a, W, I>(diarizations: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Diarization>,
{
    for d in diarizations {
        for s in d.segments() {
            let onset = ms(s.start());
            let dur = ms(s.end()) - onset;
            writeln!(out, "SPEAKER {} 1 {:.3} {:.3} {NA} {NA} {} {NA} {NA}", d.conversation_id(), onset, dur, s.speaker)?;
        }
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader)
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn check_header(headers: &csv::StringRecord, fixed: &[&str], prefix: Option<&str>) -> Result<usize> {
    let bad = |message: String| Error::Parse { line: 1, message };
    if headers.len() < fixed.len() {
        return Err(bad(format!("header must start with {}", fixed.join(","))));
    }
    for (i, want) in fixed.iter().enumerate() {
        if &headers[i] != *want {
            return Err(bad(format!("header column {} is '{}', expected '{want}'", i + 1, &headers[i])));
        }
    }
    let extra = headers.len() - fixed.len();
    match prefix {
        None if extra > 0 => Err(bad(format!("unexpected extra columns after {}", fixed.join(",")))),
        None => Ok(0),
        Some(p) => {
            for k in 0..extra {
                let name = &headers[fixed.len() + k];
                if name != format!("{p}{k}") {
                    return Err(bad(format!("header column '{name}' should be '{p}{k}'")));
                }
            }
            Ok(extra)
        }
    }
}

fn field_f64(rec: &csv::StringRecord, idx: usize, what: &str) -> Result<f64> {
    let line = record_line(rec);
    rec.get(idx)
        .ok_or_else(|| Error::Parse { line, message: format!("missing {what}") })?
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, message: format!("{what} '{}' is not a number", &rec[idx]) })
}

fn row_interval(rec: &csv::StringRecord) -> Result<TimeInterval> {
    let line = record_line(rec);
    let start = field_f64(rec, 1, "start")?;
    let end = field_f64(rec, 2, "end")?;
    TimeInterval::new(start, end).map_err(|e| Error::Parse { line, message: e.to_string() })
}

fn vector_cells<T: Scalar>(rec: &csv::StringRecord, from: usize, dim: usize) -> Result<Vec<T>> {
    let line = record_line(rec);
    (from..from + dim)
        .map(|i| {
            let x = field_f64(rec, i, "vector value")?;
            if !x.is_finite() {
                return Err(Error::Parse { line, message: format!("non-finite value '{}' in column {}", &rec[i], i + 1) });
            }
            T::from_f64(x).ok_or_else(|| Error::Parse { line, message: format!("value {x} not representable") })
        })
        .collect()
}

/// Parse one conversation's embeddings. Rows may come in any time order.
pub fn parse_embeddings_csv<T: Scalar, R: Read>(reader: R) -> Result<EmbeddingTrack<T>> {
    let mut rdr = csv_reader(reader);
    let dim = check_header(rdr.headers()?, &["conversation_id", "start", "end"], Some("e"))?;
    let mut conversation: Option<String> = None;
    let mut embeddings = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let id = &rec[0];
        match &conversation {
            None => conversation = Some(id.to_owned()),
            Some(c) if c != id => {
                return Err(Error::Parse { line, message: format!("conversation '{id}' differs from '{c}'") })
            }
            _ => {}
        }
        let interval = row_interval(&rec)?;
        let vector = vector_cells(&rec, 3, dim)?;
        embeddings.push(Embedding::new(vector, interval).map_err(|e| Error::Parse { line, message: e.to_string() })?);
    }
    let conversation = conversation.ok_or(Error::Parse { line: 1, message: "no embedding rows".into() })?;
    EmbeddingTrack::new(conversation, embeddings)
}

fn numbered_header(fixed: &[&str], prefix: &str, n: usize) -> Vec<String> {
    fixed.iter().map(|s| s.to_string()).chain((0..n).map(|k| format!("{prefix}{k}"))).collect()
}

pub fn write_embeddings_csv<T: Scalar, W: Write>(track: &EmbeddingTrack<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(numbered_header(&["conversation_id", "start", "end"], "e", track.dim()))?;
    for e in track.embeddings() {
        let mut row = vec![track.conversation_id().to_owned(), format!("{:.3}", e.interval.start()), format!("{:.3}", e.interval.end())];
        row.extend(e.vector.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

const CONFIDENCE_HEADER: [&str; 6] = ["conversation_id", "start", "end", "speaker", "method", "score"];

/// Parse a confidence CSV. Rows repeating a (conversation, segment, method)
/// key are rejected.
pub fn parse_confidence_csv<R: Read>(reader: R) -> Result<Vec<ConfidenceAnnotation>> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers()?, &CONFIDENCE_HEADER, None)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != CONFIDENCE_HEADER.len() {
            return Err(Error::Parse { line, message: format!("expected 6 fields, found {}", rec.len()) });
        }
        let interval = row_interval(&rec)?;
        let segment = Segment::new(&rec[0], interval, &rec[3]).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let method: Method = rec[4].parse().map_err(|e: Error| Error::Parse { line, message: e.to_string() })?;
        let score = field_f64(&rec, 5, "score")?;
        if !score.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite score '{}'", &rec[5]) });
        }
        let key = (rec[0].to_owned(), rec[1].to_owned(), rec[2].to_owned(), rec[3].to_owned(), method);
        if !seen.insert(key) {
            return Err(Error::Parse { line, message: "duplicate annotation for the same segment and method".into() });
        }
        out.push(ConfidenceAnnotation { segment, method, score, uncovered: false });
    }
    Ok(out)
}

pub fn write_confidence_csv<'a, W, I>(annotations: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ConfidenceAnnotation>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONFIDENCE_HEADER)?;
    for a in annotations {
        w.write_record([
            a.segment.conversation_id.clone(),
            format!("{:.3}", a.segment.start()),
            format!("{:.3}", a.segment.end()),
            a.segment.speaker.clone(),
            a.method.to_string(),
            a.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Basis rows paired with the windows of the embedding track they came from.
pub fn write_basis_csv<T: Scalar, W: Write>(basis: &SpectralBasis<T>, windows: &[TimeInterval], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(numbered_header(&["conversation_id", "start", "end", "label"], "b", basis.num_speakers))?;
    for ((row, label), iv) in basis.rows.iter().zip(&basis.labels).zip(windows) {
        let mut rec = vec![basis.conversation_id.clone(), format!("{:.3}", iv.start()), format!("{:.3}", iv.end()), label.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a basis sidecar. Returns the basis and the windows of its rows.
pub fn parse_basis_csv<T: Scalar, R: Read>(reader: R) -> Result<(SpectralBasis<T>, Vec<TimeInterval>)> {
    let mut rdr = csv_reader(reader);
    let s = check_header(rdr.headers()?, &["conversation_id", "start", "end", "label"], Some("b"))?;
    if s == 0 {
        return Err(Error::Parse { line: 1, message: "basis has no columns".into() });
    }
    let mut basis = SpectralBasis { conversation_id: String::new(), num_speakers: s, labels: Vec::new(), rows: Vec::new() };
    let mut windows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if basis.rows.is_empty() {
            basis.conversation_id = rec[0].to_owned();
        } else if basis.conversation_id != rec[0] {
            return Err(Error::Parse { line, message: "mixed conversations in basis file".into() });
        }
        windows.push(row_interval(&rec)?);
        let label: usize = rec[3].parse().map_err(|_| Error::Parse { line, message: format!("bad label '{}'", &rec[3]) })?;
        if label >= s {
            return Err(Error::Parse { line, message: format!("label {label} out of range for {s} speakers") });
        }
        basis.labels.push(label);
        basis.rows.push(vector_cells(&rec, 4, s)?);
    }
    Ok((basis, windows))
}

/// Corpus manifest entry. Paths are relative to the manifest's directory
/// unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub embeddings: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub conversations: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(conversations: Vec<ManifestEntry>) -> Result<Self> {
        let m = Self { conversations, base_dir: PathBuf::new() };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for c in &self.conversations {
            if !ids.insert(c.id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate conversation id '{}' in manifest", c.id)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut m = Self::from_json(&fs::read_to_string(path)?)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
