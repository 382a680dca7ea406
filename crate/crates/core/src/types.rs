//! Domain types shared across the crate: speaker segments, diarizations and
//! embedding tracks.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};
use crate::time::{TimeInterval, Timeline};

/// One speaker-labelled stretch of audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub conversation_id: String,
    pub interval: TimeInterval,
    pub speaker: String,
}

impl Segment {
    pub fn new(conversation_id: impl Into<String>, interval: TimeInterval, speaker: impl Into<String>) -> Result<Self> {
        let speaker = speaker.into();
        if speaker.trim().is_empty() {
            return Err(Error::InvalidSegment("speaker label is empty".into()));
        }
        Ok(Self { conversation_id: conversation_id.into(), interval, speaker })
    }

    pub fn start(&self) -> f64 {
        self.interval.start()
    }

    pub fn end(&self) -> f64 {
        self.interval.end()
    }

    pub fn duration(&self) -> f64 {
        self.interval.duration()
    }
}

/// Speaker segments of one conversation, sorted by `(start, end)`.
///
/// Segments of the same speaker never overlap; different speakers may
/// (reference annotations contain overlapped speech).
#[derive(Debug, Clone, PartialEq)]
pub struct Diarization {
    conversation_id: String,
    segments: Vec<Segment>,
}

impl Diarization {
    pub fn new(conversation_id: impl Into<String>, mut segments: Vec<Segment>) -> Result<Self> {
        let conversation_id = conversation_id.into();
        let bad = |reason: String| Error::InvalidDiarization { conversation: conversation_id.clone(), reason };
        if let Some(s) = segments.iter().find(|s| s.conversation_id != conversation_id) {
            return Err(bad(format!("segment belongs to conversation '{}'", s.conversation_id)));
        }
        segments.sort_by(|a, b| {
            a.start()
                .total_cmp(&b.start())
                .then(a.end().total_cmp(&b.end()))
                .then_with(|| a.speaker.cmp(&b.speaker))
        });
        let speakers: BTreeSet<&str> = segments.iter().map(|s| s.speaker.as_str()).collect();
        for spk in speakers {
            let mut last_end = f64::NEG_INFINITY;
            for s in segments.iter().filter(|s| s.speaker == spk) {
                if s.start() < last_end - crate::time::TIME_EPS {
                    return Err(bad(format!("speaker '{spk}' has overlapping segments near {:.3}s", s.start())));
                }
                last_end = last_end.max(s.end());
            }
        }
        Ok(Self { conversation_id, segments })
    }

    pub fn empty(conversation_id: impl Into<String>) -> Self {
        Self { conversation_id: conversation_id.into(), segments: Vec::new() }
    }

    pub fn conversation_id(&self) -> &str {
        &self.conversation_id
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Distinct speaker labels, sorted.
    pub fn speakers(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.segments.iter().map(|s| s.speaker.as_str()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    pub fn speaker_timeline(&self, speaker: &str) -> Timeline {
        self.segments.iter().filter(|s| s.speaker == speaker).map(|s| s.interval).collect()
    }

    /// Union of all segments regardless of speaker.
    pub fn timeline(&self) -> Timeline {
        self.segments.iter().map(|s| s.interval).collect()
    }

    /// Sum of segment durations (overlapped speech counted once per speaker).
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Apply `f` to every speaker label.
    pub fn relabel(&self, mut f: impl FnMut(&str) -> String) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(s.conversation_id.clone(), s.interval, f(&s.speaker)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.conversation_id.clone(), segments)
    }
}

/// A speaker embedding summarizing one analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub vector: Vec<T>,
    pub interval: TimeInterval,
}

impl<T: Scalar> Embedding<T> {
    pub fn new(vector: Vec<T>, interval: TimeInterval) -> Result<Self> {
        if vector.len() < 2 {
            return Err(Error::InvalidEmbedding(format!("dimension {} < 2", vector.len())));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidEmbedding(format!("non-finite value in window {interval}")));
        }
        if norm(&vector) <= T::zero() {
            return Err(Error::InvalidEmbedding(format!("zero-norm vector in window {interval}")));
        }
        Ok(Self { vector, interval })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Time-ordered embeddings of one conversation, all of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTrack<T> {
    conversation_id: String,
    dim: usize,
    embeddings: Vec<Embedding<T>>,
}

impl<T: Scalar> EmbeddingTrack<T> {
    pub fn new(conversation_id: impl Into<String>, mut embeddings: Vec<Embedding<T>>) -> Result<Self> {
        let dim = embeddings.first().map_or(0, Embedding::dim);
        if let Some(e) = embeddings.iter().find(|e| e.dim() != dim) {
            return Err(Error::InvalidEmbedding(format!("dimension {} differs from {dim} at {}", e.dim(), e.interval)));
        }
        embeddings.sort_by(|a, b| a.interval.partial_cmp(&b.interval).expect("finite intervals"));
        Ok(Self { conversation_id: conversation_id.into(), dim, embeddings })
    }

    pub fn conversation_id(&self) -> &str {
        &self.conversation_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embeddings(&self) -> &[Embedding<T>] {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[T]> {
        self.embeddings.iter().map(|e| e.vector.as_slice())
    }

    /// Multiply every vector by its own positive factor.
    pub fn scaled(&self, factors: impl Fn(usize) -> T) -> Result<Self> {
        let embeddings = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| Embedding::new(e.vector.iter().map(|&x| x * factors(i)).collect(), e.interval))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.conversation_id.clone(), embeddings)
    }
}
