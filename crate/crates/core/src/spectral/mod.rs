//! Spectral clustering of an embedding track.
//!
//! 1. unit-normalize the `N x D` embedding matrix and take its outer product
//!    (the cosine affinity),
//! 2. eigendecompose it and keep the `S` eigenvectors before the largest
//!    eigen-gap,
//! 3. represent every embedding by its `S`-dim row of the retained
//!    eigenvectors and assign it to the coordinate of largest magnitude.
//!
//! Step 3 first rotates the basis with [`align_basis`] so that each cluster
//! lines up with one coordinate axis. The rotation is orthogonal, so any
//! cosine computed in the basis is unchanged by it.

mod eigen;

pub use eigen::{frobenius, symmetric_eigen, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};
use crate::time::TimeInterval;
use crate::types::{Diarization, EmbeddingTrack, Segment};

/// Default upper bound on the estimated number of speakers.
pub const DEFAULT_MAX_SPEAKERS: usize = 10;

/// Pairwise cosine similarities of a track, `N x N` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> AffinityMatrix<T> {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Cosine affinity of all embedding pairs. The diagonal is exactly one.
pub fn build_affinity<T: Scalar>(track: &EmbeddingTrack<T>) -> Result<AffinityMatrix<T>> {
    let units = unit_rows(track.vectors())?;
    let n = units.len();
    let mut values = vec![T::zero(); n * n];
    for i in 0..n {
        values[i * n + i] = T::one();
        for j in 0..i {
            let c: T = units[i].iter().zip(&units[j]).map(|(&x, &y)| x * y).sum();
            let c = c.max(-T::one()).min(T::one());
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(AffinityMatrix { n, values })
}

fn unit_rows<'a, T: Scalar>(rows: impl Iterator<Item = &'a [T]>) -> Result<Vec<Vec<T>>> {
    rows.enumerate()
        .map(|(i, v)| {
            let nv = norm(v);
            if nv <= T::zero() || !nv.is_finite() {
                return Err(Error::InvalidEmbedding(format!("embedding {i} has zero or non-finite norm")));
            }
            Ok(v.iter().map(|&x| x / nv).collect())
        })
        .collect()
}

/// Eigenvalues (descending) and eigenvectors of an affinity matrix.
pub fn eigendecompose<T: Scalar>(a: &AffinityMatrix<T>) -> Result<SymmetricEigen<T>> {
    symmetric_eigen(a.n, &a.values)
}

/// Number of speakers from the eigen-gap.
///
/// With `eigenvalues` sorted descending (`lambda_1 >= lambda_2 >= ...`),
/// returns the `k` in `1..=min(max_speakers, N - 1)` maximizing
/// `lambda_k - lambda_{k+1}`, the smallest such `k` on ties. `fixed` overrides
/// the estimate.
pub fn estimate_num_speakers<T: Scalar>(eigenvalues: &[T], max_speakers: usize, fixed: Option<usize>) -> Result<usize> {
    let n = eigenvalues.len();
    if let Some(s) = fixed {
        if s == 0 {
            return Err(Error::InvalidArgument("fixed speaker count must be at least 1".into()));
        }
        if s > n {
            return Err(Error::TooManySpeakers { fixed: s, n });
        }
        return Ok(s);
    }
    if max_speakers == 0 {
        return Err(Error::InvalidArgument("max_speakers must be at least 1".into()));
    }
    if n <= 1 {
        return Ok(1);
    }
    let upper = max_speakers.min(n - 1);
    let mut best = 1;
    let mut best_gap = eigenvalues[0] - eigenvalues[1];
    for k in 2..=upper {
        let gap = eigenvalues[k - 1] - eigenvalues[k];
        if gap > best_gap {
            best = k;
            best_gap = gap;
        }
    }
    Ok(best)
}

/// Result of the eigen step with the retained `S`-dim basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    eigen: SymmetricEigen<T>,
    num_speakers: usize,
    /// `N x S` row-major: row `i` = row `i` of the first `S` eigenvectors.
    basis: Vec<T>,
    /// `S x S` orthogonal rotation aligning clusters with the axes.
    rotation: Vec<T>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn new(eigen: SymmetricEigen<T>, num_speakers: usize) -> Result<Self> {
        let n = eigen.n;
        if num_speakers == 0 || num_speakers > n.max(1) {
            return Err(Error::InvalidArgument(format!("cannot retain {num_speakers} of {n} eigenvectors")));
        }
        let s = num_speakers;
        let mut basis = vec![T::zero(); n * s];
        for i in 0..n {
            basis[i * s..(i + 1) * s].copy_from_slice(&eigen.vectors[i * n..i * n + s]);
        }
        let rotation = align_basis(&basis, n, s)?;
        Ok(Self { eigen, num_speakers, basis, rotation })
    }

    pub fn len(&self) -> usize {
        self.eigen.n
    }

    pub fn is_empty(&self) -> bool {
        self.eigen.n == 0
    }

    pub fn num_speakers(&self) -> usize {
        self.num_speakers
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigen.values
    }

    pub fn eigen(&self) -> &SymmetricEigen<T> {
        &self.eigen
    }

    pub fn basis_row(&self, i: usize) -> &[T] {
        let s = self.num_speakers;
        &self.basis[i * s..(i + 1) * s]
    }

    /// Basis row `i` after the alignment rotation.
    pub fn aligned_row(&self, i: usize) -> Vec<T> {
        rotate_row(self.basis_row(i), &self.rotation, self.num_speakers)
    }

    pub fn rotation(&self) -> &[T] {
        &self.rotation
    }
}

fn rotate_row<T: Scalar>(row: &[T], rotation: &[T], s: usize) -> Vec<T> {
    (0..s).map(|c| (0..s).map(|r| row[r] * rotation[r * s + c]).sum()).collect()
}

/// Orthogonal `S x S` rotation `Q` such that `basis * Q` has each cluster
/// concentrated on one coordinate.
///
/// Picks `S` representative rows by greedy column-pivoted Gram-Schmidt (the
/// pivot order of a pivoted QR of `basis^T`), then takes `Q` as the orthogonal
/// polar factor of the matrix whose columns are those rows. Falls back to the
/// identity when the representatives are linearly dependent.
pub fn align_basis<T: Scalar>(basis: &[T], n: usize, s: usize) -> Result<Vec<T>> {
    let identity = {
        let mut q = vec![T::zero(); s * s];
        (0..s).for_each(|i| q[i * s + i] = T::one());
        q
    };
    if n < s || s == 0 {
        return Ok(identity);
    }
    let mut residual: Vec<Vec<T>> = (0..n).map(|i| basis[i * s..(i + 1) * s].to_vec()).collect();
    let mut pivots = Vec::with_capacity(s);
    for _ in 0..s {
        let (best, best_norm) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !pivots.contains(i))
            .map(|(i, r)| (i, norm(r)))
            .fold((usize::MAX, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || best_norm <= T::epsilon() {
            return Ok(identity);
        }
        let q: Vec<T> = residual[best].iter().map(|&x| x / best_norm).collect();
        for r in residual.iter_mut() {
            let proj: T = r.iter().zip(&q).map(|(&a, &b)| a * b).sum();
            r.iter_mut().zip(&q).for_each(|(a, &b)| *a = *a - proj * b);
        }
        pivots.push(best);
    }

    // C has the pivot rows as columns: C[r][j] = basis[p_j][r]
    let mut c = vec![T::zero(); s * s];
    for (j, &p) in pivots.iter().enumerate() {
        for r in 0..s {
            c[r * s + j] = basis[p * s + r];
        }
    }
    // Q = C (C^T C)^{-1/2}
    let mut ctc = vec![T::zero(); s * s];
    for i in 0..s {
        for j in 0..s {
            ctc[i * s + j] = (0..s).map(|r| c[r * s + i] * c[r * s + j]).sum();
        }
    }
    let eig = symmetric_eigen(s, &ctc)?;
    if eig.values.iter().any(|&v| v <= T::epsilon()) {
        return Ok(identity);
    }
    let mut inv_sqrt = vec![T::zero(); s * s];
    for i in 0..s {
        for j in 0..s {
            inv_sqrt[i * s + j] =
                (0..s).map(|k| eig.vectors[i * s + k] * eig.vectors[j * s + k] / eig.values[k].sqrt()).sum();
        }
    }
    let mut q = vec![T::zero(); s * s];
    for i in 0..s {
        for j in 0..s {
            q[i * s + j] = (0..s).map(|k| c[i * s + k] * inv_sqrt[k * s + j]).sum();
        }
    }
    Ok(q)
}

/// Per-embedding speaker indices in `0..num_speakers`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub num_speakers: usize,
}

/// Index of the largest-magnitude coordinate, the smallest index on ties.
pub fn argmax_abs<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate().skip(1) {
        if v.abs() > row[best].abs() {
            best = k;
        }
    }
    best
}

/// Assign each embedding to the aligned basis coordinate of largest magnitude.
pub fn assign_speakers<T: Scalar>(decomp: &SpectralDecomposition<T>) -> ClusterAssignment {
    let labels = (0..decomp.len()).map(|i| argmax_abs(&decomp.aligned_row(i))).collect();
    ClusterAssignment { labels, num_speakers: decomp.num_speakers }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralParams {
    pub max_speakers: usize,
    pub num_speakers: Option<usize>,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self { max_speakers: DEFAULT_MAX_SPEAKERS, num_speakers: None }
    }
}

/// Output of [`spectral_diarize`].
#[derive(Debug, Clone)]
pub struct SpectralDiarization<T> {
    pub diarization: Diarization,
    pub assignment: ClusterAssignment,
    pub decomposition: SpectralDecomposition<T>,
}

/// Cluster a track and convert the labelled windows into speaker segments.
pub fn spectral_diarize<T: Scalar>(track: &EmbeddingTrack<T>, params: &SpectralParams) -> Result<SpectralDiarization<T>> {
    if track.is_empty() {
        return Err(Error::InvalidArgument(format!("conversation '{}' has no embeddings", track.conversation_id())));
    }
    let affinity = build_affinity(track)?;
    let eigen = eigendecompose(&affinity)?;
    let s = estimate_num_speakers(&eigen.values, params.max_speakers, params.num_speakers)?;
    let decomposition = SpectralDecomposition::new(eigen, s)?;
    let assignment = assign_speakers(&decomposition);
    let windows: Vec<TimeInterval> = track.embeddings().iter().map(|e| e.interval).collect();
    let diarization = labels_to_diarization(track.conversation_id(), &windows, &assignment.labels)?;
    Ok(SpectralDiarization { diarization, assignment, decomposition })
}

/// Merge runs of equally labelled windows into segments named `spk{label}`.
///
/// Between overlapping (or touching) windows with different labels the
/// boundary sits at the midpoint of the two window centers. A gap between
/// consecutive windows always ends the current segment at the earlier
/// window's end.
pub fn labels_to_diarization(conversation_id: &str, windows: &[TimeInterval], labels: &[usize]) -> Result<Diarization> {
    assert_eq!(windows.len(), labels.len());
    let mut segments = Vec::new();
    let mut i = 0;
    let mut seg_start = windows.first().map_or(0.0, TimeInterval::start);
    while i < windows.len() {
        let mut j = i;
        while j + 1 < windows.len() && labels[j + 1] == labels[i] && windows[j + 1].start() <= windows[j].end() {
            j += 1;
        }
        let (seg_end, next_start) = match windows.get(j + 1) {
            Some(next) if next.start() <= windows[j].end() => {
                let b = 0.5 * (windows[j].midpoint() + next.midpoint());
                (b, b)
            }
            Some(next) => (windows[j].end(), next.start()),
            None => (windows[j].end(), f64::NAN),
        };
        if seg_end > seg_start {
            segments.push(Segment::new(
                conversation_id,
                TimeInterval::new(seg_start, seg_end)?,
                format!("spk{}", labels[i]),
            )?);
        }
        seg_start = next_start;
        i = j + 1;
    }
    Diarization::new(conversation_id, segments)
}
