//! Scalar abstraction for embedding and linear-algebra code.
//!
//! Time is always `f64` seconds. Embedding vectors, affinities and spectral
//! bases are generic over [`Scalar`] so the same code serves `f32` tracks
//! (the native output of most embedding extractors) and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert from an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for `f32`/`f64`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Cosine similarity. Returns `None` when either vector has zero norm.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let na = norm(a);
    let nb = norm(b);
    if na <= T::zero() || nb <= T::zero() {
        return None;
    }
    let c = dot(a, b) / (na * nb);
    // rounding can push |c| a hair past 1
    Some(c.max(-T::one()).min(T::one()))
}

/// Arithmetic mean of equally sized vectors; `None` for an empty input.
pub(crate) fn mean_vector<'a, T: Scalar, I>(vectors: I) -> Option<Vec<T>>
where
    I: IntoIterator<Item = &'a [T]>,
{
    let mut acc: Option<Vec<T>> = None;
    let mut count = 0usize;
    for v in vectors {
        match acc.as_mut() {
            None => acc = Some(v.to_vec()),
            Some(a) => a.iter_mut().zip(v).for_each(|(x, &y)| *x = *x + y),
        }
        count += 1;
    }
    let n = T::from_usize(count)?;
    acc.map(|mut a| {
        a.iter_mut().for_each(|x| *x = *x / n);
        a
    })
}
