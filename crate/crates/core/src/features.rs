//! Tokenization, hashed bag-of-tokens vectors, centroids and cosine distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DIM: usize = 1 << 16;

const FNV_OFFSET: u64 = 14_695_981_039_346_656_037;
const FNV_PRIME: u64 = 1_099_511_628_211;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot take the centroid of an empty set")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
}

/// Sparse vector with strictly increasing indices and no zero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from arbitrary `(index, weight)` pairs, summing
    /// duplicates and dropping zeros. Indices must be `< dim`.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            assert!((i as usize) < dim, "index {i} out of range for dim {dim}");
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => entries.push((i, w)),
            }
        }
        entries.retain(|&(_, w)| w != 0.0);
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    /// Dot product with a dense weight array.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i as usize]).sum()
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        SparseVector::from_pairs(self.dim, self.entries.iter().map(|&(i, w)| (i, w * c)).collect())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            v[i as usize] = w;
        }
        v
    }
}

/// Unit-norm hashed bag-of-tokens vector (or the zero vector for empty text).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(SparseVector);

impl FeatureVector {
    /// Wraps an arbitrary sparse vector, normalizing it to unit length.
    pub fn normalized(v: SparseVector) -> Self {
        let n = v.norm();
        if n == 0.0 {
            Self(v)
        } else {
            Self(v.scaled(1.0 / n))
        }
    }

    pub fn as_sparse(&self) -> &SparseVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }
}

/// Entrywise mean of a set of feature vectors; used as a registry key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid(SparseVector);

impl Centroid {
    pub fn from_sparse(v: SparseVector) -> Self {
        Self(v)
    }

    pub fn as_sparse(&self) -> &SparseVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }
}

impl From<&FeatureVector> for Centroid {
    fn from(v: &FeatureVector) -> Self {
        Centroid(v.0.clone())
    }
}

/// Lowercases, splits on anything that is not alphanumeric, and drops
/// tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_owned)
        .collect()
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn token_index(token: &str, dim: usize) -> u32 {
    (fnv1a64(token.as_bytes()) % dim as u64) as u32
}

pub fn vectorize(text: &str, dim: usize) -> FeatureVector {
    let pairs = tokenize(text).iter().map(|t| (token_index(t, dim), 1.0)).collect();
    FeatureVector::normalized(SparseVector::from_pairs(dim, pairs))
}

pub fn centroid<'a, I>(vs: I) -> Result<Centroid, FeatureError>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let mut iter = vs.into_iter();
    let first = iter.next().ok_or(FeatureError::Empty)?;
    let dim = first.dim();
    let mut acc = first.0.to_dense();
    let mut n = 1usize;
    for v in iter {
        if v.dim() != dim {
            return Err(FeatureError::DimMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
        for &(i, w) in v.0.entries() {
            acc[i as usize] += w;
        }
        n += 1;
    }
    let pairs = acc
        .into_iter()
        .enumerate()
        .filter(|(_, w)| *w != 0.0)
        .map(|(i, w)| (i as u32, w / n as f64))
        .collect();
    Ok(Centroid(SparseVector::from_pairs(dim, pairs)))
}

/// `1 - cos(a, b)`; 1 when either side is the zero vector.
pub fn cosine_distance(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - a.dot(b) / (na * nb)).clamp(0.0, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_hot(dim: usize, i: u32) -> FeatureVector {
        FeatureVector::normalized(SparseVector::from_pairs(dim, vec![(i, 1.0)]))
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Landslide hits Sikkim!"), vec!["landslide", "hits", "sikkim"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a I x2"), vec!["x2"]);
        assert_eq!(tokenize("rain, rain"), vec!["rain", "rain"]);
    }

    #[test]
    fn fnv_matches_fnv_crate() {
        use std::hash::Hasher;
        for word in ["landslide", "", "cell0012_0004", "ñandú"] {
            let mut h = fnv::FnvHasher::default();
            h.write(word.as_bytes());
            assert_eq!(fnv1a64(word.as_bytes()), h.finish());
        }
        // Frozen from an independent reference script.
        assert_eq!(fnv1a64(b"landslide"), 11_612_107_858_867_246_033);
        assert_eq!(token_index("landslide", DEFAULT_DIM), 54_225);
    }

    #[test]
    fn vectorize_weights() {
        let v = vectorize("Landslide", DEFAULT_DIM);
        assert_eq!(v.as_sparse().entries(), &[(54_225, 1.0)]);

        let v = vectorize("landslide sikkim", DEFAULT_DIM);
        assert_eq!(v.as_sparse().nnz(), 2);
        for &(_, w) in v.as_sparse().entries() {
            assert!((w - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(vectorize("", DEFAULT_DIM).as_sparse().is_zero());
        assert!(vectorize("a b c", DEFAULT_DIM).as_sparse().is_zero());
    }

    #[test]
    fn centroid_cases() {
        let v = vectorize("mud rock slide", 64);
        assert_eq!(centroid([&v]).unwrap().as_sparse(), v.as_sparse());

        let c = centroid([&one_hot(8, 1), &one_hot(8, 5)]).unwrap();
        assert_eq!(c.as_sparse().entries(), &[(1, 0.5), (5, 0.5)]);

        assert_eq!(centroid(std::iter::empty()), Err(FeatureError::Empty));
        assert!(matches!(
            centroid([&one_hot(8, 1), &one_hot(16, 1)]),
            Err(FeatureError::DimMismatch { .. })
        ));
    }

    #[test]
    fn cosine_cases() {
        let v = vectorize("heavy rain landslide", 1024);
        assert!(cosine_distance(v.as_sparse(), v.as_sparse()).abs() < 1e-12);
        assert!(cosine_distance(v.as_sparse(), &v.as_sparse().scaled(2.0)).abs() < 1e-12);
        let (a, b) = (one_hot(8, 0), one_hot(8, 3));
        assert_eq!(cosine_distance(a.as_sparse(), b.as_sparse()), 1.0);
        assert_eq!(cosine_distance(a.as_sparse(), &SparseVector::zeros(8)), 1.0);
    }

    proptest! {
        #[test]
        fn vectors_have_unit_norm(text in "[a-z ]{0,60}") {
            let v = vectorize(&text, 4096);
            if tokenize(&text).is_empty() {
                prop_assert!(v.as_sparse().is_zero());
            } else {
                prop_assert!((v.as_sparse().norm() - 1.0).abs() < 1e-9);
            }
            prop_assert!(v.as_sparse().entries().iter().all(|&(_, w)| w != 0.0));
        }

        #[test]
        fn centroid_is_mean_and_order_free(texts in prop::collection::vec("[a-f]{2,3}( [a-f]{2,3}){0,4}", 1..8)) {
            let vs: Vec<FeatureVector> = texts.iter().map(|t| vectorize(t, 256)).collect();
            let c = centroid(&vs).unwrap();
            let dense = c.as_sparse().to_dense();
            for i in 0..256 {
                let mean: f64 = vs.iter().map(|v| v.as_sparse().to_dense()[i]).sum::<f64>() / vs.len() as f64;
                prop_assert!((dense[i] - mean).abs() < 1e-9);
            }
            let mut rev = vs.clone();
            rev.reverse();
            let c2 = centroid(&rev).unwrap().as_sparse().to_dense();
            for i in 0..256 {
                prop_assert!((dense[i] - c2[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn cosine_symmetric_and_scale_free(a in "[a-h]{2}( [a-h]{2}){0,5}", b in "[a-h]{2}( [a-h]{2}){0,5}", s in 0.1f64..10.0) {
            let (va, vb) = (vectorize(&a, 128), vectorize(&b, 128));
            let d = cosine_distance(va.as_sparse(), vb.as_sparse());
            prop_assert!((d - cosine_distance(vb.as_sparse(), va.as_sparse())).abs() < 1e-12);
            prop_assert!((d - cosine_distance(&va.as_sparse().scaled(s), vb.as_sparse())).abs() < 1e-9);
            prop_assert!((0.0..=2.0).contains(&d));
        }
    }
}
