//! Vector similarity kernels and truncated neighbor models.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::RatingsMatrix;

/// Which entities a similarity model compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    User,
    Item,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Pearson,
    Cosine,
}

impl Kernel {
    pub fn score(self, a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
        match self {
            Kernel::Pearson => pearson(a, b),
            Kernel::Cosine => cosine(a, b),
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Kernel::Pearson),
            "cosine" => Ok(Kernel::Cosine),
            other => Err(Error::InvalidArgument(format!("unknown kernel {other:?}"))),
        }
    }
}

// Sum of squared deviations at or below this counts as zero variance.
const DEGENERATE_VARIANCE: f64 = 1e-18;

/// Calls `f(x, y)` for every index present in both sorted sparse vectors.
fn for_each_common(a: &[(usize, f64)], b: &[(usize, f64)], mut f: impl FnMut(f64, f64)) {
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        match a[p].0.cmp(&b[q].0) {
            Ordering::Less => p += 1,
            Ordering::Greater => q += 1,
            Ordering::Equal => {
                f(a[p].1, b[q].1);
                p += 1;
                q += 1;
            }
        }
    }
}

pub fn co_rated_count(a: &[(usize, f64)], b: &[(usize, f64)]) -> usize {
    let mut n = 0;
    for_each_common(a, b, |_, _| n += 1);
    n
}

/// Pearson correlation over the co-rated indices only, with means taken over
/// that same set. Fewer than two co-rated indices, or zero variance on either
/// side, gives 0.
pub fn pearson(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut pairs = Vec::new();
    for_each_common(a, b, |x, y| pairs.push((x, y)));
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= DEGENERATE_VARIANCE || syy <= DEGENERATE_VARIANCE {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Cosine of the angle between the vectors, missing entries read as 0.
pub fn cosine(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let norm_a = a.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    for_each_common(a, b, |x, y| dot += x * y);
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub kernel: Kernel,
    /// Neighbors kept per entity.
    pub model_size: usize,
    /// Significance shrinkage `sim * n / (n + shrinkage)` with `n` the number
    /// of co-rated entries. 0 disables it.
    pub shrinkage: f64,
}

impl SimilarityConfig {
    pub fn new(kernel: Kernel) -> Self {
        SimilarityConfig {
            kernel,
            model_size: 100,
            shrinkage: 0.0,
        }
    }

    pub fn score(&self, a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
        let s = self.kernel.score(a, b);
        if self.shrinkage > 0.0 && s != 0.0 {
            let n = co_rated_count(a, b) as f64;
            s * n / (n + self.shrinkage)
        } else {
            s
        }
    }
}

/// Per-entity neighbor lists, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityModel {
    axis: Axis,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl SimilarityModel {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Neighbors of `entity` sorted by score descending, ties by index.
    pub fn neighbors(&self, entity: usize) -> &[(usize, f64)] {
        self.neighbors.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Score of `other` in `entity`'s list, if it made the cut.
    pub fn similarity(&self, entity: usize, other: usize) -> Option<f64> {
        self.neighbors(entity)
            .iter()
            .find(|&&(e, _)| e == other)
            .map(|&(_, s)| s)
    }

    pub(crate) fn ensure_axis(&self, expected: Axis) -> Result<()> {
        if self.axis == expected {
            Ok(())
        } else {
            Err(Error::AxisMismatch {
                expected,
                found: self.axis,
            })
        }
    }
}

pub(crate) fn by_score_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

type Lookup = fn(&RatingsMatrix, usize) -> &[(usize, f64)];

pub fn build_similarity_model(
    m: &RatingsMatrix,
    axis: Axis,
    cfg: &SimilarityConfig,
) -> Result<SimilarityModel> {
    if cfg.model_size == 0 {
        return Err(Error::InvalidArgument("model_size must be at least 1".into()));
    }
    let (n, rows, cols): (usize, Lookup, Lookup) =
        match axis {
            Axis::User => (m.n_users(), RatingsMatrix::user_row, RatingsMatrix::item_col),
            Axis::Item => (m.n_items(), RatingsMatrix::item_col, RatingsMatrix::user_row),
        };

    let neighbors = (0..n)
        .into_par_iter()
        .map(|a| {
            let row_a = rows(m, a);
            // Only entities sharing at least one coordinate can score non-zero.
            let mut candidates: Vec<usize> = row_a
                .iter()
                .flat_map(|&(k, _)| cols(m, k).iter().map(|&(b, _)| b))
                .filter(|&b| b != a)
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            let mut scored: Vec<(usize, f64)> = candidates
                .into_iter()
                .map(|b| (b, cfg.score(row_a, rows(m, b))))
                .filter(|&(_, s)| s != 0.0)
                .collect();
            scored.sort_by(by_score_then_index);
            scored.truncate(cfg.model_size);
            scored
        })
        .collect();

    Ok(SimilarityModel { axis, neighbors })
}
