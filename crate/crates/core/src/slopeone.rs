//! Weighted Slope-One.
//!
//! `dev(j, i)` is the mean of `r(u,j) − r(u,i)` over users who rated both,
//! and a prediction for `(u, j)` averages `dev(j, i) + r(u,i)` over the
//! user's rated items `i`, weighted by co-rater counts.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ratings::RatingsMatrix;
use crate::{clamp_rating, top_n_unrated, Recommendation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deviation {
    pub average: f64,
    pub count: usize,
}

/// Pairwise average deviations. Only pairs with at least one co-rater are
/// stored; each unordered pair is stored once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeviationModel {
    // keyed (lo, hi) with lo < hi; the value is dev(hi, lo)
    pairs: HashMap<(usize, usize), Deviation>,
}

impl DeviationModel {
    /// `dev(j, i)`; `None` for self-pairs and pairs without co-raters.
    pub fn get(&self, j: usize, i: usize) -> Option<Deviation> {
        if j == i {
            return None;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let d = self.pairs.get(&(lo, hi))?;
        Some(if j == hi {
            *d
        } else {
            Deviation {
                average: -d.average,
                count: d.count,
            }
        })
    }

    /// Number of stored unordered pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn build_deviations(m: &RatingsMatrix) -> DeviationModel {
    let mut sums: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    for u in 0..m.n_users() {
        let row = m.user_row(u);
        for (a, &(lo, r_lo)) in row.iter().enumerate() {
            for &(hi, r_hi) in &row[a + 1..] {
                let e = sums.entry((lo, hi)).or_insert((0.0, 0));
                e.0 += r_hi - r_lo;
                e.1 += 1;
            }
        }
    }
    DeviationModel {
        pairs: sums
            .into_iter()
            .map(|(k, (sum, count))| {
                (
                    k,
                    Deviation {
                        average: sum / count as f64,
                        count,
                    },
                )
            })
            .collect(),
    }
}

/// Unclamped weighted Slope-One estimate, or `None` when no rated item of
/// `u` shares a co-rater with `j`.
pub fn predict_raw(m: &RatingsMatrix, d: &DeviationModel, u: usize, j: usize) -> Result<Option<f64>> {
    let row = m.rated_items(u)?;
    if j >= m.n_items() {
        return Err(Error::IndexOutOfRange { what: "item", index: j, len: m.n_items() });
    }
    if row.binary_search_by_key(&j, |&(i, _)| i).is_ok() {
        return Err(Error::AlreadyRated { user: u, item: j });
    }
    Ok(raw_unchecked(row, d, j))
}

fn raw_unchecked(row: &[(usize, f64)], d: &DeviationModel, j: usize) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0usize);
    for &(i, r) in row {
        if let Some(dev) = d.get(j, i) {
            num += (dev.average + r) * dev.count as f64;
            den += dev.count;
        }
    }
    (den > 0).then(|| num / den as f64)
}

pub fn predict_slope_one(m: &RatingsMatrix, d: &DeviationModel, u: usize, j: usize) -> Result<Option<f64>> {
    Ok(predict_raw(m, d, u, j)?.map(clamp_rating))
}

pub(crate) fn recommend(m: &RatingsMatrix, d: &DeviationModel, u: usize, n: usize) -> Vec<Recommendation> {
    let row = m.user_row(u);
    top_n_unrated(m, u, n, |j| raw_unchecked(row, d, j).map(clamp_rating))
}
