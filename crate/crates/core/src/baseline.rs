//! Popularity ranking and the cold-start fallback policy.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::ratings::RatingsMatrix;
use crate::{Recommendation, Recommender};

/// Items by rater count descending, then rating sum descending, then
/// ascending id. The score is the rater count.
pub fn popularity_rank(m: &RatingsMatrix) -> Vec<(ItemId, f64)> {
    let mut stats: Vec<(usize, usize, f64)> = (0..m.n_items())
        .map(|i| {
            let col = m.item_col(i);
            (i, col.len(), col.iter().map(|&(_, v)| v).sum())
        })
        .collect();
    stats.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(b.2.total_cmp(&a.2))
            .then(a.0.cmp(&b.0))
    });
    stats
        .into_iter()
        .map(|(i, raters, _)| (m.item_id(i), raters as f64))
        .collect()
}

/// Precomputed popularity ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct Popularity {
    ranked: Vec<(ItemId, f64)>,
}

impl Popularity {
    pub fn new(m: &RatingsMatrix) -> Self {
        Popularity { ranked: popularity_rank(m) }
    }

    pub fn ranked(&self) -> &[(ItemId, f64)] {
        &self.ranked
    }

    /// Top `n` popular items the user has not rated. Users absent from `m`
    /// get the plain top `n`.
    pub fn top_n_for(&self, m: &RatingsMatrix, user: UserId, n: usize) -> Vec<Recommendation> {
        let u = m.user_index(user);
        self.ranked
            .iter()
            .filter(|(item, _)| match (u, m.item_index(*item)) {
                (Some(u), Some(i)) => !m.has_rated(u, i),
                _ => true,
            })
            .take(n)
            .map(|&(item, score)| Recommendation { item, score })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Model,
    Fallback,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Model => "model",
            Provenance::Fallback => "fallback",
        })
    }
}

/// Serves `primary`'s list when it is non-empty, otherwise the user's top-`n`
/// unrated popular items. Unknown users always get the popularity list.
pub fn recommend_with_fallback(
    m: &RatingsMatrix,
    popularity: &Popularity,
    primary: &dyn Recommender,
    user: UserId,
    n: usize,
) -> Result<(Vec<Recommendation>, Provenance)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if m.user_index(user).is_some() {
        let recs = primary.recommend(user, n)?;
        if !recs.is_empty() {
            return Ok((recs, Provenance::Model));
        }
    }
    Ok((popularity.top_n_for(m, user, n), Provenance::Fallback))
}
