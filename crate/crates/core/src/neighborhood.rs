//! User-based and item-based kNN prediction.
//!
//! User-based estimates are mean-centred:
//! `mean(u) + Σ sim(u,v)·(r(v,i) − mean(v)) / Σ |sim(u,v)|`.
//! Item-based estimates are a plain weighted average of the user's own
//! ratings: `Σ sim(i,j)·r(u,j) / Σ |sim(i,j)|`.
//!
//! Only neighbors with similarity strictly above the threshold contribute,
//! and at most `k` of them, best first. Estimates are clamped to [1, 5].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::UserId;
use crate::ratings::RatingsMatrix;
use crate::similarity::{Axis, SimilarityModel};
use crate::{clamp_rating, top_n_unrated, Recommendation};

/// Neighborhood parameters. Defaults: k = 20, at least one contributing
/// neighbor, similarity strictly above 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    pub k: usize,
    pub min_neighbors: usize,
    /// Neighbors contribute only when their similarity is strictly greater.
    pub similarity_threshold: f64,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        NeighborhoodConfig {
            k: 20,
            min_neighbors: 1,
            similarity_threshold: 0.0,
        }
    }
}

impl NeighborhoodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.min_neighbors == 0 {
            return Err(Error::InvalidArgument("min_neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictorKind {
    UserBased,
    ItemBased,
}

impl PredictorKind {
    pub fn axis(self) -> Axis {
        match self {
            PredictorKind::UserBased => Axis::User,
            PredictorKind::ItemBased => Axis::Item,
        }
    }
}

fn check_indices(m: &RatingsMatrix, u: usize, i: usize) -> Result<()> {
    if u >= m.n_users() {
        return Err(Error::IndexOutOfRange { what: "user", index: u, len: m.n_users() });
    }
    if i >= m.n_items() {
        return Err(Error::IndexOutOfRange { what: "item", index: i, len: m.n_items() });
    }
    Ok(())
}

pub fn predict_user_based(
    m: &RatingsMatrix,
    sim: &SimilarityModel,
    u: usize,
    i: usize,
    cfg: &NeighborhoodConfig,
) -> Result<Option<f64>> {
    sim.ensure_axis(Axis::User)?;
    check_indices(m, u, i)?;
    Ok(user_based_unchecked(m, sim, u, i, cfg))
}

fn user_based_unchecked(
    m: &RatingsMatrix,
    sim: &SimilarityModel,
    u: usize,
    i: usize,
    cfg: &NeighborhoodConfig,
) -> Option<f64> {
    let (mut num, mut den, mut used) = (0.0, 0.0, 0usize);
    let contributors = sim
        .neighbors(u)
        .iter()
        .filter(|&&(_, s)| s > cfg.similarity_threshold)
        .filter_map(|&(v, s)| m.rating(v, i).map(|r| (v, s, r)))
        .take(cfg.k);
    for (v, s, r) in contributors {
        num += s * (r - m.user_mean(v));
        den += s.abs();
        used += 1;
    }
    if used < cfg.min_neighbors || den == 0.0 {
        return None;
    }
    Some(clamp_rating(m.user_mean(u) + num / den))
}

pub fn predict_item_based(
    m: &RatingsMatrix,
    sim: &SimilarityModel,
    u: usize,
    i: usize,
    cfg: &NeighborhoodConfig,
) -> Result<Option<f64>> {
    sim.ensure_axis(Axis::Item)?;
    check_indices(m, u, i)?;
    Ok(item_based_unchecked(m, sim, u, i, cfg))
}

fn item_based_unchecked(
    m: &RatingsMatrix,
    sim: &SimilarityModel,
    u: usize,
    i: usize,
    cfg: &NeighborhoodConfig,
) -> Option<f64> {
    let (mut num, mut den, mut used) = (0.0, 0.0, 0usize);
    let contributors = sim
        .neighbors(i)
        .iter()
        .filter(|&&(_, s)| s > cfg.similarity_threshold)
        .filter_map(|&(j, s)| m.rating(u, j).map(|r| (s, r)))
        .take(cfg.k);
    for (s, r) in contributors {
        num += s * r;
        den += s.abs();
        used += 1;
    }
    if used < cfg.min_neighbors || den == 0.0 {
        return None;
    }
    Some(clamp_rating(num / den))
}

/// Top-`n` unrated items for `user` under the chosen predictor.
pub fn recommend_top_n(
    m: &RatingsMatrix,
    sim: &SimilarityModel,
    user: UserId,
    n: usize,
    cfg: &NeighborhoodConfig,
    kind: PredictorKind,
) -> Result<Vec<Recommendation>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    sim.ensure_axis(kind.axis())?;
    let u = m.user_index(user).ok_or(Error::UnknownUser(user))?;
    Ok(match kind {
        PredictorKind::UserBased => top_n_unrated(m, u, n, |i| user_based_unchecked(m, sim, u, i, cfg)),
        PredictorKind::ItemBased => top_n_unrated(m, u, n, |i| item_based_unchecked(m, sim, u, i, cfg)),
    })
}
