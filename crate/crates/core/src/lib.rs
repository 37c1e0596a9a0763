//! # techrec
//!
//! A collaborative-filtering recommender that turns open-source project
//! metadata (intended audience, environment, operating system, language and
//! topic) into implicit technology ratings and recommends technologies to
//! project managers.
//!
//! The pipeline is:
//!
//! 1. [`ingest`] parses the project-metadata export, assigns technology ids
//!    and derives per-user ratings from distinct-project occurrence counts.
//! 2. [`ratings::RatingsMatrix`] interns the sparse user × technology matrix.
//! 3. One of the predictors scores unrated technologies:
//!    user-based or item-based kNN ([`neighborhood`]), weighted Slope-One
//!    ([`slopeone`]), biased matrix factorization ([`factorization`]) or the
//!    popularity baseline ([`baseline`]).
//! 4. [`eval`] measures coverage, precision/recall@k and RMSE over a seeded
//!    leave-k-out split.
//!
//! [`engine::Engine`] wraps a trained model of any kind behind one interface;
//! that is what the CLI and the C ABI crate use.

pub mod baseline;
pub mod config;
pub mod engine;
pub mod error;
pub mod eval;
pub mod factorization;
pub mod fixtures;
pub mod ids;
pub mod ingest;
pub mod neighborhood;
pub mod ratings;
pub mod similarity;
pub mod slopeone;

pub mod cli;

pub use engine::{Algorithm, Engine, EngineConfig};
pub use error::{Error, Result};
pub use ids::{ItemId, UserId};
pub use ratings::RatingsMatrix;

/// A single recommended technology for a user.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Recommendation {
    pub item: ItemId,
    /// Predicted rating on the 1 to 5 scale for model output; rater count for
    /// popularity output.
    pub score: f64,
}

/// Produces top-N lists for users identified by external id.
pub trait Recommender {
    fn recommend(&self, user: UserId, n: usize) -> Result<Vec<Recommendation>>;
}

/// Estimates a single rating. `None` means the model cannot score the pair.
pub trait Predictor {
    fn predict(&self, user: UserId, item: ItemId) -> Option<f64>;
}

/// Lowest rating on the scale.
pub const MIN_RATING: f64 = 1.0;
/// Highest rating on the scale.
pub const MAX_RATING: f64 = 5.0;

#[inline]
pub(crate) fn clamp_rating(x: f64) -> f64 {
    x.clamp(MIN_RATING, MAX_RATING)
}

/// Scores every item `u` has not rated and keeps the best `n`, score
/// descending with ties broken by ascending external item id.
pub fn top_n_unrated(
    m: &RatingsMatrix,
    u: usize,
    n: usize,
    mut score: impl FnMut(usize) -> Option<f64>,
) -> Vec<Recommendation> {
    let rated = m.user_row(u);
    let mut next_rated = rated.iter().map(|&(i, _)| i).peekable();
    let mut scored = Vec::new();
    for i in 0..m.n_items() {
        if next_rated.peek() == Some(&i) {
            next_rated.next();
            continue;
        }
        if let Some(s) = score(i) {
            scored.push((i, s));
        }
    }
    // index order is external-id order
    scored.sort_by(similarity::by_score_then_index);
    scored
        .into_iter()
        .take(n)
        .map(|(i, score)| Recommendation {
            item: m.item_id(i),
            score,
        })
        .collect()
}
