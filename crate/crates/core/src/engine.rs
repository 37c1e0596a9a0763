//! One trained model of any kind behind a common interface.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baseline::{recommend_with_fallback, Popularity, Provenance};
use crate::error::{Error, Result};
use crate::factorization::{mf_train, FactorModel, TrainConfig};
use crate::ids::{ItemId, UserId};
use crate::neighborhood::{recommend_top_n, NeighborhoodConfig, PredictorKind};
use crate::ratings::RatingsMatrix;
use crate::similarity::{build_similarity_model, Axis, Kernel, SimilarityConfig, SimilarityModel};
use crate::slopeone::{self, build_deviations, DeviationModel};
use crate::{factorization, neighborhood, Predictor, Recommendation, Recommender};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    UserKnn,
    ItemKnn,
    SlopeOne,
    Mf,
    Popularity,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::UserKnn,
        Algorithm::ItemKnn,
        Algorithm::SlopeOne,
        Algorithm::Mf,
        Algorithm::Popularity,
    ];

    /// Short name used on the command line and in reports.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::UserKnn => "user",
            Algorithm::ItemKnn => "item",
            Algorithm::SlopeOne => "slopeone",
            Algorithm::Mf => "mf",
            Algorithm::Popularity => "pop",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

/// Parameters for every algorithm; each uses only its own part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub neighborhood: NeighborhoodConfig,
    pub user_similarity: SimilarityConfig,
    pub item_similarity: SimilarityConfig,
    pub train: TrainConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            neighborhood: NeighborhoodConfig::default(),
            user_similarity: SimilarityConfig::new(Kernel::Pearson),
            item_similarity: SimilarityConfig::new(Kernel::Cosine),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
enum Model {
    UserKnn(SimilarityModel),
    ItemKnn(SimilarityModel),
    SlopeOne(DeviationModel),
    Mf(FactorModel),
    Popularity,
}

/// A trained recommender together with the ratings it was trained on.
#[derive(Clone, Debug)]
pub struct Engine {
    algorithm: Algorithm,
    matrix: Arc<RatingsMatrix>,
    model: Model,
    popularity: Popularity,
    config: EngineConfig,
}

impl Engine {
    pub fn train(matrix: Arc<RatingsMatrix>, algorithm: Algorithm, config: &EngineConfig) -> Result<Engine> {
        config.neighborhood.validate()?;
        let model = match algorithm {
            Algorithm::UserKnn => Model::UserKnn(build_similarity_model(&matrix, Axis::User, &config.user_similarity)?),
            Algorithm::ItemKnn => Model::ItemKnn(build_similarity_model(&matrix, Axis::Item, &config.item_similarity)?),
            Algorithm::SlopeOne => Model::SlopeOne(build_deviations(&matrix)),
            Algorithm::Mf => Model::Mf(mf_train(&matrix, &config.train)?),
            Algorithm::Popularity => Model::Popularity,
        };
        Ok(Engine {
            algorithm,
            popularity: Popularity::new(&matrix),
            matrix,
            model,
            config: *config,
        })
    }

    /// Wraps a previously trained factor model. Its user and item ids must
    /// match `matrix` exactly.
    pub fn from_factor_model(matrix: Arc<RatingsMatrix>, model: FactorModel, config: &EngineConfig) -> Result<Engine> {
        if model.user_ids != matrix.user_ids() || model.item_ids != matrix.item_ids() {
            return Err(Error::Format {
                what: "factor model snapshot",
                detail: "user or item ids differ from the ratings file".into(),
            });
        }
        Ok(Engine {
            algorithm: Algorithm::Mf,
            popularity: Popularity::new(&matrix),
            matrix,
            model: Model::Mf(model),
            config: *config,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn matrix(&self) -> &RatingsMatrix {
        &self.matrix
    }

    pub fn popularity(&self) -> &Popularity {
        &self.popularity
    }

    pub fn factor_model(&self) -> Option<&FactorModel> {
        match &self.model {
            Model::Mf(f) => Some(f),
            _ => None,
        }
    }

    /// Whether [`Predictor::predict`] can return estimates at all.
    pub fn predicts_ratings(&self) -> bool {
        !matches!(self.model, Model::Popularity)
    }

    pub fn recommend_with_fallback(&self, user: UserId, n: usize) -> Result<(Vec<Recommendation>, Provenance)> {
        recommend_with_fallback(&self.matrix, &self.popularity, self, user, n)
    }
}

impl Recommender for Engine {
    fn recommend(&self, user: UserId, n: usize) -> Result<Vec<Recommendation>> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let m = &*self.matrix;
        let cfg = &self.config.neighborhood;
        let u = m.user_index(user).ok_or(Error::UnknownUser(user))?;
        Ok(match &self.model {
            Model::UserKnn(sim) => recommend_top_n(m, sim, user, n, cfg, PredictorKind::UserBased)?,
            Model::ItemKnn(sim) => recommend_top_n(m, sim, user, n, cfg, PredictorKind::ItemBased)?,
            Model::SlopeOne(dev) => slopeone::recommend(m, dev, u, n),
            Model::Mf(model) => factorization::recommend(model, m, u, n),
            Model::Popularity => self.popularity.top_n_for(m, user, n),
        })
    }
}

impl Predictor for Engine {
    fn predict(&self, user: UserId, item: ItemId) -> Option<f64> {
        let m = &*self.matrix;
        let u = m.user_index(user)?;
        let i = m.item_index(item)?;
        let cfg = &self.config.neighborhood;
        match &self.model {
            Model::UserKnn(sim) => neighborhood::predict_user_based(m, sim, u, i, cfg).ok().flatten(),
            Model::ItemKnn(sim) => neighborhood::predict_item_based(m, sim, u, i, cfg).ok().flatten(),
            // already-rated pairs have no Slope-One estimate
            Model::SlopeOne(dev) => slopeone::predict_slope_one(m, dev, u, i).ok().flatten(),
            Model::Mf(model) => factorization::mf_predict(model, u, i).ok(),
            Model::Popularity => None,
        }
    }
}
