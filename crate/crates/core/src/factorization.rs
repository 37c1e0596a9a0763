//! Biased matrix factorization trained by stochastic gradient descent.
//!
//! The model predicts `mu + b_u + b_i + p_u · q_i` and training minimizes
//!
//! ```text
//! L = Σ_(u,i) [ (r_ui − mu − b_u − b_i − p_u·q_i)²
//!               + λ (b_u² + b_i² + ‖p_u‖² + ‖q_i‖²) ]
//! ```
//!
//! one rating at a time. Each update moves the touched parameters by
//! `−η/2` times that rating's gradient term. `mu` stays at the global mean.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::ratings::RatingsMatrix;
use crate::{clamp_rating, top_n_unrated, Recommendation};

const SNAPSHOT_MAGIC: &str = "techrec-factor-model";
const SNAPSHOT_VERSION: u32 = 1;

/// Training hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Factors start uniform in `(-init_scale, init_scale)`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            factors: 8,
            learning_rate: 0.01,
            regularization: 0.05,
            epochs: 100,
            seed: 42,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_owned()));
        if self.factors == 0 {
            return bad("factors must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return bad("regularization must be non-negative");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel {
    pub mu: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    /// Row-major `n_users × factors`.
    pub user_factors: Vec<f64>,
    /// Row-major `n_items × factors`.
    pub item_factors: Vec<f64>,
    pub factors: usize,
    pub seed: u64,
    pub user_ids: Vec<UserId>,
    pub item_ids: Vec<ItemId>,
}

impl FactorModel {
    /// All-zero biases and factors around `mu`.
    pub fn zeros(mu: f64, user_ids: Vec<UserId>, item_ids: Vec<ItemId>, factors: usize) -> Self {
        FactorModel {
            mu,
            user_bias: vec![0.0; user_ids.len()],
            item_bias: vec![0.0; item_ids.len()],
            user_factors: vec![0.0; user_ids.len() * factors],
            item_factors: vec![0.0; item_ids.len() * factors],
            factors,
            seed: 0,
            user_ids,
            item_ids,
        }
    }

    pub fn n_users(&self) -> usize {
        self.user_bias.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_bias.len()
    }

    pub fn user_vector(&self, u: usize) -> &[f64] {
        &self.user_factors[u * self.factors..(u + 1) * self.factors]
    }

    pub fn item_vector(&self, i: usize) -> &[f64] {
        &self.item_factors[i * self.factors..(i + 1) * self.factors]
    }

    /// Unclamped estimate.
    pub fn raw_score(&self, u: usize, i: usize) -> f64 {
        let dot: f64 = self
            .user_vector(u)
            .iter()
            .zip(self.item_vector(i))
            .map(|(p, q)| p * q)
            .sum();
        self.mu + self.user_bias[u] + self.item_bias[i] + dot
    }

    fn all_finite(&self) -> bool {
        self.user_bias
            .iter()
            .chain(&self.item_bias)
            .chain(&self.user_factors)
            .chain(&self.item_factors)
            .all(|x| x.is_finite())
    }

    pub fn user_index(&self, user: UserId) -> Option<usize> {
        self.user_ids.binary_search(&user).ok()
    }

    pub fn item_index(&self, item: ItemId) -> Option<usize> {
        self.item_ids.binary_search(&item).ok()
    }

    /// Writes the versioned text snapshot.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}")?;
        writeln!(w, "factors {}", self.factors)?;
        writeln!(w, "users {}", self.n_users())?;
        writeln!(w, "items {}", self.n_items())?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "mu {}", self.mu)?;
        for u in 0..self.n_users() {
            write!(w, "u {} {}", self.user_ids[u], self.user_bias[u])?;
            for x in self.user_vector(u) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        for i in 0..self.n_items() {
            write!(w, "i {} {}", self.item_ids[i], self.item_bias[i])?;
            for x in self.item_vector(i) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn read_snapshot<R: BufRead>(r: R) -> Result<Self> {
        let bad = |detail: String| Error::Format { what: "factor model snapshot", detail };
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| bad("unexpected end of file".into()))
        };

        let magic = next_line()?;
        if magic != format!("{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}") {
            return Err(bad(format!("unsupported header {magic:?}")));
        }
        let mut header = |key: &str| -> Result<String> {
            let line = next_line()?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| bad(format!("expected {key:?}, found {line:?}")))
        };
        let int = |s: String| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let factors = int(header("factors")?)? as usize;
        let n_users = int(header("users")?)? as usize;
        let n_items = int(header("items")?)? as usize;
        let seed = int(header("seed")?)?;
        let mu_raw = header("mu")?;
        let mu = mu_raw.parse::<f64>().map_err(|e| bad(format!("{mu_raw:?}: {e}")))?;
        if factors == 0 {
            return Err(bad("factors must be at least 1".into()));
        }

        let mut model = FactorModel {
            seed,
            ..FactorModel::zeros(mu, Vec::new(), Vec::new(), factors)
        };
        for (tag, count) in [("u", n_users), ("i", n_items)] {
            for _ in 0..count {
                let line = next_line()?;
                let mut fields = line.split_ascii_whitespace();
                if fields.next() != Some(tag) {
                    return Err(bad(format!("expected {tag:?} row, found {line:?}")));
                }
                let id = fields
                    .next()
                    .ok_or_else(|| bad(format!("missing id in {line:?}")))
                    .and_then(|s| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}"))))?;
                let values = fields
                    .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if values.len() != factors + 1 {
                    return Err(bad(format!("expected {} numbers in {line:?}", factors + 1)));
                }
                if tag == "u" {
                    model.user_ids.push(UserId(id));
                    model.user_bias.push(values[0]);
                    model.user_factors.extend_from_slice(&values[1..]);
                } else {
                    model.item_ids.push(ItemId(id));
                    model.item_bias.push(values[0]);
                    model.item_factors.extend_from_slice(&values[1..]);
                }
            }
        }
        if !model.user_ids.windows(2).all(|w| w[0] < w[1]) || !model.item_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad("ids must be strictly ascending".into()));
        }
        if !model.mu.is_finite() || !model.all_finite() {
            return Err(bad("non-finite parameter".into()));
        }
        Ok(model)
    }
}

/// Per-epoch training statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochInfo {
    /// 1-based.
    pub epoch: usize,
    /// Regularized objective after the epoch.
    pub loss: f64,
    /// Unclamped training RMSE after the epoch.
    pub rmse: f64,
}

fn triples(m: &RatingsMatrix) -> Vec<(usize, usize, f64)> {
    (0..m.n_users())
        .flat_map(|u| m.user_row(u).iter().map(move |&(i, r)| (u, i, r)))
        .collect()
}

fn init_model(m: &RatingsMatrix, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> FactorModel {
    let mut model = FactorModel::zeros(
        m.global_mean(),
        m.user_ids().to_vec(),
        m.item_ids().to_vec(),
        cfg.factors,
    );
    model.seed = cfg.seed;
    let mut draw = |x: &mut f64| {
        *x = if cfg.init_scale > 0.0 {
            rng.gen_range(-cfg.init_scale..cfg.init_scale)
        } else {
            0.0
        }
    };
    model.user_factors.iter_mut().for_each(&mut draw);
    model.item_factors.iter_mut().for_each(&mut draw);
    model
}

/// Regularized objective over the ratings of `m`.
pub fn loss(model: &FactorModel, m: &RatingsMatrix, regularization: f64) -> f64 {
    triples(m)
        .into_iter()
        .map(|(u, i, r)| {
            let e = r - model.raw_score(u, i);
            let norms: f64 = model.user_bias[u].powi(2)
                + model.item_bias[i].powi(2)
                + model.user_vector(u).iter().map(|x| x * x).sum::<f64>()
                + model.item_vector(i).iter().map(|x| x * x).sum::<f64>();
            e * e + regularization * norms
        })
        .sum()
}

fn train_rmse(model: &FactorModel, ratings: &[(usize, usize, f64)]) -> f64 {
    let sse: f64 = ratings
        .iter()
        .map(|&(u, i, r)| (r - model.raw_score(u, i)).powi(2))
        .sum();
    (sse / ratings.len() as f64).sqrt()
}

pub fn mf_train(m: &RatingsMatrix, cfg: &TrainConfig) -> Result<FactorModel> {
    mf_train_observed(m, cfg, |_, _| {})
}

/// Trains and calls `observer` after every epoch with the current state.
pub fn mf_train_observed(
    m: &RatingsMatrix,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochInfo, &FactorModel),
) -> Result<FactorModel> {
    cfg.validate()?;
    if m.n_ratings() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = init_model(m, cfg, &mut rng);
    let mut order = triples(m);
    let (eta, lambda, f) = (cfg.learning_rate, cfg.regularization, cfg.factors);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &(u, i, r) in &order {
            let e = r - model.raw_score(u, i);
            model.user_bias[u] += eta * (e - lambda * model.user_bias[u]);
            model.item_bias[i] += eta * (e - lambda * model.item_bias[i]);
            let (pu, qi) = (u * f, i * f);
            for k in 0..f {
                let p = model.user_factors[pu + k];
                let q = model.item_factors[qi + k];
                model.user_factors[pu + k] += eta * (e * q - lambda * p);
                model.item_factors[qi + k] += eta * (e * p - lambda * q);
            }
        }
        if !model.all_finite() {
            return Err(Error::DivergenceDetected { epoch });
        }
        let info = EpochInfo {
            epoch,
            loss: loss(&model, m, lambda),
            rmse: train_rmse(&model, &order),
        };
        if !info.loss.is_finite() {
            return Err(Error::DivergenceDetected { epoch });
        }
        observer(&info, &model);
    }
    Ok(model)
}

pub fn mf_predict(model: &FactorModel, u: usize, i: usize) -> Result<f64> {
    if u >= model.n_users() {
        return Err(Error::IndexOutOfRange { what: "user", index: u, len: model.n_users() });
    }
    if i >= model.n_items() {
        return Err(Error::IndexOutOfRange { what: "item", index: i, len: model.n_items() });
    }
    Ok(clamp_rating(model.raw_score(u, i)))
}

/// Gradient of [`loss`] with respect to every parameter, in the order
/// user biases, item biases, user factors, item factors.
pub fn loss_gradient(model: &FactorModel, m: &RatingsMatrix, regularization: f64) -> Vec<f64> {
    let (nu, ni, f) = (model.n_users(), model.n_items(), model.factors);
    let mut g = vec![0.0; nu + ni + (nu + ni) * f];
    let (gbu, rest) = g.split_at_mut(nu);
    let (gbi, rest) = rest.split_at_mut(ni);
    let (gp, gq) = rest.split_at_mut(nu * f);
    for (u, i, r) in triples(m) {
        let e = r - model.raw_score(u, i);
        gbu[u] += -2.0 * e + 2.0 * regularization * model.user_bias[u];
        gbi[i] += -2.0 * e + 2.0 * regularization * model.item_bias[i];
        for k in 0..f {
            let p = model.user_factors[u * f + k];
            let q = model.item_factors[i * f + k];
            gp[u * f + k] += -2.0 * e * q + 2.0 * regularization * p;
            gq[i * f + k] += -2.0 * e * p + 2.0 * regularization * q;
        }
    }
    g
}

fn param_mut(model: &mut FactorModel, idx: usize) -> &mut f64 {
    let (nu, ni) = (model.n_users(), model.n_items());
    let nf_u = model.user_factors.len();
    if idx < nu {
        &mut model.user_bias[idx]
    } else if idx < nu + ni {
        &mut model.item_bias[idx - nu]
    } else if idx < nu + ni + nf_u {
        &mut model.user_factors[idx - nu - ni]
    } else {
        &mut model.item_factors[idx - nu - ni - nf_u]
    }
}

/// Step used for the central differences.
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;
// Relative errors are measured against max(|analytic|, |numeric|, this).
const GRADIENT_CHECK_FLOOR: f64 = 1e-3;

/// Compares [`loss_gradient`] with central finite differences at a seeded
/// random parameter point and returns the largest relative error. Intended
/// for small probes (5×5 or less).
pub fn mf_gradient_check(cfg: &TrainConfig, probe: &RatingsMatrix) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = FactorModel::zeros(
        probe.global_mean(),
        probe.user_ids().to_vec(),
        probe.item_ids().to_vec(),
        cfg.factors.max(1),
    );
    let scale = cfg.init_scale.max(0.5);
    for x in model
        .user_bias
        .iter_mut()
        .chain(model.item_bias.iter_mut())
        .chain(model.user_factors.iter_mut())
        .chain(model.item_factors.iter_mut())
    {
        *x = rng.gen_range(-scale..scale);
    }

    let lambda = cfg.regularization;
    let analytic = loss_gradient(&model, probe, lambda);
    let mut worst: f64 = 0.0;
    for (idx, &a) in analytic.iter().enumerate() {
        let orig = *param_mut(&mut model, idx);
        *param_mut(&mut model, idx) = orig + GRADIENT_CHECK_STEP;
        let up = loss(&model, probe, lambda);
        *param_mut(&mut model, idx) = orig - GRADIENT_CHECK_STEP;
        let down = loss(&model, probe, lambda);
        *param_mut(&mut model, idx) = orig;
        let numeric = (up - down) / (2.0 * GRADIENT_CHECK_STEP);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRADIENT_CHECK_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

pub(crate) fn recommend(model: &FactorModel, m: &RatingsMatrix, u: usize, n: usize) -> Vec<Recommendation> {
    // model and matrix intern ids identically when trained on `m`
    top_n_unrated(m, u, n, |i| Some(clamp_rating(model.raw_score(u, i))))
}
