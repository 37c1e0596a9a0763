//! Library-versus-oracle comparison over one random matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use techrec::baseline::popularity_rank;
use techrec::eval::{coverage, leave_k_out_split, precision_recall_at_k, rmse};
use techrec::neighborhood::{predict_item_based, predict_user_based, NeighborhoodConfig};
use techrec::similarity::{build_similarity_model, cosine, pearson, Axis, Kernel, SimilarityConfig};
use techrec::slopeone::{build_deviations, predict_raw, predict_slope_one};
use techrec::{Algorithm, Engine, EngineConfig, Error, Predictor, Recommender, UserId};

use super::*;

/// Largest absolute difference seen per component.
#[derive(Debug, Default)]
pub struct Diffs(pub BTreeMap<&'static str, f64>);

impl Diffs {
    fn record(&mut self, what: &'static str, got: f64, want: f64) {
        let d = (got - want).abs();
        let slot = self.0.entry(what).or_insert(0.0);
        *slot = slot.max(d);
    }

    fn record_opt(&mut self, what: &'static str, got: Option<f64>, want: Option<f64>, ctx: impl Fn() -> String) {
        match (got, want) {
            (Some(g), Some(w)) => self.record(what, g, w),
            (None, None) => {
                self.0.entry(what).or_insert(0.0);
            }
            _ => panic!("{what}: presence differs ({got:?} vs {want:?}) at {}", ctx()),
        }
    }

    pub fn max(&self) -> f64 {
        self.0.values().copied().fold(0.0, f64::max)
    }

    pub fn merge(&mut self, other: &Diffs) {
        for (k, v) in &other.0 {
            let slot = self.0.entry(k).or_insert(0.0);
            *slot = slot.max(*v);
        }
    }
}

fn list(recs: &[techrec::Recommendation]) -> Vec<(u64, f64)> {
    recs.iter().map(|r| (r.item.0, r.score)).collect()
}

/// Compares every kernel, predictor, recommender and metric on `d` with
/// `k` neighbors. Panics on structural disagreement and returns the
/// numeric differences.
pub fn compare_all(d: &Dense, k: usize, split_seed: u64) -> Diffs {
    let mut diffs = Diffs::default();
    let m = Arc::new(d.matrix());
    assert_eq!(m.n_users(), d.n_users());
    assert_eq!(m.n_items(), d.n_items());

    for a in 0..d.n_users() {
        for b in 0..d.n_users() {
            let (ra, rb) = (m.rated_items(a).unwrap(), m.rated_items(b).unwrap());
            diffs.record("pearson", pearson(ra, rb), super::pearson(&d.r[a], &d.r[b]));
            diffs.record("cosine", cosine(ra, rb), super::cosine(&d.r[a], &d.r[b]));
        }
    }
    for i in 0..d.n_items() {
        for j in 0..d.n_items() {
            let (ci, cj) = (m.raters(i).unwrap(), m.raters(j).unwrap());
            diffs.record("pearson", pearson(ci, cj), super::pearson(&d.column(i), &d.column(j)));
            diffs.record("cosine", cosine(ci, cj), super::cosine(&d.column(i), &d.column(j)));
        }
    }

    let user_sim = build_similarity_model(&m, Axis::User, &SimilarityConfig::new(Kernel::Pearson)).unwrap();
    let item_sim = build_similarity_model(&m, Axis::Item, &SimilarityConfig::new(Kernel::Cosine)).unwrap();
    let ncfg = NeighborhoodConfig { k, ..NeighborhoodConfig::default() };
    let ocfg = Knn { k, ..Knn::default() };
    let deviations = build_deviations(&m);

    for u in 0..d.n_users() {
        for i in 0..d.n_items() {
            let ctx = || format!("user {} item {}", d.users[u], d.items[i]);
            diffs.record_opt(
                "user_knn",
                predict_user_based(&m, &user_sim, u, i, &ncfg).unwrap(),
                super::predict_user_based(d, u, i, &ocfg),
                ctx,
            );
            diffs.record_opt(
                "item_knn",
                predict_item_based(&m, &item_sim, u, i, &ncfg).unwrap(),
                super::predict_item_based(d, u, i, &ocfg),
                ctx,
            );
            if d.r[u][i].is_some() {
                assert!(matches!(predict_slope_one(&m, &deviations, u, i), Err(Error::AlreadyRated { .. })));
            } else {
                diffs.record_opt("slope_one", predict_slope_one(&m, &deviations, u, i).unwrap(), slope_one(d, u, i), ctx);
                diffs.record_opt("slope_one_raw", predict_raw(&m, &deviations, u, i).unwrap(), slope_one_raw(d, u, i), ctx);
            }
        }
    }
    for j in 0..d.n_items() {
        for i in 0..d.n_items() {
            if i == j {
                continue;
            }
            match (deviations.get(j, i), deviation(d, j, i)) {
                (Some(got), Some((avg, count))) => {
                    assert_eq!(got.count, count);
                    diffs.record("deviation", got.average, avg);
                }
                (None, None) => {}
                (got, want) => panic!("deviation ({j},{i}): {got:?} vs {want:?}"),
            }
        }
    }

    let rows = d.rows();
    let pop = popularity_rank(&m);
    let want_pop = popularity(&rows);
    assert_eq!(pop.len(), want_pop.len());
    for (g, w) in pop.iter().zip(&want_pop) {
        assert_eq!(g.0 .0, w.0, "popularity order");
        diffs.record("popularity", g.1, w.1);
    }

    let mut engine_cfg = EngineConfig::default();
    engine_cfg.neighborhood.k = k;
    let n = 5;
    for algorithm in [Algorithm::UserKnn, Algorithm::ItemKnn, Algorithm::SlopeOne, Algorithm::Popularity] {
        let engine = Engine::train(m.clone(), algorithm, &engine_cfg).unwrap();
        for u in 0..d.n_users() {
            let score = |i: usize| -> Option<f64> {
                match algorithm {
                    Algorithm::UserKnn => super::predict_user_based(d, u, i, &ocfg),
                    Algorithm::ItemKnn => super::predict_item_based(d, u, i, &ocfg),
                    Algorithm::SlopeOne => slope_one(d, u, i),
                    _ => want_pop.iter().find(|p| p.0 == d.items[i]).map(|p| p.1),
                }
            };
            let got = list(&engine.recommend(UserId(d.users[u]), n).unwrap());
            let want = top_n(d, u, n, score);
            let oracle_score = |item: u64| {
                let i = d.items.iter().position(|&x| x == item)?;
                if d.r[u][i].is_some() {
                    None
                } else {
                    score(i)
                }
            };
            assert_same_list(&got, &want, oracle_score, &format!("{algorithm} user {}", d.users[u]));
            diffs.record("recommend", got.iter().map(|x| x.1).sum(), want.iter().map(|x| x.1).sum());
        }
    }

    // metrics on a seeded split
    let (train, holdout) = leave_k_out_split(&m, 1, split_seed).unwrap();
    if holdout.is_empty() {
        return diffs;
    }
    let train = Arc::new(train);
    let mut held: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for r in &holdout {
        held.entry(r.user.0).or_default().insert(r.item.0);
    }
    for algorithm in [Algorithm::ItemKnn, Algorithm::UserKnn, Algorithm::Popularity] {
        let engine = Engine::train(train.clone(), algorithm, &engine_cfg).unwrap();

        let pairs: Vec<(f64, f64)> = holdout
            .iter()
            .filter_map(|r| engine.predict(r.user, r.item).map(|p| (p, r.value)))
            .collect();
        let got = rmse(&holdout, &engine).unwrap();
        assert_eq!(got.predicted, pairs.len());
        assert_eq!(got.skipped, holdout.len() - pairs.len());
        diffs.record_opt("rmse", got.rmse, (!pairs.is_empty()).then(|| super::rmse(&pairs)), || algorithm.to_string());

        let at_k = 3;
        let lists: BTreeMap<u64, Vec<u64>> = held
            .keys()
            .filter_map(|&user| {
                let recs = engine.recommend(UserId(user), at_k).ok()?;
                Some((user, recs.iter().map(|r| r.item.0).collect()))
            })
            .collect();
        let (p, r, users) = precision_recall(&lists, &held, at_k);
        let got = precision_recall_at_k(&holdout, &engine, at_k).unwrap();
        assert_eq!(got.users_evaluated, users);
        diffs.record("precision", got.precision, p);
        diffs.record("recall", got.recall, r);

        let served = train
            .user_ids()
            .iter()
            .filter(|&&user| !engine.recommend(user, 10).unwrap().is_empty())
            .count();
        let cov = coverage(&train, &engine, 10).unwrap();
        assert_eq!(cov.users_served, served);
        assert_eq!(cov.users_total, train.n_users());
        diffs.record("coverage", cov.coverage, served as f64 / train.n_users() as f64);
    }
    diffs
}
