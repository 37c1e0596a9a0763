//! Property checks shared by the proptest suite and the acceptance target.

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use techrec::baseline::{recommend_with_fallback, Popularity, Provenance};
use techrec::eval::leave_k_out_split;
use techrec::similarity::{cosine, pearson};
use techrec::slopeone::{build_deviations, predict_raw};
use techrec::{Algorithm, Engine, EngineConfig, Recommender, UserId};

use super::Dense;

pub const CASES: u32 = 128;

pub fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

/// Runner with a fixed seed so every run sees the same cases.
pub fn seeded_runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(config(cases), TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Sparse vector over indices `0..len` with half-star values in `[lo, hi]`.
pub fn sparse_vector(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<(usize, f64)>> {
    let steps = ((hi - lo) * 2.0) as u32;
    prop::collection::vec(prop::option::weighted(0.6, 0..=steps), len).prop_map(move |v| {
        v.into_iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| (i, lo + 0.5 * s as f64)))
            .collect()
    })
}

/// Non-empty matrix of at most `max_users` by `max_items` with half-star
/// ratings in `[lo, hi]`.
pub fn dense_matrix(max_users: usize, max_items: usize, lo: f64, hi: f64) -> impl Strategy<Value = Dense> {
    let steps = ((hi - lo) * 2.0) as u32;
    (1..=max_users, 1..=max_items, 0.15f64..0.95)
        .prop_flat_map(move |(nu, ni, density)| {
            prop::collection::vec(prop::collection::vec(prop::option::weighted(density, 0..=steps), ni), nu)
        })
        .prop_filter("at least one rating", |rows| rows.iter().flatten().any(Option::is_some))
        .prop_map(move |rows| {
            let r: Vec<Vec<Option<f64>>> = rows
                .into_iter()
                .map(|row| row.into_iter().map(|s| s.map(|s| lo + 0.5 * s as f64)).collect())
                .collect();
            let users = (0..r.len() as u64).map(|u| 10 + 3 * u).collect();
            let items = (0..r[0].len() as u64).map(|i| 500 + 2 * i).collect();
            Dense { users, items, r }.compact()
        })
}

pub fn similarity_symmetry_and_bounds(a: &[(usize, f64)], b: &[(usize, f64)], scale: f64) -> Result<(), TestCaseError> {
    for (name, f) in [("pearson", pearson as fn(&[(usize, f64)], &[(usize, f64)]) -> f64), ("cosine", cosine)] {
        let ab = f(a, b);
        let ba = f(b, a);
        prop_assert!((ab - ba).abs() <= 1e-12, "{name} asymmetric: {ab} vs {ba}");
        prop_assert!(ab.abs() <= 1.0 + 1e-12, "{name} out of bounds: {ab}");
        prop_assert!(ab.is_finite());
    }
    let scaled: Vec<(usize, f64)> = a.iter().map(|&(i, v)| (i, v * scale)).collect();
    prop_assert!((cosine(&scaled, b) - cosine(a, b)).abs() <= 1e-12, "cosine not scale invariant");
    Ok(())
}

/// Lists never contain rated items, are at most `n` long, are sorted by
/// score, and rating predictors stay within [1, 5].
pub fn recommendation_lists(d: &Dense, algorithm: Algorithm, n: usize) -> Result<(), TestCaseError> {
    let m = Arc::new(d.matrix());
    let mut cfg = EngineConfig::default();
    cfg.train.epochs = 20;
    let engine = Engine::train(m.clone(), algorithm, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for u in 0..m.n_users() {
        let user = m.user_id(u);
        let recs = engine.recommend(user, n).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(recs.len() <= n);
        let mut seen = BTreeSet::new();
        for r in &recs {
            prop_assert!(seen.insert(r.item), "duplicate item {}", r.item);
            let i = m.item_index(r.item).expect("known item");
            prop_assert!(!m.has_rated(u, i), "{algorithm}: rated item {} recommended to {user}", r.item);
            prop_assert!(r.score.is_finite());
            if algorithm == Algorithm::Popularity {
                prop_assert!(r.score >= 1.0 && r.score.fract() == 0.0);
            } else {
                prop_assert!((1.0..=5.0).contains(&r.score), "{algorithm}: score {} outside [1,5]", r.score);
            }
        }
        for w in recs.windows(2) {
            // popularity breaks count ties by rating sum before id
            let tie_ok = algorithm == Algorithm::Popularity || w[0].item < w[1].item;
            prop_assert!(
                w[0].score > w[1].score || (w[0].score == w[1].score && tie_ok),
                "{algorithm}: order {:?}",
                w
            );
        }
    }
    Ok(())
}

pub fn slope_one_antisymmetry(d: &Dense) -> Result<(), TestCaseError> {
    let m = d.matrix();
    let dev = build_deviations(&m);
    for j in 0..m.n_items() {
        prop_assert!(dev.get(j, j).is_none(), "self pair stored");
        for i in 0..m.n_items() {
            match (dev.get(j, i), dev.get(i, j)) {
                (Some(a), Some(b)) => {
                    prop_assert!((a.average + b.average).abs() <= 1e-12);
                    prop_assert_eq!(a.count, b.count);
                }
                (None, None) => {}
                _ => prop_assert!(false, "one-sided deviation ({j},{i})"),
            }
        }
    }
    Ok(())
}

/// Adding `c` to every rating shifts every unclamped prediction by `c`.
pub fn slope_one_shift(d: &Dense, c: f64) -> Result<(), TestCaseError> {
    let mut shifted = d.clone();
    for row in &mut shifted.r {
        for v in row.iter_mut().flatten() {
            *v += c;
        }
    }
    let (m, ms) = (d.matrix(), shifted.matrix());
    let (dev, devs) = (build_deviations(&m), build_deviations(&ms));
    for u in 0..m.n_users() {
        for j in 0..m.n_items() {
            if m.has_rated(u, j) {
                continue;
            }
            let base = predict_raw(&m, &dev, u, j).unwrap();
            let moved = predict_raw(&ms, &devs, u, j).unwrap();
            match (base, moved) {
                (Some(a), Some(b)) => prop_assert!((b - a - c).abs() <= 1e-9, "{a} + {c} != {b}"),
                (None, None) => {}
                _ => prop_assert!(false, "presence changed under shift"),
            }
        }
    }
    Ok(())
}

pub fn split_partition(d: &Dense, k: usize, seed: u64) -> Result<(), TestCaseError> {
    let m = d.matrix();
    let (train, holdout) = leave_k_out_split(&m, k, seed).unwrap();
    let key = |r: &techrec::ingest::RatingRow| (r.user, r.item, r.value.to_bits());
    let original: BTreeSet<_> = m.to_rating_rows().iter().map(key).collect();
    let train_set: BTreeSet<_> = train.to_rating_rows().iter().map(key).collect();
    let held_set: BTreeSet<_> = holdout.iter().map(key).collect();
    prop_assert_eq!(held_set.len(), holdout.len(), "duplicate holdout triple");
    prop_assert!(train_set.is_disjoint(&held_set));
    let union: BTreeSet<_> = train_set.union(&held_set).copied().collect();
    prop_assert_eq!(union, original);
    for u in 0..m.n_users() {
        let user = m.user_id(u);
        let total = m.rated_items(u).unwrap().len();
        let held = holdout.iter().filter(|r| r.user == user).count();
        prop_assert_eq!(held, if total > k { k } else { 0 });
    }
    let again = leave_k_out_split(&m, k, seed).unwrap();
    prop_assert_eq!(again.1, holdout);
    Ok(())
}

/// With at least `n` items, any user who has not rated everything gets a
/// non-empty list, and all zero-history users get the same list.
pub fn fallback_non_empty(d: &Dense, algorithm: Algorithm, n: usize) -> Result<(), TestCaseError> {
    let m = Arc::new(d.matrix());
    if m.n_items() < n {
        return Ok(());
    }
    let mut cfg = EngineConfig::default();
    cfg.train.epochs = 20;
    let engine = Engine::train(m.clone(), algorithm, &cfg).unwrap();
    let pop = Popularity::new(&m);
    for u in 0..m.n_users() {
        if m.rated_items(u).unwrap().len() == m.n_items() {
            continue;
        }
        let (recs, _) = recommend_with_fallback(&m, &pop, &engine, m.user_id(u), n).unwrap();
        prop_assert!(!recs.is_empty(), "{algorithm}: empty list for {}", m.user_id(u));
    }
    let ghost = |id| recommend_with_fallback(&m, &pop, &engine, UserId(id), n).unwrap();
    let (a, pa) = ghost(u64::MAX);
    let (b, pb) = ghost(u64::MAX - 1);
    prop_assert_eq!(pa, Provenance::Fallback);
    prop_assert_eq!(pb, Provenance::Fallback);
    prop_assert_eq!(a.len(), n);
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(Algorithm::ALL.to_vec())
}
