//! Brute-force reference implementations over a dense matrix, written
//! straight from the formulas and sharing no code with the library.

#![allow(dead_code)]

pub mod compare;
pub mod invariants;

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use techrec::ingest::RatingRow;
use techrec::{ItemId, RatingsMatrix, UserId};

pub const TOL: f64 = 1e-9;

/// Ratings as `r[u][i]`, with external ids ascending along both axes.
#[derive(Clone, Debug)]
pub struct Dense {
    pub users: Vec<u64>,
    pub items: Vec<u64>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl Dense {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn column(&self, i: usize) -> Vec<Option<f64>> {
        self.r.iter().map(|row| row[i]).collect()
    }

    pub fn user_mean(&self, u: usize) -> f64 {
        let vals: Vec<f64> = self.r[u].iter().flatten().copied().collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn rows(&self) -> Vec<RatingRow> {
        let mut out = Vec::new();
        for (u, row) in self.r.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    out.push(RatingRow { user: UserId(self.users[u]), item: ItemId(self.items[i]), value: *v });
                }
            }
        }
        out
    }

    /// Dense view of rating triples, users and items in ascending id order.
    pub fn from_rating_rows(rows: &[RatingRow]) -> Dense {
        let users: Vec<u64> = rows.iter().map(|r| r.user.0).collect::<BTreeSet<_>>().into_iter().collect();
        let items: Vec<u64> = rows.iter().map(|r| r.item.0).collect::<BTreeSet<_>>().into_iter().collect();
        let mut r = vec![vec![None; items.len()]; users.len()];
        for row in rows {
            let u = users.binary_search(&row.user.0).unwrap();
            let i = items.binary_search(&row.item.0).unwrap();
            r[u][i] = Some(row.value);
        }
        Dense { users, items, r }
    }

    pub fn matrix(&self) -> RatingsMatrix {
        RatingsMatrix::from_rating_rows(&self.rows()).unwrap()
    }

    /// Drops users and items without ratings so indices line up with
    /// [`RatingsMatrix`] interning.
    pub fn compact(mut self) -> Dense {
        let keep_items: Vec<usize> = (0..self.n_items()).filter(|&i| self.r.iter().any(|row| row[i].is_some())).collect();
        let keep_users: Vec<usize> = (0..self.n_users()).filter(|&u| self.r[u].iter().any(Option::is_some)).collect();
        self.r = keep_users.iter().map(|&u| keep_items.iter().map(|&i| self.r[u][i]).collect()).collect();
        self.users = keep_users.iter().map(|&u| self.users[u]).collect();
        self.items = keep_items.iter().map(|&i| self.items[i]).collect();
        self
    }
}

/// Random matrix with up to `max_dim` users and items. Ratings are whole or
/// half stars in `[lo, hi]`, which makes tied similarities common.
pub fn random_dense(seed: u64, max_dim: usize, lo: f64, hi: f64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = rng.gen_range(2..=max_dim);
    let n_items = rng.gen_range(2..=max_dim);
    let density = rng.gen_range(0.2..0.9);
    let mut users: Vec<u64> = (0..n_users).map(|k| 100 + 7 * k as u64 + rng.gen_range(0..7)).collect();
    let mut items: Vec<u64> = (0..n_items).map(|k| 1000 + 13 * k as u64 + rng.gen_range(0..13)).collect();
    users.sort_unstable();
    items.sort_unstable();
    let steps = ((hi - lo) * 2.0).round() as i32;
    let mut r: Vec<Vec<Option<f64>>> = (0..n_users)
        .map(|_| {
            (0..n_items)
                .map(|_| rng.gen_bool(density).then(|| lo + 0.5 * rng.gen_range(0..=steps) as f64))
                .collect()
        })
        .collect();
    // at least one rating so the matrix is non-empty
    if r.iter().all(|row| row.iter().all(Option::is_none)) {
        r[0][0] = Some(lo);
    }
    Dense { users, items, r }.compact()
}

fn co_rated(a: &[Option<f64>], b: &[Option<f64>]) -> Vec<(f64, f64)> {
    a.iter().zip(b).filter_map(|(x, y)| Some(((*x)?, (*y)?))).collect()
}

pub fn pearson(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    let pairs = co_rated(a, b);
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum();
    let va: f64 = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum();
    let vb: f64 = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum();
    if va < 1e-12 || vb < 1e-12 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

pub fn cosine(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    let dense = |v: &[Option<f64>]| v.iter().map(|x| x.unwrap_or(0.0)).collect::<Vec<_>>();
    let (a, b) = (dense(a), dense(b));
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn clamp(x: f64) -> f64 {
    x.clamp(1.0, 5.0)
}

/// Keeps candidates with score above `threshold`, best first, ties by index.
fn top_k(mut cands: Vec<(usize, f64, f64)>, k: usize, threshold: f64) -> Vec<(usize, f64, f64)> {
    cands.retain(|c| c.1 > threshold);
    cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    cands.truncate(k);
    cands
}

pub struct Knn {
    pub k: usize,
    pub min_neighbors: usize,
    pub threshold: f64,
}

impl Default for Knn {
    fn default() -> Self {
        Knn { k: 20, min_neighbors: 1, threshold: 0.0 }
    }
}

/// Pearson similarity between every pair of users.
pub fn user_similarities(d: &Dense) -> Vec<Vec<f64>> {
    (0..d.n_users()).map(|a| (0..d.n_users()).map(|b| pearson(&d.r[a], &d.r[b])).collect()).collect()
}

/// Cosine similarity between every pair of item columns.
pub fn item_similarities(d: &Dense) -> Vec<Vec<f64>> {
    let cols: Vec<_> = (0..d.n_items()).map(|i| d.column(i)).collect();
    cols.iter().map(|a| cols.iter().map(|b| cosine(a, b)).collect()).collect()
}

/// Mean-centred user-based estimate with Pearson similarity.
pub fn predict_user_based(d: &Dense, u: usize, i: usize, cfg: &Knn) -> Option<f64> {
    let sims: Vec<f64> = (0..d.n_users()).map(|v| pearson(&d.r[u], &d.r[v])).collect();
    user_based_with(d, &sims, u, i, cfg)
}

/// As [`predict_user_based`] with `sims[v]` the similarity of `u` to `v`.
pub fn user_based_with(d: &Dense, sims: &[f64], u: usize, i: usize, cfg: &Knn) -> Option<f64> {
    let cands: Vec<(usize, f64, f64)> = (0..d.n_users())
        .filter(|&v| v != u)
        .filter_map(|v| d.r[v][i].map(|r| (v, sims[v], r)))
        .collect();
    let used = top_k(cands, cfg.k, cfg.threshold);
    if used.len() < cfg.min_neighbors || used.is_empty() {
        return None;
    }
    let num: f64 = used.iter().map(|&(v, s, r)| s * (r - d.user_mean(v))).sum();
    let den: f64 = used.iter().map(|c| c.1.abs()).sum();
    Some(clamp(d.user_mean(u) + num / den))
}

/// Weighted-sum item-based estimate with cosine similarity.
pub fn predict_item_based(d: &Dense, u: usize, i: usize, cfg: &Knn) -> Option<f64> {
    let col_i = d.column(i);
    let sims: Vec<f64> = (0..d.n_items()).map(|j| cosine(&col_i, &d.column(j))).collect();
    item_based_with(d, &sims, u, i, cfg)
}

/// As [`predict_item_based`] with `sims[j]` the similarity of `i` to `j`.
pub fn item_based_with(d: &Dense, sims: &[f64], u: usize, i: usize, cfg: &Knn) -> Option<f64> {
    let cands: Vec<(usize, f64, f64)> = (0..d.n_items())
        .filter(|&j| j != i)
        .filter_map(|j| d.r[u][j].map(|r| (j, sims[j], r)))
        .collect();
    let used = top_k(cands, cfg.k, cfg.threshold);
    if used.len() < cfg.min_neighbors || used.is_empty() {
        return None;
    }
    let num: f64 = used.iter().map(|&(_, s, r)| s * r).sum();
    let den: f64 = used.iter().map(|c| c.1.abs()).sum();
    Some(clamp(num / den))
}

/// Average of `r[w][j] - r[w][i]` over users rating both, with their count.
pub fn deviation(d: &Dense, j: usize, i: usize) -> Option<(f64, usize)> {
    let diffs: Vec<f64> = (0..d.n_users()).filter_map(|w| Some(d.r[w][j]? - d.r[w][i]?)).collect();
    (!diffs.is_empty()).then(|| (diffs.iter().sum::<f64>() / diffs.len() as f64, diffs.len()))
}

/// Weighted Slope-One without clamping.
pub fn slope_one_raw(d: &Dense, u: usize, j: usize) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.n_items() {
        if i == j {
            continue;
        }
        let Some(r_ui) = d.r[u][i] else { continue };
        if let Some((dev, count)) = deviation(d, j, i) {
            num += (dev + r_ui) * count as f64;
            den += count as f64;
        }
    }
    (den > 0.0).then(|| num / den)
}

pub fn slope_one(d: &Dense, u: usize, j: usize) -> Option<f64> {
    slope_one_raw(d, u, j).map(clamp)
}

/// `(item id, rater count)` ordered by count, then rating sum, then id.
pub fn popularity(rows: &[RatingRow]) -> Vec<(u64, f64)> {
    let mut stats: BTreeMap<u64, (usize, f64)> = BTreeMap::new();
    for r in rows {
        let e = stats.entry(r.item.0).or_default();
        e.0 += 1;
        e.1 += r.value;
    }
    let mut list: Vec<(u64, usize, f64)> = stats.into_iter().map(|(i, (c, s))| (i, c, s)).collect();
    list.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.partial_cmp(&a.2).unwrap()).then(a.0.cmp(&b.0)));
    list.into_iter().map(|(i, c, _)| (i, c as f64)).collect()
}

/// Oracle top-n over all unrated items given a per-item scorer.
pub fn top_n(d: &Dense, u: usize, n: usize, score: impl Fn(usize) -> Option<f64>) -> Vec<(u64, f64)> {
    let mut list: Vec<(u64, f64)> = (0..d.n_items())
        .filter(|&i| d.r[u][i].is_none())
        .filter_map(|i| score(i).map(|s| (d.items[i], s)))
        .collect();
    list.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    list.truncate(n);
    list
}

pub fn rmse(pairs: &[(f64, f64)]) -> f64 {
    (pairs.iter().map(|(p, a)| (p - a).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt()
}

/// Mean precision and recall over users with a non-empty list.
pub fn precision_recall(lists: &BTreeMap<u64, Vec<u64>>, held: &BTreeMap<u64, BTreeSet<u64>>, k: usize) -> (f64, f64, usize) {
    let (mut p, mut r, mut n) = (0.0, 0.0, 0usize);
    for (user, items) in held {
        let Some(list) = lists.get(user) else { continue };
        if list.is_empty() {
            continue;
        }
        let top: BTreeSet<u64> = list.iter().take(k).copied().collect();
        let hits = top.intersection(items).count() as f64;
        p += hits / k as f64;
        r += hits / items.len() as f64;
        n += 1;
    }
    if n == 0 {
        (0.0, 0.0, 0)
    } else {
        (p / n as f64, r / n as f64, n)
    }
}

/// Checks a produced recommendation list against the oracle list: same
/// length, same score sequence, and every listed item given that same score
/// by `oracle_score`. Items whose scores agree within `TOL` may swap places.
pub fn assert_same_list(got: &[(u64, f64)], want: &[(u64, f64)], oracle_score: impl Fn(u64) -> Option<f64>, ctx: &str) {
    assert_eq!(got.len(), want.len(), "{ctx}: length {got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g.1 - w.1).abs() <= TOL, "{ctx}: score {g:?} vs {w:?}");
        let s = oracle_score(g.0).unwrap_or_else(|| panic!("{ctx}: item {} has no oracle score", g.0));
        assert!((s - g.1).abs() <= TOL, "{ctx}: item {} scored {} by oracle, {} by library", g.0, s, g.1);
    }
}

/// Noiseless `R = P Qᵀ` with two factors per side, 60% of the 30x20 cells
/// observed, and 10% of those held out. Factor coordinates lie in
/// [0.71, 1.58] so every rating lands in [1, 5]. Held-out cells are picked
/// so each user and item keeps at least one training rating.
pub fn rank_two(seed: u64) -> (RatingsMatrix, Vec<RatingRow>) {
    let (n_users, n_items) = (30usize, 20usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<[f64; 2]> {
        (0..n).map(|_| [rng.gen_range(0.71..1.58), rng.gen_range(0.71..1.58)]).collect()
    };
    let (p, q) = (draw(n_users), draw(n_items));
    let mut cells: Vec<(usize, usize)> = (0..n_users).flat_map(|u| (0..n_items).map(move |i| (u, i))).collect();
    cells.shuffle(&mut rng);
    cells.truncate(n_users * n_items * 6 / 10);
    let rating = |(u, i): (usize, usize)| RatingRow {
        user: UserId(u as u64 + 1),
        item: ItemId(i as u64 + 1),
        value: p[u][0] * q[i][0] + p[u][1] * q[i][1],
    };
    let mut per_user = vec![0usize; n_users];
    let mut per_item = vec![0usize; n_items];
    for &(u, i) in &cells {
        per_user[u] += 1;
        per_item[i] += 1;
    }
    let target = cells.len() / 10;
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for &(u, i) in &cells {
        if holdout.len() < target && per_user[u] > 1 && per_item[i] > 1 {
            per_user[u] -= 1;
            per_item[i] -= 1;
            holdout.push(rating((u, i)));
        } else {
            train.push(rating((u, i)));
        }
    }
    (RatingsMatrix::from_rating_rows(&train).unwrap(), holdout)
}

/// Distinct projects per (developer, column, label), counted straight from
/// tab-separated text with a header line.
pub fn hand_counts(tsv: &str) -> BTreeMap<(u64, usize, String), BTreeSet<u64>> {
    let mut out: BTreeMap<_, BTreeSet<u64>> = BTreeMap::new();
    for line in tsv.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (dev, proj) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        for (col, label) in f.iter().enumerate().take(7).skip(2) {
            out.entry((dev, col, (*label).to_owned())).or_default().insert(proj);
        }
    }
    out
}
