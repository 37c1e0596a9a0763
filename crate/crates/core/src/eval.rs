//! Splitting, metrics and the multi-algorithm benchmark.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{Algorithm, Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::ids::UserId;
use crate::ingest::RatingRow;
use crate::ratings::RatingsMatrix;
use crate::{Predictor, Recommender};

/// Moves `k` seeded-random ratings of every user with more than `k` ratings
/// into the holdout. Users with `k` or fewer ratings keep them all.
pub fn leave_k_out_split(m: &RatingsMatrix, k: usize, seed: u64) -> Result<(RatingsMatrix, Vec<RatingRow>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(m.n_ratings());
    let mut holdout = Vec::new();
    for u in 0..m.n_users() {
        let row = m.user_row(u);
        let held: HashSet<usize> = if row.len() > k {
            rand::seq::index::sample(&mut rng, row.len(), k).into_iter().collect()
        } else {
            HashSet::new()
        };
        for (pos, &(i, value)) in row.iter().enumerate() {
            let r = RatingRow { user: m.user_id(u), item: m.item_id(i), value };
            if held.contains(&pos) {
                holdout.push(r);
            } else {
                train.push(r);
            }
        }
    }
    Ok((RatingsMatrix::from_rating_rows(&train)?, holdout))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coverage {
    pub users_served: usize,
    pub users_total: usize,
    pub coverage: f64,
}

/// Share of the users in `m` for whom `recommender` returns at least one
/// item. Only the recommender's own output counts, never a fallback.
pub fn coverage<R>(m: &RatingsMatrix, recommender: &R, n: usize) -> Result<Coverage>
where
    R: Recommender + Sync + ?Sized,
{
    let served = (0..m.n_users())
        .into_par_iter()
        .map(|u| recommender.recommend(m.user_id(u), n).map(|r| !r.is_empty()))
        .collect::<Result<Vec<bool>>>()?;
    let users_served = served.iter().filter(|&&s| s).count();
    let users_total = m.n_users();
    Ok(Coverage {
        users_served,
        users_total,
        coverage: if users_total == 0 { 0.0 } else { users_served as f64 / users_total as f64 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RmseOutcome {
    /// `None` when no holdout triple could be predicted.
    pub rmse: Option<f64>,
    pub predicted: usize,
    pub skipped: usize,
}

/// Root mean squared error over the holdout triples the predictor can score.
pub fn rmse<P: Predictor + ?Sized>(holdout: &[RatingRow], predictor: &P) -> Result<RmseOutcome> {
    if holdout.is_empty() {
        return Err(Error::EmptyHoldout);
    }
    let (mut sse, mut predicted) = (0.0, 0usize);
    for row in holdout {
        if let Some(p) = predictor.predict(row.user, row.item) {
            sse += (p - row.value).powi(2);
            predicted += 1;
        }
    }
    Ok(RmseOutcome {
        rmse: (predicted > 0).then(|| (sse / predicted as f64).sqrt()),
        predicted,
        skipped: holdout.len() - predicted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// Holdout users that received a non-empty list.
    pub users_evaluated: usize,
}

/// Precision and recall of the top-`k` lists against each user's held-out
/// items, averaged over users that received recommendations. Precision
/// divides by `k` even when the list is shorter.
pub fn precision_recall_at_k<R: Recommender + ?Sized>(
    holdout: &[RatingRow],
    recommender: &R,
    k: usize,
) -> Result<PrecisionRecall> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut by_user: BTreeMap<UserId, HashSet<_>> = BTreeMap::new();
    for row in holdout {
        by_user.entry(row.user).or_default().insert(row.item);
    }
    let (mut precision, mut recall, mut users) = (0.0, 0.0, 0usize);
    for (user, items) in &by_user {
        let recs = match recommender.recommend(*user, k) {
            Ok(recs) => recs,
            Err(Error::UnknownUser(_)) => continue,
            Err(e) => return Err(e),
        };
        if recs.is_empty() {
            continue;
        }
        let hits = recs.iter().take(k).filter(|r| items.contains(&r.item)).count() as f64;
        precision += hits / k as f64;
        recall += hits / items.len() as f64;
        users += 1;
    }
    if users == 0 {
        return Ok(PrecisionRecall { precision: 0.0, recall: 0.0, users_evaluated: 0 });
    }
    Ok(PrecisionRecall {
        precision: precision / users as f64,
        recall: recall / users as f64,
        users_evaluated: users,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub algorithm: String,
    pub users_served: usize,
    pub users_total: usize,
    pub coverage: f64,
    pub rmse: Option<f64>,
    pub rmse_skipped: usize,
    pub precision_at_k: Option<f64>,
    pub recall_at_k: Option<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EvalReport {
    /// Equality ignoring wall time.
    pub fn same_results(&self, other: &EvalReport) -> bool {
        EvalReport { wall_time: Duration::ZERO, ..self.clone() }
            == EvalReport { wall_time: Duration::ZERO, ..other.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub algorithms: Vec<Algorithm>,
    /// Ratings held out per eligible user.
    pub holdout_k: usize,
    /// List length for coverage.
    pub top_n: usize,
    /// Cutoff for precision and recall.
    pub at_k: usize,
    pub seed: u64,
    pub engine: EngineConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            algorithms: Algorithm::ALL.to_vec(),
            holdout_k: 1,
            top_n: 10,
            at_k: 5,
            seed: 42,
            engine: EngineConfig::default(),
        }
    }
}

/// Splits once, then trains and scores every configured algorithm on the
/// same split. Coverage is measured over the training users.
pub fn run_benchmark(m: &RatingsMatrix, cfg: &BenchmarkConfig) -> Result<Vec<EvalReport>> {
    if cfg.algorithms.is_empty() {
        return Ok(Vec::new());
    }
    if cfg.top_n == 0 || cfg.at_k == 0 {
        return Err(Error::InvalidArgument("top_n and at_k must be at least 1".into()));
    }
    let (train, holdout) = leave_k_out_split(m, cfg.holdout_k, cfg.seed)?;
    let train = Arc::new(train);

    let mut reports = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let start = Instant::now();
        let engine = Engine::train(train.clone(), algorithm, &cfg.engine)?;
        let cov = coverage(&train, &engine, cfg.top_n)?;
        let rmse = if engine.predicts_ratings() && !holdout.is_empty() {
            Some(rmse(&holdout, &engine)?)
        } else {
            None
        };
        let pr = if holdout.is_empty() {
            None
        } else {
            Some(precision_recall_at_k(&holdout, &engine, cfg.at_k)?)
        };
        reports.push(EvalReport {
            algorithm: algorithm.label().to_owned(),
            users_served: cov.users_served,
            users_total: cov.users_total,
            coverage: cov.coverage,
            rmse: rmse.and_then(|r| r.rmse),
            rmse_skipped: rmse.map_or(0, |r| r.skipped),
            precision_at_k: pr.map(|p| p.precision),
            recall_at_k: pr.map(|p| p.recall),
            wall_time: start.elapsed(),
        });
    }
    Ok(reports)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_owned(), |v| format!("{v:.6}"))
}

/// Tab-separated table with a header row. Wall time is included only when
/// asked for, so default output is reproducible byte for byte.
pub fn write_report_table<W: Write>(reports: &[EvalReport], mut w: W, with_timing: bool) -> std::io::Result<()> {
    write!(w, "algorithm\tusers_served\tusers_total\tcoverage\trmse\trmse_skipped\tprecision_at_k\trecall_at_k")?;
    if with_timing {
        write!(w, "\twall_time_ms")?;
    }
    writeln!(w)?;
    for r in reports {
        write!(
            w,
            "{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}",
            r.algorithm,
            r.users_served,
            r.users_total,
            r.coverage,
            opt(r.rmse),
            r.rmse_skipped,
            opt(r.precision_at_k),
            opt(r.recall_at_k)
        )?;
        if with_timing {
            write!(w, "\t{:.3}", r.wall_time.as_secs_f64() * 1e3)?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// One JSON object per line, one line per algorithm.
pub fn write_report_json<W: Write>(reports: &[EvalReport], mut w: W, with_timing: bool) -> std::io::Result<()> {
    for r in reports {
        let mut value = serde_json::to_value(r).map_err(std::io::Error::other)?;
        if with_timing {
            value["wall_time_ms"] = serde_json::json!(r.wall_time.as_secs_f64() * 1e3);
        }
        writeln!(w, "{value}")?;
    }
    w.flush()
}
