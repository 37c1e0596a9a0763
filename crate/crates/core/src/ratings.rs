//! Sparse rating storage shared by every predictor.
//!
//! External ids are interned into dense 0-based indices in ascending id
//! order, so index order and external-id order agree.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ids::{ItemId, UserId};
use crate::ingest::RatingRow;
use crate::{MAX_RATING, MIN_RATING};

/// Sorted `(index, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct RatingsMatrix {
    user_ids: Vec<UserId>,
    item_ids: Vec<ItemId>,
    user_index: HashMap<UserId, usize>,
    item_index: HashMap<ItemId, usize>,
    by_user: Vec<SparseRow>,
    by_item: Vec<SparseRow>,
    user_means: Vec<f64>,
    global_mean: f64,
    n_ratings: usize,
}

impl RatingsMatrix {
    pub fn from_rating_rows(rows: &[RatingRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        for row in rows {
            if !(MIN_RATING..=MAX_RATING).contains(&row.value) {
                return Err(Error::RatingOutOfRange {
                    user: row.user,
                    item: row.item,
                    value: row.value,
                });
            }
        }

        let mut user_ids: Vec<UserId> = rows.iter().map(|r| r.user).collect();
        user_ids.sort_unstable();
        user_ids.dedup();
        let mut item_ids: Vec<ItemId> = rows.iter().map(|r| r.item).collect();
        item_ids.sort_unstable();
        item_ids.dedup();
        let user_index: HashMap<_, _> = user_ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let item_index: HashMap<_, _> = item_ids.iter().enumerate().map(|(i, &t)| (t, i)).collect();

        let mut by_user = vec![Vec::new(); user_ids.len()];
        let mut by_item = vec![Vec::new(); item_ids.len()];
        for row in rows {
            let u = user_index[&row.user];
            let i = item_index[&row.item];
            by_user[u].push((i, row.value));
            by_item[i].push((u, row.value));
        }
        for (u, row) in by_user.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(i, _)| i);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicatePair {
                    user: user_ids[u],
                    item: item_ids[w[0].0],
                });
            }
        }
        for col in &mut by_item {
            col.sort_unstable_by_key(|&(u, _)| u);
        }

        let user_means = by_user
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v).sum::<f64>() / row.len() as f64)
            .collect();
        let global_mean = rows.iter().map(|r| r.value).sum::<f64>() / rows.len() as f64;

        Ok(RatingsMatrix {
            user_ids,
            item_ids,
            user_index,
            item_index,
            by_user,
            by_item,
            user_means,
            global_mean,
            n_ratings: rows.len(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.n_ratings
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_mean(&self, u: usize) -> f64 {
        self.user_means[u]
    }

    pub fn user_means(&self) -> &[f64] {
        &self.user_means
    }

    pub fn user_id(&self, u: usize) -> UserId {
        self.user_ids[u]
    }

    pub fn item_id(&self, i: usize) -> ItemId {
        self.item_ids[i]
    }

    pub fn user_ids(&self) -> &[UserId] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[ItemId] {
        &self.item_ids
    }

    pub fn user_index(&self, user: UserId) -> Option<usize> {
        self.user_index.get(&user).copied()
    }

    pub fn item_index(&self, item: ItemId) -> Option<usize> {
        self.item_index.get(&item).copied()
    }

    /// The stored row of user `u`, sorted by item index.
    pub fn rated_items(&self, u: usize) -> Result<&[(usize, f64)]> {
        self.by_user
            .get(u)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                what: "user",
                index: u,
                len: self.n_users(),
            })
    }

    /// The stored column of item `i`, sorted by user index.
    pub fn raters(&self, i: usize) -> Result<&[(usize, f64)]> {
        self.by_item
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                what: "item",
                index: i,
                len: self.n_items(),
            })
    }

    pub(crate) fn user_row(&self, u: usize) -> &[(usize, f64)] {
        &self.by_user[u]
    }

    pub(crate) fn item_col(&self, i: usize) -> &[(usize, f64)] {
        &self.by_item[i]
    }

    pub fn rating(&self, u: usize, i: usize) -> Option<f64> {
        let row = self.by_user.get(u)?;
        row.binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|pos| row[pos].1)
    }

    pub fn has_rated(&self, u: usize, i: usize) -> bool {
        self.rating(u, i).is_some()
    }

    /// All ratings as external-id rows, ordered by user then item.
    pub fn to_rating_rows(&self) -> Vec<RatingRow> {
        self.by_user
            .iter()
            .enumerate()
            .flat_map(|(u, row)| {
                row.iter().map(move |&(i, value)| RatingRow {
                    user: self.user_ids[u],
                    item: self.item_ids[i],
                    value,
                })
            })
            .collect()
    }
}
