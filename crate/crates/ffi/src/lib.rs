//! C interface to the techrec engine.
//!
//! Handles are opaque pointers created by `*_new`/`*_load` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TrStatus`]; on failure the message is available from
//! [`tr_last_error_message`] on the same thread until the next failing call.
//!
//! A recommender holds a shared reference to the ratings it was built from,
//! so the ratings handle may be freed first. Handles can be used from several
//! threads at once: no function mutates a handle except `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use techrec::baseline::Provenance;
use techrec::ingest::{read_ratings, RatingRow};
use techrec::{Algorithm, Engine, EngineConfig, Error, ItemId, Predictor, RatingsMatrix, Recommender, UserId};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    UnknownUser = 5,
    Training = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrAlgorithm {
    UserKnn = 0,
    ItemKnn = 1,
    SlopeOne = 2,
    Mf = 3,
    Popularity = 4,
}

/// Where a recommendation list came from.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrProvenance {
    Model = 0,
    Fallback = 1,
}

/// Opaque ratings matrix.
pub struct TrRatings {
    matrix: Arc<RatingsMatrix>,
}

/// Opaque trained recommender.
pub struct TrRecommender {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: TrStatus, msg: impl AsRef<str>) -> TrStatus {
    set_last_error(msg.as_ref());
    status
}

fn status_of(e: &Error) -> TrStatus {
    match e {
        Error::UnknownUser(_) => TrStatus::UnknownUser,
        Error::Io(_) => TrStatus::Io,
        Error::Ingest(_) | Error::Format { .. } => TrStatus::Parse,
        Error::DivergenceDetected { .. } => TrStatus::Training,
        Error::EmptyInput
        | Error::DuplicatePair { .. }
        | Error::RatingOutOfRange { .. }
        | Error::InvalidArgument(_)
        | Error::IndexOutOfRange { .. }
        | Error::AxisMismatch { .. }
        | Error::AlreadyRated { .. }
        | Error::EmptyHoldout => TrStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> TrStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning a panic into `TrStatus::Internal`.
fn guard(f: impl FnOnce() -> TrStatus) -> TrStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(TrStatus::Internal, "internal panic"))
}

/// Message of the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn tr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn finish_ratings(rows: &[RatingRow], out: *mut *mut TrRatings) -> TrStatus {
    match RatingsMatrix::from_rating_rows(rows) {
        Ok(m) => {
            let handle = Box::new(TrRatings { matrix: Arc::new(m) });
            // SAFETY: caller checked `out` is non-null.
            unsafe { *out = Box::into_raw(handle) };
            TrStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Loads a `user,item,value` ratings file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tr_ratings_load(path: *const c_char, out: *mut *mut TrRatings) -> TrStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(TrStatus::NullPointer, "path and out must be non-null");
        }
        *out = ptr::null_mut();
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(TrStatus::InvalidArgument, "path is not valid UTF-8");
        };
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) => return fail(TrStatus::Io, format!("{path}: {e}")),
        };
        match read_ratings(BufReader::new(file)) {
            Ok(rows) => finish_ratings(&rows, out),
            Err(e) => fail(TrStatus::Parse, format!("{path}: {e}")),
        }
    })
}

/// Builds a ratings matrix from `len` parallel (user, item, value) arrays.
///
/// # Safety
/// Each array must hold `len` readable elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tr_ratings_from_triples(
    users: *const u64,
    items: *const u64,
    values: *const f64,
    len: usize,
    out: *mut *mut TrRatings,
) -> TrStatus {
    guard(|| {
        if out.is_null() || (len > 0 && (users.is_null() || items.is_null() || values.is_null())) {
            return fail(TrStatus::NullPointer, "null array or out pointer");
        }
        *out = ptr::null_mut();
        if len == 0 {
            return from_error(Error::EmptyInput);
        }
        let users = std::slice::from_raw_parts(users, len);
        let items = std::slice::from_raw_parts(items, len);
        let values = std::slice::from_raw_parts(values, len);
        let rows: Vec<RatingRow> = (0..len)
            .map(|k| RatingRow { user: UserId(users[k]), item: ItemId(items[k]), value: values[k] })
            .collect();
        finish_ratings(&rows, out)
    })
}

/// Writes the user, item and rating counts. Any out pointer may be null.
///
/// # Safety
/// `ratings` must be a live handle; non-null out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tr_ratings_counts(
    ratings: *const TrRatings,
    n_users: *mut usize,
    n_items: *mut usize,
    n_ratings: *mut usize,
) -> TrStatus {
    let Some(r) = ratings.as_ref() else {
        return fail(TrStatus::NullPointer, "ratings handle is null");
    };
    let m = &r.matrix;
    if let Some(p) = n_users.as_mut() {
        *p = m.n_users();
    }
    if let Some(p) = n_items.as_mut() {
        *p = m.n_items();
    }
    if let Some(p) = n_ratings.as_mut() {
        *p = m.n_ratings();
    }
    TrStatus::Ok
}

/// # Safety
/// `ratings` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tr_ratings_free(ratings: *mut TrRatings) {
    if !ratings.is_null() {
        drop(Box::from_raw(ratings));
    }
}

/// Trains `algorithm` on `ratings` with default parameters and `seed`.
///
/// # Safety
/// `ratings` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tr_recommender_new(
    ratings: *const TrRatings,
    algorithm: TrAlgorithm,
    seed: u64,
    out: *mut *mut TrRecommender,
) -> TrStatus {
    guard(|| {
        if out.is_null() {
            return fail(TrStatus::NullPointer, "out pointer is null");
        }
        *out = ptr::null_mut();
        let Some(r) = ratings.as_ref() else {
            return fail(TrStatus::NullPointer, "ratings handle is null");
        };
        let algorithm = match algorithm {
            TrAlgorithm::UserKnn => Algorithm::UserKnn,
            TrAlgorithm::ItemKnn => Algorithm::ItemKnn,
            TrAlgorithm::SlopeOne => Algorithm::SlopeOne,
            TrAlgorithm::Mf => Algorithm::Mf,
            TrAlgorithm::Popularity => Algorithm::Popularity,
        };
        let mut config = EngineConfig::default();
        config.train.seed = seed;
        match Engine::train(r.matrix.clone(), algorithm, &config) {
            Ok(engine) => {
                *out = Box::into_raw(Box::new(TrRecommender { engine }));
                TrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Fills up to `n` recommendations for `user` into `out_items` and
/// `out_scores` (each with room for `n` entries) and stores the count in
/// `out_len`. With `fallback`, unknown users and empty model lists are
/// served by popularity. `out_provenance` may be null.
///
/// # Safety
/// `rec` must be a live handle; the buffers must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn tr_recommend(
    rec: *const TrRecommender,
    user: u64,
    n: usize,
    fallback: bool,
    out_items: *mut u64,
    out_scores: *mut f64,
    out_len: *mut usize,
    out_provenance: *mut TrProvenance,
) -> TrStatus {
    guard(|| {
        let Some(rec) = rec.as_ref() else {
            return fail(TrStatus::NullPointer, "recommender handle is null");
        };
        if out_items.is_null() || out_scores.is_null() || out_len.is_null() {
            return fail(TrStatus::NullPointer, "output buffers must be non-null");
        }
        *out_len = 0;
        if n == 0 {
            return fail(TrStatus::InvalidArgument, "n must be at least 1");
        }
        let user = UserId(user);
        let result = if fallback {
            rec.engine.recommend_with_fallback(user, n)
        } else {
            rec.engine.recommend(user, n).map(|list| (list, Provenance::Model))
        };
        match result {
            Ok((list, provenance)) => {
                let items = std::slice::from_raw_parts_mut(out_items, n);
                let scores = std::slice::from_raw_parts_mut(out_scores, n);
                for (k, r) in list.iter().take(n).enumerate() {
                    items[k] = r.item.0;
                    scores[k] = r.score;
                }
                *out_len = list.len().min(n);
                if let Some(p) = out_provenance.as_mut() {
                    *p = match provenance {
                        Provenance::Model => TrProvenance::Model,
                        Provenance::Fallback => TrProvenance::Fallback,
                    };
                }
                TrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Predicts the rating of `item` for `user`. `out_has_value` is set to false
/// when the model has no estimate (unknown ids, no neighbors, popularity).
///
/// # Safety
/// `rec` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tr_predict(
    rec: *const TrRecommender,
    user: u64,
    item: u64,
    out_score: *mut f64,
    out_has_value: *mut bool,
) -> TrStatus {
    guard(|| {
        let Some(rec) = rec.as_ref() else {
            return fail(TrStatus::NullPointer, "recommender handle is null");
        };
        if out_score.is_null() || out_has_value.is_null() {
            return fail(TrStatus::NullPointer, "out pointers must be non-null");
        }
        match rec.engine.predict(UserId(user), ItemId(item)) {
            Some(v) => {
                *out_score = v;
                *out_has_value = true;
            }
            None => {
                *out_score = f64::NAN;
                *out_has_value = false;
            }
        }
        TrStatus::Ok
    })
}

/// # Safety
/// `rec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tr_recommender_free(rec: *mut TrRecommender) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}
