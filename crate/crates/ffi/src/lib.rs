//! C ABI for the numeric surfaces other languages want to call: ranking
//! agreement metrics, the DPO+SFT loss reference, replay allocation, and
//! verdict parsing.
//!
//! Conventions: every fallible function returns a [`CfStatus`] and writes
//! its result through out-pointers; rankings are opaque handles created by
//! [`cf_ranking_new`] and released by [`cf_ranking_free`]; strings are
//! NUL-terminated UTF-8. The generated header lives in
//! `include/constraint_forge.h`.

use std::ffi::{c_char, CStr};

use constraint_forge::analytics::{
    dpo_sft_loss, kendall_tau, position_consistency, AnalyticsError, LossSample, Ranking,
};
use constraint_forge::curriculum::{allocate_replay, CurriculumError};
use constraint_forge::judger::{parse_verdict, Verdict};

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidRanking = 3,
    MismatchedItems = 4,
    TooFewItems = 5,
    InvalidArgument = 6,
    UnparseableVerdict = 7,
}

/// Opaque ranking handle.
pub struct CfRanking {
    inner: Ranking,
}

/// Per-sample log-probabilities for the loss reference.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CfLossSample {
    pub logp_policy_chosen: f64,
    pub logp_ref_chosen: f64,
    pub logp_policy_rejected: f64,
    pub logp_ref_rejected: f64,
}

/// Pairwise judge verdict marker.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfVerdict {
    Left = 0,
    Right = 1,
    Tie = 2,
}

fn map_analytics_error(error: AnalyticsError) -> CfStatus {
    match error {
        AnalyticsError::InvalidRanking => CfStatus::InvalidRanking,
        AnalyticsError::MismatchedItems => CfStatus::MismatchedItems,
        AnalyticsError::TooFewItems(_) => CfStatus::TooFewItems,
        _ => CfStatus::InvalidArgument,
    }
}

/// Builds a ranking from `len` NUL-terminated UTF-8 items, best first.
/// Writes the handle to `out`; free it with [`cf_ranking_free`].
///
/// # Safety
/// `items` must point to `len` valid C strings and `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_new(
    items: *const *const c_char,
    len: usize,
    out: *mut *mut CfRanking,
) -> CfStatus {
    if items.is_null() || out.is_null() {
        return CfStatus::NullArgument;
    }
    let mut owned = Vec::with_capacity(len);
    for i in 0..len {
        let item = *items.add(i);
        if item.is_null() {
            return CfStatus::NullArgument;
        }
        match CStr::from_ptr(item).to_str() {
            Ok(text) => owned.push(text.to_string()),
            Err(_) => return CfStatus::InvalidUtf8,
        }
    }
    match Ranking::new(owned) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CfRanking { inner }));
            CfStatus::Ok
        }
        Err(e) => map_analytics_error(e),
    }
}

/// Releases a ranking created by [`cf_ranking_new`]. Null is a no-op.
///
/// # Safety
/// `ranking` must be a pointer returned by [`cf_ranking_new`] that has not
/// already been freed.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_free(ranking: *mut CfRanking) {
    if !ranking.is_null() {
        drop(Box::from_raw(ranking));
    }
}

/// Number of items in a ranking; 0 for null.
///
/// # Safety
/// `ranking` must be null or a live handle from [`cf_ranking_new`].
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_len(ranking: *const CfRanking) -> usize {
    ranking.as_ref().map_or(0, |r| r.inner.len())
}

/// Kendall tau rank correlation over two rankings of the same item set.
///
/// # Safety
/// Both rankings must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_kendall_tau(
    r1: *const CfRanking,
    r2: *const CfRanking,
    out: *mut f64,
) -> CfStatus {
    let (Some(r1), Some(r2), false) = (r1.as_ref(), r2.as_ref(), out.is_null()) else {
        return CfStatus::NullArgument;
    };
    match kendall_tau(&r1.inner, &r2.inner) {
        Ok(tau) => {
            *out = tau;
            CfStatus::Ok
        }
        Err(e) => map_analytics_error(e),
    }
}

/// Fraction of items at identical positions in both rankings.
///
/// # Safety
/// Both rankings must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_position_consistency(
    r1: *const CfRanking,
    r2: *const CfRanking,
    out: *mut f64,
) -> CfStatus {
    let (Some(r1), Some(r2), false) = (r1.as_ref(), r2.as_ref(), out.is_null()) else {
        return CfStatus::NullArgument;
    };
    match position_consistency(&r1.inner, &r2.inner) {
        Ok(pc) => {
            *out = pc;
            CfStatus::Ok
        }
        Err(e) => map_analytics_error(e),
    }
}

/// Mean DPO loss, mean SFT loss, and their sum over a sample batch.
///
/// # Safety
/// `samples` must point to `len` samples; the three out-pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn cf_dpo_sft_loss(
    samples: *const CfLossSample,
    len: usize,
    beta: f64,
    out_dpo: *mut f64,
    out_sft: *mut f64,
    out_total: *mut f64,
) -> CfStatus {
    if samples.is_null() || out_dpo.is_null() || out_sft.is_null() || out_total.is_null() {
        return CfStatus::NullArgument;
    }
    let batch: Vec<LossSample> = std::slice::from_raw_parts(samples, len)
        .iter()
        .map(|s| LossSample {
            logp_policy_chosen: s.logp_policy_chosen,
            logp_ref_chosen: s.logp_ref_chosen,
            logp_policy_rejected: s.logp_policy_rejected,
            logp_ref_rejected: s.logp_ref_rejected,
        })
        .collect();
    match dpo_sft_loss(&batch, beta) {
        Ok(loss) => {
            *out_dpo = loss.dpo;
            *out_sft = loss.sft;
            *out_total = loss.total;
            CfStatus::Ok
        }
        Err(_) => CfStatus::InvalidArgument,
    }
}

/// Largest-remainder proportional allocation of `budget` over `len` stage
/// sizes; writes `len` allocations that sum exactly to the budget.
///
/// # Safety
/// `sizes` and `out_allocations` must each point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn cf_allocate_replay(
    sizes: *const u64,
    len: usize,
    budget: u64,
    out_allocations: *mut u64,
) -> CfStatus {
    if sizes.is_null() || out_allocations.is_null() {
        return CfStatus::NullArgument;
    }
    if len == 0 {
        return CfStatus::InvalidArgument;
    }
    let sizes: Vec<usize> = std::slice::from_raw_parts(sizes, len)
        .iter()
        .map(|&s| s as usize)
        .collect();
    match allocate_replay(&sizes, budget as usize) {
        Ok(allocations) => {
            for (i, allocation) in allocations.into_iter().enumerate() {
                *out_allocations.add(i) = allocation as u64;
            }
            CfStatus::Ok
        }
        Err(CurriculumError::AllZeroSizes(_)) => CfStatus::InvalidArgument,
        Err(_) => CfStatus::InvalidArgument,
    }
}

/// Parses the last `[[A]]` / `[[B]]` / `[[C]]` marker in a judge response.
///
/// # Safety
/// `text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_parse_verdict(text: *const c_char, out: *mut CfVerdict) -> CfStatus {
    if text.is_null() || out.is_null() {
        return CfStatus::NullArgument;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return CfStatus::InvalidUtf8;
    };
    match parse_verdict(text) {
        Ok(Verdict::Left) => {
            *out = CfVerdict::Left;
            CfStatus::Ok
        }
        Ok(Verdict::Right) => {
            *out = CfVerdict::Right;
            CfStatus::Ok
        }
        Ok(Verdict::Tie) => {
            *out = CfVerdict::Tie;
            CfStatus::Ok
        }
        Err(_) => CfStatus::UnparseableVerdict,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn cf_status_message(status: CfStatus) -> *const c_char {
    let message: &'static [u8] = match status {
        CfStatus::Ok => b"ok\0",
        CfStatus::NullArgument => b"null argument\0",
        CfStatus::InvalidUtf8 => b"invalid utf-8\0",
        CfStatus::InvalidRanking => b"ranking items must be distinct and non-empty\0",
        CfStatus::MismatchedItems => b"rankings must cover the same item set\0",
        CfStatus::TooFewItems => b"too few items\0",
        CfStatus::InvalidArgument => b"invalid argument\0",
        CfStatus::UnparseableVerdict => b"no verdict marker found\0",
    };
    message.as_ptr() as *const c_char
}
