//! Per-pixel color change detection against the cached semantic state.
//!
//! A pixel "has not changed" when the Manhattan (L1) distance between its
//! current color and its color at `t*` (the last time semantic information
//! was available for it) stays within a threshold. Two thresholds apply,
//! selected by the cached semantic decision, because foreground objects
//! and the background drift at different rates.

use crate::raster::Rgb;
use crate::semantic::{CacheEntry, SemanticDecision};

/// Upper bound of the L1 distance between two RGB triples.
pub const MAX_L1_DISTANCE: u32 = 765;

/// Change-detector thresholds in L1 color-distance units.
///
/// Negative values are legal and meaningful: they force `Change` for every
/// input, discarding all cached decisions. Values of [`MAX_L1_DISTANCE`]
/// or above force `NoChange`, repeating cached decisions unconditionally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChangeParams {
    /// Threshold used when the cached decision is background.
    pub tau_star_bg: i32,
    /// Threshold used when the cached decision is foreground.
    pub tau_star_fg: i32,
}

impl Default for ChangeParams {
    fn default() -> Self {
        ChangeParams {
            tau_star_bg: 50,
            tau_star_fg: 50,
        }
    }
}

/// Change-detector output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ChangeVerdict {
    NoChange,
    Change,
    /// The cached decision is indeterminate (or the cache is empty), so the
    /// verdict cannot influence the fused output.
    DontCare,
}

/// Sum over channels of absolute differences.
#[inline]
pub fn l1_distance(a: Rgb, b: Rgb) -> u32 {
    let mut d = 0u32;
    for c in 0..3 {
        d += (a[c] as i32 - b[c] as i32).unsigned_abs();
    }
    d
}

/// Decides whether a pixel's color has changed significantly since `t*`.
///
/// An empty cache entry or a cached don't-know decision yields `DontCare`.
/// Otherwise the threshold matching the cached decision applies, closed on
/// the no-change side: distance <= tau means `NoChange`.
#[inline]
pub fn detect(current: Rgb, entry: &CacheEntry, params: &ChangeParams) -> ChangeVerdict {
    let tau = match entry.decision {
        SemanticDecision::DontKnow => return ChangeVerdict::DontCare,
        _ if entry.t_star.is_none() => return ChangeVerdict::DontCare,
        SemanticDecision::Background => params.tau_star_bg,
        SemanticDecision::Foreground => params.tau_star_fg,
    };
    if l1_distance(current, entry.color) as i64 <= tau as i64 {
        ChangeVerdict::NoChange
    } else {
        ChangeVerdict::Change
    }
}
