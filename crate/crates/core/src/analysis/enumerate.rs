//! Exact PLR by enumerating every erasure pattern.
//!
//! Independent of the closed-form model: each pattern is weighted by
//! `p^e (1-p)^(N-e)` and a code that keeps fewer than `k` packets loses exactly
//! its erased source packets.

use super::{AnalysisError, BecChannel, Layout, PlrMethod, PlrReport};
use crate::par::{self, Execution};

/// Largest number of transmitted packets the oracle will enumerate.
pub const MAX_ENUMERATION_LEN: usize = 24;

const CHUNK: u64 = 1 << 12;

pub fn brute_force_plr(
    layout: impl Into<Layout>,
    ch: BecChannel,
) -> Result<PlrReport, AnalysisError> {
    brute_force_plr_with(layout, ch, Execution::default())
}

pub fn brute_force_plr_with(
    layout: impl Into<Layout>,
    ch: BecChannel,
    exec: Execution,
) -> Result<PlrReport, AnalysisError> {
    let layout = layout.into();
    let total = layout.total_packets();
    if total > MAX_ENUMERATION_LEN {
        return Err(AnalysisError::EnumerationBound { packets: total });
    }
    let p = ch.p_e();
    let weights: Vec<f64> = (0..=total as i32)
        .map(|e| p.powi(e) * (1.0 - p).powi(total as i32 - e))
        .collect();

    // (source mask, whole-code mask, k) per code, as bit ranges of the pattern
    let mut codes = Vec::new();
    let mut offset = 0;
    for c in layout.codes() {
        let source = ((1u32 << c.k()) - 1) << offset;
        let all = ((1u32 << c.n()) - 1) << offset;
        codes.push((source, all, c.p()));
        offset += c.n();
    }

    let partials = par::map_chunks(exec, 1u64 << total, CHUNK, |range| {
        let mut acc = 0.0;
        for mask in range {
            let mask = mask as u32;
            let lost: u32 = codes
                .iter()
                .filter(|(_, all, p)| (mask & all).count_ones() as usize > *p)
                .map(|(source, _, _)| (mask & source).count_ones())
                .sum();
            if lost > 0 {
                acc += lost as f64 * weights[mask.count_ones() as usize];
            }
        }
        acc
    });
    let plr = partials.iter().sum::<f64>() / layout.k() as f64;
    Ok(PlrReport {
        plr: plr.clamp(0.0, 1.0),
        method: PlrMethod::BruteForce,
        trials: None,
        half_width: None,
    })
}
