//! Code configuration search.
//!
//! [`min_n_for_target`] finds the shortest code meeting a residual loss target
//! for a given block length. [`distribute_excess`] partitions that code and adds
//! parity packets, alternating between halves, until the partitioned code is
//! within `delta` of the plain one.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{plr_fec, plr_fec_part, BecChannel};
use crate::codec::{CodeSpec, CodecError, MAX_CODE_LEN};
use crate::par::{self, Execution};
use crate::partition::{PartitionError, PartitionSpec};

pub const DEFAULT_PLR_TARGET: f64 = 1e-5;
pub const DEFAULT_DELTA: f64 = 0.001;

/// Erasure probabilities of the reference configuration table.
pub const TABLE_ERASURE_PROBS: [f64; 6] = [0.01, 0.03, 0.05, 0.07, 0.09, 0.1];
pub const TABLE_BLOCK_LENGTHS: [usize; 2] = [40, 80];

/// Grid of the excess-packet sweep.
pub const EXCESS_ERASURE_PROBS: [f64; 3] = [0.01, 0.05, 0.1];
pub const EXCESS_BLOCK_LENGTHS: std::ops::RangeInclusive<usize> = 10..=110;
pub const EXCESS_PARITY: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("loss target {target:e} cannot be met for k={k} within the field bound of {MAX_CODE_LEN} packets")]
    Unreachable { k: usize, target: f64 },
    #[error("invalid plan request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanRequest {
    pub k: usize,
    pub channel: BecChannel,
    pub plr_target: f64,
    pub delta: f64,
    pub partition: bool,
}

impl PlanRequest {
    pub fn new(k: usize, channel: BecChannel) -> Self {
        PlanRequest {
            k,
            channel,
            plr_target: DEFAULT_PLR_TARGET,
            delta: DEFAULT_DELTA,
            partition: false,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.plr_target > 0.0 && self.plr_target < 1.0) {
            return Err(PlanError::InvalidRequest(format!(
                "plr target {} not in (0, 1)",
                self.plr_target
            )));
        }
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(PlanError::InvalidRequest(format!(
                "delta {} must be positive",
                self.delta
            )));
        }
        if self.k == 0 {
            return Err(PlanError::InvalidRequest("k must be at least 1".into()));
        }
        if self.channel.p_e() >= 1.0 {
            return Err(PlanError::InvalidRequest(
                "erasure probability must be below 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionPlan {
    pub spec: PartitionSpec,
    pub plr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanResult {
    pub spec: CodeSpec,
    pub plr: f64,
    pub partition: Option<PartitionPlan>,
    /// Redundancy ratio `p / k`.
    pub ri: f64,
}

/// Smallest `n > k` with `PLR(C(n, k)) <= target`, scanning upward from `k + 1`.
pub fn min_n_for_target(k: usize, ch: BecChannel, plr_target: f64) -> Result<CodeSpec, PlanError> {
    if k == 0 || k >= MAX_CODE_LEN {
        return Err(CodecError::InvalidSpec { n: k + 1, k }.into());
    }
    (k + 1..=MAX_CODE_LEN)
        .map(|n| CodeSpec::new(n, k).expect("n in range"))
        .find(|&s| plr_fec(s, ch).plr <= plr_target)
        .ok_or(PlanError::Unreachable {
            k,
            target: plr_target,
        })
}

/// Partitions `parent`, adding excess parity until `PLR_part - PLR_plain <= delta`.
///
/// Starts from the smallest excess that gives both halves a parity packet.
pub fn distribute_excess(
    parent: CodeSpec,
    ch: BecChannel,
    delta: f64,
) -> Result<PartitionSpec, PlanError> {
    let plain = plr_fec(parent, ch).plr;
    let mut excess = 2usize.saturating_sub(parent.p());
    let mut previous = f64::INFINITY;
    loop {
        let ps = PartitionSpec::split(parent, excess)?;
        let part = plr_fec_part(ps, ch).plr;
        if part - plain <= delta {
            return Ok(ps);
        }
        assert!(
            part < previous,
            "added parity must strictly lower the partitioned loss ({ps})"
        );
        previous = part;
        excess += 1;
    }
}

pub fn plan(req: &PlanRequest) -> Result<PlanResult, PlanError> {
    req.validate()?;
    let spec = min_n_for_target(req.k, req.channel, req.plr_target)?;
    let plr = plr_fec(spec, req.channel).plr;
    let partition = if req.partition {
        let ps = distribute_excess(spec, req.channel, req.delta)?;
        Some(PartitionPlan {
            spec: ps,
            plr: plr_fec_part(ps, req.channel).plr,
        })
    } else {
        None
    };
    let result = PlanResult {
        spec,
        plr,
        partition,
        ri: spec.p() as f64 / spec.k() as f64,
    };
    debug_assert!(result.plr <= req.plr_target);
    debug_assert!(result.partition.is_none_or(|pp| pp.plr - plr <= req.delta));
    Ok(result)
}

/// `n` for every (k, p_e) cell of the reference table, rows by k.
pub fn configuration_table(plr_target: f64, exec: Execution) -> Result<Vec<Vec<usize>>, PlanError> {
    TABLE_BLOCK_LENGTHS
        .iter()
        .map(|&k| {
            par::map_items(exec, &TABLE_ERASURE_PROBS, |&p| {
                let ch = BecChannel::new(p).expect("table probabilities are valid");
                min_n_for_target(k, ch, plr_target).map(|s| s.n())
            })
            .into_iter()
            .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessCell {
    pub pe: f64,
    pub k: usize,
    pub excess: usize,
}

/// Excess parity needed per cell of the sweep `p_e x k` with fixed parent
/// parity, ordered by `p_e` then `k`.
pub fn excess_grid(
    erasure_probs: &[f64],
    block_lengths: impl IntoIterator<Item = usize>,
    parity: usize,
    delta: f64,
    exec: Execution,
) -> Result<Vec<ExcessCell>, PlanError> {
    let ks: Vec<usize> = block_lengths.into_iter().collect();
    let cells: Vec<(f64, usize)> = erasure_probs
        .iter()
        .flat_map(|&pe| ks.iter().map(move |&k| (pe, k)))
        .collect();
    par::map_items(exec, &cells, |&(pe, k)| {
        let ch = BecChannel::new(pe).map_err(|e| PlanError::InvalidRequest(e.to_string()))?;
        let ps = distribute_excess(CodeSpec::with_parity(k, parity)?, ch, delta)?;
        Ok(ExcessCell {
            pe,
            k,
            excess: ps.excess(),
        })
    })
    .into_iter()
    .collect()
}
