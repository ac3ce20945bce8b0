//! Code partitioning: one `C(n, k)` block split into two independent codes.
//!
//! The first half takes `ceil(k/2)` source packets, the second half the rest.
//! The `p` parity packets and any excess parity packets are dealt alternately,
//! first half first, so the first half holds `ceil((p + excess)/2)` of them.
//! Each half is encoded and decoded on its own, so encoding costs
//! `k1*p1 + k2*p2` multiply-accumulates per byte instead of `k*p`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::codec::{CodeSpec, CodecError, GeneratorMatrix, OpMeter, PacketBlock};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("block length {k} is too short to partition")]
    TooShort { k: usize },
    #[error(
        "half {half} of the partition would carry no parity (parent p={parent_p}, excess={excess})"
    )]
    NoParity {
        half: usize,
        parent_p: usize,
        excess: usize,
    },
    #[error("halves {first} + {second} do not partition {parent}")]
    Inconsistent {
        parent: CodeSpec,
        first: CodeSpec,
        second: CodeSpec,
    },
    #[error(
        "unrecoverable partitioned block: lost source packets {}",
        format_lost(first, second)
    )]
    Unrecoverable {
        first: Vec<usize>,
        second: Vec<usize>,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn format_lost(first: &[usize], second: &[usize]) -> String {
    format!("{:?}", first.iter().chain(second).collect::<Vec<_>>())
}

impl PartitionError {
    /// Lost source indices in parent numbering, for an unrecoverable block.
    pub fn lost(&self) -> Vec<usize> {
        match self {
            PartitionError::Unrecoverable { first, second } => {
                first.iter().chain(second).copied().collect()
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PartitionSpec {
    parent: CodeSpec,
    first: CodeSpec,
    second: CodeSpec,
    excess: usize,
}

impl PartitionSpec {
    /// Splits `parent` in two, adding `excess` parity packets alternately.
    pub fn split(parent: CodeSpec, excess: usize) -> Result<Self, PartitionError> {
        let k = parent.k();
        if k < 2 {
            return Err(PartitionError::TooShort { k });
        }
        let p = parent.p();
        // base and excess parity are dealt alternately as one sequence
        let p1 = (p + excess).div_ceil(2);
        let p2 = (p + excess) / 2;
        for (half, pi) in [(1, p1), (2, p2)] {
            if pi == 0 {
                return Err(PartitionError::NoParity {
                    half,
                    parent_p: p,
                    excess,
                });
            }
        }
        let first = CodeSpec::with_parity(k.div_ceil(2), p1)?;
        let second = CodeSpec::with_parity(k / 2, p2)?;
        Ok(PartitionSpec {
            parent,
            first,
            second,
            excess,
        })
    }

    /// Builds a partition from explicit halves, checking they split `parent`.
    pub fn from_halves(
        parent: CodeSpec,
        first: CodeSpec,
        second: CodeSpec,
    ) -> Result<Self, PartitionError> {
        let inconsistent = PartitionError::Inconsistent {
            parent,
            first,
            second,
        };
        if first.k() != parent.k().div_ceil(2) || second.k() != parent.k() / 2 {
            return Err(inconsistent);
        }
        let excess = (first.p() + second.p())
            .checked_sub(parent.p())
            .ok_or(inconsistent)?;
        Ok(PartitionSpec {
            parent,
            first,
            second,
            excess,
        })
    }

    pub fn parent(&self) -> CodeSpec {
        self.parent
    }

    pub fn first(&self) -> CodeSpec {
        self.first
    }

    pub fn second(&self) -> CodeSpec {
        self.second
    }

    pub fn halves(&self) -> [CodeSpec; 2] {
        [self.first, self.second]
    }

    pub fn excess(&self) -> usize {
        self.excess
    }

    /// Packets sent for one parent block: `n1 + n2`.
    pub fn total_packets(&self) -> usize {
        self.first.n() + self.second.n()
    }
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} + {} (excess {})",
            self.parent, self.first, self.second, self.excess
        )
    }
}

/// Encoder/decoder pair for a [`PartitionSpec`].
#[derive(Debug, Clone)]
pub struct PartitionedCodec {
    spec: PartitionSpec,
    first: GeneratorMatrix,
    second: GeneratorMatrix,
}

impl PartitionedCodec {
    pub fn new(spec: PartitionSpec) -> Self {
        PartitionedCodec {
            spec,
            first: GeneratorMatrix::build(spec.first),
            second: GeneratorMatrix::build(spec.second),
        }
    }

    pub fn spec(&self) -> PartitionSpec {
        self.spec
    }

    pub fn generators(&self) -> [&GeneratorMatrix; 2] {
        [&self.first, &self.second]
    }

    pub fn encode<P: AsRef<[u8]>>(
        &self,
        source: &[P],
    ) -> Result<(PacketBlock, PacketBlock), PartitionError> {
        self.encode_metered(source, &mut OpMeter::default())
    }

    /// Source packets `0..k1` feed the first code, `k1..k` the second.
    pub fn encode_metered<P: AsRef<[u8]>>(
        &self,
        source: &[P],
        meter: &mut OpMeter,
    ) -> Result<(PacketBlock, PacketBlock), PartitionError> {
        let k = self.spec.parent.k();
        if source.len() != k {
            return Err(CodecError::PacketCount {
                expected: k,
                actual: source.len(),
            }
            .into());
        }
        let (a, b) = source.split_at(self.spec.first.k());
        let first = self.first.encode_metered(a, meter)?;
        let second = self.second.encode_metered(b, meter)?;
        Ok((first, second))
    }

    pub fn decode(
        &self,
        first: &PacketBlock,
        second: &PacketBlock,
    ) -> Result<Vec<Vec<u8>>, PartitionError> {
        self.decode_received_metered(
            &first.received(),
            &second.received(),
            &mut OpMeter::default(),
        )
    }

    pub fn decode_received(
        &self,
        first: &[Option<&[u8]>],
        second: &[Option<&[u8]>],
    ) -> Result<Vec<Vec<u8>>, PartitionError> {
        self.decode_received_metered(first, second, &mut OpMeter::default())
    }

    /// Decodes both halves independently and concatenates in source order.
    /// If either half fails, the error lists the lost indices of both.
    pub fn decode_received_metered(
        &self,
        first: &[Option<&[u8]>],
        second: &[Option<&[u8]>],
        meter: &mut OpMeter,
    ) -> Result<Vec<Vec<u8>>, PartitionError> {
        let a = self.first.decode_received_metered(first, meter);
        let b = self.second.decode_received_metered(second, meter);
        let offset = self.spec.first.k();
        match (a, b) {
            (Ok(mut a), Ok(b)) => {
                a.extend(b);
                Ok(a)
            }
            (a, b) => {
                let lost_first = unrecoverable(a)?;
                let lost_second = unrecoverable(b)?.into_iter().map(|i| i + offset).collect();
                Err(PartitionError::Unrecoverable {
                    first: lost_first,
                    second: lost_second,
                })
            }
        }
    }
}

/// Lost indices of a half result; a successful half lost nothing.
fn unrecoverable<T>(res: Result<T, CodecError>) -> Result<Vec<usize>, PartitionError> {
    match res {
        Ok(_) => Ok(Vec::new()),
        Err(CodecError::Unrecoverable { lost }) => Ok(lost),
        Err(e) => Err(e.into()),
    }
}
