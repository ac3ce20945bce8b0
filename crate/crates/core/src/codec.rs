//! Systematic MDS erasure coding at packet granularity.
//!
//! A [`GeneratorMatrix`] for an `(n, k)` code has an identity top block, so the
//! first `k` coded packets are the source packets themselves and only the `p`
//! parity rows cost multiplications. Any `k` of the `n` packets recover the
//! source.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::galois::{mul_acc, FieldMatrix, GaloisError};

/// Largest code length representable over GF(2^8) with distinct evaluation points.
pub const MAX_CODE_LEN: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid code (n={n}, k={k}): need 1 <= k < n")]
    InvalidSpec { n: usize, k: usize },
    #[error("code length {n} exceeds the field bound of {MAX_CODE_LEN}")]
    Capacity { n: usize },
    #[error("expected {expected} packets, got {actual}")]
    PacketCount { expected: usize, actual: usize },
    #[error("packet {index} is {actual} bytes, expected {expected}")]
    SizeMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("block belongs to code {actual}, decoder is {expected}")]
    SpecMismatch {
        expected: CodeSpec,
        actual: CodeSpec,
    },
    #[error("unrecoverable block: {} source packets lost", lost.len())]
    Unrecoverable { lost: Vec<usize> },
    #[error(transparent)]
    Field(#[from] GaloisError),
}

/// An `(n, k)` code: `k` source packets protected by `p = n - k` parity packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CodeSpec {
    n: usize,
    k: usize,
}

impl CodeSpec {
    pub fn new(n: usize, k: usize) -> Result<Self, CodecError> {
        if k == 0 || n <= k {
            return Err(CodecError::InvalidSpec { n, k });
        }
        if n > MAX_CODE_LEN {
            return Err(CodecError::Capacity { n });
        }
        Ok(CodeSpec { n, k })
    }

    pub fn with_parity(k: usize, p: usize) -> Result<Self, CodecError> {
        Self::new(k + p, k)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.n - self.k
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C({},{})", self.n, self.k)
    }
}

/// Counts symbol multiply-accumulates per byte position and matrix inversions.
///
/// Every kernel call processes each byte position once, so one call is one
/// multiply-accumulate per byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpMeter {
    pub macs_per_byte: u64,
    pub inversions: u64,
}

impl OpMeter {
    #[inline]
    fn mac(&mut self, dst: &mut [u8], src: &[u8], c: u8) {
        self.macs_per_byte += 1;
        mul_acc(dst, src, c);
    }
}

/// A block of `n` packet slots, each holding a buffer or erased.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketBlock {
    spec: CodeSpec,
    packet_size: usize,
    packets: Vec<Option<Vec<u8>>>,
}

impl PacketBlock {
    /// Wraps received slots; all present packets must share one size.
    pub fn from_slots(spec: CodeSpec, packets: Vec<Option<Vec<u8>>>) -> Result<Self, CodecError> {
        if packets.len() != spec.n() {
            return Err(CodecError::PacketCount {
                expected: spec.n(),
                actual: packets.len(),
            });
        }
        let packet_size = uniform_size(packets.iter().map(|p| p.as_deref()))?.unwrap_or(0);
        Ok(PacketBlock {
            spec,
            packet_size,
            packets,
        })
    }

    pub fn spec(&self) -> CodeSpec {
        self.spec
    }

    pub fn packet_size(&self) -> usize {
        self.packet_size
    }

    pub fn packet(&self, index: usize) -> Option<&[u8]> {
        self.packets.get(index)?.as_deref()
    }

    pub fn is_present(&self, index: usize) -> bool {
        self.packet(index).is_some()
    }

    /// Erases slot `index`, returning its previous contents.
    pub fn erase(&mut self, index: usize) -> Option<Vec<u8>> {
        self.packets.get_mut(index)?.take()
    }

    pub fn present_count(&self) -> usize {
        self.packets.iter().filter(|p| p.is_some()).count()
    }

    /// Borrowed view of every slot, as consumed by [`GeneratorMatrix::decode_received`].
    pub fn received(&self) -> Vec<Option<&[u8]>> {
        self.packets.iter().map(|p| p.as_deref()).collect()
    }

    /// The `k` systematic packets, if none of them is erased.
    pub fn source(&self) -> Option<Vec<&[u8]>> {
        self.packets[..self.spec.k()]
            .iter()
            .map(|p| p.as_deref())
            .collect()
    }

    pub fn into_slots(self) -> Vec<Option<Vec<u8>>> {
        self.packets
    }
}

fn uniform_size<'a>(
    packets: impl Iterator<Item = Option<&'a [u8]>>,
) -> Result<Option<usize>, CodecError> {
    let mut size = None;
    for (index, p) in packets.enumerate() {
        if let Some(p) = p {
            match size {
                None => size = Some(p.len()),
                Some(expected) if expected != p.len() => {
                    return Err(CodecError::SizeMismatch {
                        index,
                        expected,
                        actual: p.len(),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(size)
}

/// Systematic `n x k` generator over GF(2^8).
///
/// Built from the Vandermonde matrix on evaluation points `0..n` by
/// right-multiplying with the inverse of its top `k x k` block. Any `k` rows of
/// a Vandermonde matrix on distinct points are independent, and right
/// multiplication by an invertible matrix preserves that, so every `k`-row
/// submatrix of the result is invertible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    spec: CodeSpec,
    matrix: FieldMatrix,
}

impl GeneratorMatrix {
    pub fn build(spec: CodeSpec) -> Self {
        let points: Vec<u8> = (0..spec.n()).map(|i| i as u8).collect();
        let vander = FieldMatrix::vandermonde(&points, spec.k());
        let top: Vec<usize> = (0..spec.k()).collect();
        let top_inv = vander
            .select_rows(&top)
            .invert()
            .expect("Vandermonde block on distinct points is invertible");
        let matrix = vander.mul(&top_inv).expect("dimensions agree");
        GeneratorMatrix { spec, matrix }
    }

    pub fn spec(&self) -> CodeSpec {
        self.spec
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    /// Square matrix formed by the given generator rows.
    pub fn submatrix(&self, rows: &[usize]) -> FieldMatrix {
        self.matrix.select_rows(rows)
    }

    pub fn encode<P: AsRef<[u8]>>(&self, source: &[P]) -> Result<PacketBlock, CodecError> {
        self.encode_metered(source, &mut OpMeter::default())
    }

    pub fn encode_metered<P: AsRef<[u8]>>(
        &self,
        source: &[P],
        meter: &mut OpMeter,
    ) -> Result<PacketBlock, CodecError> {
        let k = self.spec.k();
        if source.len() != k {
            return Err(CodecError::PacketCount {
                expected: k,
                actual: source.len(),
            });
        }
        let packet_size = uniform_size(source.iter().map(|p| Some(p.as_ref())))?.unwrap_or(0);
        let mut packets: Vec<Option<Vec<u8>>> = Vec::with_capacity(self.spec.n());
        packets.extend(source.iter().map(|p| Some(p.as_ref().to_vec())));
        for r in k..self.spec.n() {
            let mut parity = vec![0u8; packet_size];
            for (c, src) in self.matrix.row(r).iter().zip(source) {
                meter.mac(&mut parity, src.as_ref(), *c);
            }
            packets.push(Some(parity));
        }
        Ok(PacketBlock {
            spec: self.spec,
            packet_size,
            packets,
        })
    }

    pub fn decode(&self, block: &PacketBlock) -> Result<Vec<Vec<u8>>, CodecError> {
        self.decode_metered(block, &mut OpMeter::default())
    }

    pub fn decode_metered(
        &self,
        block: &PacketBlock,
        meter: &mut OpMeter,
    ) -> Result<Vec<Vec<u8>>, CodecError> {
        if block.spec != self.spec {
            return Err(CodecError::SpecMismatch {
                expected: self.spec,
                actual: block.spec,
            });
        }
        self.decode_received_metered(&block.received(), meter)
    }

    pub fn decode_received(&self, received: &[Option<&[u8]>]) -> Result<Vec<Vec<u8>>, CodecError> {
        self.decode_received_metered(received, &mut OpMeter::default())
    }

    /// Recovers the `k` source packets from any `k` surviving slots.
    ///
    /// Surviving source rows are used first, then parity rows in ascending
    /// index. Only the missing source packets are reconstructed.
    pub fn decode_received_metered(
        &self,
        received: &[Option<&[u8]>],
        meter: &mut OpMeter,
    ) -> Result<Vec<Vec<u8>>, CodecError> {
        let (n, k) = (self.spec.n(), self.spec.k());
        if received.len() != n {
            return Err(CodecError::PacketCount {
                expected: n,
                actual: received.len(),
            });
        }
        let packet_size = uniform_size(received.iter().copied())?.unwrap_or(0);

        let missing: Vec<usize> = (0..k).filter(|&i| received[i].is_none()).collect();
        if missing.is_empty() {
            return Ok(received[..k].iter().map(|p| p.unwrap().to_vec()).collect());
        }
        let present = received.iter().filter(|p| p.is_some()).count();
        if present < k {
            return Err(CodecError::Unrecoverable { lost: missing });
        }

        let mut rows: Vec<usize> = (0..k).filter(|&i| received[i].is_some()).collect();
        rows.extend(
            (k..n)
                .filter(|&i| received[i].is_some())
                .take(missing.len()),
        );
        let inverse = self.matrix.select_rows(&rows).invert()?;
        meter.inversions += 1;

        let mut out: Vec<Option<Vec<u8>>> = received[..k]
            .iter()
            .map(|p| p.map(<[u8]>::to_vec))
            .collect();
        for &i in &missing {
            let mut packet = vec![0u8; packet_size];
            for (j, &c) in inverse.row(i).iter().enumerate() {
                if c != 0 {
                    meter.mac(&mut packet, received[rows[j]].unwrap(), c);
                }
            }
            out[i] = Some(packet);
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }
}
