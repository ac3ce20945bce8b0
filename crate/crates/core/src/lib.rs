//! Packet-level MDS erasure coding with code partitioning.
//!
//! - [`galois`]: GF(2^8) arithmetic and matrices.
//! - [`codec`]: systematic `(n, k)` encoder/decoder.
//! - [`partition`]: splitting one code into two independent half codes.
//! - [`analysis`]: residual packet loss on a binary erasure channel, with
//!   enumeration and Monte Carlo cross-checks.
//! - [`planner`]: minimal code length for a loss target and excess parity for
//!   partitioned codes.
//! - [`bench`]: encode/decode/inversion timing harness.

pub mod analysis;
pub mod bench;
pub mod codec;
pub mod galois;
pub mod par;
pub mod partition;
pub mod planner;

pub use analysis::{BecChannel, Layout, LossPmf, PlrMethod, PlrReport};
pub use codec::{CodeSpec, CodecError, GeneratorMatrix, OpMeter, PacketBlock};
pub use galois::{FieldMatrix, Gf256};
pub use par::Execution;
pub use partition::{PartitionError, PartitionSpec, PartitionedCodec};
