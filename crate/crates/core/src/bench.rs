//! Wall-clock encode/decode/inversion timing, plain versus partitioned.
//!
//! Generators, payloads and erasure patterns are prepared outside the timed
//! region. Each point runs 10 discarded warm-up iterations and reports the
//! median and median absolute deviation of the measured ones. Measurement is
//! single-threaded and, on Linux, pinned to the CPU the caller is running on.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::codec::{CodeSpec, CodecError, GeneratorMatrix};
use crate::galois::FieldMatrix;
use crate::partition::{PartitionError, PartitionSpec, PartitionedCodec};

pub const WARMUP_ITERATIONS: usize = 10;
pub const MIN_ITERATIONS: usize = 10;

pub const CSV_HEADER: &str = "k,mode,phase,median_ms,mad_ms,iterations,packet_size,parity";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plain,
    Partitioned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Encode,
    Decode,
    Invert,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "plain",
            Mode::Partitioned => "partitioned",
        })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Encode => "encode",
            Phase::Decode => "decode",
            Phase::Invert => "invert",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plain" => Ok(Mode::Plain),
            "partitioned" => Ok(Mode::Partitioned),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

impl FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "encode" => Ok(Phase::Encode),
            "decode" => Ok(Phase::Decode),
            "invert" => Ok(Phase::Invert),
            _ => Err(format!("unknown phase {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub k_values: Vec<usize>,
    /// Parity packets of the plain code; the partitioned code splits them.
    pub parity: usize,
    pub packet_size: usize,
    pub iterations: usize,
    /// Packets erased before timing decode, source packets first.
    pub erased: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            k_values: (10..=120).step_by(10).collect(),
            parity: 8,
            packet_size: 1500,
            iterations: 100,
            erased: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchPoint {
    pub k: usize,
    pub mode: Mode,
    pub phase: Phase,
    pub median_ms: f64,
    pub mad_ms: f64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidConfig(msg));
        if self.iterations < MIN_ITERATIONS {
            return bad(format!(
                "iterations must be at least {MIN_ITERATIONS}, got {}",
                self.iterations
            ));
        }
        if self.erased > self.parity {
            return bad(format!(
                "cannot erase {} packets with parity {}",
                self.erased, self.parity
            ));
        }
        if self.packet_size == 0 {
            return bad("packet size must be positive".into());
        }
        if self.k_values.is_empty() {
            return bad("no block lengths given".into());
        }
        for &k in &self.k_values {
            CodeSpec::with_parity(k, self.parity)?;
        }
        Ok(())
    }

    pub fn run(&self, mode: Mode, phase: Phase) -> Result<Vec<BenchPoint>, BenchError> {
        match phase {
            Phase::Encode => self.bench_encode(mode),
            Phase::Decode => self.bench_decode(mode),
            Phase::Invert => self.bench_invert(mode),
        }
    }

    pub fn bench_encode(&self, mode: Mode) -> Result<Vec<BenchPoint>, BenchError> {
        self.validate()?;
        let _pin = pin_to_current_cpu();
        self.k_values
            .iter()
            .map(|&k| {
                let payload = self.payload(k);
                let (median_ms, mad_ms) = match self.coder(k, mode)? {
                    Coder::Plain(gen) => measure(self.iterations, || gen.encode(&payload)),
                    Coder::Partitioned(codec) => {
                        measure(self.iterations, || codec.encode(&payload))
                    }
                };
                Ok(BenchPoint {
                    k,
                    mode,
                    phase: Phase::Encode,
                    median_ms,
                    mad_ms,
                })
            })
            .collect()
    }

    pub fn bench_decode(&self, mode: Mode) -> Result<Vec<BenchPoint>, BenchError> {
        self.validate()?;
        let _pin = pin_to_current_cpu();
        self.k_values
            .iter()
            .map(|&k| {
                let payload = self.payload(k);
                let mut rng = self.rng(k, 1);
                let (median_ms, mad_ms) = match self.coder(k, mode)? {
                    Coder::Plain(gen) => {
                        let block = gen.encode(&payload)?;
                        let erased = erasure_pattern(gen.spec(), self.erased, &mut rng);
                        let received = received_view(&block.received(), &erased);
                        measure(self.iterations, || gen.decode_received(&received))
                    }
                    Coder::Partitioned(codec) => {
                        let (a, b) = codec.encode(&payload)?;
                        let [ea, eb] = split_erasures(codec.spec(), self.erased);
                        let ra =
                            received_view(&a.received(), &erasure_pattern(a.spec(), ea, &mut rng));
                        let rb =
                            received_view(&b.received(), &erasure_pattern(b.spec(), eb, &mut rng));
                        measure(self.iterations, || codec.decode_received(&ra, &rb))
                    }
                };
                Ok(BenchPoint {
                    k,
                    mode,
                    phase: Phase::Decode,
                    median_ms,
                    mad_ms,
                })
            })
            .collect()
    }

    /// Times inversion of the decoding matrix the decoder would build for the
    /// configured erasure count: surviving source rows plus parity rows.
    pub fn bench_invert(&self, mode: Mode) -> Result<Vec<BenchPoint>, BenchError> {
        self.validate()?;
        let _pin = pin_to_current_cpu();
        self.k_values
            .iter()
            .map(|&k| {
                let mut rng = self.rng(k, 2);
                let matrices: Vec<FieldMatrix> = match self.coder(k, mode)? {
                    Coder::Plain(gen) => {
                        vec![decoding_matrix(
                            &gen,
                            &erasure_pattern(gen.spec(), self.erased, &mut rng),
                        )]
                    }
                    Coder::Partitioned(codec) => {
                        let counts = split_erasures(codec.spec(), self.erased);
                        codec
                            .generators()
                            .iter()
                            .zip(counts)
                            .map(|(g, e)| {
                                decoding_matrix(g, &erasure_pattern(g.spec(), e, &mut rng))
                            })
                            .collect()
                    }
                };
                let (median_ms, mad_ms) = measure(self.iterations, || {
                    matrices
                        .iter()
                        .map(|m| m.invert().expect("generator submatrix is invertible"))
                        .collect::<Vec<_>>()
                });
                Ok(BenchPoint {
                    k,
                    mode,
                    phase: Phase::Invert,
                    median_ms,
                    mad_ms,
                })
            })
            .collect()
    }

    fn coder(&self, k: usize, mode: Mode) -> Result<Coder, BenchError> {
        let spec = CodeSpec::with_parity(k, self.parity)?;
        Ok(match mode {
            Mode::Plain => Coder::Plain(GeneratorMatrix::build(spec)),
            Mode::Partitioned => {
                Coder::Partitioned(PartitionedCodec::new(PartitionSpec::split(spec, 0)?))
            }
        })
    }

    fn rng(&self, k: usize, purpose: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((k as u64) << 8 | purpose);
        rng
    }

    /// Deterministic payload for block length `k`.
    pub fn payload(&self, k: usize) -> Vec<Vec<u8>> {
        let mut rng = self.rng(k, 0);
        (0..k)
            .map(|_| {
                let mut p = vec![0u8; self.packet_size];
                rng.fill(p.as_mut_slice());
                p
            })
            .collect()
    }

    /// CSV rows (without header) for a set of points.
    pub fn csv_rows(&self, points: &[BenchPoint]) -> Vec<String> {
        points
            .iter()
            .map(|p| {
                format!(
                    "{},{},{},{:.6},{:.6},{},{},{}",
                    p.k,
                    p.mode,
                    p.phase,
                    p.median_ms,
                    p.mad_ms,
                    self.iterations,
                    self.packet_size,
                    self.parity
                )
            })
            .collect()
    }
}

/// Isolated inversion time for block length `k` with the default parity.
pub fn bench_invert(k: usize, iterations: usize) -> Result<BenchPoint, BenchError> {
    let cfg = BenchConfig {
        k_values: vec![k],
        iterations,
        ..BenchConfig::default()
    };
    Ok(cfg.bench_invert(Mode::Plain)?.remove(0))
}

enum Coder {
    Plain(GeneratorMatrix),
    Partitioned(PartitionedCodec),
}

/// Erased positions: `count` random source packets, spilling into parity
/// packets only when `count > k`.
fn erasure_pattern(spec: CodeSpec, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let from_source = count.min(spec.k());
    let mut erased = index::sample(rng, spec.k(), from_source).into_vec();
    erased.extend(spec.k()..spec.k() + (count - from_source));
    erased.sort_unstable();
    erased
}

/// Hands erasures to the halves alternately, first half first, never more
/// than a half's parity.
fn split_erasures(ps: PartitionSpec, count: usize) -> [usize; 2] {
    let caps = [ps.first().p(), ps.second().p()];
    let mut out = [0, 0];
    let mut turn = 0;
    for _ in 0..count {
        if out[turn] == caps[turn] {
            turn = 1 - turn;
        }
        out[turn] += 1;
        turn = 1 - turn;
    }
    out
}

fn received_view<'a>(slots: &[Option<&'a [u8]>], erased: &[usize]) -> Vec<Option<&'a [u8]>> {
    let mut view = slots.to_vec();
    for &i in erased {
        view[i] = None;
    }
    view
}

fn decoding_matrix(gen: &GeneratorMatrix, erased: &[usize]) -> FieldMatrix {
    let (n, k) = (gen.spec().n(), gen.spec().k());
    let missing = erased.iter().filter(|&&i| i < k).count();
    let mut rows: Vec<usize> = (0..k).filter(|i| !erased.contains(i)).collect();
    rows.extend((k..n).filter(|i| !erased.contains(i)).take(missing));
    gen.submatrix(&rows)
}

/// Median and median absolute deviation of `iterations` timed calls, in ms.
fn measure<T>(iterations: usize, mut f: impl FnMut() -> T) -> (f64, f64) {
    for _ in 0..WARMUP_ITERATIONS {
        black_box(f());
    }
    let mut samples: Vec<f64> = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        drop(black_box(out));
        samples.push(elapsed.as_secs_f64() * 1e3);
    }
    let med = median(&mut samples);
    let mut dev: Vec<f64> = samples.iter().map(|s| (s - med).abs()).collect();
    // floor at one nanosecond, the clock resolution
    (med.max(1e-6), median(&mut dev))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}

/// Restores the previous CPU affinity on drop.
struct CpuPin {
    #[cfg(target_os = "linux")]
    previous: Option<libc::cpu_set_t>,
}

#[cfg(target_os = "linux")]
fn pin_to_current_cpu() -> CpuPin {
    // SAFETY: cpu_set_t is plain data; the calls only read/write the sets we pass.
    unsafe {
        let mut previous: libc::cpu_set_t = std::mem::zeroed();
        let size = std::mem::size_of::<libc::cpu_set_t>();
        if libc::sched_getaffinity(0, size, &mut previous) != 0 {
            return CpuPin { previous: None };
        }
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return CpuPin { previous: None };
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        if libc::sched_setaffinity(0, size, &set) != 0 {
            return CpuPin { previous: None };
        }
        CpuPin {
            previous: Some(previous),
        }
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to_current_cpu() -> CpuPin {
    CpuPin {}
}

impl Drop for CpuPin {
    fn drop(&mut self) {
        #[cfg(target_os = "linux")]
        if let Some(previous) = self.previous.take() {
            // SAFETY: restores a set previously returned by sched_getaffinity.
            unsafe {
                libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &previous);
            }
        }
    }
}
