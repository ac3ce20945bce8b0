//! Empirical PLR through the real codec.
//!
//! Every trial draws i.i.d. erasures, decodes what survived and counts source
//! packets that are missing or wrong. Trial `t` draws from ChaCha8 stream `t`
//! of the caller's seed, so a report depends only on the seed and trial count,
//! never on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnalysisError, BecChannel, Layout, PlrMethod, PlrReport, Z95};
use crate::codec::{CodecError, GeneratorMatrix};
use crate::par::{self, Execution};
use crate::partition::PartitionedCodec;

const PACKET_SIZE: usize = 4;
const CHUNK: u64 = 1 << 12;

pub fn monte_carlo_plr(
    layout: impl Into<Layout>,
    ch: BecChannel,
    trials: u64,
    seed: u64,
) -> Result<PlrReport, AnalysisError> {
    monte_carlo_plr_with(layout, ch, trials, seed, Execution::default())
}

pub fn monte_carlo_plr_with(
    layout: impl Into<Layout>,
    ch: BecChannel,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<PlrReport, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    let layout = layout.into();
    let k = layout.k();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut payload_rng = base.clone();
    payload_rng.set_stream(u64::MAX);
    let source: Vec<Vec<u8>> = (0..k)
        .map(|_| (0..PACKET_SIZE).map(|_| payload_rng.random()).collect())
        .collect();
    let sim = Simulator::new(layout, &source);

    let partials = par::map_chunks(exec, trials, CHUNK, |range| {
        let mut lost_sum = 0u64;
        let mut lost_sq = 0u64;
        let mut erased = vec![false; layout.total_packets()];
        for t in range {
            let mut rng = base.clone();
            rng.set_stream(t);
            for slot in erased.iter_mut() {
                *slot = rng.random_bool(ch.p_e());
            }
            let lost = sim.trial(&erased, &source) as u64;
            lost_sum += lost;
            lost_sq += lost * lost;
        }
        (lost_sum, lost_sq)
    });
    let (sum, sq) = partials
        .iter()
        .fold((0u64, 0u64), |(a, b), (c, d)| (a + c, b + d));

    let t = trials as f64;
    let k = k as f64;
    let mean = sum as f64 / (k * t);
    let half_width = if trials > 1 {
        let var = ((sq as f64 / (k * k)) - t * mean * mean).max(0.0) / (t - 1.0);
        Z95 * (var / t).sqrt()
    } else {
        0.0
    };
    Ok(PlrReport {
        plr: mean.clamp(0.0, 1.0),
        method: PlrMethod::MonteCarlo,
        trials: Some(trials),
        half_width: Some(half_width),
    })
}

enum Simulator {
    Plain {
        gen: GeneratorMatrix,
        coded: Vec<Vec<u8>>,
    },
    Partitioned {
        codec: PartitionedCodec,
        first: Vec<Vec<u8>>,
        second: Vec<Vec<u8>>,
    },
}

impl Simulator {
    fn new(layout: Layout, source: &[Vec<u8>]) -> Self {
        let slots =
            |b: crate::codec::PacketBlock| b.into_slots().into_iter().map(Option::unwrap).collect();
        match layout {
            Layout::Plain(spec) => {
                let gen = GeneratorMatrix::build(spec);
                let coded = slots(gen.encode(source).expect("source matches spec"));
                Simulator::Plain { gen, coded }
            }
            Layout::Partitioned(ps) => {
                let codec = PartitionedCodec::new(ps);
                let (a, b) = codec.encode(source).expect("source matches spec");
                Simulator::Partitioned {
                    codec,
                    first: slots(a),
                    second: slots(b),
                }
            }
        }
    }

    /// Source packets not correctly delivered for one erasure pattern.
    fn trial(&self, erased: &[bool], source: &[Vec<u8>]) -> usize {
        match self {
            Simulator::Plain { gen, coded } => {
                let k = gen.spec().k();
                if !erased[..k].iter().any(|&e| e) {
                    return 0;
                }
                let received = survivors(coded, erased);
                match gen.decode_received(&received) {
                    Ok(out) => mismatches(&out, source),
                    Err(CodecError::Unrecoverable { lost }) => lost.len(),
                    Err(e) => panic!("simulation decode failed: {e}"),
                }
            }
            Simulator::Partitioned {
                codec,
                first,
                second,
            } => {
                let (ea, eb) = erased.split_at(first.len());
                let [a, b] = codec.spec().halves();
                if !ea[..a.k()].iter().any(|&e| e) && !eb[..b.k()].iter().any(|&e| e) {
                    return 0;
                }
                let (ra, rb) = (survivors(first, ea), survivors(second, eb));
                match codec.decode_received(&ra, &rb) {
                    Ok(out) => mismatches(&out, source),
                    Err(e @ crate::partition::PartitionError::Unrecoverable { .. }) => {
                        // a failed half may still have delivered the other one intact
                        e.lost().len()
                    }
                    Err(e) => panic!("simulation decode failed: {e}"),
                }
            }
        }
    }
}

fn survivors<'a>(coded: &'a [Vec<u8>], erased: &[bool]) -> Vec<Option<&'a [u8]>> {
    coded
        .iter()
        .zip(erased)
        .map(|(p, &e)| (!e).then_some(p.as_slice()))
        .collect()
}

fn mismatches(out: &[Vec<u8>], source: &[Vec<u8>]) -> usize {
    out.iter().zip(source).filter(|(a, b)| a != b).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{plr, plr_fec};
    use crate::codec::CodeSpec;
    use crate::partition::PartitionSpec;

    fn ch(p: f64) -> BecChannel {
        BecChannel::new(p).unwrap()
    }

    #[test]
    fn no_erasures_means_no_loss() {
        let r = monte_carlo_plr(CodeSpec::new(44, 40).unwrap(), ch(0.0), 1000, 1).unwrap();
        assert_eq!(r.plr, 0.0);
        assert_eq!(r.half_width, Some(0.0));
        assert_eq!(r.trials, Some(1000));
    }

    #[test]
    fn certain_erasure_loses_everything() {
        let r = monte_carlo_plr(CodeSpec::new(6, 4).unwrap(), ch(1.0), 50, 1).unwrap();
        assert_eq!(r.plr, 1.0);
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(
            monte_carlo_plr(CodeSpec::new(6, 4).unwrap(), ch(0.1), 0, 1),
            Err(AnalysisError::NoTrials)
        );
    }

    #[test]
    fn seeded_runs_repeat_and_paths_agree() {
        let s = CodeSpec::new(12, 8).unwrap();
        let a = monte_carlo_plr_with(s, ch(0.2), 20_000, 42, Execution::Sequential).unwrap();
        let b = monte_carlo_plr_with(s, ch(0.2), 20_000, 42, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_plr(s, ch(0.2), 20_000, 43).unwrap();
        assert_ne!(a.plr, c.plr);
    }

    #[test]
    fn plain_estimate_brackets_analytic() {
        let s = CodeSpec::new(10, 6).unwrap();
        let r = monte_carlo_plr(s, ch(0.3), 100_000, 5).unwrap();
        let exact = plr_fec(s, ch(0.3)).plr;
        assert!(
            (r.plr - exact).abs() <= 3.0 * r.half_width.unwrap(),
            "{r:?} vs {exact}"
        );
    }

    #[test]
    fn partitioned_estimate_brackets_analytic() {
        let ps = PartitionSpec::split(CodeSpec::new(14, 10).unwrap(), 1).unwrap();
        let r = monte_carlo_plr(ps, ch(0.25), 100_000, 6).unwrap();
        let exact = plr(ps.into(), ch(0.25)).plr;
        assert!(
            (r.plr - exact).abs() <= 3.0 * r.half_width.unwrap(),
            "{r:?} vs {exact}"
        );
    }
}
