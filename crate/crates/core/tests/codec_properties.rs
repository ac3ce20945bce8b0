use fecpart::codec::{CodeSpec, CodecError, GeneratorMatrix, OpMeter};
use fecpart::partition::{PartitionError, PartitionSpec, PartitionedCodec};
use proptest::prelude::*;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_source(rng: &mut ChaCha8Rng, k: usize, size: usize) -> Vec<Vec<u8>> {
    (0..k)
        .map(|_| (0..size).map(|_| rng.random()).collect())
        .collect()
}

fn subsets(n: usize, size: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n)
        .filter(move |m| m.count_ones() as usize == size)
        .map(move |m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
}

#[test]
fn every_small_code_round_trips_every_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=12 {
        for k in 1..n {
            let gen = GeneratorMatrix::build(CodeSpec::new(n, k).unwrap());
            let src = random_source(&mut rng, k, 3);
            let full = gen.encode(&src).unwrap();
            for mask in 0u32..1 << n {
                let received: Vec<Option<&[u8]>> = (0..n)
                    .map(|i| (mask >> i & 1 == 0).then(|| full.packet(i).unwrap()))
                    .collect();
                let survivors = n - mask.count_ones() as usize;
                match gen.decode_received(&received) {
                    Ok(out) => {
                        assert!(survivors >= k);
                        assert_eq!(out, src, "C({n},{k}) mask {mask:b}");
                    }
                    Err(CodecError::Unrecoverable { lost }) => {
                        assert!(survivors < k, "C({n},{k}) mask {mask:b} should decode");
                        let expected: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
                        assert_eq!(lost, expected);
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn large_code_round_trips_random_patterns() {
    let gen = GeneratorMatrix::build(CodeSpec::new(120, 100).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(120);
    let src = random_source(&mut rng, 100, 16);
    let full = gen.encode(&src).unwrap();
    for _ in 0..1000 {
        let count = rng.random_range(0..=20);
        let erased = index::sample(&mut rng, 120, count).into_vec();
        let mut block = full.clone();
        for i in erased {
            block.erase(i);
        }
        assert_eq!(gen.decode(&block).unwrap(), src);
    }
}

#[test]
fn small_generators_are_mds() {
    for n in 2..=12 {
        for k in 1..n {
            let gen = GeneratorMatrix::build(CodeSpec::new(n, k).unwrap());
            assert!(gen.submatrix(&(0..k).collect::<Vec<_>>()).is_identity());
            for rows in subsets(n, k) {
                assert!(
                    gen.submatrix(&rows).invert().is_ok(),
                    "C({n},{k}) rows {rows:?}"
                );
            }
        }
    }
}

#[test]
fn parity_block_has_no_zero_coefficients() {
    // a zero parity coefficient would give a singular 1x1 minor
    for (n, k) in [(48, 40), (255, 200), (255, 1), (255, 254)] {
        let gen = GeneratorMatrix::build(CodeSpec::new(n, k).unwrap());
        for r in k..n {
            assert!(gen.matrix().row(r).iter().all(|&c| c != 0));
        }
    }
}

#[test]
fn encode_meter_counts_kp_exactly() {
    for (n, k) in [(6, 4), (48, 40), (108, 100), (255, 200)] {
        let gen = GeneratorMatrix::build(CodeSpec::new(n, k).unwrap());
        let mut meter = OpMeter::default();
        gen.encode_metered(&vec![vec![0u8; 8]; k], &mut meter)
            .unwrap();
        assert_eq!(meter.macs_per_byte as usize, k * (n - k));
    }
}

#[test]
fn partitioned_encode_meter_counts_halves() {
    for (n, k, excess) in [
        (48, 40, 0),
        (48, 40, 3),
        (56, 41, 0),
        (108, 100, 2),
        (15, 10, 1),
    ] {
        let ps = PartitionSpec::split(CodeSpec::new(n, k).unwrap(), excess).unwrap();
        let codec = PartitionedCodec::new(ps);
        let mut meter = OpMeter::default();
        codec
            .encode_metered(&vec![vec![1u8; 8]; k], &mut meter)
            .unwrap();
        let [a, b] = ps.halves();
        let expected = a.k() * a.p() + b.k() * b.p();
        assert_eq!(meter.macs_per_byte as usize, expected);
        // odd k with odd p puts both extras on the first half: +0.5 over the even share
        let slack = if k % 2 == 1 && (n - k) % 2 == 1 {
            0.5
        } else {
            0.0
        };
        let bound = 0.5 * (k * (n - k)) as f64 + (excess * k.div_ceil(2)) as f64 + slack;
        assert!(expected as f64 <= bound, "{ps}: {expected} > {bound}");
    }
}

#[test]
fn partitioned_decode_succeeds_iff_each_half_survives() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 3..=12 {
        for k in 2..n {
            for excess in 0..=(12 - n).min(2) {
                let Ok(ps) = PartitionSpec::split(CodeSpec::new(n, k).unwrap(), excess) else {
                    continue;
                };
                let codec = PartitionedCodec::new(ps);
                let src = random_source(&mut rng, k, 2);
                let (a, b) = codec.encode(&src).unwrap();
                let (na, nb) = (a.spec().n(), b.spec().n());
                let (ka, kb) = (a.spec().k(), b.spec().k());
                for mask in 0u32..1 << (na + nb) {
                    let ra: Vec<Option<&[u8]>> = (0..na)
                        .map(|i| (mask >> i & 1 == 0).then(|| a.packet(i).unwrap()))
                        .collect();
                    let rb: Vec<Option<&[u8]>> = (0..nb)
                        .map(|i| (mask >> (na + i) & 1 == 0).then(|| b.packet(i).unwrap()))
                        .collect();
                    let ok_a = ra.iter().flatten().count() >= ka;
                    let ok_b = rb.iter().flatten().count() >= kb;
                    match codec.decode_received(&ra, &rb) {
                        Ok(out) => {
                            assert!(ok_a && ok_b);
                            assert_eq!(out, src);
                        }
                        Err(PartitionError::Unrecoverable { first, second }) => {
                            assert!(!(ok_a && ok_b));
                            assert_eq!(first.is_empty(), ok_a);
                            assert_eq!(second.is_empty(), ok_b);
                            assert!(second.iter().all(|&i| i >= ka && i < k));
                        }
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
    }
}

#[test]
fn partition_round_trip_matches_plain() {
    let parent = CodeSpec::new(48, 40).unwrap();
    let ps = PartitionSpec::split(parent, 0).unwrap();
    let codec = PartitionedCodec::new(ps);
    let plain = GeneratorMatrix::build(parent);
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let src = random_source(&mut rng, 40, 100);
    let (mut a, mut b) = codec.encode(&src).unwrap();
    for i in [0, 5, 21] {
        a.erase(i);
    }
    for i in [3, 23] {
        b.erase(i);
    }
    let mut full = plain.encode(&src).unwrap();
    for i in [0, 5, 23, 30, 47] {
        full.erase(i);
    }
    assert_eq!(codec.decode(&a, &b).unwrap(), plain.decode(&full).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_k_survivors_recover(
        k in 1usize..40,
        p in 1usize..20,
        size in 1usize..24,
        seed in any::<u64>(),
    ) {
        let n = k + p;
        let gen = GeneratorMatrix::build(CodeSpec::new(n, k).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_source(&mut rng, k, size);
        let full = gen.encode(&src).unwrap();
        let keep = index::sample(&mut rng, n, k).into_vec();
        let received: Vec<Option<&[u8]>> =
            (0..n).map(|i| keep.contains(&i).then(|| full.packet(i).unwrap())).collect();
        prop_assert_eq!(gen.decode_received(&received).unwrap(), src);
    }

    #[test]
    fn fewer_than_k_survivors_never_return_data(
        k in 2usize..30,
        p in 1usize..10,
        seed in any::<u64>(),
    ) {
        let n = k + p;
        let gen = GeneratorMatrix::build(CodeSpec::new(n, k).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_source(&mut rng, k, 4);
        let full = gen.encode(&src).unwrap();
        let count = rng.random_range(0..k);
        let keep = index::sample(&mut rng, n, count).into_vec();
        let received: Vec<Option<&[u8]>> =
            (0..n).map(|i| keep.contains(&i).then(|| full.packet(i).unwrap())).collect();
        let is_unrecoverable = matches!(gen.decode_received(&received), Err(CodecError::Unrecoverable { .. }));
        prop_assert!(is_unrecoverable);
    }
}
