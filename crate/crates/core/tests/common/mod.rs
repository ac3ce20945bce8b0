#![allow(dead_code)]

/// Required `n` at loss target 1e-5, rows k = 40 and k = 80, columns
/// p_e = 0.01, 0.03, 0.05, 0.07, 0.09, 0.1.
pub const TABLE1: [[usize; 6]; 2] = [[44, 48, 50, 53, 55, 56], [86, 91, 95, 98, 102, 104]];

/// `(k_first, k_last, excess)`.
pub type Run = (usize, usize, usize);

/// Excess parity over the sweep (parent parity 5, delta 0.001) as runs per
/// erasure probability.
pub const EXCESS_RUNS: [(f64, &[Run]); 3] = [
    (0.01, &[(10, 110, 0)]),
    (
        0.05,
        &[
            (10, 11, 0),
            (12, 25, 1),
            (26, 49, 2),
            (50, 96, 1),
            (97, 110, 0),
        ],
    ),
    (0.1, &[(10, 25, 2), (26, 46, 1), (47, 110, 0)]),
];

pub fn golden_excess(pe: f64, k: usize) -> usize {
    let (_, runs) = EXCESS_RUNS
        .iter()
        .find(|(p, _)| *p == pe)
        .expect("sweep probability");
    runs.iter()
        .find(|&&(lo, hi, _)| (lo..=hi).contains(&k))
        .expect("k in sweep")
        .2
}

/// Best median over `rounds` interleaved runs of each closure. Interleaving
/// keeps slow phases of a shared host from landing on one side only.
pub fn best_medians<const N: usize>(
    rounds: usize,
    mut runs: [&mut dyn FnMut() -> f64; N],
) -> [f64; N] {
    let mut best = [f64::INFINITY; N];
    for _ in 0..rounds {
        for (b, run) in best.iter_mut().zip(runs.iter_mut()) {
            *b = b.min(run());
        }
    }
    best
}
