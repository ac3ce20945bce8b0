//! Residual packet loss of plain and partitioned MDS codes on a binary erasure channel.
//!
//! For a code `C(n, k)` let `I` be the number of source packets still missing
//! after decoding. Decoding fails only when more than `p = n - k` of the `n`
//! packets are erased, and then exactly the erased source packets are lost:
//!
//! ```text
//! P(I = 0) = sum_{e=0}^{p} B(n, e)
//! P(I = i) = sum_{e=max(p+1, i)}^{p+i} B(n, e) * C(k,i) C(p,e-i) / C(n,e),   1 <= i <= k
//! ```
//!
//! with `B(n, e)` the binomial point mass of `e` erasures. The residual packet
//! loss rate is `E[I] / k`. A partitioned code loses `J = I1 + I2` packets,
//! whose distribution is the convolution of the two halves.

mod enumerate;
mod montecarlo;

use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::codec::CodeSpec;
use crate::partition::PartitionSpec;

pub use enumerate::{brute_force_plr, brute_force_plr_with, MAX_ENUMERATION_LEN};
pub use montecarlo::{monte_carlo_plr, monte_carlo_plr_with};

/// Binomial terms switch to log space above this many trials.
const DIRECT_LIMIT: usize = 60;

/// z-score of a two-sided 95% normal interval.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("erasure probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error(
        "exhaustive enumeration over {packets} packets exceeds the bound of {MAX_ENUMERATION_LEN}"
    )]
    EnumerationBound { packets: usize },
    #[error("at least one trial is required")]
    NoTrials,
}

/// Memoryless channel erasing each packet independently with probability `p_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecChannel {
    p_e: f64,
}

impl BecChannel {
    pub fn new(p_e: f64) -> Result<Self, AnalysisError> {
        if !(0.0..=1.0).contains(&p_e) {
            return Err(AnalysisError::InvalidProbability(p_e));
        }
        Ok(BecChannel { p_e })
    }

    #[inline]
    pub fn p_e(&self) -> f64 {
        self.p_e
    }
}

/// A plain code or a partitioned one; the unit the loss model and oracles accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Plain(CodeSpec),
    Partitioned(PartitionSpec),
}

impl Layout {
    /// Source packets per parent block.
    pub fn k(&self) -> usize {
        match self {
            Layout::Plain(s) => s.k(),
            Layout::Partitioned(ps) => ps.parent().k(),
        }
    }

    /// Packets transmitted per parent block.
    pub fn total_packets(&self) -> usize {
        match self {
            Layout::Plain(s) => s.n(),
            Layout::Partitioned(ps) => ps.total_packets(),
        }
    }

    /// The independent codes making up the layout.
    pub fn codes(&self) -> Vec<CodeSpec> {
        match self {
            Layout::Plain(s) => vec![*s],
            Layout::Partitioned(ps) => ps.halves().to_vec(),
        }
    }
}

impl From<CodeSpec> for Layout {
    fn from(s: CodeSpec) -> Self {
        Layout::Plain(s)
    }
}

impl From<PartitionSpec> for Layout {
    fn from(ps: PartitionSpec) -> Self {
        Layout::Partitioned(ps)
    }
}

/// Distribution of the number of unrecovered source packets, indexed `0..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPmf {
    pub layout: Layout,
    pub probabilities: Vec<f64>,
}

impl LossPmf {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }

    /// `E[losses] / k`.
    pub fn plr(&self) -> f64 {
        (self.mean() / self.layout.k() as f64).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlrMethod {
    Analytic,
    BruteForce,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlrReport {
    pub plr: f64,
    pub method: PlrMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Half-width of the 95% normal-approximation confidence interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl PlrReport {
    fn exact(plr: f64, method: PlrMethod) -> Self {
        PlrReport {
            plr: plr.clamp(0.0, 1.0),
            method,
            trials: None,
            half_width: None,
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(1025);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..=1024 {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    table[n]
}

fn ln_choose(n: usize, r: usize) -> f64 {
    ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)
}

/// `C(n, r)` as a float; exact integer arithmetic while it fits in `u128`.
pub fn choose(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    if n <= 120 {
        let mut acc: u128 = 1;
        for i in 0..r {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc as f64
    } else {
        ln_choose(n, r).exp()
    }
}

/// Probability of exactly `e` erasures among `n` packets.
pub fn binomial_pmf(n: usize, e: usize, ch: BecChannel) -> f64 {
    if e > n {
        return 0.0;
    }
    let p = ch.p_e();
    if p == 0.0 {
        return if e == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if e == n { 1.0 } else { 0.0 };
    }
    if n <= DIRECT_LIMIT {
        choose(n, e) * p.powi(e as i32) * (1.0 - p).powi((n - e) as i32)
    } else {
        (ln_choose(n, e) + e as f64 * p.ln() + (n - e) as f64 * (-p).ln_1p()).exp()
    }
}

/// Probability that `i` of `e` uniformly placed erasures hit the `k` source positions.
fn source_share(n: usize, k: usize, e: usize, i: usize) -> f64 {
    if i > k || i > e || e - i > n - k {
        return 0.0;
    }
    if n <= DIRECT_LIMIT {
        choose(k, i) * choose(n - k, e - i) / choose(n, e)
    } else {
        (ln_choose(k, i) + ln_choose(n - k, e - i) - ln_choose(n, e)).exp()
    }
}

/// Loss distribution for `n >= k`; `n == k` is the uncoded limit used by tests.
pub(crate) fn loss_probabilities(n: usize, k: usize, ch: BecChannel) -> Vec<f64> {
    let p = n - k;
    let mut probs = vec![0.0; k + 1];
    probs[0] = (0..=p).map(|e| binomial_pmf(n, e, ch)).sum();
    for (i, slot) in probs.iter_mut().enumerate().skip(1) {
        *slot = ((p + 1).max(i)..=p + i)
            .map(|e| binomial_pmf(n, e, ch) * source_share(n, k, e, i))
            .sum();
    }
    probs
}

pub fn loss_pmf(spec: CodeSpec, ch: BecChannel) -> LossPmf {
    LossPmf {
        layout: spec.into(),
        probabilities: loss_probabilities(spec.n(), spec.k(), ch),
    }
}

pub fn plr_fec(spec: CodeSpec, ch: BecChannel) -> PlrReport {
    PlrReport::exact(loss_pmf(spec, ch).plr(), PlrMethod::Analytic)
}

/// Distribution of `J = I1 + I2` over `0..=k`, convolved over the exact
/// support `max(0, j - k2) <= e <= min(k1, j)`.
pub fn partitioned_loss_pmf(ps: PartitionSpec, ch: BecChannel) -> LossPmf {
    let first = loss_pmf(ps.first(), ch).probabilities;
    let second = loss_pmf(ps.second(), ch).probabilities;
    let (k1, k2) = (ps.first().k(), ps.second().k());
    let probabilities = (0..=k1 + k2)
        .map(|j| {
            (j.saturating_sub(k2)..=k1.min(j))
                .map(|e| first[e] * second[j - e])
                .sum()
        })
        .collect();
    LossPmf {
        layout: ps.into(),
        probabilities,
    }
}

pub fn plr_fec_part(ps: PartitionSpec, ch: BecChannel) -> PlrReport {
    let plr = partitioned_loss_pmf(ps, ch).plr();
    debug_assert!((plr - plr_fec_part_weighted(ps, ch)).abs() <= 1e-12);
    PlrReport::exact(plr, PlrMethod::Analytic)
}

/// `(k1 * PLR1 + k2 * PLR2) / k`, the same quantity by linearity of expectation.
pub fn plr_fec_part_weighted(ps: PartitionSpec, ch: BecChannel) -> f64 {
    let [a, b] = ps.halves();
    (a.k() as f64 * plr_fec(a, ch).plr + b.k() as f64 * plr_fec(b, ch).plr) / ps.parent().k() as f64
}

/// Analytic PLR of either layout.
pub fn plr(layout: Layout, ch: BecChannel) -> PlrReport {
    match layout {
        Layout::Plain(s) => plr_fec(s, ch),
        Layout::Partitioned(ps) => plr_fec_part(ps, ch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn ch(p: f64) -> BecChannel {
        BecChannel::new(p).unwrap()
    }

    fn spec(n: usize, k: usize) -> CodeSpec {
        CodeSpec::new(n, k).unwrap()
    }

    /// Exhaustive loss distribution over all `2^n` patterns of independent codes laid end to end.
    fn enumerated_pmf(codes: &[CodeSpec], p: f64) -> Vec<f64> {
        let total: usize = codes.iter().map(|c| c.n()).sum();
        let k: usize = codes.iter().map(|c| c.k()).sum();
        let mut pmf = vec![0.0; k + 1];
        for mask in 0u32..1 << total {
            let e = mask.count_ones() as i32;
            let w = p.powi(e) * (1.0 - p).powi(total as i32 - e);
            let mut lost = 0;
            let mut offset = 0;
            for c in codes {
                let erased: Vec<bool> = (0..c.n()).map(|i| mask >> (offset + i) & 1 == 1).collect();
                let survivors = erased.iter().filter(|&&x| !x).count();
                if survivors < c.k() {
                    lost += erased[..c.k()].iter().filter(|&&x| x).count();
                }
                offset += c.n();
            }
            pmf[lost] += w;
        }
        pmf
    }

    fn rational(p: f64) -> BigRational {
        BigRational::from_float(p).unwrap()
    }

    #[test]
    fn channel_rejects_out_of_range() {
        assert!(BecChannel::new(-0.1).is_err());
        assert!(BecChannel::new(1.5).is_err());
        assert!(BecChannel::new(f64::NAN).is_err());
    }

    #[test]
    fn binomial_examples() {
        for n in [1, 10, 100, 255] {
            assert_eq!(binomial_pmf(n, 0, ch(0.0)), 1.0);
        }
        assert!((binomial_pmf(4, 2, ch(0.5)) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn binomial_matches_exact_rational_oracle() {
        for (n, e, p) in [
            (44, 5, 0.01),
            (12, 7, 0.3),
            (104, 9, 0.1),
            (255, 30, 0.07),
            (80, 0, 0.05),
        ] {
            let pr = rational(p);
            let q = BigRational::one() - &pr;
            let c = choose_exact(n, e);
            let exact = BigRational::from_integer(c) * pow(&pr, e) * pow(&q, n - e);
            let exact = exact.to_f64().unwrap();
            let got = binomial_pmf(n, e, ch(p));
            assert!(
                (got - exact).abs() <= 1e-12 * exact.max(1e-300),
                "({n},{e},{p}): {got} vs {exact}"
            );
        }
    }

    fn choose_exact(n: usize, r: usize) -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..r {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    fn pow(x: &BigRational, e: usize) -> BigRational {
        (0..e).fold(BigRational::one(), |acc, _| acc * x)
    }

    #[test]
    fn choose_is_exact_in_integer_range() {
        assert_eq!(choose(60, 30), 118264581564861424.0);
        assert_eq!(choose(5, 7), 0.0);
        let big = choose(255, 127);
        let exact = choose_exact(255, 127).to_f64().unwrap();
        assert!((big - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn loss_pmf_without_erasures_is_certain() {
        let pmf = loss_pmf(spec(44, 40), ch(0.0));
        assert_eq!(pmf.probabilities[0], 1.0);
        assert!(pmf.probabilities[1..].iter().all(|&x| x == 0.0));
        assert_eq!(plr_fec(spec(44, 40), ch(0.0)).plr, 0.0);
    }

    #[test]
    fn loss_pmf_matches_enumeration() {
        for (n, k) in [(5, 4), (6, 4), (9, 3), (12, 11)] {
            for p in [0.1, 0.5, 0.93] {
                let pmf = loss_pmf(spec(n, k), ch(p));
                let oracle = enumerated_pmf(&[spec(n, k)], p);
                assert!((pmf.total() - 1.0).abs() < 1e-12);
                for (a, b) in pmf.probabilities.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-14, "C({n},{k}) p={p}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn uncoded_limit_loses_p_e() {
        for p in [0.01, 0.2, 0.7] {
            for k in [1, 5, 40, 200] {
                let probs = loss_probabilities(k, k, ch(p));
                let mean: f64 = probs.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
                assert!((mean / k as f64 - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_one_first_entry_meets_target() {
        assert!(plr_fec(spec(44, 40), ch(0.01)).plr <= 1e-5);
        assert!(plr_fec(spec(43, 40), ch(0.01)).plr > 1e-5);
    }

    #[test]
    fn large_codes_stay_normalized() {
        for (n, k) in [(104, 80), (255, 200), (255, 1), (70, 69)] {
            for p in [0.01, 0.1, 0.5] {
                let pmf = loss_pmf(spec(n, k), ch(p));
                assert!(
                    (pmf.total() - 1.0).abs() < 1e-9,
                    "C({n},{k}) p={p}: {}",
                    pmf.total()
                );
                assert!(pmf.probabilities.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn partitioned_pmf_examples() {
        let ps = PartitionSpec::split(spec(8, 6), 2).unwrap();
        assert_eq!(ps.halves(), [spec(5, 3), spec(5, 3)]);

        let zero = partitioned_loss_pmf(ps, ch(0.0));
        assert_eq!(zero.probabilities[0], 1.0);
        assert_eq!(plr_fec_part(ps, ch(0.0)).plr, 0.0);

        // (6,4) + (6,4): parent (8,8) cannot exist, use parent (10,8) with excess 2
        let ps = PartitionSpec::split(spec(10, 8), 2).unwrap();
        assert_eq!(ps.halves(), [spec(6, 4), spec(6, 4)]);
        let pmf = partitioned_loss_pmf(ps, ch(0.1));
        let oracle = enumerated_pmf(&ps.halves(), 0.1);
        for (a, b) in pmf.probabilities.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-14);
        }
        let swapped = PartitionSpec::from_halves(ps.parent(), ps.second(), ps.first()).unwrap();
        assert_eq!(
            partitioned_loss_pmf(swapped, ch(0.1)).probabilities,
            pmf.probabilities
        );

        let oracle_plr = oracle
            .iter()
            .enumerate()
            .map(|(i, x)| i as f64 * x)
            .sum::<f64>()
            / 8.0;
        assert!((plr_fec_part(ps, ch(0.1)).plr - oracle_plr).abs() <= 1e-12);
    }

    #[test]
    fn odd_split_uses_exact_support() {
        let ps = PartitionSpec::split(spec(56, 41), 0).unwrap();
        for p in [0.01, 0.1, 0.4] {
            let pmf = partitioned_loss_pmf(ps, ch(p));
            assert_eq!(pmf.probabilities.len(), 42);
            assert!((pmf.total() - 1.0).abs() < 1e-9);
            assert!((pmf.plr() - plr_fec_part_weighted(ps, ch(p))).abs() <= 1e-12);
        }
    }

    #[test]
    fn partition_costs_reliability_on_48_40() {
        let parent = spec(48, 40);
        let ps = PartitionSpec::split(parent, 0).unwrap();
        let c = ch(0.03);
        assert!(plr_fec_part(ps, c).plr >= plr_fec(parent, c).plr);
    }

    #[test]
    fn rational_cross_check_of_plr() {
        // PLR of C(6,4) at p = 1/8 computed with exact rationals straight from the enumeration
        let p = BigRational::new(BigInt::from(1), BigInt::from(8));
        let q = BigRational::one() - &p;
        let mut expected = BigRational::zero();
        for mask in 0u32..64 {
            let e = mask.count_ones() as usize;
            if 6 - e < 4 {
                let lost = (mask & 0b1111).count_ones();
                expected +=
                    pow(&p, e) * pow(&q, 6 - e) * BigRational::from_integer(BigInt::from(lost));
            }
        }
        let expected = (expected / BigRational::from_integer(BigInt::from(4)))
            .to_f64()
            .unwrap();
        assert!((plr_fec(spec(6, 4), ch(0.125)).plr - expected).abs() <= 1e-15);
    }
}
