//! Count statistics of the probing current.
//!
//! In a window short enough that the observed system keeps its state, the
//! number of transmissions `Q` in `n` probings is a two-component binomial
//! mixture. Its variance is the weighted average of the two binomial
//! variances (partition noise) plus `rho_LL rho_RR (Qbar_L - Qbar_R)^2`
//! (measurement noise). Long windows are built from independent blocks of
//! `n_max` probings.
//!
//! The brute-force enumerator in this module is the oracle for all of the
//! closed forms: it sums the frozen-state sequence probability over every one
//! of the `2^n` outcome sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::damping::one_minus_cos;
use crate::error::{Error, Result};
use crate::trajectory::sequence_probability_frozen;
use crate::types::{BarrierPair, DensityMatrix2, Regime, VarianceReport};

/// Largest window the enumerator accepts (16.7M sequences).
pub const MAX_ENUMERATION_N: usize = 24;
/// Above this window size binomial PMFs are built in log space.
pub const LOG_SPACE_THRESHOLD: usize = 10_000;
/// Accuracy domain of the small-angle relations.
pub const SMALL_ANGLE_DOMAIN: f64 = 0.3;

/// Distribution of the transmission count in a window of `n` probings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub n: usize,
    /// `pmf[q] = Prob(Q = q)`, `q = 0..=n`.
    pub pmf: Vec<f64>,
}

impl CountDistribution {
    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(q, p)| q as f64 * p)
            .sum::<f64>()
            / self.total()
    }

    /// Central second moment (two-pass, no `E[Q^2] - E[Q]^2` cancellation).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pmf
            .iter()
            .enumerate()
            .map(|(q, p)| (q as f64 - m).powi(2) * p)
            .sum::<f64>()
            / self.total()
    }
}

/// Binomial PMF with success probability `p`.
pub fn binomial_pmf(n: usize, p: f64) -> Result<CountDistribution> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!("p = {p} outside [0, 1]")));
    }
    Ok(binomial_pmf_pq(n, p, 1.0 - p))
}

/// Anchors the recurrence at the mode so no term overflows, then
/// normalizes. `q` is passed separately so callers can supply `sin^2`
/// without the `1 - p` rounding.
fn binomial_pmf_pq(n: usize, p: f64, q: f64) -> CountDistribution {
    let mut pmf = vec![0.0; n + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return CountDistribution { n, pmf };
    }
    if q <= 0.0 {
        pmf[n] = 1.0;
        return CountDistribution { n, pmf };
    }
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    if n > LOG_SPACE_THRESHOLD {
        let mut logs = vec![0.0; n + 1];
        let log_odds = (p / q).ln();
        for k in mode..n {
            logs[k + 1] = logs[k] + ((n - k) as f64 / (k + 1) as f64).ln() + log_odds;
        }
        for k in (1..=mode).rev() {
            logs[k - 1] = logs[k] + (k as f64 / (n - k + 1) as f64).ln() - log_odds;
        }
        for (v, l) in pmf.iter_mut().zip(&logs) {
            *v = l.exp();
        }
    } else {
        let odds = p / q;
        pmf[mode] = 1.0;
        for k in mode..n {
            pmf[k + 1] = pmf[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
        }
        for k in (1..=mode).rev() {
            pmf[k - 1] = pmf[k] * (k as f64 / (n - k + 1) as f64) / odds;
        }
    }
    let total: f64 = pmf.iter().sum();
    for v in &mut pmf {
        *v /= total;
    }
    CountDistribution { n, pmf }
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Precondition("window length n must be >= 1".into()));
    }
    Ok(())
}

/// `Prob(Q, n) = rho_LL B(Q; n, p_L) + rho_RR B(Q; n, p_R)`.
pub fn mixture_pmf(
    rho: &DensityMatrix2,
    barriers: &BarrierPair,
    n: usize,
) -> Result<CountDistribution> {
    check_n(n)?;
    let l = binomial_pmf_pq(n, barriers.p_l(), barriers.q_l());
    let r = binomial_pmf_pq(n, barriers.p_r(), barriers.q_r());
    let pmf = l
        .pmf
        .iter()
        .zip(&r.pmf)
        .map(|(a, b)| rho.rho_ll * a + rho.rho_rr * b)
        .collect();
    Ok(CountDistribution { n, pmf })
}

/// Closed-form count variance in the frozen (short-window) regime.
pub fn variance_short(
    rho: &DensityMatrix2,
    barriers: &BarrierPair,
    n: usize,
) -> Result<VarianceReport> {
    check_n(n)?;
    let nf = n as f64;
    let (pl, pr) = (barriers.p_l(), barriers.p_r());
    let partition =
        rho.rho_ll * nf * pl * barriers.q_l() + rho.rho_rr * nf * pr * barriers.q_r();
    let measurement = measurement_noise(rho, barriers, n)?;
    let mean_q = nf * (rho.rho_ll * pl + rho.rho_rr * pr);
    let mut report = VarianceReport::new(n, mean_q, partition, measurement, Regime::Short);
    report.paper_normalized_total = Some(report.var_total);
    Ok(report)
}

/// Result of enumerating every outcome sequence of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub report: VarianceReport,
    pub pmf: CountDistribution,
    pub total_probability: f64,
}

/// Exact mean and variance of `Q` by summing
/// [`sequence_probability_frozen`] over all `2^n` sequences.
pub fn brute_force_variance(
    rho: &DensityMatrix2,
    barriers: &BarrierPair,
    n: usize,
) -> Result<BruteForce> {
    check_n(n)?;
    if n > MAX_ENUMERATION_N {
        return Err(Error::EnumerationBound {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    const CHUNK: u64 = 1 << 14;
    let total = 1u64 << n;
    let chunks: Vec<u64> = (0..total).step_by(CHUNK as usize).collect();
    let pure_l = DensityMatrix2::pure_l();
    let pure_r = DensityMatrix2::pure_r();

    let partial: Vec<[Vec<f64>; 3]> = chunks
        .into_par_iter()
        .map(|lo| {
            let mut mix = vec![0.0; n + 1];
            let mut left = vec![0.0; n + 1];
            let mut right = vec![0.0; n + 1];
            let mut bits = vec![0u8; n];
            for mask in lo..(lo + CHUNK).min(total) {
                for (i, b) in bits.iter_mut().enumerate() {
                    *b = ((mask >> i) & 1) as u8;
                }
                let q = mask.count_ones() as usize;
                mix[q] += sequence_probability_frozen(rho, barriers, &bits)?;
                left[q] += sequence_probability_frozen(&pure_l, barriers, &bits)?;
                right[q] += sequence_probability_frozen(&pure_r, barriers, &bits)?;
            }
            Ok([mix, left, right])
        })
        .collect::<Result<_>>()?;

    let mut hist = [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]];
    for part in &partial {
        for (acc, src) in hist.iter_mut().zip(part) {
            for (a, s) in acc.iter_mut().zip(src) {
                *a += s;
            }
        }
    }
    let [mix, left, right] = hist;
    let mix = CountDistribution { n, pmf: mix };
    let left = CountDistribution { n, pmf: left };
    let right = CountDistribution { n, pmf: right };
    let total_probability = mix.total();
    let var_total = mix.variance();
    let var_partition = rho.rho_ll * left.variance() + rho.rho_rr * right.variance();
    let report = VarianceReport {
        n,
        mean_q: mix.mean(),
        var_total,
        var_partition,
        var_measurement: var_total - var_partition,
        regime: Regime::Short,
        paper_normalized_total: None,
    };
    Ok(BruteForce {
        report,
        pmf: mix,
        total_probability,
    })
}

/// Long-window variance for the relaxed state (`rho_LL = 1/2`), composed of
/// `n / n_max` independent blocks each carrying the short-window variance at
/// `n = n_max`:
/// `[(p_L q_L + p_R q_R)/2 + (p_L - p_R)^2 n_max / 4] n`.
///
/// `paper_normalized_total` holds `[(p_L + p_R)/2 + (p_L - p_R)^2 n_max / 4] n`.
pub fn variance_long(barriers: &BarrierPair, n: usize, n_max: usize) -> Result<VarianceReport> {
    if n_max < 1 {
        return Err(Error::Precondition("n_max must be >= 1".into()));
    }
    if n < n_max {
        return Err(Error::Precondition(format!(
            "long-window variance needs n >= n_max, got n = {n} < n_max = {n_max}"
        )));
    }
    let block = variance_short(&DensityMatrix2::relaxed(), barriers, n_max)?;
    let blocks = n as f64 / n_max as f64;
    let mut report = VarianceReport::new(
        n,
        block.mean_q * blocks,
        block.var_partition * blocks,
        block.var_measurement * blocks,
        Regime::Long,
    );
    let dp = barriers.analyzing_power();
    report.paper_normalized_total =
        Some((barriers.mean_transmission() + dp * dp / 4.0 * n_max as f64) * n as f64);
    Ok(report)
}

/// `V_M = rho_LL (1 - rho_LL) (n p_L - n p_R)^2`.
pub fn measurement_noise(rho: &DensityMatrix2, barriers: &BarrierPair, n: usize) -> Result<f64> {
    check_n(n)?;
    let gap = n as f64 * barriers.analyzing_power();
    Ok(rho.rho_ll * rho.rho_rr * gap * gap)
}

/// Lowest-order estimate `4 p (1 - p) n^2 delta_theta^2` of
/// `(Qbar_L - Qbar_R)^2`, `p` the mean transmission. Accurate for
/// `|delta_theta| <= 0.3`.
pub fn measurement_noise_small_angle(barriers: &BarrierPair, n: usize) -> Result<f64> {
    check_n(n)?;
    let p = barriers.mean_transmission();
    let nf = n as f64;
    let d = barriers.delta_theta();
    Ok(4.0 * p * (1.0 - p) * nf * nf * d * d)
}

/// Long-window side of the decoherence/fluctuation comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRelation {
    pub n_max: usize,
    /// Block-composed `V_M = n n_max (p_L - p_R)^2 / 4`.
    pub v_m: f64,
    /// `V_M / (n n_max D / flux)`.
    pub ratio: Option<f64>,
    /// `p (1 - p) n_max n D / flux`.
    pub paper_normalized: f64,
}

/// Comparison of measurement noise and decoherence rate at `rho_LL = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub n: usize,
    pub flux: f64,
    pub delta_theta: f64,
    /// False when `|delta_theta|` is outside the small-angle domain.
    pub in_domain: bool,
    /// Exact `V_M` from the mixture.
    pub v_m: f64,
    pub damping: f64,
    /// `rho_LL rho_RR sin^2(theta_L + theta_R) n^2 delta_theta^2`.
    pub leading_order: f64,
    /// `V_M / (n^2 D / flux)`; `None` when `D = 0`.
    pub ratio: Option<f64>,
    pub leading_ratio: Option<f64>,
    /// `p (1 - p) n^2 D / flux`.
    pub paper_normalized: f64,
    pub long: Option<LongRelation>,
}

impl RelationReport {
    /// `|V_M - leading_order| / V_M`; zero when both vanish.
    pub fn leading_residual(&self) -> f64 {
        if self.v_m == 0.0 {
            self.leading_order.abs()
        } else {
            (self.v_m - self.leading_order).abs() / self.v_m
        }
    }
}

/// Evaluates measurement noise and the decoherence rate side by side for
/// the relaxed state.
pub fn decoherence_fluctuation_check(
    barriers: &BarrierPair,
    flux: f64,
    n: usize,
    n_max: Option<usize>,
) -> Result<RelationReport> {
    check_n(n)?;
    let damping = crate::damping::damping_rate(barriers, flux)?;
    let rho = DensityMatrix2::relaxed();
    let v_m = measurement_noise(&rho, barriers, n)?;
    let nf = n as f64;
    let d = barriers.delta_theta();
    let sum = barriers.theta_l() + barriers.theta_r();
    let leading_order = rho.rho_ll * rho.rho_rr * sum.sin().powi(2) * nf * nf * d * d;
    let scale = nf * nf * damping / flux;
    let ratio_of = |x: f64, s: f64| (s > 0.0).then(|| x / s);
    let p = barriers.mean_transmission();
    let long = match n_max {
        None => None,
        Some(n_max) => {
            let dp = barriers.analyzing_power();
            // n / n_max independent blocks, each with V_M at n = n_max
            let v_m_long = 0.25 * nf * n_max as f64 * dp * dp;
            let long_scale = nf * n_max as f64 * damping / flux;
            Some(LongRelation {
                n_max,
                v_m: v_m_long,
                ratio: ratio_of(v_m_long, long_scale),
                paper_normalized: p * (1.0 - p) * long_scale,
            })
        }
    };
    Ok(RelationReport {
        n,
        flux,
        delta_theta: d,
        in_domain: d.abs() <= SMALL_ANGLE_DOMAIN,
        v_m,
        damping,
        leading_order,
        ratio: ratio_of(v_m, scale),
        leading_ratio: ratio_of(leading_order, scale),
        paper_normalized: p * (1.0 - p) * scale,
        long,
    })
}

/// Largest relative spread of `V_M / (n^2 D / flux)` across the given
/// window lengths. Zero when `D = 0`.
pub fn relation_ratio_spread(barriers: &BarrierPair, flux: f64, ns: &[usize]) -> Result<f64> {
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| decoherence_fluctuation_check(barriers, flux, n, None).map(|r| r.ratio))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(relative_spread(&ratios))
}

/// `(max - min) / |mean|` of a slice, 0 for fewer than two values.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        max - min
    } else {
        (max - min) / mean.abs()
    }
}

/// Small-angle exact ratio `V_M / (n^2 D / flux)` in closed form:
/// `rho_LL rho_RR sin^2(theta_L + theta_R) sin^2(delta) / (1 - cos delta)`.
pub fn exact_relation_ratio(barriers: &BarrierPair) -> Option<f64> {
    let d = barriers.delta_theta();
    let denom = one_minus_cos(d);
    let sum = barriers.theta_l() + barriers.theta_r();
    (denom > 0.0).then(|| 0.25 * sum.sin().powi(2) * d.sin().powi(2) / denom)
}

/// Sample variance with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackknifeEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

/// Unbiased sample variance and its delete-one jackknife standard error,
/// in `O(len)` using the downdating identity for the sum of squares.
pub fn jackknife_variance(samples: &[f64]) -> Result<JackknifeEstimate> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "jackknife needs at least 3 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    let variance = ss / (nf - 1.0);
    let loo: Vec<f64> = samples
        .iter()
        .map(|x| (ss - (x - mean).powi(2) * nf / (nf - 1.0)) / (nf - 2.0))
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / nf;
    let spread: f64 = loo.iter().map(|v| (v - loo_mean).powi(2)).sum();
    Ok(JackknifeEstimate {
        mean,
        variance,
        std_error: ((nf - 1.0) / nf * spread).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::rng::stream_rng;

    fn rel(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    fn worked_example() -> (DensityMatrix2, BarrierPair) {
        (
            DensityMatrix2::diagonal(0.5).unwrap(),
            BarrierPair::from_probabilities(0.8, 0.2).unwrap(),
        )
    }

    #[test]
    fn binomial_matches_direct_formula() {
        for &(n, p) in &[(1usize, 0.3), (12, 0.8), (30, 0.05), (50, 0.5)] {
            let d = binomial_pmf(n, p).unwrap();
            for k in 0..=n {
                let direct =
                    choose(n as u64, k as u64) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
                assert!(rel(d.pmf[k], direct) < 1e-12, "n={n} k={k}");
            }
        }
        assert_eq!(binomial_pmf(4, 0.0).unwrap().pmf, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(2, 1.0).unwrap().pmf, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn large_windows_stay_normalized() {
        for &n in &[20_000usize, 1_000_000] {
            let d = binomial_pmf(n, 0.37).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12);
            assert!(rel(d.mean(), 0.37 * n as f64) < 1e-10);
            assert!(rel(d.variance(), 0.37 * 0.63 * n as f64) < 1e-8);
        }
        // both branches agree at the crossover
        let a = binomial_pmf_pq(LOG_SPACE_THRESHOLD, 0.2, 0.8);
        let b = binomial_pmf_pq(LOG_SPACE_THRESHOLD + 1, 0.2, 0.8);
        assert!(rel(a.variance() / 10_000.0, b.variance() / 10_001.0) < 1e-9);
    }

    #[test]
    fn mixture_examples() {
        let b = BarrierPair::new(0.6, 1.0).unwrap();
        let m = mixture_pmf(&DensityMatrix2::pure_l(), &b, 9).unwrap();
        let bin = binomial_pmf(9, b.p_l()).unwrap();
        for (x, y) in m.pmf.iter().zip(&bin.pmf) {
            assert!(rel(*x, *y) < 1e-12);
        }
        let (rho, b) = worked_example();
        let m = mixture_pmf(&rho, &b, 1).unwrap();
        assert!((m.pmf[0] - 0.5).abs() < 1e-12 && (m.pmf[1] - 0.5).abs() < 1e-12);
        let m = mixture_pmf(&rho, &b, 2).unwrap();
        assert!((m.pmf[2] - 0.34).abs() < 1e-12);
    }

    #[test]
    fn variance_short_examples() {
        let b = BarrierPair::from_probabilities(0.3, 0.3).unwrap();
        let r = variance_short(&DensityMatrix2::diagonal(0.4).unwrap(), &b, 20).unwrap();
        assert!(r.var_measurement.abs() < 1e-28);
        assert!((r.var_total - 20.0 * 0.3 * 0.7).abs() < 1e-12);

        let b = BarrierPair::from_probabilities(0.8, 0.2).unwrap();
        let r = variance_short(&DensityMatrix2::pure_l(), &b, 20).unwrap();
        assert_eq!(r.var_measurement, 0.0);

        let (rho, b) = worked_example();
        let r = variance_short(&rho, &b, 10).unwrap();
        assert!((r.var_partition - 1.6).abs() < 1e-12);
        assert!((r.var_measurement - 9.0).abs() < 1e-12);
        assert!((r.var_total - 10.6).abs() < 1e-12);
    }

    #[test]
    fn brute_force_examples() {
        let b = BarrierPair::new(0.3, 0.9).unwrap();
        let rho = DensityMatrix2::diagonal(0.35).unwrap();
        let bf = brute_force_variance(&rho, &b, 1).unwrap();
        let m = 0.35 * b.p_l() + 0.65 * b.p_r();
        assert!(rel(bf.report.var_total, m * (1.0 - m)) < 1e-12);

        let (rho, b) = worked_example();
        let bf = brute_force_variance(&rho, &b, 10).unwrap();
        assert!((bf.report.var_total - 10.6).abs() < 1e-10);
        assert!((bf.report.var_partition - 1.6).abs() < 1e-10);
        assert!((bf.total_probability - 1.0).abs() < 1e-12);

        assert!(matches!(
            brute_force_variance(&rho, &b, 25),
            Err(Error::EnumerationBound { n: 25, .. })
        ));
    }

    #[test]
    fn oracle_agreement_on_random_grid() {
        let mut rng = stream_rng(2024, 0);
        for _ in 0..40 {
            let rho = DensityMatrix2::diagonal(rng.random()).unwrap();
            let b = BarrierPair::new(
                rng.random::<f64>() * std::f64::consts::FRAC_PI_2,
                rng.random::<f64>() * std::f64::consts::FRAC_PI_2,
            )
            .unwrap();
            for n in 1..=10 {
                let exact = variance_short(&rho, &b, n).unwrap();
                let bf = brute_force_variance(&rho, &b, n).unwrap();
                assert!((bf.total_probability - 1.0).abs() < 1e-12);
                assert!(rel(exact.var_total, bf.report.var_total) < 1e-10);
                assert!(rel(exact.mean_q, bf.report.mean_q) < 1e-12);
                let pmf = mixture_pmf(&rho, &b, n).unwrap();
                for (x, y) in pmf.pmf.iter().zip(&bf.pmf.pmf) {
                    assert!(rel(*x, *y) < 1e-10);
                }
                // law of total variance
                assert!(exact.var_total >= exact.var_partition);
            }
        }
    }

    #[test]
    fn long_window_examples() {
        let b = BarrierPair::from_probabilities(0.3, 0.3).unwrap();
        for n_max in [1, 7, 50] {
            let r = variance_long(&b, 700, n_max).unwrap();
            assert!(rel(r.var_total, 700.0 * 0.3 * 0.7) < 1e-12);
        }
        let b = BarrierPair::from_probabilities(0.8, 0.2).unwrap();
        let r = variance_long(&b, 10_000, 100).unwrap();
        assert!(rel(r.var_total, 9.16e4) < 1e-12);
        assert!(rel(r.paper_normalized_total.unwrap(), 9.5e4) < 1e-12);
        let r2 = variance_long(&b, 20_000, 100).unwrap();
        assert!(rel(r2.var_total, 2.0 * r.var_total) < 1e-12);
        assert!(variance_long(&b, 99, 100).is_err());
        // block construction is continuous with the short form at n = n_max
        let s = variance_short(&DensityMatrix2::relaxed(), &b, 100).unwrap();
        assert!(rel(variance_long(&b, 100, 100).unwrap().var_total, s.var_total) < 1e-12);
    }

    #[test]
    fn measurement_noise_examples() {
        let b = BarrierPair::from_probabilities(0.8, 0.2).unwrap();
        assert_eq!(measurement_noise(&DensityMatrix2::pure_l(), &b, 10).unwrap(), 0.0);
        assert_eq!(measurement_noise(&DensityMatrix2::pure_r(), &b, 10).unwrap(), 0.0);
        let same = BarrierPair::new(0.4, 0.4).unwrap();
        assert_eq!(measurement_noise(&DensityMatrix2::relaxed(), &same, 10).unwrap(), 0.0);
        let v = measurement_noise(&DensityMatrix2::relaxed(), &b, 10).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn small_angle_examples() {
        let b = BarrierPair::new(0.3, 0.3).unwrap();
        assert_eq!(measurement_noise_small_angle(&b, 5).unwrap(), 0.0);
        let q = std::f64::consts::FRAC_PI_4;
        let b = BarrierPair::new(q + 0.025, q - 0.025).unwrap();
        let approx = measurement_noise_small_angle(&b, 1).unwrap();
        assert!(rel(approx, 2.5e-3) < 1e-12);
        let exact = b.analyzing_power().powi(2);
        assert!(rel(exact, 0.05f64.sin().powi(2)) < 1e-12);
        assert!(rel(exact, 2.4979e-3) < 1e-4);
        assert!(rel(approx, exact) < 1e-3);
        let a10 = measurement_noise_small_angle(&b, 10).unwrap();
        assert!(rel(a10, 100.0 * approx) < 1e-14);
    }

    #[test]
    fn relation_examples() {
        let b = BarrierPair::new(0.6, 0.6).unwrap();
        let r = decoherence_fluctuation_check(&b, 1.0, 100, None).unwrap();
        assert_eq!((r.v_m, r.damping), (0.0, 0.0));
        assert!(r.ratio.is_none());

        let q = std::f64::consts::FRAC_PI_4;
        let b = BarrierPair::new(q + 0.025, q - 0.025).unwrap();
        let r = decoherence_fluctuation_check(&b, 1.0, 100, Some(10)).unwrap();
        assert!(rel(r.v_m, 0.25 * 0.05f64.sin().powi(2) * 1e4) < 1e-12);
        assert!(rel(r.v_m, 6.2448) < 1e-4);
        // 1e4 (1 - cos 0.05) = 12.49740
        assert!(rel(r.damping * 1e4, 12.4974) < 1e-5);
        let ratio = r.ratio.unwrap();
        // sin^2(d) / (4 (1 - cos d)) = (1 + cos d) / 4
        assert!(rel(ratio, 0.25 * (1.0 + 0.05f64.cos())) < 1e-12);
        assert!(rel(ratio, 0.499687) < 1e-5);
        assert!(rel(ratio, exact_relation_ratio(&b).unwrap()) < 1e-12);
        let long = r.long.unwrap();
        assert!(rel(long.ratio.unwrap(), ratio) < 1e-12);
        assert!(relation_ratio_spread(&b, 1.0, &[10, 100, 1000]).unwrap() < 1e-12);
        assert!(relation_ratio_spread(&b, 3.7, &[10]).unwrap() == 0.0);
        assert!(r.in_domain && r.leading_residual() < 1e-3);
    }

    fn naive_jackknife(x: &[f64]) -> f64 {
        let var = |s: &[f64]| {
            let m = s.iter().sum::<f64>() / s.len() as f64;
            s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64
        };
        let n = x.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let v: Vec<f64> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                var(&v)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / n as f64;
        ((n - 1) as f64 / n as f64 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
    }

    #[test]
    fn jackknife_matches_naive() {
        let mut rng = stream_rng(5, 1);
        let x: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 10.0).collect();
        let j = jackknife_variance(&x).unwrap();
        assert!(rel(j.std_error, naive_jackknife(&x)) < 1e-9);
        assert!(jackknife_variance(&[1.0, 2.0]).is_err());
    }
}
