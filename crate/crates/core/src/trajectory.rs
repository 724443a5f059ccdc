//! Probing-outcome sequences.
//!
//! Two views of the same process live here. The frozen-state formula gives
//! the probability of a whole transmission/reflection sequence when the
//! observed system cannot change state during the window. The conditional
//! simulator realizes the same statistics by repeated collapse: each probing
//! applies one of two diagonal Kraus operators, and between probings the
//! state rotates under `V` for a time `1/flux`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bloch::rotate;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::{
    BarrierPair, DensityMatrix2, HamiltonianVector, PolarizationVector, StreamId,
    TrajectoryRecord, EXACT_TOL,
};

/// Smallest outcome probability we are willing to condition on.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-300;

/// Streams per reduction chunk. Fixed so sums do not depend on thread count.
const REDUCTION_CHUNK: usize = 64;

/// Diagonal measurement operators `diag(cos theta_L, cos theta_R)` and
/// `diag(sin theta_L, sin theta_R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrausPair {
    pub m_transmit: [f64; 2],
    pub m_reflect: [f64; 2],
}

impl KrausPair {
    pub fn from_barriers(b: &BarrierPair) -> Self {
        Self {
            m_transmit: [b.theta_l().cos(), b.theta_r().cos()],
            m_reflect: [b.theta_l().sin(), b.theta_r().sin()],
        }
    }

    /// Largest deviation of `M_t^dag M_t + M_r^dag M_r` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        (0..2)
            .map(|i| (self.m_transmit[i].powi(2) + self.m_reflect[i].powi(2) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn operator(&self, outcome: u8) -> [f64; 2] {
        if outcome == 1 {
            self.m_transmit
        } else {
            self.m_reflect
        }
    }
}

/// Probability of a full outcome sequence when the observed state is frozen:
/// `rho_LL * prod(L factors) + rho_RR * prod(R factors)`, with factor `p`
/// for a transmission and `q` for a reflection.
pub fn sequence_probability_frozen(
    rho: &DensityMatrix2,
    barriers: &BarrierPair,
    bits: &[u8],
) -> Result<f64> {
    if bits.is_empty() {
        return Err(Error::Precondition("outcome sequence must be nonempty".into()));
    }
    let (pl, ql, pr, qr) = (barriers.p_l(), barriers.q_l(), barriers.p_r(), barriers.q_r());
    let mut left = rho.rho_ll;
    let mut right = rho.rho_rr;
    for &b in bits {
        match b {
            1 => {
                left *= pl;
                right *= pr;
            }
            0 => {
                left *= ql;
                right *= qr;
            }
            other => {
                return Err(Error::Precondition(format!("outcome {other} is not 0 or 1")));
            }
        }
    }
    Ok(left + right)
}

/// Applies the Kraus operator for `outcome` and renormalizes.
///
/// Returns the conditional state and the outcome probability
/// `tr(M rho M^dag)`.
pub fn kraus_update(
    rho: &DensityMatrix2,
    kraus: &KrausPair,
    outcome: u8,
) -> Result<(DensityMatrix2, f64)> {
    if outcome > 1 {
        return Err(Error::Precondition(format!("outcome {outcome} is not 0 or 1")));
    }
    let [a, b] = kraus.operator(outcome);
    let ll = a * a * rho.rho_ll;
    let rr = b * b * rho.rho_rr;
    let prob = ll + rr;
    if !(prob >= MIN_OUTCOME_PROBABILITY) {
        return Err(Error::DegenerateConditioning(prob));
    }
    let state = DensityMatrix2 {
        rho_ll: ll / prob,
        rho_rr: rr / prob,
        rho_lr: rho.rho_lr * (a * b / prob),
    };
    Ok((state, prob))
}

/// Outcome-averaged map `sum_k M_k rho M_k^dag`. Leaves the diagonal alone and
/// multiplies the coherence by `cos(delta_theta)`.
pub fn unconditioned_probe(rho: &DensityMatrix2, kraus: &KrausPair) -> DensityMatrix2 {
    let [tl, tr] = kraus.m_transmit;
    let [rl, rr] = kraus.m_reflect;
    DensityMatrix2 {
        rho_ll: (tl * tl + rl * rl) * rho.rho_ll,
        rho_rr: (tr * tr + rr * rr) * rho.rho_rr,
        rho_lr: rho.rho_lr * (tl * tr + rl * rr),
    }
}

/// Monte Carlo plan for an ensemble of trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub n: usize,
    pub ensemble: usize,
    pub barriers: BarrierPair,
    pub initial: DensityMatrix2,
    /// Free evolution applied for `1/flux` before every probing.
    pub v: HamiltonianVector,
    pub flux: f64,
    pub master_seed: u64,
    /// Keep the conditional state after every probing.
    pub record_states: bool,
}

impl SimPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Precondition("n must be >= 1".into()));
        }
        if self.ensemble < 1 {
            return Err(Error::Precondition("ensemble must be >= 1".into()));
        }
        if !(self.flux.is_finite() && self.flux > 0.0) {
            return Err(Error::Precondition(format!("flux = {} must be > 0", self.flux)));
        }
        if !self.v.is_finite() {
            return Err(Error::Precondition("hamiltonian vector must be finite".into()));
        }
        self.initial.validate()
    }
}

fn free_step(rho: &DensityMatrix2, v: &HamiltonianVector, tau: f64) -> DensityMatrix2 {
    if v.norm() == 0.0 {
        return *rho;
    }
    let p = PolarizationVector::new(
        2.0 * rho.rho_lr.re,
        -2.0 * rho.rho_lr.im,
        rho.rho_ll - rho.rho_rr,
    );
    let p = rotate(p, v, tau);
    DensityMatrix2 {
        rho_ll: 0.5 * (1.0 + p.pz),
        rho_rr: 0.5 * (1.0 - p.pz),
        rho_lr: Complex64::new(0.5 * p.px, -0.5 * p.py),
    }
}

/// Runs the conditional state forward, calling `visit` with the outcome
/// and the post-measurement state after every probing.
fn drive<F>(plan: &SimPlan, stream_index: u64, mut visit: F) -> Result<()>
where
    F: FnMut(u8, &DensityMatrix2),
{
    let kraus = KrausPair::from_barriers(&plan.barriers);
    let tau = 1.0 / plan.flux;
    let mut rng = stream_rng(plan.master_seed, stream_index);
    let mut rho = plan.initial;
    for _ in 0..plan.n {
        rho = free_step(&rho, &plan.v, tau);
        let [tl, tr] = kraus.m_transmit;
        let p_transmit = tl * tl * rho.rho_ll + tr * tr * rho.rho_rr;
        let u: f64 = rng.random();
        let outcome = u8::from(u < p_transmit);
        let (next, _) = kraus_update(&rho, &kraus, outcome)?;
        rho = next;
        visit(outcome, &rho);
    }
    Ok(())
}

/// One trajectory, fully determined by `(plan.master_seed, stream_index)`.
pub fn simulate_trajectory(plan: &SimPlan, stream_index: u64) -> Result<TrajectoryRecord> {
    plan.validate()?;
    let mut bits = Vec::with_capacity(plan.n);
    let mut states = plan.record_states.then(|| Vec::with_capacity(plan.n));
    drive(plan, stream_index, |bit, rho| {
        bits.push(bit);
        if let Some(s) = states.as_mut() {
            s.push(*rho);
        }
    })?;
    Ok(TrajectoryRecord {
        bits,
        states,
        seed: StreamId {
            master_seed: plan.master_seed,
            stream_index,
        },
    })
}

/// All `plan.ensemble` trajectories, in stream order.
pub fn simulate_ensemble(plan: &SimPlan) -> Result<Vec<TrajectoryRecord>> {
    plan.validate()?;
    (0..plan.ensemble as u64)
        .into_par_iter()
        .map(|k| simulate_trajectory(plan, k))
        .collect()
}

/// Transmission count `Q` of every trajectory, in stream order.
pub fn ensemble_counts(plan: &SimPlan) -> Result<Vec<usize>> {
    plan.validate()?;
    (0..plan.ensemble as u64)
        .into_par_iter()
        .map(|k| count_transmissions(plan, k))
        .collect()
}

/// Transmission count of a single trajectory, without storing its record.
pub fn count_transmissions(plan: &SimPlan, stream_index: u64) -> Result<usize> {
    plan.validate()?;
    let mut q = 0usize;
    drive(plan, stream_index, |bit, _| q += bit as usize)?;
    Ok(q)
}

/// A maximal block of identical bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub bit: u8,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthStats {
    pub window: usize,
    pub runs: Vec<Run>,
    /// run length -> number of runs
    pub histogram: BTreeMap<usize, usize>,
    /// Mean run length in probings; the empirical `N_max`.
    pub mean_run_length: f64,
}

impl RunLengthStats {
    /// Runs not touching either end of the record (those are censored).
    /// Falls back to all runs when there are fewer than three.
    pub fn interior_runs(&self) -> &[Run] {
        if self.runs.len() < 3 {
            &self.runs
        } else {
            &self.runs[1..self.runs.len() - 1]
        }
    }
}

/// Majority vote over a centered window of `window` bits; ties keep the
/// original bit.
pub fn majority_smooth(bits: &[u8], window: usize) -> Result<Vec<u8>> {
    if window == 0 || window > bits.len() {
        return Err(Error::Precondition(format!(
            "window {window} must be in 1..={}",
            bits.len()
        )));
    }
    let mut prefix = Vec::with_capacity(bits.len() + 1);
    prefix.push(0usize);
    for &b in bits {
        prefix.push(prefix.last().unwrap() + b as usize);
    }
    let left = (window - 1) / 2;
    let right = window / 2;
    Ok((0..bits.len())
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right + 1).min(bits.len());
            let ones = 2 * (prefix[hi] - prefix[lo]);
            let len = hi - lo;
            match ones.cmp(&len) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => bits[i],
            }
        })
        .collect())
}

pub fn runs_of(bits: &[u8]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (i, &b) in bits.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.bit == b => r.len += 1,
            _ => runs.push(Run {
                bit: b,
                start: i,
                len: 1,
            }),
        }
    }
    runs
}

/// Smooths the record, splits it into runs and summarizes their lengths.
pub fn run_length_stats(record: &TrajectoryRecord, window: usize) -> Result<RunLengthStats> {
    if record.is_empty() {
        return Err(Error::Precondition("record is empty".into()));
    }
    let smoothed = majority_smooth(&record.bits, window)?;
    let runs = runs_of(&smoothed);
    let mut histogram = BTreeMap::new();
    for r in &runs {
        *histogram.entry(r.len).or_insert(0) += 1;
    }
    let mean_run_length = record.len() as f64 / runs.len() as f64;
    Ok(RunLengthStats {
        window,
        runs,
        histogram,
        mean_run_length,
    })
}

/// Run-length summary pooled over an ensemble of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelegraphSummary {
    pub window: usize,
    pub records: usize,
    /// Interior (uncensored) run lengths from every record, in stream order.
    pub interior_lengths: Vec<usize>,
    /// Mean interior run length: the empirical `N_max`.
    pub empirical_n_max: f64,
}

/// Smooths every record with `window` and pools the uncensored runs.
pub fn telegraph_summary(records: &[TrajectoryRecord], window: usize) -> Result<TelegraphSummary> {
    let mut interior_lengths = Vec::new();
    for r in records {
        let stats = run_length_stats(r, window)?;
        if stats.runs.len() >= 3 {
            interior_lengths.extend(stats.interior_runs().iter().map(|run| run.len));
        }
    }
    if interior_lengths.is_empty() {
        return Err(Error::Precondition(
            "no record switched often enough to yield an uncensored run".into(),
        ));
    }
    let empirical_n_max =
        interior_lengths.iter().sum::<usize>() as f64 / interior_lengths.len() as f64;
    Ok(TelegraphSummary {
        window,
        records: records.len(),
        interior_lengths,
        empirical_n_max,
    })
}

/// Chi-square goodness of fit of run lengths to a geometric law on
/// `{min_len, min_len + 1, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub samples: usize,
    pub min_len: usize,
    /// Fitted mean of `len - min_len`.
    pub mean_excess: f64,
    /// Per-probing switching probability.
    pub switch_probability: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bin edges (inclusive lower bounds); the last bin is open.
    pub bin_edges: Vec<usize>,
    pub observed: Vec<usize>,
    pub expected: Vec<f64>,
}

impl GeometricFit {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Fits a geometric law by maximum likelihood and bins it into up to
/// `max_bins` roughly equiprobable bins. Requires at least 50 samples at or
/// above `min_len`.
pub fn fit_geometric(lengths: &[usize], min_len: usize, max_bins: usize) -> Result<GeometricFit> {
    let excess: Vec<usize> = lengths
        .iter()
        .filter(|&&l| l >= min_len)
        .map(|&l| l - min_len)
        .collect();
    let n = excess.len();
    if n < 50 {
        return Err(Error::Precondition(format!(
            "need at least 50 runs of length >= {min_len}, got {n}"
        )));
    }
    let mean_excess = excess.iter().sum::<usize>() as f64 / n as f64;
    let s = 1.0 / (1.0 + mean_excess);
    let stay = 1.0 - s;
    // survival P(X >= k) = stay^k
    let bins = max_bins.min(n / 10).max(3);
    let mut edges = vec![0usize];
    for j in 1..bins {
        let q = 1.0 - j as f64 / bins as f64;
        let k = (q.ln() / stay.ln()).ceil() as usize;
        if k > *edges.last().unwrap() {
            edges.push(k);
        }
    }
    if edges.len() < 3 {
        return Err(Error::Precondition("run lengths too short to bin".into()));
    }
    let mut observed = vec![0usize; edges.len()];
    for &x in &excess {
        let idx = edges.partition_point(|&e| e <= x) - 1;
        observed[idx] += 1;
    }
    let expected: Vec<f64> = (0..edges.len())
        .map(|i| {
            let lo = stay.powi(edges[i] as i32);
            let hi = edges.get(i + 1).map_or(0.0, |&e| stay.powi(e as i32));
            n as f64 * (lo - hi)
        })
        .collect();
    let chi_square: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = edges.len() - 2;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(chi_square);
    Ok(GeometricFit {
        samples: n,
        min_len,
        mean_excess,
        switch_probability: s,
        chi_square,
        dof,
        p_value,
        bin_edges: edges.iter().map(|&e| e + min_len).collect(),
        observed,
        expected,
    })
}

/// Ensemble-averaged coherence decay under probing alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceDecay {
    /// `|<rho_lr>|` after `k` probings, `k = 0..=n`.
    pub coherence: Vec<f64>,
    /// Least-squares rate per unit time from `ln |<rho_lr>|` vs time.
    pub fitted_rate: f64,
    /// Exact discrete rate `-flux ln(cos delta_theta)`.
    pub predicted_rate: f64,
    /// Continuum rate `flux (1 - cos delta_theta)`.
    pub damping_rate: f64,
}

/// Simulates `plan` with `V = 0` and fits the decay of the ensemble-mean
/// coherence. Returns an infinite rate when coherence is destroyed in one
/// probing.
pub fn ensemble_coherence_decay(plan: &SimPlan) -> Result<CoherenceDecay> {
    plan.validate()?;
    if plan.v.norm() != 0.0 {
        return Err(Error::Precondition(
            "coherence decay fit needs V = 0 between probings".into(),
        ));
    }
    let c0 = plan.initial.rho_lr;
    if c0.norm() == 0.0 {
        return Err(Error::Precondition("initial state has zero coherence".into()));
    }
    let n = plan.n;
    let chunks: Vec<(u64, u64)> = (0..plan.ensemble as u64)
        .step_by(REDUCTION_CHUNK)
        .map(|lo| (lo, (lo + REDUCTION_CHUNK as u64).min(plan.ensemble as u64)))
        .collect();
    let partial: Vec<Vec<Complex64>> = chunks
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for k in lo..hi {
                let mut i = 0;
                drive(plan, k, |_, rho| {
                    acc[i] += rho.rho_lr;
                    i += 1;
                })?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![Complex64::new(0.0, 0.0); n];
    for chunk in &partial {
        for (s, c) in sum.iter_mut().zip(chunk) {
            *s += c;
        }
    }
    let m = plan.ensemble as f64;
    let mut coherence = Vec::with_capacity(n + 1);
    coherence.push(c0.norm());
    coherence.extend(sum.iter().map(|s| (s / m).norm()));

    let tau = 1.0 / plan.flux;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (k, &c) in coherence.iter().enumerate().skip(1) {
        // coherence below rounding level counts as destroyed
        if c <= EXACT_TOL * coherence[0] {
            break;
        }
        let t = k as f64 * tau;
        stt += t * t;
        sty += t * (c / coherence[0]).ln();
    }
    let fitted_rate = if stt == 0.0 { f64::INFINITY } else { -sty / stt };
    let cos_d = plan.barriers.delta_theta().cos();
    let predicted_rate = if cos_d <= EXACT_TOL {
        f64::INFINITY
    } else {
        -plan.flux * cos_d.ln()
    };
    Ok(CoherenceDecay {
        coherence,
        fitted_rate,
        predicted_rate,
        damping_rate: plan.flux * crate::damping::one_minus_cos(plan.barriers.delta_theta()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn plan(barriers: BarrierPair, initial: DensityMatrix2, n: usize, ensemble: usize) -> SimPlan {
        SimPlan {
            n,
            ensemble,
            barriers,
            initial,
            v: HamiltonianVector::zero(),
            flux: 1.0,
            master_seed: 11,
            record_states: false,
        }
    }

    fn superposition() -> DensityMatrix2 {
        DensityMatrix2::new(0.5, 0.5, Complex64::new(0.5, 0.0)).unwrap()
    }

    #[test]
    fn single_probing_probability() {
        let b = BarrierPair::new(0.3, 1.1).unwrap();
        let rho = DensityMatrix2::diagonal(0.3).unwrap();
        let p = sequence_probability_frozen(&rho, &b, &[1]).unwrap();
        assert!((p - (0.3 * b.p_l() + 0.7 * b.p_r())).abs() < 1e-15);
    }

    #[test]
    fn two_probing_probability() {
        let b = BarrierPair::from_probabilities(0.8, 0.2).unwrap();
        let rho = DensityMatrix2::diagonal(0.5).unwrap();
        let p = sequence_probability_frozen(&rho, &b, &[1, 0]).unwrap();
        assert!((p - 0.16).abs() < 1e-12);
        let total: f64 = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|s| sequence_probability_frozen(&rho, &b, s).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_state_is_one_binomial_branch() {
        let b = BarrierPair::new(0.6, 0.2).unwrap();
        let p = sequence_probability_frozen(&DensityMatrix2::pure_l(), &b, &[1; 7]).unwrap();
        assert!((p - b.p_l().powi(7)).abs() < 1e-15);
        assert!(sequence_probability_frozen(&DensityMatrix2::pure_l(), &b, &[]).is_err());
    }

    #[test]
    fn kraus_eigenstate_and_perfect_analyzer() {
        let b = BarrierPair::new(0.4, 0.9).unwrap();
        let k = KrausPair::from_barriers(&b);
        let (s, p) = kraus_update(&DensityMatrix2::pure_l(), &k, 1).unwrap();
        assert_eq!(s, DensityMatrix2::pure_l());
        assert!((p - b.p_l()).abs() < 1e-15);

        let k = KrausPair::from_barriers(&BarrierPair::new(0.0, FRAC_PI_2).unwrap());
        let (s, p) = kraus_update(&superposition(), &k, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((s.rho_ll - 1.0).abs() < 1e-15 && s.rho_lr.norm() < 1e-15);
        assert!(matches!(
            kraus_update(&DensityMatrix2::pure_l(), &k, 0),
            Err(Error::DegenerateConditioning(_))
        ));
    }

    #[test]
    fn averaged_update_scales_coherence_by_cos_delta() {
        let b = BarrierPair::new(0.45, 0.35).unwrap();
        let k = KrausPair::from_barriers(&b);
        let rho = DensityMatrix2::new(0.3, 0.7, Complex64::new(0.2, -0.3)).unwrap();
        let mut avg_lr = Complex64::new(0.0, 0.0);
        let mut avg_ll = 0.0;
        for outcome in [0, 1] {
            let (s, p) = kraus_update(&rho, &k, outcome).unwrap();
            avg_lr += s.rho_lr * p;
            avg_ll += s.rho_ll * p;
        }
        assert!((avg_lr.norm() - rho.rho_lr.norm() * 0.1f64.cos()).abs() < 1e-15);
        assert!((avg_ll - rho.rho_ll).abs() < 1e-15);
        let u = unconditioned_probe(&rho, &k);
        assert!((u.rho_lr - avg_lr).norm() < 1e-15);
    }

    #[test]
    fn identical_barriers_give_bernoulli_bits() {
        let b = BarrierPair::from_probabilities(0.3, 0.3).unwrap();
        let pl = plan(b, superposition(), 400, 50);
        let q: usize = ensemble_counts(&pl).unwrap().iter().sum();
        let trials = 400.0f64 * 50.0;
        let sigma = (trials * 0.3 * 0.7).sqrt();
        assert!((q as f64 - 0.3 * trials).abs() < 3.0 * sigma);
    }

    #[test]
    fn projective_limit_gives_constant_records() {
        let b = BarrierPair::new(0.0, FRAC_PI_2).unwrap();
        let pl = plan(b, DensityMatrix2::diagonal(0.3).unwrap(), 20, 2000);
        let recs = simulate_ensemble(&pl).unwrap();
        let mut ones = 0;
        for r in &recs {
            let q = r.transmitted();
            assert!(q == 0 || q == 20);
            ones += usize::from(q == 20);
        }
        let sigma = (2000.0f64 * 0.3 * 0.7).sqrt();
        assert!((ones as f64 - 600.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn deterministic_records() {
        let b = BarrierPair::new(0.5, 0.9).unwrap();
        let mut pl = plan(b, superposition(), 50, 8);
        pl.v = HamiltonianVector::new(0.05, 0.0, 0.01);
        pl.record_states = true;
        let a = simulate_trajectory(&pl, 5).unwrap();
        let b2 = simulate_trajectory(&pl, 5).unwrap();
        assert_eq!(a, b2);
        let ens = simulate_ensemble(&pl).unwrap();
        assert_eq!(ens[5], a);
        for s in a.states.as_ref().unwrap() {
            s.validate().unwrap();
        }
    }

    #[test]
    fn run_length_examples() {
        let rec = |bits: Vec<u8>| TrajectoryRecord {
            bits,
            states: None,
            seed: StreamId {
                master_seed: 0,
                stream_index: 0,
            },
        };
        let s = run_length_stats(&rec(vec![1; 30]), 5).unwrap();
        assert_eq!(s.runs.len(), 1);
        assert_eq!(s.histogram.get(&30), Some(&1));
        let alt: Vec<u8> = (0..20).map(|i| (i % 2 == 0) as u8).collect();
        let s = run_length_stats(&rec(alt), 1).unwrap();
        assert_eq!(s.runs.len(), 20);
        assert_eq!(s.mean_run_length, 1.0);
        assert!(run_length_stats(&rec(vec![1; 3]), 4).is_err());
        assert!(run_length_stats(&rec(vec![1; 3]), 0).is_err());
    }

    #[test]
    fn smoothing_removes_isolated_glitches() {
        let mut bits = vec![1u8; 20];
        bits.extend(vec![0u8; 20]);
        bits[5] = 0;
        bits[30] = 1;
        let sm = majority_smooth(&bits, 5).unwrap();
        assert_eq!(runs_of(&sm).len(), 2);
    }

    #[test]
    fn geometric_fit_accepts_geometric_sample() {
        use rand::Rng;
        let mut rng = stream_rng(3, 0);
        let lengths: Vec<usize> = (0..5000)
            .map(|_| {
                let mut l = 1;
                while rng.random::<f64>() > 0.02 {
                    l += 1;
                }
                l
            })
            .collect();
        let fit = fit_geometric(&lengths, 1, 20).unwrap();
        assert!(fit.passes(0.01), "{fit:?}");
        assert!((fit.switch_probability - 0.02).abs() < 0.002);
        let uniform: Vec<usize> = (0..5000).map(|i| 1 + i % 100).collect();
        assert!(!fit_geometric(&uniform, 1, 20).unwrap().passes(0.01));
    }

    #[test]
    fn coherence_decay_examples() {
        let b = BarrierPair::new(0.5, 0.5).unwrap();
        let d = ensemble_coherence_decay(&plan(b, superposition(), 20, 10)).unwrap();
        assert!(d.fitted_rate.abs() < 1e-12);

        let b = BarrierPair::new(FRAC_PI_2, 0.0).unwrap();
        let d = ensemble_coherence_decay(&plan(b, superposition(), 5, 10)).unwrap();
        assert!(d.coherence[1] < 1e-15);
        assert!(d.fitted_rate.is_infinite());

        let b = BarrierPair::new(0.45, 0.35).unwrap();
        assert!(ensemble_coherence_decay(&plan(b, DensityMatrix2::relaxed(), 5, 10)).is_err());
        let mut pl = plan(b, superposition(), 5, 10);
        pl.v = HamiltonianVector::new(0.1, 0.0, 0.0);
        assert!(ensemble_coherence_decay(&pl).is_err());
    }

    #[test]
    fn telegraph_summary_pools_interior_runs() {
        let rec = |bits: &[u8]| TrajectoryRecord {
            bits: bits.to_vec(),
            states: None,
            seed: StreamId::default(),
        };
        // the first record has interior runs of 3 and 2, the second is
        // censored at both ends only
        let records = [rec(&[1, 1, 0, 0, 0, 1, 1, 0]), rec(&[0, 0, 1, 1])];
        let s = telegraph_summary(&records, 1).unwrap();
        assert_eq!(s.interior_lengths, vec![3, 2]);
        assert!((s.empirical_n_max - 2.5).abs() < 1e-15);
        assert!(telegraph_summary(&records[1..], 1).is_err());
    }
}
