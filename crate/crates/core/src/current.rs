//! Current statistics for an averaging window of `n = flux * delta_t`
//! probings, `j = e Q flux / n`.

use serde::{Deserialize, Serialize};

use crate::damping::damping_rate;
use crate::error::{Error, Result};
use crate::statistics::{variance_long, variance_short};
use crate::types::{BarrierPair, DensityMatrix2, Regime, VarianceReport};

/// Variance of the window-averaged current and its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentEstimate {
    pub delta_t: f64,
    pub n: usize,
    pub regime: Regime,
    pub j_mean: f64,
    pub j_variance: f64,
    pub var_measurement_part: f64,
    pub var_partition_part: f64,
    /// Closed form with the printed coefficients.
    pub paper_normalized: f64,
}

/// `j = e q flux / n`.
pub fn current_from_counts(q: usize, n: usize, flux: f64, charge: f64) -> Result<f64> {
    if n == 0 || q > n {
        return Err(Error::Precondition(format!("need 0 <= q <= n with n >= 1, got q = {q}, n = {n}")));
    }
    Ok(charge * q as f64 * flux / n as f64)
}

/// Probings in an averaging time, `round(flux * delta_t)`. Windows shorter
/// than one probing are rejected.
pub fn window_probings(flux: f64, delta_t: f64) -> Result<usize> {
    check_flux_charge(flux, 0.0)?;
    let n = (flux * delta_t).round();
    if !(n >= 1.0) {
        return Err(Error::Precondition(format!(
            "averaging time {delta_t} holds fewer than one probing at flux {flux}"
        )));
    }
    Ok(n as usize)
}

fn check_flux_charge(flux: f64, charge: f64) -> Result<()> {
    if !(flux.is_finite() && flux > 0.0) {
        return Err(Error::Precondition(format!("flux = {flux} must be > 0")));
    }
    if !(charge.is_finite() && charge >= 0.0) {
        return Err(Error::Precondition(format!("charge = {charge} must be >= 0")));
    }
    Ok(())
}

fn scale_counts(
    report: &VarianceReport,
    flux: f64,
    charge: f64,
    paper_normalized: f64,
) -> CurrentEstimate {
    let n = report.n as f64;
    let k = (charge * flux / n).powi(2);
    let var_measurement_part = k * report.var_measurement;
    let var_partition_part = k * report.var_partition;
    CurrentEstimate {
        delta_t: n / flux,
        n: report.n,
        regime: report.regime,
        j_mean: charge * flux * report.mean_q / n,
        j_variance: var_measurement_part + var_partition_part,
        var_measurement_part,
        var_partition_part,
        paper_normalized,
    }
}

/// Short-window current variance for the relaxed state: `(e flux / n)^2`
/// times the frozen-state count variance.
pub fn current_variance_short(
    barriers: &BarrierPair,
    n: usize,
    flux: f64,
    charge: f64,
) -> Result<CurrentEstimate> {
    check_flux_charge(flux, charge)?;
    let report = variance_short(&DensityMatrix2::relaxed(), barriers, n)?;
    let ef2 = (charge * flux).powi(2);
    let dp = barriers.analyzing_power();
    let printed = ((barriers.p_l() + barriers.p_r()) / n as f64 + dp * dp) * ef2;
    Ok(scale_counts(&report, flux, charge, printed))
}

/// Long-window current variance from the block-composed count variance.
/// The measurement part falls off as `n_max / n`.
pub fn current_variance_long(
    barriers: &BarrierPair,
    n: usize,
    n_max: usize,
    flux: f64,
    charge: f64,
) -> Result<CurrentEstimate> {
    check_flux_charge(flux, charge)?;
    let report = variance_long(barriers, n, n_max)?;
    let ef2 = (charge * flux).powi(2);
    let dp = barriers.analyzing_power();
    let nf = n as f64;
    let printed = ((barriers.p_l() + barriers.p_r()) / nf + dp * dp / nf * n_max as f64) * ef2;
    Ok(scale_counts(&report, flux, charge, printed))
}

/// Short-window estimate for `n <= n_max`, block composition beyond.
pub fn current_variance(
    barriers: &BarrierPair,
    n: usize,
    n_max: usize,
    flux: f64,
    charge: f64,
) -> Result<CurrentEstimate> {
    if n <= n_max {
        current_variance_short(barriers, n, flux, charge)
    } else {
        current_variance_long(barriers, n, n_max, flux, charge)
    }
}

/// Measurement-induced part of the current variance in both normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementCurrentNoise {
    pub regime: Regime,
    pub n: usize,
    /// From the exact count variance.
    pub exact: f64,
    /// `8 p (1 - p) D e^2 flux`, times `n_max / n` for long windows.
    pub paper_normalized: f64,
    /// `exact / paper_normalized`; `None` when both vanish.
    pub ratio: Option<f64>,
}

pub fn measurement_current_noise(
    barriers: &BarrierPair,
    flux: f64,
    charge: f64,
    regime: Regime,
    n: usize,
    n_max: Option<usize>,
) -> Result<MeasurementCurrentNoise> {
    let d = damping_rate(barriers, flux)?;
    let p = barriers.mean_transmission();
    let base = 8.0 * p * (1.0 - p) * d * charge * charge * flux;
    let (exact, printed) = match regime {
        Regime::Short => {
            let est = current_variance_short(barriers, n, flux, charge)?;
            (est.var_measurement_part, base)
        }
        Regime::Long => {
            let n_max = n_max.ok_or_else(|| {
                Error::Precondition("long-window noise needs n_max".into())
            })?;
            let est = current_variance_long(barriers, n, n_max, flux, charge)?;
            (est.var_measurement_part, base * n_max as f64 / n as f64)
        }
    };
    Ok(MeasurementCurrentNoise {
        regime,
        n,
        exact,
        paper_normalized: printed,
        ratio: (printed != 0.0).then(|| exact / printed),
    })
}

/// One point along the zero-charge sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroChargePoint {
    pub charge: f64,
    pub flux: f64,
    pub n: usize,
    pub n_max: Option<usize>,
    pub var_partition_part: f64,
    pub var_measurement_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroChargeReport {
    pub points: Vec<ZeroChargePoint>,
    /// Partition part strictly decreasing and partition/measurement ratio
    /// strictly decreasing (when a measurement part exists).
    pub monotone: bool,
    /// Largest relative deviation of the measurement part from its first value.
    pub measurement_drift: f64,
}

/// Walks `e_k = 2^-k`, `k = 0..=steps`, holding `e * flux = current_scale`
/// and the averaging time fixed. For long windows the relaxation time is
/// held fixed as well, so `n_max` grows with the flux.
pub fn zero_charge_limit(
    barriers: &BarrierPair,
    current_scale: f64,
    delta_t: f64,
    regime: Regime,
    relaxation_time: Option<f64>,
    steps: usize,
) -> Result<ZeroChargeReport> {
    if !(current_scale.is_finite() && current_scale > 0.0) {
        return Err(Error::Precondition(format!(
            "e * flux = {current_scale} must be > 0"
        )));
    }
    let mut points = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let charge = 0.5f64.powi(k as i32);
        let flux = current_scale / charge;
        let n = window_probings(flux, delta_t)?;
        let (est, n_max) = match regime {
            Regime::Short => (current_variance_short(barriers, n, flux, charge)?, None),
            Regime::Long => {
                let t_rel = relaxation_time.ok_or_else(|| {
                    Error::Precondition("long-window limit needs a relaxation time".into())
                })?;
                let n_max = window_probings(flux, t_rel)?;
                (current_variance_long(barriers, n, n_max, flux, charge)?, Some(n_max))
            }
        };
        points.push(ZeroChargePoint {
            charge,
            flux,
            n,
            n_max,
            var_partition_part: est.var_partition_part,
            var_measurement_part: est.var_measurement_part,
        });
    }
    let first_m = points[0].var_measurement_part;
    let measurement_drift = points
        .iter()
        .map(|p| {
            if first_m == 0.0 {
                p.var_measurement_part.abs()
            } else {
                (p.var_measurement_part - first_m).abs() / first_m
            }
        })
        .fold(0.0, f64::max);
    let monotone = points.windows(2).all(|w| {
        let partition_drops = w[1].var_partition_part < w[0].var_partition_part
            || (w[0].var_partition_part == 0.0 && w[1].var_partition_part == 0.0);
        let ratio_drops = first_m == 0.0
            || w[1].var_partition_part / w[1].var_measurement_part
                < w[0].var_partition_part / w[0].var_measurement_part;
        partition_drops && ratio_drops
    });
    Ok(ZeroChargeReport {
        points,
        monotone,
        measurement_drift,
    })
}
