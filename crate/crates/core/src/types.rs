//! Domain types shared across the crate: the two-state density matrix and its
//! polarization-vector form, the barrier pair, detector settings, trajectory
//! records and variance reports.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Slack allowed on physicality bounds such as `|P| <= 1`.
pub const PHYSICAL_TOL: f64 = 1e-9;
/// Unitarity tolerance for scattering matrices.
pub const UNITARY_TOL: f64 = 1e-10;

/// Bloch (polarization) vector of a two-state system.
///
/// `pz = Prob(L) - Prob(R)`; the transverse part `(px, py)` carries the
/// coherence between the two states.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarizationVector {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl PolarizationVector {
    pub const fn new(px: f64, py: f64, pz: f64) -> Self {
        Self { px, py, pz }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.px * self.px + self.py * self.py + self.pz * self.pz
    }

    /// Length of the transverse component `P_tr = (px, py)`.
    pub fn transverse_norm(&self) -> f64 {
        self.px.hypot(self.py)
    }

    pub fn is_physical(&self) -> bool {
        self.px.is_finite()
            && self.py.is_finite()
            && self.pz.is_finite()
            && self.norm() <= 1.0 + PHYSICAL_TOL
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self {
            px: self.py * other.pz - self.pz * other.py,
            py: self.pz * other.px - self.px * other.pz,
            pz: self.px * other.py - self.py * other.px,
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.px * other.px + self.py * other.py + self.pz * other.pz
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.px * k, self.py * k, self.pz * k)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.px + other.px, self.py + other.py, self.pz + other.pz)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.px - other.px, self.py - other.py, self.pz - other.pz)
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        d.px.abs().max(d.py.abs()).max(d.pz.abs())
    }
}

/// Density matrix of the observed two-state system, index 0 = L, 1 = R.
///
/// Only `rho_lr` is stored; `rho_rl` is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub rho_ll: f64,
    pub rho_rr: f64,
    pub rho_lr: Complex64,
}

impl DensityMatrix2 {
    /// Builds a density matrix and checks trace, diagonal range and positivity.
    pub fn new(rho_ll: f64, rho_rr: f64, rho_lr: Complex64) -> Result<Self> {
        let rho = Self {
            rho_ll,
            rho_rr,
            rho_lr,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Diagonal state with `Prob(L) = rho_ll`.
    pub fn diagonal(rho_ll: f64) -> Result<Self> {
        Self::new(rho_ll, 1.0 - rho_ll, Complex64::new(0.0, 0.0))
    }

    /// Fully mixed state, `rho_ll = rho_rr = 1/2`.
    pub fn relaxed() -> Self {
        Self {
            rho_ll: 0.5,
            rho_rr: 0.5,
            rho_lr: Complex64::new(0.0, 0.0),
        }
    }

    pub fn pure_l() -> Self {
        Self {
            rho_ll: 1.0,
            rho_rr: 0.0,
            rho_lr: Complex64::new(0.0, 0.0),
        }
    }

    pub fn pure_r() -> Self {
        Self {
            rho_ll: 0.0,
            rho_rr: 1.0,
            rho_lr: Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho_ll + self.rho_rr
    }

    pub fn coherence(&self) -> f64 {
        self.rho_lr.norm()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_ll.is_finite() && self.rho_rr.is_finite())
            || !(self.rho_lr.re.is_finite() && self.rho_lr.im.is_finite())
        {
            return Err(Error::Unphysical("non-finite density matrix entry".into()));
        }
        if (self.trace() - 1.0).abs() > EXACT_TOL {
            return Err(Error::Unphysical(format!(
                "trace {} differs from 1",
                self.trace()
            )));
        }
        let in_range = |x: f64| (-EXACT_TOL..=1.0 + EXACT_TOL).contains(&x);
        if !in_range(self.rho_ll) || !in_range(self.rho_rr) {
            return Err(Error::Unphysical(format!(
                "diagonal ({}, {}) outside [0, 1]",
                self.rho_ll, self.rho_rr
            )));
        }
        if self.rho_lr.norm_sqr() > self.rho_ll * self.rho_rr + EXACT_TOL {
            return Err(Error::Unphysical(format!(
                "|rho_lr|^2 = {} exceeds rho_ll*rho_rr = {}",
                self.rho_lr.norm_sqr(),
                self.rho_ll * self.rho_rr
            )));
        }
        Ok(())
    }
}

/// `rho = (I + P.sigma) / 2`.
pub fn polarization_to_density(p: PolarizationVector) -> Result<DensityMatrix2> {
    if !p.is_physical() {
        return Err(Error::Unphysical(format!(
            "|P| = {} exceeds 1",
            p.norm()
        )));
    }
    Ok(DensityMatrix2 {
        rho_ll: 0.5 * (1.0 + p.pz),
        rho_rr: 0.5 * (1.0 - p.pz),
        rho_lr: Complex64::new(0.5 * p.px, -0.5 * p.py),
    })
}

/// Inverse of [`polarization_to_density`].
pub fn density_to_polarization(rho: DensityMatrix2) -> Result<PolarizationVector> {
    rho.validate()?;
    Ok(PolarizationVector {
        px: 2.0 * rho.rho_lr.re,
        py: -2.0 * rho.rho_lr.im,
        pz: rho.rho_ll - rho.rho_rr,
    })
}

/// Real energies generating the free evolution `P' = V x P` (angular
/// frequencies). `vz` is the level splitting, `vx`, `vy` tunneling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HamiltonianVector {
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl HamiltonianVector {
    pub const fn new(vx: f64, vy: f64, vz: f64) -> Self {
        Self { vx, vy, vz }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn as_vector(&self) -> PolarizationVector {
        PolarizationVector::new(self.vx, self.vy, self.vz)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.vz.is_finite()
    }

    /// True when there is no tunneling term, so `pz` is conserved.
    pub fn is_diagonal(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0
    }
}

/// Barrier settings seen by the probing electrons when the observed system
/// sits in L or in R. Transmission amplitudes are `cos(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierPair {
    theta_l: f64,
    theta_r: f64,
}

impl BarrierPair {
    pub fn new(theta_l: f64, theta_r: f64) -> Result<Self> {
        for (name, t) in [("theta_l", theta_l), ("theta_r", theta_r)] {
            if !t.is_finite() || !(0.0..=FRAC_PI_2 + EXACT_TOL).contains(&t) {
                return Err(Error::Precondition(format!(
                    "{name} = {t} outside [0, pi/2]"
                )));
            }
        }
        Ok(Self {
            theta_l: theta_l.min(FRAC_PI_2),
            theta_r: theta_r.min(FRAC_PI_2),
        })
    }

    /// Barrier pair with the given transmission probabilities.
    pub fn from_probabilities(p_l: f64, p_r: f64) -> Result<Self> {
        for (name, p) in [("p_l", p_l), ("p_r", p_r)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Precondition(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Self::new(p_l.sqrt().acos(), p_r.sqrt().acos())
    }

    /// Pair centred on `mean` with `theta_l - theta_r = delta`.
    pub fn centered(mean: f64, delta: f64) -> Result<Self> {
        Self::new(mean + 0.5 * delta, mean - 0.5 * delta)
    }

    pub fn theta_l(&self) -> f64 {
        self.theta_l
    }

    pub fn theta_r(&self) -> f64 {
        self.theta_r
    }

    pub fn delta_theta(&self) -> f64 {
        self.theta_l - self.theta_r
    }

    pub fn p_l(&self) -> f64 {
        let c = self.theta_l.cos();
        c * c
    }

    pub fn p_r(&self) -> f64 {
        let c = self.theta_r.cos();
        c * c
    }

    pub fn q_l(&self) -> f64 {
        let s = self.theta_l.sin();
        s * s
    }

    pub fn q_r(&self) -> f64 {
        let s = self.theta_r.sin();
        s * s
    }

    /// Average transmission probability `(p_L + p_R) / 2`.
    pub fn mean_transmission(&self) -> f64 {
        0.5 * (self.p_l() + self.p_r())
    }

    /// Analyzing power `p_L - p_R`.
    pub fn analyzing_power(&self) -> f64 {
        self.p_l() - self.p_r()
    }

    pub fn swapped(&self) -> Self {
        Self {
            theta_l: self.theta_r,
            theta_r: self.theta_l,
        }
    }
}

/// Detector circuit settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Probings per unit time.
    pub flux: f64,
    /// Carrier charge; zero is allowed for limit studies.
    pub charge: f64,
    /// Probings per relaxation time of the observed system.
    pub n_max: usize,
    pub voltage: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            flux: 1.0,
            charge: 1.0,
            n_max: 1,
            voltage: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.flux.is_finite() && self.flux > 0.0) {
            return Err(Error::Precondition(format!("flux = {} must be > 0", self.flux)));
        }
        if self.n_max < 1 {
            return Err(Error::Precondition("n_max must be >= 1".into()));
        }
        if !(self.charge.is_finite() && self.charge >= 0.0) {
            return Err(Error::Precondition(format!(
                "charge = {} must be >= 0",
                self.charge
            )));
        }
        if let Some(v) = self.voltage {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Precondition(format!("voltage = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Identifies the RNG stream a record was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StreamId {
    pub master_seed: u64,
    pub stream_index: u64,
}

/// One simulated run of `bits.len()` probings; bit 1 = transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub bits: Vec<u8>,
    /// Conditional state after each probing, when recorded.
    pub states: Option<Vec<DensityMatrix2>>,
    pub seed: StreamId,
}

impl TrajectoryRecord {
    /// Number of transmissions `Q`.
    pub fn transmitted(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bits packed MSB-first, eight probings per byte, last byte zero-padded.
    pub fn packed_bits(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b == 1 {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn unpack_bits(packed: &[u8], len: usize) -> Vec<u8> {
        (0..len)
            .map(|i| (packed[i / 8] >> (7 - i % 8)) & 1)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Window shorter than the relaxation time (frozen observed state).
    Short,
    /// Window spanning many relaxation times.
    Long,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Short => f.write_str("short"),
            Regime::Long => f.write_str("long"),
        }
    }
}

/// Count variance in a window of `n` probings, split into the weighted
/// binomial (partition) noise and the extra measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub n: usize,
    pub mean_q: f64,
    pub var_total: f64,
    pub var_partition: f64,
    pub var_measurement: f64,
    pub regime: Regime,
    /// Value of the closed form with its printed coefficients, where one exists.
    pub paper_normalized_total: Option<f64>,
}

impl VarianceReport {
    pub fn new(
        n: usize,
        mean_q: f64,
        var_partition: f64,
        var_measurement: f64,
        regime: Regime,
    ) -> Self {
        Self {
            n,
            mean_q,
            var_total: var_partition + var_measurement,
            var_partition,
            var_measurement,
            regime,
            paper_normalized_total: None,
        }
    }
}
