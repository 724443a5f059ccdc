//! JSON experiment configuration.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BarrierPair, DensityMatrix2, DetectorConfig, HamiltonianVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    VerifyOracle,
    VerifyRelation,
    NoiseCurve,
    Sweep,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::VerifyOracle => "verify-oracle",
            Mode::VerifyRelation => "verify-relation",
            Mode::NoiseCurve => "noise-curve",
            Mode::Sweep => "sweep",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Barriers given either as angles or as transmission probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BarrierSpec {
    Angles { theta_l: f64, theta_r: f64 },
    Probabilities { p_l: f64, p_r: f64 },
}

impl BarrierSpec {
    pub fn build(&self) -> Result<BarrierPair> {
        match *self {
            BarrierSpec::Angles { theta_l, theta_r } => BarrierPair::new(theta_l, theta_r),
            BarrierSpec::Probabilities { p_l, p_r } => BarrierPair::from_probabilities(p_l, p_r),
        }
        .map_err(|e| Error::Config(format!("barriers: {e}")))
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    #[serde(default = "one")]
    pub flux: f64,
    #[serde(default = "one")]
    pub charge: f64,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub voltage: Option<f64>,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            flux: 1.0,
            charge: 1.0,
            n_max: None,
            voltage: None,
        }
    }
}

impl DetectorSpec {
    pub fn build(&self) -> Result<DetectorConfig> {
        let d = DetectorConfig {
            flux: self.flux,
            charge: self.charge,
            n_max: self.n_max.unwrap_or(1),
            voltage: self.voltage,
        };
        d.validate().map_err(|e| Error::Config(format!("detector: {e}")))?;
        Ok(d)
    }

    pub fn require_n_max(&self, mode: Mode) -> Result<usize> {
        self.n_max
            .ok_or_else(|| Error::Config(format!("detector.n_max is required for {mode}")))
    }
}

/// Initial state of the observed system as a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub rho_ll: f64,
    #[serde(default)]
    pub rho_lr_re: f64,
    #[serde(default)]
    pub rho_lr_im: f64,
}

impl InitialState {
    pub fn build(&self) -> Result<DensityMatrix2> {
        DensityMatrix2::new(
            self.rho_ll,
            1.0 - self.rho_ll,
            Complex64::new(self.rho_lr_re, self.rho_lr_im),
        )
        .map_err(|e| Error::Config(format!("initial: {e}")))
    }
}

/// Names accepted by sweep axes.
pub const SWEEP_PARAMETERS: &[&str] = &["theta_l", "theta_r", "rho_ll", "n", "flux", "charge", "n_max"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepAxis {
    /// `start, start + step, ...` up to and including `stop`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !SWEEP_PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(Error::Config(format!(
                "sweep axis '{}' is not one of {SWEEP_PARAMETERS:?}",
                self.parameter
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) || self.stop < self.start {
            return Err(Error::Config(format!(
                "sweep axis '{}' needs step > 0 and stop >= start",
                self.parameter
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::Config(format!(
                "sweep axis '{}' has {count} points",
                self.parameter
            )));
        }
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Random `(rho_LL, theta_L, theta_R)` draws.
    pub draws: usize,
    /// Every window length `1..=max_n` is checked.
    pub max_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub delta_thetas: Vec<f64>,
    pub ns: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCurveSpec {
    /// Grid points per decade of window length.
    pub points_per_decade: usize,
    /// Grid runs from one probing to `span * n_max` probings.
    pub span: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelegraphSpec {
    /// Majority-vote window used before run-length extraction.
    pub window: usize,
}

/// Everything one run of the harness needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    pub barriers: BarrierSpec,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default)]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianVector>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub ensemble: Option<usize>,
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub relation: Option<RelationSpec>,
    #[serde(default)]
    pub noise_curve: Option<NoiseCurveSpec>,
    #[serde(default)]
    pub telegraph: Option<TelegraphSpec>,
    /// Worker threads; results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub(crate) fn require_n(&self, mode: Mode) -> Result<usize> {
        match self.n {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(Error::Config("n must be >= 1".into())),
            None => Err(Error::Config(format!("n is required for {mode}"))),
        }
    }

    pub(crate) fn require_ensemble(&self, mode: Mode) -> Result<usize> {
        match self.ensemble {
            Some(e) if e >= 3 => Ok(e),
            Some(_) => Err(Error::Config("ensemble must be >= 3".into())),
            None => Err(Error::Config(format!("ensemble is required for {mode}"))),
        }
    }

    pub(crate) fn require_initial(&self, mode: Mode) -> Result<DensityMatrix2> {
        self.initial
            .ok_or_else(|| Error::Config(format!("initial is required for {mode}")))?
            .build()
    }

    pub(crate) fn require_hamiltonian(&self, mode: Mode) -> Result<HamiltonianVector> {
        let v = self
            .hamiltonian
            .ok_or_else(|| Error::Config(format!("hamiltonian is required for {mode}")))?;
        if !v.is_finite() {
            return Err(Error::Config("hamiltonian: components must be finite".into()));
        }
        Ok(v)
    }
}
