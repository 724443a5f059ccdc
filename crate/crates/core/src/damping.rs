//! Decoherence rate of the observed system from the detector's scattering
//! data.
//!
//! The complex quantity `Lambda = i * flux * <i| 1 - S_L S_R^dagger |i>` has the
//! damping rate `D` as its imaginary part and an energy shift as its real
//! part. With the symmetric parameterization [`SMatrix2::symmetric`] the
//! matrix element reduces to `cos(theta_L - theta_R)`, so
//! `D = flux * (1 - cos(delta_theta))` and the energy shift vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BarrierPair, UNITARY_TOL};

/// SI elementary charge in coulomb.
pub const ELEMENTARY_CHARGE_SI: f64 = 1.602_176_634e-19;
/// SI reduced Planck constant in J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// 2x2 scattering matrix; channel 0 = transmitted, 1 = reflected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix2 {
    entries: [[Complex64; 2]; 2],
}

impl SMatrix2 {
    /// Checks unitarity to [`UNITARY_TOL`]; non-unitary input is rejected,
    /// never projected.
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let s = Self { entries };
        let dev = s.unitarity_deviation();
        if !dev.is_finite() || dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(s)
    }

    /// `[[cos t, i sin t], [i sin t, cos t]]`.
    pub fn symmetric(theta: f64) -> Self {
        let c = Complex64::new(theta.cos(), 0.0);
        let s = Complex64::new(0.0, theta.sin());
        Self {
            entries: [[c, s], [s, c]],
        }
    }

    /// Symmetric matrix with the transmission entries dressed by
    /// `e^{+i phi}`, `e^{-i phi}`. Still unitary.
    pub fn symmetric_with_phase(theta: f64, phi: f64) -> Self {
        let mut m = Self::symmetric(theta);
        let ph = Complex64::from_polar(1.0, phi);
        m.entries[0][0] *= ph;
        m.entries[1][1] *= ph.conj();
        m
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn dagger(&self) -> Self {
        let e = &self.entries;
        Self {
            entries: [[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]],
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { entries: out }
    }

    /// Largest entry of `|S S^dagger - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.mul(&self.dagger());
        let mut dev = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((p.entries[i][j] - Complex64::new(target, 0.0)).norm());
            }
        }
        dev
    }
}

/// `Lambda` split into the energy shift and the damping rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    /// Energy shift, rad per unit time.
    pub real_part: f64,
    /// Damping (decoherence) rate `D`.
    pub imag_part: f64,
}

impl LambdaResult {
    pub fn damping(&self) -> f64 {
        self.imag_part
    }

    pub fn energy_shift(&self) -> f64 {
        self.real_part
    }
}

/// `Lambda = i * flux * (1 - (S_L S_R^dagger)_{ii})` for incoming channel `i`.
///
/// Which channel is the incoming one depends on the detector geometry, so
/// the caller names it.
pub fn lambda_from_smatrices(
    s_l: &SMatrix2,
    s_r: &SMatrix2,
    incoming: usize,
    flux: f64,
) -> Result<LambdaResult> {
    if incoming > 1 {
        return Err(Error::InvalidChannel(incoming));
    }
    check_flux(flux)?;
    for s in [s_l, s_r] {
        let dev = s.unitarity_deviation();
        if !dev.is_finite() || dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
    }
    let overlap = s_l.mul(&s_r.dagger()).entries[incoming][incoming];
    let lambda = Complex64::new(0.0, flux) * (Complex64::new(1.0, 0.0) - overlap);
    Ok(LambdaResult {
        real_part: lambda.re,
        imag_part: lambda.im,
    })
}

/// `D = flux * (1 - cos(theta_L - theta_R))`.
pub fn damping_rate(barriers: &BarrierPair, flux: f64) -> Result<f64> {
    check_flux(flux)?;
    Ok(flux * one_minus_cos(barriers.delta_theta()))
}

/// Lowest-order form `flux * delta_theta^2 / 2`; its relative error against
/// [`damping_rate`] is `delta_theta^2 / 12 + O(delta_theta^4)`.
pub fn damping_rate_small_angle(barriers: &BarrierPair, flux: f64) -> Result<f64> {
    check_flux(flux)?;
    let d = barriers.delta_theta();
    Ok(0.5 * flux * d * d)
}

/// Landauer probing rate `e V_d / (pi hbar)`.
pub fn landauer_flux(voltage: f64, charge: f64, hbar: f64) -> Result<f64> {
    for (name, x) in [("voltage", voltage), ("charge", charge), ("hbar", hbar)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Precondition(format!("{name} = {x} must be > 0")));
        }
    }
    Ok(charge * voltage / (std::f64::consts::PI * hbar))
}

/// `1 - cos x` without cancellation for small `x`.
pub(crate) fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

fn check_flux(flux: f64) -> Result<()> {
    if !(flux.is_finite() && flux > 0.0) {
        return Err(Error::Precondition(format!("flux = {flux} must be > 0")));
    }
    Ok(())
}
