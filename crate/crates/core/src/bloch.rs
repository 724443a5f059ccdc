//! Bloch-like evolution of the polarization vector,
//! `P' = V x P - D P_tr`, integrated with fixed-step classical RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{HamiltonianVector, PolarizationVector};

/// Largest allowed `|V| dt` and `D dt`.
pub const MAX_STEP_PHASE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub v: HamiltonianVector,
    /// Damping rate, held constant over the run.
    pub d: f64,
    pub t_final: f64,
    pub dt: f64,
}

impl EvolutionSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.v.is_finite() {
            return Err(Error::Precondition("hamiltonian vector must be finite".into()));
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::Precondition(format!("d = {} must be >= 0", self.d)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Precondition(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::Precondition(format!(
                "t_final = {} must be >= 0",
                self.t_final
            )));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(Error::Precondition(format!(
                "dt = {} exceeds t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.v.norm() * self.dt > MAX_STEP_PHASE {
            return Err(Error::StepTooLarge(format!(
                "|V| dt = {:.3} > {MAX_STEP_PHASE}",
                self.v.norm() * self.dt
            )));
        }
        if self.d * self.dt > MAX_STEP_PHASE {
            return Err(Error::StepTooLarge(format!(
                "D dt = {:.3} > {MAX_STEP_PHASE}",
                self.d * self.dt
            )));
        }
        Ok(())
    }

    /// Relaxation time `1/D` for pure dephasing; `None` when tunneling is
    /// present or `D = 0`.
    pub fn relaxation_time(&self) -> Option<f64> {
        (self.d > 0.0 && self.v.is_diagonal()).then(|| 1.0 / self.d)
    }
}

/// One sample of an evolved trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochSample {
    pub t: f64,
    pub p: PolarizationVector,
}

/// Right-hand side `V x P - D (px, py, 0)`.
pub fn bloch_derivative(p: PolarizationVector, spec: &EvolutionSpec) -> PolarizationVector {
    let rot = spec.v.as_vector().cross(&p);
    PolarizationVector::new(rot.px - spec.d * p.px, rot.py - spec.d * p.py, rot.pz)
}

fn rk4_step(p: PolarizationVector, spec: &EvolutionSpec, h: f64) -> PolarizationVector {
    let k1 = bloch_derivative(p, spec);
    let k2 = bloch_derivative(p.add(&k1.scale(0.5 * h)), spec);
    let k3 = bloch_derivative(p.add(&k2.scale(0.5 * h)), spec);
    let k4 = bloch_derivative(p.add(&k3.scale(h)), spec);
    let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
    p.add(&incr.scale(h / 6.0))
}

/// Integrates from `t = 0` to `spec.t_final`, returning the initial sample
/// followed by one sample per step. When `t_final` is not a multiple of
/// `dt` the last step is shortened to land on `t_final`.
pub fn evolve(p0: PolarizationVector, spec: &EvolutionSpec) -> Result<Vec<BlochSample>> {
    spec.validate()?;
    if !p0.is_physical() {
        return Err(Error::Unphysical(format!("|P0| = {} exceeds 1", p0.norm())));
    }
    let ratio = spec.t_final / spec.dt;
    let full = (ratio + 1e-9).floor() as usize;
    let remainder = spec.t_final - full as f64 * spec.dt;
    let steps = if remainder > 1e-12 * spec.dt.max(1.0) { full + 1 } else { full };

    let mut out = Vec::with_capacity(steps + 1);
    let mut p = p0;
    out.push(BlochSample { t: 0.0, p });
    for k in 0..steps {
        let (t, h) = if k < full {
            ((k + 1) as f64 * spec.dt, spec.dt)
        } else {
            (spec.t_final, remainder)
        };
        p = rk4_step(p, spec, h);
        out.push(BlochSample { t, p });
    }
    Ok(out)
}

/// Closed-form solution for `V = 0`: the transverse part decays as
/// `e^{-D t}` and `pz` is untouched.
pub fn analytic_dephasing(p0: PolarizationVector, d: f64, t: f64) -> Result<PolarizationVector> {
    if !(d >= 0.0 && t >= 0.0) {
        return Err(Error::Precondition(format!("need d >= 0 and t >= 0, got d = {d}, t = {t}")));
    }
    let f = (-d * t).exp();
    Ok(PolarizationVector::new(p0.px * f, p0.py * f, p0.pz))
}

/// Exact rotation of `p` about `v` by angle `|v| t` (the `D = 0` flow).
pub fn rotate(p: PolarizationVector, v: &HamiltonianVector, t: f64) -> PolarizationVector {
    let w = v.norm();
    if w == 0.0 || t == 0.0 {
        return p;
    }
    let k = v.as_vector().scale(1.0 / w);
    let (s, c) = (w * t).sin_cos();
    let kxp = k.cross(&p);
    let kdp = k.dot(&p);
    p.scale(c).add(&kxp.scale(s)).add(&k.scale(kdp * (1.0 - c)))
}
