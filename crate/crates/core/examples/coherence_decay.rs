//! Ensemble-averaged coherence under repeated probing, compared with the
//! per-probing factor cos(delta_theta).

use num_complex::Complex64;
use qpc_noise::trajectory::{ensemble_coherence_decay, SimPlan};
use qpc_noise::{BarrierPair, DensityMatrix2, HamiltonianVector};

fn main() -> qpc_noise::Result<()> {
    let plan = SimPlan {
        n: 400,
        ensemble: 10_000,
        barriers: BarrierPair::new(0.45, 0.35)?,
        initial: DensityMatrix2::new(0.5, 0.5, Complex64::new(0.5, 0.0))?,
        v: HamiltonianVector::zero(),
        flux: 1.0,
        master_seed: 3,
        record_states: false,
    };
    let d = ensemble_coherence_decay(&plan)?;
    for k in [0, 100, 200, 400] {
        println!("|<rho_LR>| after {k:3} probings: {:.5}", d.coherence[k]);
    }
    println!("fitted rate    {:.5e}", d.fitted_rate);
    println!("-ln cos(0.1)   {:.5e}", d.predicted_rate);
    println!("1 - cos(0.1)   {:.5e}", d.damping_rate);
    Ok(())
}
