//! Damped precession of the polarization vector, written as CSV.

use qpc_noise::bloch::{analytic_dephasing, evolve, EvolutionSpec};
use qpc_noise::damping::damping_rate;
use qpc_noise::{BarrierPair, HamiltonianVector, PolarizationVector};

fn main() -> qpc_noise::Result<()> {
    let d = damping_rate(&BarrierPair::new(0.6, 0.2)?, 1.0)?;
    let spec = EvolutionSpec {
        v: HamiltonianVector::new(0.5, 0.0, 0.0),
        d,
        t_final: 40.0,
        dt: 0.01,
    };
    let traj = evolve(PolarizationVector::new(0.0, 0.0, 1.0), &spec)?;
    println!("t,px,py,pz");
    for s in traj.iter().step_by(400) {
        println!("{},{:.6},{:.6},{:.6}", s.t, s.p.px, s.p.py, s.p.pz);
    }

    // without tunneling the coherence just decays
    let pure = EvolutionSpec { v: HamiltonianVector::zero(), ..spec };
    let p0 = PolarizationVector::new(1.0, 0.0, 0.0);
    let end = evolve(p0, &pure)?.last().copied().unwrap();
    let exact = analytic_dephasing(p0, d, end.t)?;
    eprintln!("D = {d:.4}, RK4 vs closed form at t = {}: {:.1e}", end.t, end.p.max_abs_diff(&exact));
    Ok(())
}
