//! Strong measurement of a slowly tunneling electron: long runs of
//! transmissions and reflections.

use qpc_noise::trajectory::{fit_geometric, simulate_ensemble, simulate_trajectory, telegraph_summary, SimPlan};
use qpc_noise::{BarrierPair, DensityMatrix2, HamiltonianVector};

fn main() -> qpc_noise::Result<()> {
    let plan = SimPlan {
        n: 4000,
        ensemble: 500,
        barriers: BarrierPair::from_probabilities(0.95, 0.05)?,
        initial: DensityMatrix2::relaxed(),
        v: HamiltonianVector::new(0.05, 0.0, 0.0),
        flux: 1.0,
        master_seed: 1,
        record_states: false,
    };

    let first = simulate_trajectory(&plan, 0)?;
    let strip: String = first.bits[..160].iter().map(|&b| if b == 1 { '#' } else { '.' }).collect();
    println!("{strip}");

    let records = simulate_ensemble(&plan)?;
    let summary = telegraph_summary(&records, 11)?;
    let fit = fit_geometric(&summary.interior_lengths, 1, 20)?;
    println!(
        "{} interior runs, empirical N_max = {:.0}",
        summary.interior_lengths.len(),
        summary.empirical_n_max
    );
    println!(
        "geometric fit: chi2 = {:.1} on {} dof, p = {:.3}",
        fit.chi_square, fit.dof, fit.p_value
    );
    Ok(())
}
