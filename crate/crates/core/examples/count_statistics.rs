//! Count distribution of transmissions in a short window: closed forms
//! against exhaustive enumeration, and the long-window block form.

use qpc_noise::statistics::{brute_force_variance, mixture_pmf, variance_long, variance_short};
use qpc_noise::{BarrierPair, DensityMatrix2};

fn main() -> qpc_noise::Result<()> {
    let b = BarrierPair::from_probabilities(0.8, 0.2)?;
    let rho = DensityMatrix2::relaxed();

    let v = variance_short(&rho, &b, 10)?;
    let bf = brute_force_variance(&rho, &b, 10)?;
    println!("closed form: total {:.6} = partition {:.6} + measurement {:.6}", v.var_total, v.var_partition, v.var_measurement);
    println!("enumerated:  total {:.6} = partition {:.6} + measurement {:.6}", bf.report.var_total, bf.report.var_partition, bf.report.var_measurement);

    // bimodal: the detector sees either the L or the R binomial
    let pmf = mixture_pmf(&rho, &b, 10)?;
    for (q, p) in pmf.pmf.iter().enumerate() {
        println!("Q = {q:2}  {:<40} {p:.4}", "*".repeat((p * 200.0) as usize));
    }

    let long = variance_long(&b, 10_000, 100)?;
    println!(
        "n = 10000, n_max = 100: exact {:.1}, printed form {:.1}",
        long.var_total,
        long.paper_normalized_total.unwrap_or(f64::NAN)
    );
    Ok(())
}
