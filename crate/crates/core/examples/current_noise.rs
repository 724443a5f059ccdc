//! Current variance against averaging time, including the zero-charge
//! limit where partition noise vanishes and measurement noise stays.

use qpc_noise::current::{current_variance, measurement_current_noise, zero_charge_limit};
use qpc_noise::{BarrierPair, Regime};

fn main() -> qpc_noise::Result<()> {
    let b = BarrierPair::from_probabilities(0.8, 0.2)?;
    let n_max = 100;
    println!("n,regime,partition,measurement,total,printed_form");
    for n in [1, 10, 100, 1000, 10_000] {
        let e = current_variance(&b, n, n_max, 1.0, 1.0)?;
        println!(
            "{n},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            e.regime, e.var_partition_part, e.var_measurement_part, e.j_variance, e.paper_normalized
        );
    }

    let small = BarrierPair::new(0.45, 0.35)?;
    let m = measurement_current_noise(&small, 1.0, 1.0, Regime::Short, 100, None)?;
    println!("short-window measurement noise: exact {:.5e}, printed form {:.5e}", m.exact, m.paper_normalized);

    let z = zero_charge_limit(&b, 1.0, 10.0, Regime::Short, None, 6)?;
    for p in &z.points {
        println!("e = {:<9} partition {:.4e}  measurement {:.4e}", p.charge, p.var_partition_part, p.var_measurement_part);
    }
    Ok(())
}
