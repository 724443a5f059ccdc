//! Measurement noise in the detector against the decoherence rate it
//! causes, over a range of analyzing powers.

use std::f64::consts::FRAC_PI_4;

use qpc_noise::statistics::{decoherence_fluctuation_check, exact_relation_ratio};
use qpc_noise::BarrierPair;

fn main() -> qpc_noise::Result<()> {
    println!("delta_theta  n     V_M            D              V_M/(n^2 D/flux)  closed form");
    for dt in [0.01, 0.02, 0.05, 0.1, 0.3] {
        let b = BarrierPair::centered(FRAC_PI_4, dt)?;
        for n in [10, 1000] {
            let r = decoherence_fluctuation_check(&b, 1.0, n, Some(100))?;
            println!(
                "{dt:<12} {n:<5} {:<14.6e} {:<14.6e} {:<17.9} {:.9}",
                r.v_m,
                r.damping,
                r.ratio.unwrap_or(f64::NAN),
                exact_relation_ratio(&b).unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
