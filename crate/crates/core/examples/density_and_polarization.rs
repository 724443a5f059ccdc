//! Round trip between the density matrix and the polarization vector.

use num_complex::Complex64;
use qpc_noise::{density_to_polarization, polarization_to_density, DensityMatrix2, PolarizationVector};

fn main() -> qpc_noise::Result<()> {
    let rho = DensityMatrix2::new(0.7, 0.3, Complex64::new(0.2, -0.1))?;
    let p = density_to_polarization(rho)?;
    println!("rho_LL = {}, rho_LR = {}", rho.rho_ll, rho.rho_lr);
    println!("P = ({:.3}, {:.3}, {:.3}), |P| = {:.4}", p.px, p.py, p.pz, p.norm());

    let back = polarization_to_density(p)?;
    println!("round trip error = {:.1e}", (back.rho_lr - rho.rho_lr).norm());

    // outside the unit ball the matrix would have a negative eigenvalue
    match polarization_to_density(PolarizationVector::new(0.9, 0.0, 0.9)) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
