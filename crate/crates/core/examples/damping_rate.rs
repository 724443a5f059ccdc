//! Decoherence rate from the two barrier S matrices, and the Landauer flux.

use qpc_noise::damping::{
    damping_rate, damping_rate_small_angle, lambda_from_smatrices, landauer_flux, SMatrix2,
    ELEMENTARY_CHARGE_SI, HBAR_SI,
};
use qpc_noise::BarrierPair;

fn main() -> qpc_noise::Result<()> {
    let b = BarrierPair::new(0.45, 0.35)?;
    let l = lambda_from_smatrices(
        &SMatrix2::symmetric(b.theta_l()),
        &SMatrix2::symmetric(b.theta_r()),
        0,
        1.0,
    )?;
    println!("Lambda = {:.6e} + {:.6e} i", l.real_part, l.imag_part);
    println!("D exact       = {:.6e}", damping_rate(&b, 1.0)?);
    println!("D small angle = {:.6e}", damping_rate_small_angle(&b, 1.0)?);

    // a phase on one barrier adds damping even at equal transmissions
    let phased = lambda_from_smatrices(
        &SMatrix2::symmetric_with_phase(0.3, 0.2),
        &SMatrix2::symmetric(0.3),
        0,
        1.0,
    )?;
    println!("phase-only D  = {:.6e}", phased.damping());

    let flux = landauer_flux(1e-6, ELEMENTARY_CHARGE_SI, HBAR_SI)?;
    println!("flux at 1 uV  = {flux:.4e} per second");
    Ok(())
}
