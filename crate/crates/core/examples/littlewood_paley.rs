//! The profile identity psi^3 + phi(2 r) = phi(r) and the telescoping band sums.
use roughsing::lp::{band_sum, band_sum_by_pieces, JumpSchedule, MollifierProfile, Side};
use roughsing::{make_grid, GridFunction};

fn main() -> roughsing::Result<()> {
    let profile = MollifierProfile::new();
    let (lo, hi) = profile.psi_support();
    println!("psi support ({lo}, {hi})");
    for r in [0.2, 0.3, 0.5, 0.7, 0.9, 1.1] {
        let defect = profile.psi_hat(r).powi(3) + profile.phi_hat(2.0 * r) - profile.phi_hat(r);
        println!("r = {r:.1}: psi = {:+.6}, defect {defect:.1e}", profile.psi_hat(r));
    }
    let spec = make_grid(2, 64, 4.0)?;
    let f = GridFunction::sample_real(spec, |x| (x[0] * 3.0).sin() * (-(x[0] * x[0] + x[1] * x[1])).exp())?;
    let schedule = JumpSchedule::Pow2;
    for side in [Side::Low, Side::High] {
        for j in 1..=3 {
            let a = band_sum(&f, 0, j, side, &schedule, &profile)?;
            let b = band_sum_by_pieces(&f, 0, j, side, &schedule, &profile)?;
            println!("{} j = {j}: telescoping gap {:.1e}", side.label(), a.sub(&b)?.max_abs());
        }
    }
    Ok(())
}
