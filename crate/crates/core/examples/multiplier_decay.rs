//! Annulus maxima of m_{i,k} = K_k^ psi(2^{k -/+ i} .) and their fitted slopes.
use roughsing::fit::{fit_rate, FitScale};
use roughsing::lp::{MollifierProfile, Side};
use roughsing::operators::{annulus_max, second_derivative_constant, second_derivative_ratio};
use roughsing::SphereSymbol;

fn main() -> roughsing::Result<()> {
    let omega = SphereSymbol::from_harmonic(2, 2, 1.0)?;
    let profile = MollifierProfile::new();
    let is: Vec<i64> = (2..=6).collect();
    let x: Vec<f64> = is.iter().map(|&i| 2f64.powi(-i as i32)).collect();
    for side in [Side::Low, Side::High] {
        let y: Vec<f64> = is.iter().map(|&i| annulus_max(&omega, 0, i, side, &profile, 16, 48)).collect();
        for (i, v) in is.iter().zip(&y) {
            println!("{} i = {i}: max |m| = {v:.4e}", side.label());
        }
        let fit = fit_rate("multiplier", "2^-i", FitScale::LogLog, &x, &y)?;
        println!("  slope {:.3}", fit.slope);
    }
    let c = second_derivative_constant(omega.lq_norm(1.0)?, &profile);
    let d2 = second_derivative_ratio(&omega, 1, 3, Side::High, &profile, 6, 24);
    println!("second derivative / 2^k = {d2:.3} (bound {c:.1})");
    Ok(())
}
