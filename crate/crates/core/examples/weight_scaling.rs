//! ||C_Omega||_{L^2(w)} against [w]_A2 over power weights, on a small grid.
use roughsing::lp::JumpSchedule;
use roughsing::normlab::{weight_scaling_experiment, CommutatorSetting, NormOptions};
use roughsing::operators::LipschitzSymbol;
use roughsing::{make_grid, CubeFamily, SphereSymbol};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(2, 64, 4.0)?;
    let omega = SphereSymbol::from_harmonic(2, 2, 1.0)?;
    let b = LipschitzSymbol::linear(spec, &[1.0, 0.0])?;
    let setting = CommutatorSetting::new(b, &omega, JumpSchedule::Pow2)?;
    let options = NormOptions { trials: 1, max_iterations: 60, tolerance: 1e-6 };
    let family = CubeFamily::dyadic(spec);
    let r = weight_scaling_experiment(&setting, &[0.0, 0.4, -0.4, 0.8, -0.8], 2.0, &family, &family, &options, 2)?;
    for row in &r.rows {
        println!(
            "alpha {:+.1}: [w]_A2 {:.3}, norm {:.4}, predicted {:.3}, ratio {:.4}",
            row.alpha, row.report.ap, row.estimate.value, row.predicted, row.ratio
        );
    }
    println!("log-log slope {:.3}, ratio spread {:.3}", r.fit.slope, r.ratio_spread);
    Ok(())
}
