//! Norms of the low and high commutator pieces against N(j-1).
use roughsing::lp::{JumpSchedule, Side};
use roughsing::normlab::{decay_experiment, CommutatorSetting, NormOptions};
use roughsing::operators::LipschitzSymbol;
use roughsing::{make_grid, SphereSymbol};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(2, 128, 8.0)?;
    let omega = SphereSymbol::from_harmonic(2, 2, 1.0)?;
    let b = LipschitzSymbol::linear(spec, &[1.0, 0.0])?;
    let setting = CommutatorSetting::new(b, &omega, JumpSchedule::Pow2)?;
    let options = NormOptions { trials: 1, max_iterations: 80, tolerance: 1e-6 };
    for side in [Side::Low, Side::High] {
        let d = decay_experiment(&setting, side, 3, 2.0, None, &options, 1)?;
        for r in &d.rows {
            println!("{} j = {} N(j-1) = {:>2}: {:.4e}", side.label(), r.j, r.n_prev, r.estimate.value);
        }
        println!("  strictly decreasing: {}", d.strictly_decreasing);
    }
    Ok(())
}
