//! Size and smoothness ratios of the piece kernels, and the Dini norms of their moduli.
use roughsing::lp::{JumpSchedule, Side};
use roughsing::normlab::CommutatorSetting;
use roughsing::operators::{dini_norm, kernel_estimate_check, sample_triples, LipschitzSymbol};
use roughsing::{make_grid, SphereSymbol};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(2, 128, 8.0)?;
    let omega = SphereSymbol::from_harmonic(2, 2, 1.0)?;
    let b = LipschitzSymbol::linear(spec, &[1.0, 0.0])?;
    let s = CommutatorSetting::new(b, &omega, JumpSchedule::Pow2)?;
    let samples = sample_triples(&spec, 200, 3);
    for side in [Side::Low, Side::High] {
        for j in 1..=3 {
            let r = kernel_estimate_check(&s.b, &s.bank, j, side, &s.schedule, &s.profile, &samples)?;
            println!("{} j = {j}: size {:.3}, smoothness {:.3}", side.label(), r.size_ratio, r.smooth_ratio);
        }
    }
    for n in [1, 2, 4, 8, 16] {
        println!("Dini norm of min(1, 2^{n} t): {:.6}", dini_norm(n));
    }
    Ok(())
}
