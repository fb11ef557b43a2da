//! Change of measure: the L^2(w) norm of a piece against its unweighted and w^{1+eps} norms.
use roughsing::lp::JumpSchedule;
use roughsing::normlab::{interpolation_consistency_experiment, sw_combine, CommutatorSetting, NormOptions};
use roughsing::operators::LipschitzSymbol;
use roughsing::weights::report_with;
use roughsing::{make_grid, CubeFamily, SphereSymbol, Weight};

fn main() -> roughsing::Result<()> {
    println!("sw_combine(4, 9, 1/2) = {}", sw_combine(4.0, 9.0, 0.5));
    let spec = make_grid(2, 64, 4.0)?;
    let omega = SphereSymbol::from_harmonic(2, 3, 1.0)?;
    let b = LipschitzSymbol::linear(spec, &[0.6, 0.8])?;
    let setting = CommutatorSetting::new(b, &omega, JumpSchedule::Pow2)?;
    let family = CubeFamily::dyadic(spec);
    let w = Weight::power(0.5, 2)?;
    let report = report_with(&w, 2.0, &family, &family)?;
    let r = interpolation_consistency_experiment(&setting, 1, 2.0, &w, &report, 1.0, 0.5, 1e-6, &NormOptions::default(), 0)?;
    println!("eps {:.4}: k0 {:.4}, k1 {:.4}", r.epsilon, r.k0, r.k1);
    println!("measured {:.4} <= combined {:.4}: {}", r.measured, r.combined_proof, r.holds);
    for g in &r.geometric {
        println!("R = {}: sum / R = {:.4} (C = {:.3})", g.r, g.ratio, r.geometric_constant);
    }
    Ok(())
}
