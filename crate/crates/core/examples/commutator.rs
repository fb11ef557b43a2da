//! C_Omega f = sum_k [b, T_k] f with the contribution of every dyadic band.
use roughsing::grid::lp_norm;
use roughsing::operators::{apply_c, LipschitzSymbol};
use roughsing::{make_grid, GridFunction, SphereSymbol};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(2, 128, 8.0)?;
    let omega = SphereSymbol::from_harmonic(2, 2, 1.0)?;
    let b = LipschitzSymbol::linear(spec, &[1.0, 0.0])?;
    let f = GridFunction::sample_real(spec, |x| (-(x[0] * x[0] + x[1] * x[1])).exp() * (1.0 + x[1]))?;
    let out = apply_c(&b, &omega, &f, None, true)?;
    for (k, n) in &out.band_norms {
        println!("k = {k:>3}: ||[b, T_k] f|| = {n:.4e}");
    }
    println!("||C f|| = {:.4e}", lp_norm(&out.value, 2.0, None)?);
    let zero = apply_c(&LipschitzSymbol::constant(spec, 1.0), &omega, &f, None, true)?;
    println!("constant b gives {:.1e}", zero.value.max_abs());
    Ok(())
}
