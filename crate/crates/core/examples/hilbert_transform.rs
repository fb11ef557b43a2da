//! The truncated kernel 1/x against the multiplier -i pi sgn(xi).
use std::f64::consts::PI;

use roughsing::grid::lp_norm;
use roughsing::operators::apply_t_eps;
use roughsing::{make_grid, Complex, GridFunction, SphereSymbol};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(1, 4096, 64.0)?;
    let omega = SphereSymbol::line(1.0, -1.0)?;
    let symbol: Vec<Complex> = (0..spec.len()).map(|i| Complex::new(0.0, -PI * spec.frequency(i)[0].signum())).collect();
    for xi0 in [0.5, 1.0, 1.5, 2.0, 4.0] {
        let f = GridFunction::sample(spec, |x| Complex::new(0.0, xi0 * x[0]).exp() * (-x[0] * x[0] / 32.0).exp())?;
        let exact = f.apply_multiplier(&symbol);
        let out = apply_t_eps(&omega, &f, spec.spacing(), 1)?;
        let err = lp_norm(&out.sub(&exact)?, 2.0, None)? / lp_norm(&exact, 2.0, None)?;
        println!("xi0 = {xi0:.1}: relative L2 error {:.3}%", 100.0 * err);
    }
    Ok(())
}
