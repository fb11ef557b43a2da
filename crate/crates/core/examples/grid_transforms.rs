//! DFT round trip, Parseval and a spectral derivative on a 2-d torus.
use roughsing::{make_grid, Complex, GridFunction};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(2, 128, 4.0)?;
    let f = GridFunction::sample_real(spec, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp())?;
    let back = f.dft().idft();
    println!("round trip error  {:.2e}", back.sub(&f)?.max_abs());

    let space: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * spec.cell_volume();
    let freq: f64 = f.dft().values().iter().map(|v| v.norm_sqr()).sum();
    println!("parseval          {space:.12} vs {freq:.12}");

    // d/dx_1 as the multiplier i xi_1
    let symbol: Vec<Complex> = (0..spec.len()).map(|i| Complex::new(0.0, spec.frequency(i)[0])).collect();
    let df = f.apply_multiplier(&symbol);
    let exact = GridFunction::sample_real(spec, |x| -2.0 * x[0] * (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp())?;
    println!("spectral d/dx1    {:.2e}", df.sub(&exact)?.max_abs());
    Ok(())
}
