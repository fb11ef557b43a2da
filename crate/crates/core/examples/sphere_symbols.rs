//! Symbols on the circle: moments, cancellation projection, L^q norms.
use roughsing::SphereSymbol;

fn main() -> roughsing::Result<()> {
    for m in [0, 1, 2, 3] {
        let omega = SphereSymbol::from_harmonic(2, m, 1.0)?;
        println!("cos {m}theta: moments {:.2e}, cancellation {}", omega.moments().max_abs(), omega.check_cancellation(1e-10));
    }
    let rough = SphereSymbol::from_fn(256, |t| if t.sin() > 0.3 { 1.0 } else { -0.2 } + 0.4 * t.cos())?;
    println!("step symbol moments before projection {:.3e}", rough.moments().max_abs());
    let projected = rough.project_cancellation()?;
    println!("after projection                      {:.3e}", projected.moments().max_abs());
    for q in [1.0, 2.0, f64::INFINITY] {
        println!("||Omega||_{q} = {:.6}", projected.lq_norm(q)?);
    }
    Ok(())
}
