//! A_2 and Fujii-Wilson constants of |x|^alpha on dyadic cubes.
use roughsing::weights::{centered_power_ap, report_with};
use roughsing::{make_grid, CubeFamily, Weight};

fn main() -> roughsing::Result<()> {
    let spec = make_grid(2, 128, 4.0)?;
    let family = CubeFamily::dyadic(spec);
    let ainf = CubeFamily::dyadic_up_to(spec, 32);
    println!("{} cubes, family hash {}", family.len(), &family.hash()[..12]);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "alpha", "[w]_A2", "centered", "(w)", "{w}");
    for alpha in [-0.8, -0.4, 0.0, 0.4, 0.8, 1.2] {
        let w = Weight::power(alpha, 2)?;
        let r = report_with(&w, 2.0, &family, &ainf)?;
        println!("{alpha:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", r.ap, centered_power_ap(alpha, 2.0, 2), r.round, r.curly);
    }
    Ok(())
}
