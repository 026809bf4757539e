//! Compares the numerically inverted marginal density against the
//! closed-form Cauchy density, the one stable case with an elementary
//! formula at these parameter conventions.

use stable_sup::density::density_f;
use stable_sup::validate_params;

fn main() {
    // alpha = 1, symmetric: the process at unit time is Cauchy with a
    // scale fixed by the jump coefficients.
    let p = validate_params(1.0, 1.0, 1.0).unwrap();
    let gamma = p.scale;
    let closed_form = |x: f64| gamma / (std::f64::consts::PI * (gamma * gamma + x * x));

    println!("Cauchy scale from jump coefficients: {gamma:.6}");
    println!("{:>10} {:>14} {:>14} {:>10}", "x", "inverted", "closed form", "rel err");

    let mut worst: f64 = 0.0;
    for &x in &[0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0] {
        let f = density_f(&p, x).unwrap();
        let exact = closed_form(x);
        let rel = (f - exact).abs() / exact;
        worst = worst.max(rel);
        println!("{x:>10.2} {f:>14.9} {exact:>14.9} {rel:>10.2e}");
    }

    if worst < 1e-8 {
        println!("✓ PASS inversion matches the Cauchy closed form (worst rel err {worst:.2e})");
    } else {
        println!("✗ FAIL worst relative error {worst:.2e}");
        std::process::exit(1);
    }
}
