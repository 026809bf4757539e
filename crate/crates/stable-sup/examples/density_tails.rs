//! Shows the marginal density approaching its power-law tail: x^(alpha+1) f(x)
//! flattens onto the jump coefficient as x grows, separately for each side.

use stable_sup::density::density_f;
use stable_sup::validate_params;

fn main() {
    let p = validate_params(1.4, 1.0, 0.4).unwrap();
    println!(
        "alpha = {}, c+ = {}, c- = {}, rho = {:.6}",
        p.alpha, p.c_plus, p.c_minus, p.rho
    );
    println!(
        "{:>10} {:>16} {:>16}",
        "x", "x^(a+1) f(x)", "|x|^(a+1) f(-x)"
    );
    for k in 0..8 {
        let x = 2.0_f64 * 4.0_f64.powi(k);
        let right = density_f(&p, x).unwrap() * x.powf(p.alpha + 1.0);
        let left = density_f(&p, -x).unwrap() * x.powf(p.alpha + 1.0);
        println!("{x:>10.1} {right:>16.8} {left:>16.8}");
    }

    let deep = 2.0_f64 * 4.0_f64.powi(9);
    let right = density_f(&p, deep).unwrap() * deep.powf(p.alpha + 1.0);
    let left = density_f(&p, -deep).unwrap() * deep.powf(p.alpha + 1.0);
    let ok_r = (right - p.c_plus).abs() / p.c_plus < 0.01;
    let ok_l = (left - p.c_minus).abs() / p.c_minus < 0.01;
    if ok_r && ok_l {
        println!("✓ PASS tails converge to c+ = {} and c- = {}", p.c_plus, p.c_minus);
    } else {
        println!("✗ FAIL deep-tail limits {right:.4} / {left:.4}");
        std::process::exit(1);
    }
}
