//! With no positive jumps the supremum creeps upward continuously and its
//! density collapses to alpha times the marginal density. This example
//! checks the closed-form collapse against an independent simulation.

use stable_sup::identities::spectrally_negative_m;
use stable_sup::mc::{extrapolate_levels, simulate_supremum_levels, MCConfig};
use stable_sup::validate_params;

fn main() {
    let p = validate_params(1.75, 0.0, 1.0).unwrap();
    println!("alpha = {}, rho = {:.6} (= 1/alpha)", p.alpha, p.rho);

    let cfg = MCConfig::new(150_000, 256, 512);
    let runs = simulate_supremum_levels(&p, &cfg).unwrap();
    let table = extrapolate_levels(&runs).unwrap();
    let errs = table.errbars.as_ref().unwrap();

    println!("{:>10} {:>12} {:>12} {:>8}", "x", "alpha f(x)", "MC m(x)", "sigmas");
    let mut bad = 0;
    let mut shown = 0;
    for i in (0..table.len()).step_by(table.len() / 14) {
        let x = table.grid[i];
        if x < 0.05 || x > 5.0 {
            continue;
        }
        let exact = spectrally_negative_m(&p, x).unwrap();
        let z = (table.values[i] - exact) / errs[i];
        if z.abs() > 4.0 {
            bad += 1;
        }
        shown += 1;
        println!("{x:>10.4} {exact:>12.6} {:>12.6} {z:>8.2}", table.values[i]);
    }

    if bad == 0 && shown > 5 {
        println!("✓ PASS simulation sits on alpha f within error bars");
    } else {
        println!("✗ FAIL {bad} of {shown} points off by more than 4 sigma");
        std::process::exit(1);
    }
}
