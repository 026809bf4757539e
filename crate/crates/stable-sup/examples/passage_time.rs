//! Builds the first-passage-time density at a fixed level from a
//! supremum table, checks it integrates to one, and shows the late-time
//! power decay t^-(rho+1) flattening out.

use stable_sup::identities::{passage_density, passage_survival, DensityFn, TailDefaults};
use stable_sup::mc::{extrapolate_levels, simulate_supremum_levels, MCConfig};
use stable_sup::quad::adaptive_gk;
use stable_sup::validate_params;

fn main() {
    let p = validate_params(1.5, 1.0, 1.0).unwrap();
    let cfg = MCConfig::new(150_000, 256, 33);
    let runs = simulate_supremum_levels(&p, &cfg).unwrap();
    let m_table = extrapolate_levels(&runs).unwrap();
    let m = DensityFn::from_table_auto(&m_table, TailDefaults::supremum(&p))
        .unwrap()
        .normalized();

    let x = 2.0;
    println!("passage level x = {x}");
    println!("{:>10} {:>14} {:>12} {:>14}", "t", "h(t)", "survival", "t^(rho+1) h");
    for k in -3..=4 {
        let t = 10.0_f64.powi(k);
        let h = passage_density(&m, &p, x, t).unwrap();
        let s = passage_survival(&m_table, &p, x, t).unwrap();
        println!("{t:>10.3} {h:>14.6e} {s:>12.6} {:>14.6}", t.powf(p.rho + 1.0) * h);
    }

    // The passage time is finite with probability one here, so its
    // density must carry unit mass.
    let result = adaptive_gk(
        &|u| {
            // substitute t = u/(1-u) to cover the half-line
            let t = u / (1.0 - u);
            passage_density(&m, &p, x, t).unwrap() / ((1.0 - u) * (1.0 - u))
        },
        0.0,
        1.0,
        1e-10,
        1e-10,
        400,
    );
    let mass = result.value;
    println!("integral of h over (0, inf): {mass:.8}");
    if (mass - 1.0).abs() < 1e-3 {
        println!("✓ PASS passage density carries unit mass");
    } else {
        println!("✗ FAIL mass {mass:.6}");
        std::process::exit(1);
    }
}
