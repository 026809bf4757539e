//! Runs the full verification pipeline at a modest Monte Carlo budget and
//! prints the law-by-law report. At this budget some skeleton-resolution
//! bias remains, so a handful of laws may sit outside tolerance; the point
//! here is the report machinery, not a certified pass.

use stable_sup::asymptotics::{verify_all, Artifacts};
use stable_sup::density::{density_f, density_f_derivative};
use stable_sup::identities::{passage_density, DensityFn, TailDefaults};
use stable_sup::mc::{
    estimate_p_up, extrapolate_levels, simulate_meander_levels, simulate_supremum_levels, MCConfig,
};
use stable_sup::validate_params;

fn main() {
    let p = validate_params(1.5, 1.0, 1.0).unwrap();
    let cfg = MCConfig::new(250_000, 128, 5150);

    println!("simulating supremum...");
    let sup_runs = simulate_supremum_levels(&p, &cfg).unwrap();
    let m_table = extrapolate_levels(&sup_runs).unwrap();

    println!("simulating meander...");
    let meander_runs = simulate_meander_levels(&p, &cfg).unwrap();
    let ptilde_table = extrapolate_levels(&meander_runs).unwrap();
    let p_up_table = estimate_p_up(&p, &ptilde_table).unwrap();

    let m_fn = DensityFn::from_table_auto(&m_table, TailDefaults::supremum(&p))
        .unwrap()
        .normalized();
    let f = |x: f64| density_f(&p, x).unwrap_or(f64::NAN);
    let fd = |x: f64| density_f_derivative(&p, x, 1).unwrap_or(f64::NAN);
    let h = |t: f64| passage_density(&m_fn, &p, 2.0, t).unwrap_or(f64::NAN);

    let report = verify_all(
        &p,
        &Artifacts {
            f: &f,
            f_deriv: Some(&fd),
            m: &m_table,
            ptilde: &ptilde_table,
            p_up: &p_up_table,
            h: &h,
            h_probe_x: 2.0,
        },
    );
    print!("{}", report.render_text());

    let passed = report.entries.iter().filter(|e| e.verdict == stable_sup::asymptotics::Verdict::Pass).count();
    println!("{passed} of {} laws passed at this budget", report.entries.len());
}
