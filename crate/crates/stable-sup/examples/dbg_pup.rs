use stable_sup::mc::{estimate_density, log_grid, simulate_meander, MCConfig};
use stable_sup::validate_params;

fn main() {
    let p = validate_params(1.75, 0.0, 1.0).unwrap();
    let run = simulate_meander(&p, &MCConfig::new(150_000, 64, 10)).unwrap();
    let mut pos: Vec<f64> = run.samples.iter().copied().filter(|&s| s > 0.0).collect();
    pos.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |q: f64| pos[(((pos.len() as f64 - 1.0) * q).round() as usize).min(pos.len() - 1)];
    let lo = q(0.001).max(run.increment_scale);
    let hi = q(0.9995).max(pos[pos.len() - 32.min(pos.len() / 2)]);
    println!(
        "accepted={} lo={lo:.4} hi={hi:.4} max_sample={:.4} q999={:.4}",
        pos.len(),
        pos[pos.len() - 1],
        q(0.999)
    );
    let grid = log_grid(lo, hi, 200);
    let t = estimate_density(&run, &grid).unwrap();
    let eb = t.errbars.as_ref().unwrap();
    let w = p.alpha * (1.0 - p.rho);
    println!("smoothing_ln={:?}", t.meta.smoothing_ln);
    for i in (140..200).step_by(2) {
        let rel = eb[i] / t.values[i];
        println!(
            "i={i} x={:.4} v={:.3e} rel_eb={:.3} usable={} wv={:.3e}",
            t.grid[i],
            t.values[i],
            rel,
            rel <= 0.25,
            t.values[i] * t.grid[i].powf(w)
        );
    }
}
