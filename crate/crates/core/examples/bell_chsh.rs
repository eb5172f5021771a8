//! CHSH on the singlet grid, converging to 2*sqrt(2) as p doubles.

use istlab::bell::{self, max_local_abs_s, run_bell_experiment, tsirelson_settings, OffGridPolicy, TSIRELSON};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = tsirelson_settings();
    match run_bell_experiment(64, &settings, OffGridPolicy::Reject) {
        Ok(_) => println!("unexpected: 45 degrees on the p = 64 grid"),
        Err(e) => println!("strict run: {e}"),
    }

    println!("\n{:>8} {:>14} {:>12} {:>10}", "p", "|S|", "gap", "bound 8/p");
    for k in (4..=20).step_by(2) {
        let p = 1u64 << k;
        let r = run_bell_experiment(p, &settings, OffGridPolicy::Nearest)?;
        let abs_s = r.abs_s_f64();
        println!("{p:>8} {abs_s:>14.10} {:>12.3e} {:>10.3e}", TSIRELSON - abs_s, 8.0 / p as f64);
    }

    let r = run_bell_experiment(1 << 10, &settings, OffGridPolicy::Nearest)?;
    println!("\np = 1024 exact S = {}", r.s);
    println!("best local deterministic |S| = {}", max_local_abs_s());
    println!("all-equal settings give S = {}", bell::run_grid_experiment(8, [0; 4])?.s);
    Ok(())
}
