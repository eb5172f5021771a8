//! A fixed-point attractor at r = 1 and the limit cycle built on it.

use istlab::attractor::{limit_cycle_flow, logistic_flow, FlowState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>5} {:>20} {:>10}", "r0", "t", "r(t)", "rk4 error");
    for r0 in [0.1, 0.5, 2.0, 10.0] {
        for t in [1.0, 5.0, 10.0] {
            let s = logistic_flow(r0, t, 1e-3)?;
            println!("{r0:>5} {t:>5} {:>20.15} {:>10.2e}", s.analytic, s.discrepancy());
        }
    }

    println!();
    for r0 in [0.05, 1.0, 3.0] {
        let s = limit_cycle_flow(FlowState { r: r0, phi: 0.0 }, 15.0, 1e-3)?;
        println!("start r = {r0:<4} -> r = {:.9}, phi = {:.6}", s.r, s.phi);
    }
    Ok(())
}
