//! Born frequencies as counts over finite ensembles.

use istlab::ensemble::{born_frequency, correlation, make_qubit, singlet_ensemble, tensor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = make_qubit(3, 0, 8)?;
    println!("qubit with m = 3, p = 8: P(+1) = {}", born_frequency(&x, 1)?);
    let y = x.apply_phase(5)?;
    println!("after a phase e^(5 i pi/8): P(+1) = {}, bits {}", born_frequency(&y, 1)?, y.phased_bits()?);

    let pair = tensor(&make_qubit(1, 0, 4)?, &make_qubit(2, 0, 4)?);
    print!("\njoint table of a 1/4 and a 1/2 qubit:\n{}", pair.frequency_csv()?);

    println!("\nsinglet correlations at p = 16:");
    for m in (0..=16).step_by(4) {
        let s = singlet_ensemble(16, m)?;
        println!("  m = {m:>2}: cos theta = {:>4}, correlation = {}", s.cos_theta(), correlation(&s));
    }
    Ok(())
}
