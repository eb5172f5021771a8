//! Square roots of -1 and beyond, acting on bit strings.

use istlab::bits::{omega_apply, order_of, BitString, PhaseOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s: BitString = "++-+".parse()?;
    let mut cur = s.clone();
    println!("S         = {s}");
    for k in 1..=8 {
        cur = omega_apply(&cur)?;
        println!("Omega^{k} S = {cur}");
    }

    let i = PhaseOperator::new(4, 2)?;
    println!("\ni S = {}, i^2 S = {}", i.apply(&s)?, i.then(&i)?.apply(&s)?);

    for k in [1, 2, 4, 8, 10, 12] {
        let p = 1usize << k;
        println!("order of Omega_{p} = {}", order_of(p)?);
    }
    Ok(())
}
