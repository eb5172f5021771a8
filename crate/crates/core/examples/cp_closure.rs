//! Products stay on the grid; sums usually do not.

use istlab::cp::{self, make_cp, niven_classify, try_add};
use num_bigint::BigInt;
use num_rational::BigRational;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = make_cp(1, 1, 8)?;
    let b = make_cp(3, 2, 8)?;
    let prod = cp::mul(&a, &b);
    println!("{a} * {b} = {prod} (in C_64: {})", cp::is_member(&prod, &BigInt::from(64)));

    println!("\nequal-amplitude sums on the p = 12 phase grid:");
    let base = make_cp(1, 0, 12)?;
    for n in 0..12 {
        let sum = try_add(&base, &make_cp(1, n, 12)?);
        let amp2 = sum.amp2.as_ref().map(|v| v.to_string()).unwrap_or(sum.amp2_digits.clone());
        println!("  dturn = {n:>2}/12  |a+b|^2 = {amp2:<22}  {}", sum.verdict);
    }

    println!("\ncosines of rational turns:");
    for d in [1, 2, 3, 4, 5, 6, 7, 8, 12, 60] {
        let class = niven_classify(&BigRational::new(1.into(), d.into()));
        println!("  cos(2pi/{d:<2}) = {}", class.value);
    }

    let (x, y) = cp::gap_witness(8)?;
    println!("\ngap witness for p = 8: {x} + {y} -> {}", try_add(&x, &y).verdict);

    let m = cp::momentum_difference(&BigRational::new(1.into(), 8.into()), &BigRational::from_integer(1.into()))?;
    println!("momentum factor at k*dx = pi/4: amp^2 = {}, {}", m.amp2, m.verdict);
    Ok(())
}
