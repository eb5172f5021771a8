//! Nested disks of trajectories and their ultrametric distances.

use istlab::padic::{self, distance, DiskAddress, LabelScheme, MetricConvention, PadicInt};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 4;
    let scheme = LabelScheme::two_cluster(p)?;
    let points: Vec<PadicInt> = [[0, 0, 1], [0, 0, 3], [0, 2, 1], [1, 0, 0]]
        .iter()
        .map(|d| PadicInt::new(p, d.to_vec()))
        .collect::<Result<_, _>>()?;

    for x in &points {
        let addr = DiskAddress::from_padic(x, &scheme)?;
        let labels: Vec<&str> = addr.entries.iter().map(|e| e.label.as_str()).collect();
        println!("{x} = {:>2}  disks {}", x.value(), labels.join(" > "));
    }

    println!("\nstandard metric p^-v:");
    print!("{}", padic::distance_matrix_csv(&points, MetricConvention::Standard)?);
    let far = distance(&points[0], &points[3], MetricConvention::Shifted)?;
    println!("\npoints in different coarsest disks are {far} apart under p^(1-v)");

    let sum = padic::add(&points[1], &points[2])?;
    let minus = padic::neg(&points[1]);
    println!("{} + {} = {sum}; -{} = {minus}", points[1], points[2], points[1]);
    Ok(())
}
