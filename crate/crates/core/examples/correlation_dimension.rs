//! Grassberger-Procaccia dimension of a line, a square and the Lorenz attractor.

use istlab::attractor::{correlation_dimension, sample_attractor, LorenzParams, LorenzState, RadiusRange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let line: Vec<[f64; 1]> = (0..10_000).map(|_| [rng.gen::<f64>()]).collect();
    let square: Vec<[f64; 2]> = (0..10_000).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();

    let est = correlation_dimension(&line, &RadiusRange { min: 1e-3, max: 1e-2, count: 10 })?;
    println!("line    D2 = {:.4} (R^2 {:.6})", est.dimension, est.r_squared);
    let est = correlation_dimension(&square, &RadiusRange { min: 3e-3, max: 3e-2, count: 10 })?;
    println!("square  D2 = {:.4} (R^2 {:.6})", est.dimension, est.r_squared);

    let pts = sample_attractor(&LorenzState::new(1.0, 1.0, 1.0), &LorenzParams::default(), 1e-3, 20.0, 50, 20_000)?;
    let est = correlation_dimension(&pts, &RadiusRange { min: 0.5, max: 4.0, count: 12 })?;
    println!("Lorenz  D2 = {:.4} (R^2 {:.6}, max residual {:.4})", est.dimension, est.r_squared, est.max_residual);
    print!("\n{}", est.to_csv());
    Ok(())
}
