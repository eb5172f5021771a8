//! Volume contraction, lobe symbols and the mirror symmetry of the Lorenz flow.

use istlab::attractor::{divergence, integrate, symbolize, volume_contraction, LorenzParams, LorenzState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = LorenzParams::default();
    let base = LorenzState::new(1.0, 1.0, 20.0);
    let h = 1e-6;
    let cloud = [
        base,
        LorenzState::new(1.0 + h, 1.0, 20.0),
        LorenzState::new(1.0, 1.0 + h, 20.0),
        LorenzState::new(1.0, 1.0, 20.0 + h),
    ];
    println!("analytic divergence   {:.10}", divergence(&params));
    println!("measured log-volume   {:.10}", volume_contraction(&cloud, &params, 0.5, 1e-3)?);
    if let Some([a, b]) = params.equilibria() {
        println!("equilibria ({:.4}, {:.4}, {}) and ({:.4}, {:.4}, {})", a.x, a.y, a.z, b.x, b.y, b.z);
    }

    let traj = integrate(&LorenzState::new(1.0, 1.0, 1.0), &params, 1e-3, 40_000)?;
    let symbols = symbolize(&traj, 20.0)?;
    let mirrored = symbolize(&traj.mirrored(), 20.0)?;
    println!("\nsymbols on [20, 40]: {symbols}");
    println!("mirrored trajectory: {mirrored}");
    println!("mirror swaps L and R: {}", mirrored == symbols.swapped());
    Ok(())
}
