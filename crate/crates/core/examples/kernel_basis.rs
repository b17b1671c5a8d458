//! Build a Gaussian kernel basis and inspect the bandwidth grid.

use drhmm::kernel::{bandwidth_grid, median_heuristic, KernelBasis, DEFAULT_MAX_CENTERS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> drhmm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let data: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();

    let anchor = median_heuristic(&data, 1000, 0)?;
    println!("median pairwise distance: {anchor:.4}");
    println!("bandwidth grid: {:?}", bandwidth_grid(anchor));

    let basis = KernelBasis::build(&data, DEFAULT_MAX_CENTERS, anchor, 0)?;
    println!("{} centers in {} dimensions, sigma {:.4}", basis.len(), basis.dim(), basis.sigma());

    let phi = basis.design_matrix(&data[..5])?;
    println!("design matrix for 5 points: {} x {}", phi.nrows(), phi.ncols());
    let phi0: Vec<String> = basis.features(&[0.0, 0.0])?.iter().take(5).map(|v| format!("{v:.4}")).collect();
    println!("features of the origin, first 5: {}", phi0.join(" "));
    Ok(())
}
