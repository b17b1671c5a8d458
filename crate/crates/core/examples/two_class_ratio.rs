//! Estimate p(y)/q(y) for N(0,1) over N(1,1) and compare with exp(0.5 - y).

use drhmm::cv::DEFAULT_RIDGE_GRID;
use drhmm::kernel::{bandwidth_grid, median_heuristic, KernelBasis};
use drhmm::ratio::{cross_validate_two_class, fit_two_class};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> drhmm::Result<()> {
    let n = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut data = Vec::with_capacity(2 * n);
    for shift in [0.0, 1.0] {
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(vec![z + shift]);
        }
    }
    // true marks the numerator sample
    let labels: Vec<bool> = (0..2 * n).map(|i| i < n).collect();

    let anchor = median_heuristic(&data, 1000, 7)?;
    let basis = KernelBasis::build(&data, 100, anchor, 7)?;
    let sel = cross_validate_two_class(&data, &labels, &basis, &bandwidth_grid(anchor), &DEFAULT_RIDGE_GRID, 5, 7)?;
    println!("selected sigma {:.3}, rho {}, held-out score {:.4}", sel.sigma, sel.ridge, sel.score);

    let model = fit_two_class(&data, &labels, &basis.with_bandwidth(sel.sigma)?, sel.ridge)?;
    println!("{:>6} {:>10} {:>10}", "y", "estimate", "exact");
    for y in [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        println!("{y:>6.2} {:>10.4} {:>10.4}", model.evaluate(&[y])?, (0.5f64 - y).exp());
    }
    Ok(())
}
