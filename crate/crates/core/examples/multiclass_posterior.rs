//! Fit kernel least-squares class posteriors and read off likelihood ratios.

use drhmm::cv::DEFAULT_RIDGE_GRID;
use drhmm::kernel::{bandwidth_grid, median_heuristic, KernelBasis};
use drhmm::posterior::{cross_validate_multiclass, fit_posteriors};
use drhmm::LikelihoodRatioProvider;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> drhmm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let means = [[-2.0, 0.0], [2.0, 0.0], [0.0, 2.5]];
    let noise = Normal::new(0.0, 0.8).unwrap();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    // Unbalanced classes: the ratio must undo the class priors.
    for (class, (m, count)) in means.iter().zip([300, 150, 75]).enumerate() {
        for _ in 0..count {
            data.push(vec![m[0] + noise.sample(&mut rng), m[1] + noise.sample(&mut rng)]);
            labels.push(class);
        }
    }

    let anchor = median_heuristic(&data, 1000, 3)?;
    let basis = KernelBasis::build(&data, 100, anchor, 3)?;
    let sel = cross_validate_multiclass(&data, &labels, 3, &basis, &bandwidth_grid(anchor), &DEFAULT_RIDGE_GRID, 5, 3)?;
    let model = fit_posteriors(&data, &labels, 3, &basis.with_bandwidth(sel.sigma)?, sel.ridge)?;
    println!("sigma {:.3}, rho {}, class counts {:?}", sel.sigma, sel.ridge, model.class_counts());

    for y in [[-2.0, 0.0], [0.0, 0.0], [0.0, 2.5]] {
        let q = model.posteriors(&y)?;
        let w = model.ratio_matrix(&y)?;
        println!(
            "y = {y:?}: posteriors [{:.3}, {:.3}, {:.3}], w12 = {:.3}, w13 = {:.3}, class {}",
            q[0],
            q[1],
            q[2],
            w[(0, 1)],
            w[(0, 2)],
            model.classify(&y)? + 1
        );
    }
    Ok(())
}
