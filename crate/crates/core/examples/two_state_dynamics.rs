//! Scalar two-state recursions, and why no normalization is needed.

use drhmm::inference::ratio_form::{two_state_backward, two_state_forward};
use drhmm::inference::standard::forward_unnormalized;
use drhmm::inference::{emission_likelihood_matrix, forward_ratio, DensityRatios, GaussianEmissions, TransitionModel};
use drhmm::LikelihoodRatioProvider;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> drhmm::Result<()> {
    let emissions = GaussianEmissions::new(vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 1.0).unwrap();

    for alpha in [0.6, 0.9, 0.98] {
        let model = TransitionModel::symmetric_two_state(alpha)?;
        let mut state = 0usize;
        let observations: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                if rng.random::<f64>() > alpha {
                    state = 1 - state;
                }
                vec![if state == 0 { -1.0 } else { 1.0 } + noise.sample(&mut rng)]
            })
            .collect();
        let provider = DensityRatios(&emissions);
        let w12: Vec<f64> = observations.iter().map(|y| provider.ratio(0, 1, y)).collect::<drhmm::Result<_>>()?;

        let forward = two_state_forward(&model, &w12)?;
        let backward = two_state_backward(&model, &w12)?;
        let general = forward_ratio(&model, &provider, &observations)?;
        let gap = forward.iter().zip(&general).map(|(a, g)| (a - g[(0, 1)]).abs() / a.abs()).fold(0.0, f64::max);

        let raw = forward_unnormalized(&model, &emission_likelihood_matrix(&emissions, &observations)?)?;
        let zero_at = raw.row_iter().position(|r| r.iter().all(|&v| v == 0.0)).map(|t| t + 1);
        let range = forward.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        println!(
            "alpha {alpha}: forward ratio in [{:.2e}, {:.2e}], backward finite {}, closed vs general {gap:.1e}, \
             unnormalized forward hits zero at t = {zero_at:?}",
            range.0,
            range.1,
            backward.iter().all(|b| b.is_finite())
        );
    }
    Ok(())
}
