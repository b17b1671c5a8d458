//! Ratio-form forward-backward against the standard normalized recursions.

use drhmm::inference::{
    emission_likelihood_matrix, map_decode, ratio_forward_backward, DensityRatios, GaussianEmissions, ProbMessages,
    TransitionModel,
};

fn main() -> drhmm::Result<()> {
    let model = TransitionModel::from_rows(
        &[vec![0.9, 0.05, 0.05], vec![0.1, 0.8, 0.1], vec![0.05, 0.15, 0.8]],
        &[0.5, 0.3, 0.2],
    )?;
    let emissions = GaussianEmissions::new(vec![vec![-1.0], vec![0.0], vec![1.5]], vec![0.7, 0.5, 0.9])?;
    let observations: Vec<Vec<f64>> = [-1.2, -0.8, 0.1, -0.2, 0.3, 1.4, 2.0, 1.1, -0.9, -1.5]
        .iter()
        .map(|&y| vec![y])
        .collect();

    let messages = ratio_forward_backward(&model, &DensityRatios(&emissions), &observations)?;
    let filtering = messages.filtering_probs()?;
    let smoothing = messages.smoothing_probs()?;

    let lik = emission_likelihood_matrix(&emissions, &observations)?;
    let standard = ProbMessages::compute(&model, &lik)?;
    println!("max |ratio - standard| filtering {:.2e}", (&filtering - &standard.alpha).amax());
    println!("max |ratio - standard| smoothing {:.2e}", (&smoothing - &standard.gamma).amax());

    println!("forward ratio r12 at t=1..3: {:?}", messages.forward[..3].iter().map(|r| r[(0, 1)]).collect::<Vec<_>>());
    let states: Vec<usize> = map_decode(&smoothing).iter().map(|s| s + 1).collect();
    println!("smoothed MAP states: {states:?}");
    Ok(())
}
