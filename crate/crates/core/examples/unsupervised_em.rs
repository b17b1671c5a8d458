//! Learn two regimes without labels.

use drhmm::learning::{fit_unsupervised, permutation_agreement, LabeledSequence, TrainingCorpus, UnsupervisedConfig};
use drhmm::synth::{generate, ToyConfig};
use drhmm::InferenceMode;

fn main() -> drhmm::Result<()> {
    let data = generate(&ToyConfig {
        transitions: vec![vec![0.98, 0.02], vec![0.02, 0.98]],
        initial: vec![0.5, 0.5],
        frequencies: vec![0.1, 0.6],
        noise_std: 0.25,
        length: 2000,
        window: 4,
        seed: 3,
    })?;
    let corpus = TrainingCorpus::single(LabeledSequence::unlabeled(data.windows.clone()))?;
    let model = fit_unsupervised(&corpus, 2, &UnsupervisedConfig::default())?;

    let meta = &model.metadata;
    println!("EM iterations {}, converged {:?}", meta.em_iterations, meta.converged);
    let changes: Vec<String> = meta.em_changes.iter().map(|c| format!("{c:.2e}")).collect();
    println!("parameter change per iteration: {}", changes.join(", "));
    println!("learned transitions:\n{:.3}", model.transition_model.transitions());
    let states = model.decode(&data.windows, InferenceMode::Smooth)?;
    println!("agreement with truth: {:.3}", permutation_agreement(&data.window_states, &states, 2)?);
    Ok(())
}
