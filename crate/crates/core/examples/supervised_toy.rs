//! Train on labeled switching sine waves and compare decoding modes.

use drhmm::evaluation::accuracy;
use drhmm::learning::{fit_supervised, LabeledSequence, LearningConfig, TrainingCorpus};
use drhmm::synth::{generate, ToyConfig};
use drhmm::InferenceMode;

fn main() -> drhmm::Result<()> {
    let train = generate(&ToyConfig { length: 1500, seed: 1, ..ToyConfig::default() })?;
    let test = generate(&ToyConfig { seed: 2, ..ToyConfig::default() })?;

    let corpus = TrainingCorpus::single(LabeledSequence::labeled(train.windows, train.window_states)?)?;
    let model = fit_supervised(&corpus, 3, &LearningConfig::default())?;
    let selection = model.metadata.selection.as_ref().expect("cross-validated");
    println!("sigma {:.3}, rho {}", selection.sigma, selection.ridge);
    println!("estimated transitions:\n{:.3}", model.transition_model.transitions());

    for mode in [InferenceMode::Independent, InferenceMode::Filter, InferenceMode::Smooth] {
        let states = model.decode(&test.windows, mode)?;
        println!("{mode:?}: accuracy {:.3}", accuracy(&test.window_states, &states)?);
    }
    Ok(())
}
