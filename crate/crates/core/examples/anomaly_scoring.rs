//! Outlier scores from a fitted posterior model.

use drhmm::evaluation::{equal_error_rate, roc_auc};
use drhmm::learning::{fit_supervised, LabeledSequence, LearningConfig, TrainingCorpus};
use drhmm::synth::{generate, ToyConfig};

fn main() -> drhmm::Result<()> {
    let train = generate(&ToyConfig { seed: 4, ..ToyConfig::default() })?;
    let corpus = TrainingCorpus::single(LabeledSequence::labeled(train.windows, train.window_states)?)?;
    let model = fit_supervised(&corpus, 3, &LearningConfig::default())?;

    // The second half of the test sequence is pushed off the training support.
    let test = generate(&ToyConfig { length: 400, seed: 5, ..ToyConfig::default() })?;
    let half = test.windows.len() / 2;
    let frames: Vec<Vec<f64>> = test
        .windows
        .iter()
        .enumerate()
        .map(|(t, y)| if t < half { y.clone() } else { y.iter().map(|v| v + 3.0).collect() })
        .collect();
    let scores = model.outlier_scores(&frames)?;
    let labels: Vec<bool> = (0..frames.len()).map(|t| t >= half).collect();

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    println!("mean score in support {:.3}, shifted {:.3}", mean(&scores[..half]), mean(&scores[half..]));
    println!("AUC {:.4}, EER {:.4}", roc_auc(&scores, &labels)?, equal_error_rate(&scores, &labels)?);
    Ok(())
}
