//! Density-ratio hidden Markov models.
//!
//! Observation densities are never modelled. A kernel least-squares fit
//! estimates class posteriors, and their ratios stand in for likelihood
//! ratios between states. Filtering and smoothing then run on pairwise
//! ratio messages.
//!
//! * [`kernel`] builds Gaussian kernel bases and the median-heuristic
//!   bandwidth grid.
//! * [`ratio`] is the two-class direct ratio estimator.
//! * [`posterior`] is the multiclass posterior fit, its likelihood ratios
//!   and the outlier score.
//! * [`inference`] holds ratio-form and standard forward-backward, plus
//!   decoding.
//! * [`learning`] does supervised fitting and unsupervised EM.
//! * [`baselines`] holds KDE and Gaussian-mixture emission models.
//! * [`synth`] generates the switching noisy-sine data.
//! * [`evaluation`] has the metrics and the comparative benchmark.
//! * [`cli`] is the `drhmm` command-line front end.
//!
//! ```
//! use drhmm::inference::InferenceMode;
//! use drhmm::learning::{fit_supervised, LabeledSequence, LearningConfig, TrainingCorpus};
//! use drhmm::synth::{generate, ToyConfig};
//!
//! let data = generate(&ToyConfig { length: 300, seed: 1, ..ToyConfig::default() }).unwrap();
//! let corpus = TrainingCorpus::single(
//!     LabeledSequence::labeled(data.windows.clone(), data.window_states.clone()).unwrap(),
//! )
//! .unwrap();
//! let model = fit_supervised(&corpus, 3, &LearningConfig::default()).unwrap();
//! let states = model.decode(&data.windows, InferenceMode::Smooth).unwrap();
//! assert_eq!(states.len(), data.windows.len());
//! ```

pub mod baselines;
pub mod cli;
pub mod cv;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod kernel;
pub mod learning;
mod linalg;
pub mod posterior;
pub mod ratio;
pub mod synth;

pub use error::{Error, Result};
pub use inference::{InferenceMode, LikelihoodRatioProvider, TransitionModel};
pub use kernel::KernelBasis;
pub use learning::FittedDrHmm;
pub use posterior::PosteriorModel;
pub use ratio::RatioModel;
