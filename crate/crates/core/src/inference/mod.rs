//! Forward-backward inference in two parameterizations.
//!
//! [`standard`] runs the usual normalized recursions over explicit emission
//! likelihoods. [`ratio_form`] runs the same recursions over pairwise
//! posterior ratios, consuming only likelihood *ratios* `wᵢⱼ(y)` and never
//! normalizing. The two agree exactly when the ratios come from the same
//! densities, which is how the ratio form is tested.
//!
//! States are 0-based throughout the library.

mod decode;
mod emission;
pub mod ratio_form;
pub mod standard;
mod transition;

use nalgebra::DMatrix;

use crate::error::Result;

pub use decode::{argmax, classify_independent, map_decode};
pub use emission::{emission_likelihood_matrix, DensityRatios, EmissionModel, GaussianEmissions, DENSITY_FLOOR};
pub use ratio_form::{
    backward_ratio, combine_ratios, forward_ratio, ratio_forward_backward, ratios_to_probs, RatioMessages,
};
pub use standard::{backward_standard, forward_standard, smooth_standard, ProbMessages};
pub use transition::{TransitionModel, TRANSITION_FLOOR};

/// Source of likelihood ratios `wᵢⱼ(y) = p(y | i) / p(y | j)`.
///
/// Implementations must return `wᵢᵢ = 1` and reciprocal off-diagonal pairs.
pub trait LikelihoodRatioProvider {
    fn num_states(&self) -> usize;

    /// `S × S` matrix with entry `(i, j) = wᵢⱼ(y)`.
    fn ratio_matrix(&self, y: &[f64]) -> Result<DMatrix<f64>>;

    fn ratio(&self, i: usize, j: usize, y: &[f64]) -> Result<f64> {
        Ok(self.ratio_matrix(y)?[(i, j)])
    }
}

impl<P: LikelihoodRatioProvider + ?Sized> LikelihoodRatioProvider for &P {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }

    fn ratio_matrix(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        (**self).ratio_matrix(y)
    }
}

/// Which posterior to report per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    /// `p(xₜ | y₁:ₜ)`
    Filter,
    /// `p(xₜ | y₁:T)`
    Smooth,
    /// Per-frame decision with no dynamics (uniform transitions).
    Independent,
}
