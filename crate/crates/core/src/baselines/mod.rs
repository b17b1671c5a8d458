//! Explicit-density emission models used for comparison: kernel density
//! estimates and Gaussian mixtures, both plugged into the standard HMM
//! machinery through [`EmissionModel`](crate::inference::EmissionModel).

pub mod gmm;
pub mod kde;

pub use gmm::{
    bic, fit_gmm_bic, fit_mixture, fit_mixture_bic, Component, GaussianMixture, GmmEmission, MixtureFit,
    DEFAULT_K_CANDIDATES, DEFAULT_RESTARTS, EIGENVALUE_FLOOR,
};
pub use kde::{fit_kde, select_bandwidth, KdeEmission, KernelDensity, KDE_BANDWIDTH_FACTORS};
