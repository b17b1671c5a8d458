use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LikelihoodRatioProvider;
use crate::error::{invalid, Error, Result};
use crate::linalg::squared_distance;

/// Lower bound applied to emission densities before standard inference.
pub const DENSITY_FLOOR: f64 = 1e-300;

const MAX_LOG_RATIO: f64 = 690.0;

/// Explicit class-conditional densities `p(y | x = i)`.
pub trait EmissionModel {
    fn num_states(&self) -> usize;

    fn dim(&self) -> usize;

    fn log_density(&self, state: usize, y: &[f64]) -> Result<f64>;

    fn density(&self, state: usize, y: &[f64]) -> Result<f64> {
        Ok(self.log_density(state, y)?.exp())
    }
}

/// `T × S` matrix of `p(yₜ | xₜ = i)`, floored at [`DENSITY_FLOOR`].
pub fn emission_likelihood_matrix<E: EmissionModel + ?Sized>(emission: &E, observations: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let s = emission.num_states();
    let mut out = DMatrix::zeros(observations.len(), s);
    for (t, y) in observations.iter().enumerate() {
        for i in 0..s {
            out[(t, i)] = emission.density(i, y)?.max(DENSITY_FLOOR);
        }
    }
    Ok(out)
}

/// Isotropic Gaussian emissions with known parameters. Serves as the
/// exact-density reference for checking the ratio recursions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianEmissions {
    means: Vec<Vec<f64>>,
    std_devs: Vec<f64>,
}

impl GaussianEmissions {
    pub fn new(means: Vec<Vec<f64>>, std_devs: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::EmptyInput("gaussian means"));
        }
        if std_devs.len() != means.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: std_devs.len(),
            });
        }
        let d = means[0].len();
        if let Some(m) = means.iter().find(|m| m.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: m.len() });
        }
        if std_devs.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(invalid("std_devs", "must be positive"));
        }
        Ok(Self { means, std_devs })
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }
}

impl EmissionModel for GaussianEmissions {
    fn num_states(&self) -> usize {
        self.means.len()
    }

    fn dim(&self) -> usize {
        self.means[0].len()
    }

    fn log_density(&self, state: usize, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        let s = self.std_devs[state];
        let d = self.dim() as f64;
        Ok(-0.5 * squared_distance(y, &self.means[state]) / (s * s) - 0.5 * d * (2.0 * PI * s * s).ln())
    }
}

/// Likelihood ratios computed from an explicit emission model,
/// `wᵢⱼ = exp(log pᵢ − log pⱼ)`, with the log-difference clamped to
/// `±MAX_LOG_RATIO` so both members of a pair stay finite.
#[derive(Debug, Clone, Copy)]
pub struct DensityRatios<'a, E: ?Sized>(pub &'a E);

impl<E: EmissionModel + ?Sized> LikelihoodRatioProvider for DensityRatios<'_, E> {
    fn num_states(&self) -> usize {
        self.0.num_states()
    }

    fn ratio_matrix(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let s = self.0.num_states();
        let logs = (0..s).map(|i| self.0.log_density(i, y)).collect::<Result<Vec<_>>>()?;
        let mut w = DMatrix::from_element(s, s, 1.0);
        for i in 0..s {
            for j in (i + 1)..s {
                let v = (logs[i] - logs[j]).clamp(-MAX_LOG_RATIO, MAX_LOG_RATIO).exp();
                w[(i, j)] = v;
                w[(j, i)] = 1.0 / v;
            }
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_density() {
        let g = GaussianEmissions::new(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!((g.density(0, &[0.0]).unwrap() - 0.3989422804014327).abs() < 1e-15);
        assert!(g.density(0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn density_ratios_are_reciprocal() {
        let g = GaussianEmissions::new(vec![vec![0.0], vec![1.0], vec![-2.0]], vec![1.0, 0.5, 2.0]).unwrap();
        let w = DensityRatios(&g).ratio_matrix(&[0.7]).unwrap();
        for i in 0..3 {
            assert_eq!(w[(i, i)], 1.0);
            for j in 0..3 {
                assert!((w[(i, j)] * w[(j, i)] - 1.0).abs() < 1e-12);
            }
        }
        let direct = g.density(0, &[0.7]).unwrap() / g.density(1, &[0.7]).unwrap();
        assert!((w[(0, 1)] / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn likelihood_matrix_is_floored() {
        let g = GaussianEmissions::new(vec![vec![0.0], vec![1.0]], vec![0.01, 1.0]).unwrap();
        let m = emission_likelihood_matrix(&g, &[vec![1e3], vec![0.0]]).unwrap();
        assert_eq!(m[(0, 0)], DENSITY_FLOOR);
        assert!(m.iter().all(|&v| v > 0.0));
    }
}
