//! Squared-exponential kernel basis shared by every estimator.
//!
//! A [`KernelBasis`] holds `B` centers drawn from training observations and a
//! bandwidth `σ`. Feature vectors are `φ(y) = (K(y, c₁), …, K(y, c_B))` with
//! `K(y, c) = exp(−‖y − c‖² / 2σ²)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::squared_distance;

/// Default number of kernel centers.
pub const DEFAULT_MAX_CENTERS: usize = 100;

/// Multipliers applied to the median-distance anchor to form the bandwidth grid.
pub const BANDWIDTH_FACTORS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Squared-exponential kernel `exp(−‖y − c‖² / 2σ²)`.
pub fn kernel_eval(y: &[f64], c: &[f64], sigma: f64) -> Result<f64> {
    if y.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: y.len(),
        });
    }
    check_bandwidth(sigma)?;
    Ok((-squared_distance(y, c) / (2.0 * sigma * sigma)).exp())
}

fn check_bandwidth(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive and finite, got {sigma}")));
    }
    Ok(())
}

/// Kernel centers plus bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBasis {
    centers: Vec<Vec<f64>>,
    /// Positions of the centers in the data supplied at construction.
    indices: Vec<usize>,
    sigma: f64,
    seed: u64,
}

impl KernelBasis {
    /// Use `min(N, max_centers)` training points as centers.
    ///
    /// When subsampling, the index set is drawn uniformly without replacement
    /// from `seed` and kept in ascending order.
    pub fn build(data: &[Vec<f64>], max_centers: usize, sigma: f64, seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("kernel basis data"));
        }
        if max_centers == 0 {
            return Err(invalid("max_centers", "must be at least 1"));
        }
        check_bandwidth(sigma)?;
        let dim = check_dimensions(data)?;
        if dim == 0 {
            return Err(invalid("data", "observations have zero dimension"));
        }
        if data.len() > 1 && data.iter().all(|p| p == &data[0]) {
            return Err(Error::DegenerateData);
        }

        let n = data.len();
        let indices: Vec<usize> = if max_centers >= n {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = index::sample(&mut rng, n, max_centers).into_vec();
            idx.sort_unstable();
            idx
        };
        let centers = indices.iter().map(|&i| data[i].clone()).collect();
        Ok(Self {
            centers,
            indices,
            sigma,
            seed,
        })
    }

    /// Assemble a basis from explicit centers, e.g. when loading a saved model.
    pub fn from_centers(centers: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::EmptyInput("kernel centers"));
        }
        check_bandwidth(sigma)?;
        check_dimensions(&centers)?;
        let indices = (0..centers.len()).collect();
        Ok(Self {
            centers,
            indices,
            sigma,
            seed: 0,
        })
    }

    /// Same centers, different bandwidth.
    pub fn with_bandwidth(&self, sigma: f64) -> Result<Self> {
        check_bandwidth(sigma)?;
        Ok(Self {
            sigma,
            ..self.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn center_indices(&self) -> &[usize] {
        &self.indices
    }

    /// `φ(y)`.
    pub fn features(&self, y: &[f64]) -> Result<DVector<f64>> {
        self.check_point(y)?;
        let scale = -0.5 / (self.sigma * self.sigma);
        Ok(DVector::from_iterator(
            self.len(),
            self.centers.iter().map(|c| (squared_distance(y, c) * scale).exp()),
        ))
    }

    /// Row `i` of the result is `φ(pointsᵢ)`.
    pub fn design_matrix(&self, points: &[Vec<f64>]) -> Result<DesignMatrix> {
        for p in points {
            self.check_point(p)?;
        }
        let scale = -0.5 / (self.sigma * self.sigma);
        let values = DMatrix::from_fn(points.len(), self.len(), |i, b| {
            (squared_distance(&points[i], &self.centers[b]) * scale).exp()
        });
        Ok(DesignMatrix { values })
    }

    pub(crate) fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }
}

/// `N × B` matrix of kernel evaluations, `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// Median pairwise Euclidean distance over a seeded subsample of at most
/// `subsample` points.
pub fn median_heuristic(data: &[Vec<f64>], subsample: usize, seed: u64) -> Result<f64> {
    if data.len() < 2 {
        return Err(invalid("data", "median heuristic needs at least two points"));
    }
    if subsample < 2 {
        return Err(invalid("subsample", "must be at least 2"));
    }
    check_dimensions(data)?;
    let points: Vec<&Vec<f64>> = if data.len() > subsample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = index::sample(&mut rng, data.len(), subsample).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &data[i]).collect()
    } else {
        data.iter().collect()
    };

    let mut dists = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            dists.push(squared_distance(a, b).sqrt());
        }
    }
    let median = median_of(&mut dists);
    if median > 0.0 {
        return Ok(median);
    }
    // Over half the pairs coincide; fall back to the median of nonzero distances.
    let mut nonzero: Vec<f64> = dists.into_iter().filter(|&d| d > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateData);
    }
    Ok(median_of(&mut nonzero))
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Candidate bandwidths: the median-distance anchor times [`BANDWIDTH_FACTORS`].
pub fn bandwidth_grid(anchor: f64) -> Vec<f64> {
    BANDWIDTH_FACTORS.iter().map(|f| f * anchor).collect()
}

fn check_dimensions(data: &[Vec<f64>]) -> Result<usize> {
    let dim = data[0].len();
    for p in data {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation contains a non-finite value".into()));
        }
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_eval(&[1.5, -2.0], &[1.5, -2.0], 0.3).unwrap(), 1.0);
        assert_relative_eq!(kernel_eval(&[0.0], &[1.0], 1.0).unwrap(), (-0.5f64).exp());
        assert_relative_eq!(kernel_eval(&[0.0, 0.0], &[3.0, 4.0], 5.0).unwrap(), (-0.5f64).exp());
        assert_relative_eq!(kernel_eval(&[0.0], &[1.0], 1.0).unwrap(), 0.6065306597126334);
    }

    #[test]
    fn kernel_errors() {
        assert!(matches!(
            kernel_eval(&[0.0], &[0.0, 1.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(kernel_eval(&[0.0], &[1.0], 0.0).is_err());
        assert!(kernel_eval(&[0.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn basis_keeps_all_points_when_small() {
        let data = pts(&[0., 1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        let basis = KernelBasis::build(&data, 100, 1.0, 3).unwrap();
        assert_eq!(basis.len(), 10);
        assert_eq!(basis.centers(), &data[..]);
        assert_eq!(basis.center_indices(), &(0..10).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn basis_subsampling_is_seeded() {
        let data: Vec<Vec<f64>> = (0..500).map(|i| vec![i as f64 * 0.01]).collect();
        let a = KernelBasis::build(&data, 100, 1.0, 7).unwrap();
        let b = KernelBasis::build(&data, 100, 1.0, 7).unwrap();
        let c = KernelBasis::build(&data, 100, 1.0, 8).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert_ne!(a.center_indices(), c.center_indices());
        assert!(a.center_indices().windows(2).all(|w| w[0] < w[1]));
        for (k, &i) in a.center_indices().iter().enumerate() {
            assert_eq!(a.centers()[k], data[i]);
        }
    }

    #[test]
    fn basis_rejects_bad_input() {
        assert!(matches!(KernelBasis::build(&[], 10, 1.0, 0), Err(Error::EmptyInput(_))));
        assert!(matches!(
            KernelBasis::build(&pts(&[2.0, 2.0, 2.0]), 10, 1.0, 0),
            Err(Error::DegenerateData)
        ));
        assert!(KernelBasis::build(&pts(&[1.0, 2.0]), 0, 1.0, 0).is_err());
        assert!(KernelBasis::build(&[vec![1.0], vec![1.0, 2.0]], 5, 1.0, 0).is_err());
    }

    #[test]
    fn design_matrix_cases() {
        let data = pts(&[-1.0, 0.0, 0.5, 3.0]);
        let basis = KernelBasis::build(&data, 10, 0.7, 0).unwrap();
        let phi = basis.design_matrix(basis.centers()).unwrap();
        for b in 0..basis.len() {
            assert_eq!(phi.values()[(b, b)], 1.0);
        }
        assert_eq!(phi.values(), &phi.values().transpose());

        let far = basis.design_matrix(&[vec![100.0]]).unwrap();
        assert!(far.values().iter().all(|&v| v < 1e-10));

        let empty = basis.design_matrix(&[]).unwrap();
        assert_eq!((empty.nrows(), empty.ncols()), (0, 4));

        assert!(basis.design_matrix(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn median_heuristic_small_cases() {
        assert_eq!(median_heuristic(&pts(&[0.0, 1.0]), 100, 0).unwrap(), 1.0);
        assert_eq!(median_heuristic(&pts(&[0.0, 1.0, 2.0]), 100, 0).unwrap(), 1.0);
        assert!(median_heuristic(&pts(&[1.0]), 100, 0).is_err());
        assert!(matches!(
            median_heuristic(&pts(&[4.0, 4.0, 4.0]), 100, 0),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn median_heuristic_standard_normal() {
        // X − Y ~ N(0, 2), so the median of |X − Y| is √2·Φ⁻¹(0.75) ≈ 0.954.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![StandardNormal.sample(&mut rng)])
            .collect();
        let m = median_heuristic(&data, 1000, 0).unwrap();
        assert!((0.85..=1.1).contains(&m), "{m}");
    }

    #[test]
    fn grid_scales_anchor() {
        assert_eq!(bandwidth_grid(2.0), vec![0.5, 1.0, 2.0, 4.0, 8.0]);
    }

    proptest! {
        #[test]
        fn kernel_symmetric(a in prop::collection::vec(-10.0..10.0f64, 3),
                            b in prop::collection::vec(-10.0..10.0f64, 3),
                            s in 0.1..5.0f64) {
            prop_assert_eq!(kernel_eval(&a, &b, s).unwrap(), kernel_eval(&b, &a, s).unwrap());
        }

        #[test]
        fn kernel_decreases_with_distance(d1 in 0.0..3.0f64, extra in 0.01..3.0f64, s in 0.5..3.0f64) {
            let near = kernel_eval(&[0.0], &[d1], s).unwrap();
            let far = kernel_eval(&[0.0], &[d1 + extra], s).unwrap();
            prop_assert!(far < near);
            prop_assert!(near > 0.0 && near <= 1.0);
        }
    }
}
