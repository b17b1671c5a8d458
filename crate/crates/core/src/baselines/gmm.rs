//! Full-covariance Gaussian mixtures fitted by EM, with the component count
//! chosen by BIC.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::inference::EmissionModel;
use crate::linalg::log_sum_exp;

/// Smallest covariance eigenvalue admitted after each M-step.
pub const EIGENVALUE_FLOOR: f64 = 1e-6;
pub const DEFAULT_K_CANDIDATES: [usize; 5] = [1, 2, 3, 4, 5];
pub const DEFAULT_RESTARTS: usize = 5;
pub const MAX_EM_ITERATIONS: usize = 500;
/// Relative log-likelihood improvement below which EM stops.
pub const EM_TOLERANCE: f64 = 1e-10;

/// One Gaussian with cached inverse and log-normalizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
}

impl Component {
    fn new(weight: f64, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let covariance = floor_eigenvalues(covariance)?;
        let chol = nalgebra::Cholesky::new(covariance.clone())
            .ok_or_else(|| Error::SingularSystem("covariance is not positive definite".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let d = mean.len() as f64;
        Ok(Self {
            weight,
            precision: chol.inverse(),
            log_norm: -0.5 * (d * (2.0 * PI).ln() + log_det),
            mean,
            covariance,
        })
    }

    /// `log N(y; μ, Σ)`.
    pub fn log_pdf(&self, y: &DVector<f64>) -> f64 {
        let diff = y - &self.mean;
        self.log_norm - 0.5 * diff.dot(&(&self.precision * &diff))
    }
}

/// Symmetrize and clamp eigenvalues from below.
fn floor_eigenvalues(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance has non-finite entries".into()));
    }
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|v| v.max(EIGENVALUE_FLOOR));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Weighted Gaussian mixture density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    components: Vec<Component>,
}

impl GaussianMixture {
    pub fn from_parts(weights: &[f64], means: &[Vec<f64>], covariances: &[DMatrix<f64>]) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(invalid("mixture", "weights, means and covariances must have equal nonzero length"));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", "must be positive and sum to 1"));
        }
        let d = means[0].len();
        let components = (0..k)
            .map(|c| {
                if means[c].len() != d || covariances[c].shape() != (d, d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: means[c].len(),
                    });
                }
                Component::new(weights[c], DVector::from_column_slice(&means[c]), covariances[c].clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        let y = DVector::from_column_slice(y);
        let terms: Vec<f64> = self.components.iter().map(|c| c.weight.ln() + c.log_pdf(&y)).collect();
        Ok(log_sum_exp(&terms))
    }

    /// Free parameters: `K−1 + K·d + K·d(d+1)/2`.
    pub fn num_parameters(&self) -> usize {
        let (k, d) = (self.num_components(), self.dim());
        k - 1 + k * d + k * d * (d + 1) / 2
    }

    /// Posterior component memberships, `N × K`, and the total log-likelihood.
    pub fn memberships(&self, data: &[DVector<f64>]) -> (DMatrix<f64>, f64) {
        let k = self.num_components();
        let mut r = DMatrix::zeros(data.len(), k);
        let mut total = 0.0;
        let mut terms = vec![0.0; k];
        for (n, y) in data.iter().enumerate() {
            for (c, comp) in self.components.iter().enumerate() {
                terms[c] = comp.weight.ln() + comp.log_pdf(y);
            }
            let lse = log_sum_exp(&terms);
            total += lse;
            for c in 0..k {
                r[(n, c)] = (terms[c] - lse).exp();
            }
        }
        (r, total)
    }
}

/// Fitted mixture plus the log-likelihood after every EM iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub mixture: GaussianMixture,
    pub log_likelihood: f64,
    pub trace: Vec<f64>,
}

fn sample_covariance(data: &[DVector<f64>]) -> DMatrix<f64> {
    let n = data.len() as f64;
    let d = data[0].len();
    let mean = data.iter().fold(DVector::zeros(d), |acc, y| acc + y) / n;
    data.iter().fold(DMatrix::zeros(d, d), |acc, y| {
        let diff = y - &mean;
        acc + &diff * diff.transpose()
    }) / n
}

fn m_step(data: &[DVector<f64>], r: &DMatrix<f64>) -> Result<GaussianMixture> {
    let (n, k) = (data.len(), r.ncols());
    let d = data[0].len();
    let mut components = Vec::with_capacity(k);
    for c in 0..k {
        let nk: f64 = r.column(c).sum();
        if !(nk > 1e-10) {
            return Err(Error::DegenerateData);
        }
        let mean = data.iter().enumerate().fold(DVector::zeros(d), |acc, (i, y)| acc + y * r[(i, c)]) / nk;
        let cov = data.iter().enumerate().fold(DMatrix::zeros(d, d), |acc, (i, y)| {
            let diff = y - &mean;
            acc + (&diff * diff.transpose()) * r[(i, c)]
        }) / nk;
        components.push(Component::new(nk / n as f64, mean, cov)?);
    }
    Ok(GaussianMixture { components })
}

/// One EM run from `k` distinct random data points as means, the pooled
/// covariance for every component and uniform weights.
fn em_run(data: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<MixtureFit> {
    let pooled = sample_covariance(data);
    let picks = index::sample(rng, data.len(), k).into_vec();
    let components = picks
        .iter()
        .map(|&i| Component::new(1.0 / k as f64, data[i].clone(), pooled.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut mixture = GaussianMixture { components };
    let (mut r, mut ll) = mixture.memberships(data);
    let mut trace = vec![ll];
    for _ in 0..MAX_EM_ITERATIONS {
        mixture = m_step(data, &r)?;
        let (next_r, next_ll) = mixture.memberships(data);
        if !next_ll.is_finite() {
            return Err(Error::NonFinite("mixture log-likelihood".into()));
        }
        trace.push(next_ll);
        let gain = next_ll - ll;
        r = next_r;
        ll = next_ll;
        if gain.abs() <= EM_TOLERANCE * ll.abs().max(1.0) {
            break;
        }
    }
    Ok(MixtureFit {
        mixture,
        log_likelihood: ll,
        trace,
    })
}

fn to_vectors(samples: &[Vec<f64>]) -> Result<Vec<DVector<f64>>> {
    let d = samples.first().ok_or(Error::EmptyInput("mixture samples"))?.len();
    if d == 0 {
        return Err(invalid("samples", "dimension must be at least 1"));
    }
    samples
        .iter()
        .map(|y| {
            if y.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: y.len() });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("mixture sample".into()));
            }
            Ok(DVector::from_column_slice(y))
        })
        .collect()
}

/// Best of `restarts` EM runs with `k` components.
pub fn fit_mixture(samples: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<MixtureFit> {
    let data = to_vectors(samples)?;
    if k == 0 || k > data.len() {
        return Err(invalid("k", format!("{k} components for {} samples", data.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<MixtureFit> = None;
    let mut last_err = None;
    for _ in 0..restarts.max(1) {
        match em_run(&data, k, &mut rng) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::DegenerateData))
}

/// `−2·loglik + params·ln N`.
pub fn bic(fit: &MixtureFit, n: usize) -> f64 {
    -2.0 * fit.log_likelihood + fit.mixture.num_parameters() as f64 * (n as f64).ln()
}

/// Mixture minimizing BIC over `k_candidates`; candidates larger than the
/// sample count are skipped.
pub fn fit_mixture_bic(samples: &[Vec<f64>], k_candidates: &[usize], restarts: usize, seed: u64) -> Result<MixtureFit> {
    if k_candidates.is_empty() {
        return Err(invalid("k_candidates", "empty"));
    }
    let mut best: Option<(f64, MixtureFit)> = None;
    let mut last_err = None;
    for &k in k_candidates.iter().filter(|&&k| k >= 1 && k <= samples.len()) {
        match fit_mixture(samples, k, restarts, seed.wrapping_add(k as u64)) {
            Ok(fit) => {
                let score = bic(&fit, samples.len());
                if best.as_ref().is_none_or(|(b, _)| score < *b) {
                    best = Some((score, fit));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(_, f)| f)
        .ok_or_else(|| last_err.unwrap_or_else(|| invalid("k_candidates", "no candidate fits the sample size")))
}

/// One BIC-selected mixture per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmEmission {
    classes: Vec<GaussianMixture>,
}

impl GmmEmission {
    pub fn new(classes: Vec<GaussianMixture>) -> Result<Self> {
        let d = classes.first().ok_or(Error::EmptyInput("mixture classes"))?.dim();
        if let Some(m) = classes.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[GaussianMixture] {
        &self.classes
    }
}

/// Fit every class independently; class `i` uses seed `seed + i`.
pub fn fit_gmm_bic(per_class: &[Vec<Vec<f64>>], k_candidates: &[usize], restarts: usize, seed: u64) -> Result<GmmEmission> {
    let classes = per_class
        .iter()
        .enumerate()
        .map(|(i, samples)| {
            if samples.is_empty() {
                return Err(Error::MissingClass { class: i + 1 });
            }
            Ok(fit_mixture_bic(samples, k_candidates, restarts, seed.wrapping_add(1000 * i as u64))?.mixture)
        })
        .collect::<Result<Vec<_>>>()?;
    GmmEmission::new(classes)
}

impl EmissionModel for GmmEmission {
    fn num_states(&self) -> usize {
        self.classes.len()
    }

    fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    fn log_density(&self, state: usize, y: &[f64]) -> Result<f64> {
        self.classes
            .get(state)
            .ok_or_else(|| invalid("state", format!("{state} out of range")))?
            .log_density(y)
    }
}
