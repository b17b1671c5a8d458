//! Direct least-squares estimation of a single likelihood ratio
//! `w(y) = p(y | numerator) / p(y | denominator)`.
//!
//! The model is linear in the kernel features, `ŵ(y) = θᵀφ(y)`, fitted by
//! minimizing `½ θᵀΦᵀM_denΦθ − θᵀΦᵀm_num + ½ρ‖θ‖²` in closed form. Negative
//! outputs are clipped to zero at evaluation time only.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cv::{check_grids, split, stratified_folds, CvSelection};
use crate::error::{invalid, Error, Result};
use crate::inference::LikelihoodRatioProvider;
use crate::kernel::KernelBasis;
use crate::linalg::{cholesky, project, weighted_gram};

/// Fitted two-class ratio model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioModel {
    theta: DVector<f64>,
    basis: KernelBasis,
    ridge: f64,
    numerator_count: usize,
    denominator_count: usize,
}

impl RatioModel {
    pub fn new(theta: DVector<f64>, basis: KernelBasis, ridge: f64) -> Result<Self> {
        if theta.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: theta.len(),
            });
        }
        check_ridge(ridge)?;
        Ok(Self {
            theta,
            basis,
            ridge,
            numerator_count: 1,
            denominator_count: 1,
        })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn basis(&self) -> &KernelBasis {
        &self.basis
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// (numerator, denominator) sample counts seen at fit time.
    pub fn counts(&self) -> (usize, usize) {
        (self.numerator_count, self.denominator_count)
    }

    /// Unclipped `θᵀφ(y)`.
    pub fn raw(&self, y: &[f64]) -> Result<f64> {
        Ok(self.theta.dot(&self.basis.features(y)?))
    }

    /// `max(0, θᵀφ(y))`.
    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        Ok(self.raw(y)?.max(0.0))
    }
}

/// Lower bound applied to `ŵ` before it enters the recursions.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Two-state provider: state 0 is the numerator, `w₀₁ = max(ŵ, floor)`.
impl LikelihoodRatioProvider for RatioModel {
    fn num_states(&self) -> usize {
        2
    }

    fn ratio_matrix(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let w = self.evaluate(y)?.max(RATIO_FLOOR);
        Ok(DMatrix::from_row_slice(2, 2, &[1.0, w, 1.0 / w, 1.0]))
    }
}

/// Free-function form of [`RatioModel::evaluate`].
pub fn evaluate_ratio(model: &RatioModel, y: &[f64]) -> Result<f64> {
    model.evaluate(y)
}

fn check_ridge(ridge: f64) -> Result<()> {
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(invalid("ridge", format!("must be positive and finite, got {ridge}")));
    }
    Ok(())
}

/// Fit `ŵ` with `labels[i] == true` marking numerator samples.
///
/// The closed-form solution is rescaled by `n_den / n_num` so that unequal
/// class sizes still estimate the ratio of densities rather than of class
/// masses; for balanced classes the factor is exactly one.
pub fn fit_two_class(data: &[Vec<f64>], labels: &[bool], basis: &KernelBasis, ridge: f64) -> Result<RatioModel> {
    check_ridge(ridge)?;
    if data.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: labels.len(),
        });
    }
    let phi = basis.design_matrix(data)?.into_inner();
    let rows: Vec<usize> = (0..data.len()).collect();
    fit_rows(&phi, labels, &rows, basis, ridge)
}

fn fit_rows(
    phi: &nalgebra::DMatrix<f64>,
    labels: &[bool],
    rows: &[usize],
    basis: &KernelBasis,
    ridge: f64,
) -> Result<RatioModel> {
    let sub = phi.select_rows(rows);
    let num: Vec<f64> = rows.iter().map(|&i| f64::from(u8::from(labels[i]))).collect();
    let den: Vec<f64> = num.iter().map(|v| 1.0 - v).collect();
    let n_num = num.iter().filter(|&&v| v > 0.0).count();
    let n_den = rows.len() - n_num;
    if n_num == 0 {
        return Err(Error::MissingClass { class: 1 });
    }
    if n_den == 0 {
        return Err(Error::MissingClass { class: 2 });
    }

    let gram = weighted_gram(&sub, Some(&den), ridge);
    let rhs = project(&sub, &num);
    let theta = cholesky(gram)?.solve(&rhs) * (n_den as f64 / n_num as f64);
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite ratio coefficients".into()));
    }
    Ok(RatioModel {
        theta,
        basis: basis.clone(),
        ridge,
        numerator_count: n_num,
        denominator_count: n_den,
    })
}

/// Grid search over (σ, ρ) minimizing the held-out least-squares objective
/// `½·mean_den ŵ² − mean_num ŵ`, with folds stratified by class.
///
/// The centers of `basis` are reused for every grid point; only σ changes.
pub fn cross_validate_two_class(
    data: &[Vec<f64>],
    labels: &[bool],
    basis: &KernelBasis,
    sigma_grid: &[f64],
    ridge_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvSelection> {
    check_grids(sigma_grid, ridge_grid, folds)?;
    if data.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: labels.len(),
        });
    }
    let classes: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    for (class, name) in [(1usize, 1usize), (0, 0)] {
        let n = classes.iter().filter(|&&c| c == class).count();
        if n < folds {
            return Err(invalid(
                "labels",
                format!("class {name} has {n} samples, fewer than {folds} folds"),
            ));
        }
    }
    let assignment = stratified_folds(&classes, 2, folds, seed);
    let splits: Vec<_> = (0..folds).map(|f| split(&assignment, f)).collect();

    let mut best: Option<CvSelection> = None;
    for &sigma in sigma_grid {
        let candidate = basis.with_bandwidth(sigma)?;
        let phi = candidate.design_matrix(data)?.into_inner();
        for &ridge in ridge_grid {
            let mut total = 0.0;
            for (train, test) in &splits {
                let model = fit_rows(&phi, labels, train, &candidate, ridge)?;
                total += held_out_objective(&phi, labels, test, model.theta());
            }
            let score = total / folds as f64;
            if best.is_none_or(|b| score < b.score) {
                best = Some(CvSelection { sigma, ridge, score });
            }
        }
    }
    best.ok_or_else(|| invalid("grid", "no grid point evaluated"))
}

fn held_out_objective(phi: &nalgebra::DMatrix<f64>, labels: &[bool], rows: &[usize], theta: &DVector<f64>) -> f64 {
    let (mut sq, mut n_den, mut lin, mut n_num) = (0.0, 0usize, 0.0, 0usize);
    for &i in rows {
        let w = phi.row(i).transpose().dot(theta).max(0.0);
        if labels[i] {
            lin += w;
            n_num += 1;
        } else {
            sq += w * w;
            n_den += 1;
        }
    }
    0.5 * sq / n_den.max(1) as f64 - lin / n_num.max(1) as f64
}
