//! Normalized forward-backward over explicit emission likelihoods.

use nalgebra::DMatrix;

use super::TransitionModel;
use crate::error::{Error, Result};

/// Normalized forward (`alpha`), backward (`beta`) and smoothed (`gamma`)
/// messages, each `T × S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMessages {
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
}

impl ProbMessages {
    pub fn compute(model: &TransitionModel, likelihoods: &DMatrix<f64>) -> Result<Self> {
        let alpha = forward_standard(model, likelihoods)?;
        let beta = backward_standard(model, likelihoods)?;
        let gamma = smooth_standard(&alpha, &beta)?;
        Ok(Self { alpha, beta, gamma })
    }
}

fn check_likelihoods(model: &TransitionModel, likelihoods: &DMatrix<f64>) -> Result<()> {
    if likelihoods.nrows() == 0 {
        return Err(Error::EmptyInput("likelihood matrix"));
    }
    if likelihoods.ncols() != model.num_states() {
        return Err(Error::DimensionMismatch {
            expected: model.num_states(),
            got: likelihoods.ncols(),
        });
    }
    for (t, row) in likelihoods.row_iter().enumerate() {
        if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::NonFinite(format!("likelihood row {t} has a negative or non-finite entry")));
        }
        if row.iter().all(|&p| p == 0.0) {
            return Err(Error::Unnormalizable { frame: t });
        }
    }
    Ok(())
}

fn normalize_row(m: &mut DMatrix<f64>, t: usize) -> Result<()> {
    let sum = m.row(t).sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::Unnormalizable { frame: t });
    }
    m.row_mut(t).scale_mut(1.0 / sum);
    Ok(())
}

/// Filtering messages `αₜ(i) ∝ [Σⱼ αⱼ(t−1) Aⱼᵢ] p(yₜ | i)`, rows summing to one.
pub fn forward_standard(model: &TransitionModel, likelihoods: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_likelihoods(model, likelihoods)?;
    forward_pass(model, likelihoods, true)
}

/// The forward recursion with the per-frame normalization skipped. Values
/// shrink geometrically and underflow on long sequences; exposed to make
/// that failure mode observable.
pub fn forward_unnormalized(model: &TransitionModel, likelihoods: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_likelihoods(model, likelihoods)?;
    forward_pass(model, likelihoods, false)
}

fn forward_pass(model: &TransitionModel, likelihoods: &DMatrix<f64>, normalize: bool) -> Result<DMatrix<f64>> {
    let (t_len, s) = likelihoods.shape();
    let a = model.transitions();
    let mut alpha = DMatrix::zeros(t_len, s);
    for i in 0..s {
        alpha[(0, i)] = model.initial()[i] * likelihoods[(0, i)];
    }
    for t in 1..t_len {
        if normalize {
            normalize_row(&mut alpha, t - 1)?;
        }
        for i in 0..s {
            let predicted: f64 = (0..s).map(|j| alpha[(t - 1, j)] * a[(j, i)]).sum();
            alpha[(t, i)] = predicted * likelihoods[(t, i)];
        }
    }
    if normalize {
        normalize_row(&mut alpha, t_len - 1)?;
    }
    Ok(alpha)
}

/// Backward messages `βₜ(i) ∝ Σⱼ Aᵢⱼ p(yₜ₊₁ | j) βₜ₊₁(j)`, `β_T = 1`, rows
/// normalized to sum to one.
pub fn backward_standard(model: &TransitionModel, likelihoods: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_likelihoods(model, likelihoods)?;
    let (t_len, s) = likelihoods.shape();
    let a = model.transitions();
    let mut beta = DMatrix::zeros(t_len, s);
    beta.row_mut(t_len - 1).fill(1.0);
    normalize_row(&mut beta, t_len - 1)?;
    for t in (0..t_len - 1).rev() {
        for i in 0..s {
            beta[(t, i)] = (0..s).map(|j| a[(i, j)] * likelihoods[(t + 1, j)] * beta[(t + 1, j)]).sum();
        }
        normalize_row(&mut beta, t)?;
    }
    Ok(beta)
}

/// `γₜ(i) = αₜ(i)βₜ(i) / Σⱼ αₜ(j)βₜ(j)`.
pub fn smooth_standard(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if alpha.shape() != beta.shape() {
        return Err(Error::DimensionMismatch {
            expected: alpha.nrows() * alpha.ncols(),
            got: beta.nrows() * beta.ncols(),
        });
    }
    let mut gamma = alpha.component_mul(beta);
    for t in 0..gamma.nrows() {
        normalize_row(&mut gamma, t)?;
    }
    Ok(gamma)
}
