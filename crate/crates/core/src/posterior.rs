//! Least-squares class-posterior estimation and what is derived from it:
//! pairwise likelihood ratios for the ratio-form recursions and the outlier
//! scorer.
//!
//! Each class gets a kernel-linear model `qᵢ(y) = θᵢᵀφ(y)` fitted by ridge
//! regression of the class indicator on the features,
//! `θᵢ = (ΦᵀΦ + ρI)⁻¹Φᵀmᵢ`. All classes share one Gram matrix, so a fit is a
//! single Cholesky factorization followed by `S` triangular solves.
//!
//! Likelihood ratios follow from Bayes' rule,
//! `wᵢⱼ(y) = (nⱼ/nᵢ) · qᵢ(y)/qⱼ(y)`, with clipped posteriors floored at
//! [`POSTERIOR_FLOOR`] so the ratio is always finite and exactly reciprocal.
//!
//! Summing the class models gives the minimizer of
//! `½Σₜ(1 − θᵀφ(yₜ))² + ½ρ‖θ‖²`, the inlier model behind
//! [`PosteriorModel::outlier_score`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cv::{check_grids, split, stratified_folds, CvSelection};
use crate::error::{invalid, Error, Result};
use crate::inference::LikelihoodRatioProvider;
use crate::kernel::KernelBasis;
use crate::linalg::{cholesky, weighted_gram};

/// Floor applied to clipped posteriors before forming ratios.
pub const POSTERIOR_FLOOR: f64 = 1e-12;

/// Soft state assignments, `T × S`, rows on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityMatrix {
    values: DMatrix<f64>,
}

impl ResponsibilityMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::EmptyInput("responsibilities"));
        }
        for (t, row) in values.row_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(invalid("responsibilities", format!("row {t} has entries outside [0, 1]")));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(invalid("responsibilities", format!("row {t} sums to {sum}")));
            }
        }
        Ok(Self { values })
    }

    /// One-hot rows from 0-based labels.
    pub fn from_labels(labels: &[usize], num_states: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_states) {
            return Err(invalid("labels", format!("label {bad} out of range for {num_states} states")));
        }
        Self::new(DMatrix::from_fn(labels.len(), num_states, |t, i| {
            if labels[t] == i {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn num_states(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Column sums.
    pub fn totals(&self) -> Vec<f64> {
        self.values.column_iter().map(|c| c.sum()).collect()
    }
}

/// Fitted per-class posterior models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorModel {
    /// Row `i` is `θᵢ`.
    coefficients: DMatrix<f64>,
    class_counts: Vec<f64>,
    basis: KernelBasis,
    ridge: f64,
}

impl PosteriorModel {
    /// Assemble a model from stored parameters (e.g. a saved model file).
    pub fn from_parts(coefficients: DMatrix<f64>, class_counts: Vec<f64>, basis: KernelBasis, ridge: f64) -> Result<Self> {
        if coefficients.nrows() < 2 {
            return Err(invalid("coefficients", "need at least two classes"));
        }
        if coefficients.ncols() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coefficients.ncols(),
            });
        }
        if class_counts.len() != coefficients.nrows() {
            return Err(Error::DimensionMismatch {
                expected: coefficients.nrows(),
                got: class_counts.len(),
            });
        }
        if let Some(i) = class_counts.iter().position(|&n| !(n > 0.0 && n.is_finite())) {
            return Err(Error::MissingClass { class: i + 1 });
        }
        if !(ridge > 0.0 && ridge.is_finite()) {
            return Err(invalid("ridge", format!("must be positive, got {ridge}")));
        }
        Ok(Self {
            coefficients,
            class_counts,
            basis,
            ridge,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn class_counts(&self) -> &[f64] {
        &self.class_counts
    }

    pub fn basis(&self) -> &KernelBasis {
        &self.basis
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn check_class(&self, i: usize) -> Result<()> {
        if i >= self.num_classes() {
            return Err(invalid(
                "class_index",
                format!("{i} out of range for {} classes", self.num_classes()),
            ));
        }
        Ok(())
    }

    /// `max(0, θᵢᵀφ(y))`.
    pub fn posterior(&self, class: usize, y: &[f64]) -> Result<f64> {
        self.check_class(class)?;
        let phi = self.basis.features(y)?;
        Ok(self.coefficients.row(class).transpose().dot(&phi).max(0.0))
    }

    /// Clipped posteriors of every class at `y`.
    pub fn posteriors(&self, y: &[f64]) -> Result<Vec<f64>> {
        let phi = self.basis.features(y)?;
        Ok((&self.coefficients * phi).iter().map(|v| v.max(0.0)).collect())
    }

    /// `(nⱼ/nᵢ) · max(qᵢ, ε) / max(qⱼ, ε)`.
    pub fn likelihood_ratio(&self, i: usize, j: usize, y: &[f64]) -> Result<f64> {
        self.check_class(i)?;
        self.check_class(j)?;
        if i == j {
            self.basis.check_point(y)?;
            return Ok(1.0);
        }
        let q = self.posteriors(y)?;
        Ok(self.ratio_from_posteriors(&q, i, j))
    }

    fn ratio_from_posteriors(&self, q: &[f64], i: usize, j: usize) -> f64 {
        let qi = q[i].max(POSTERIOR_FLOOR);
        let qj = q[j].max(POSTERIOR_FLOOR);
        (self.class_counts[j] / self.class_counts[i]) * (qi / qj)
    }

    /// `θ* = Σᵢ θᵢ`.
    pub fn outlier_coefficients(&self) -> DVector<f64> {
        self.coefficients.row_sum().transpose()
    }

    /// `clamp(1 − θ*ᵀφ(y), 0, 1)`.
    pub fn outlier_score(&self, y: &[f64]) -> Result<f64> {
        let phi = self.basis.features(y)?;
        Ok((1.0 - self.outlier_coefficients().dot(&phi)).clamp(0.0, 1.0))
    }

    /// Per-frame argmax of the clipped posteriors; ties go to the lower index.
    pub fn classify(&self, y: &[f64]) -> Result<usize> {
        let q = self.posteriors(y)?;
        Ok(crate::inference::argmax(&q))
    }
}

impl LikelihoodRatioProvider for PosteriorModel {
    fn num_states(&self) -> usize {
        self.num_classes()
    }

    fn ratio_matrix(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.posteriors(y)?;
        let s = self.num_classes();
        let mut w = DMatrix::from_element(s, s, 1.0);
        for i in 0..s {
            for j in (i + 1)..s {
                let v = self.ratio_from_posteriors(&q, i, j);
                w[(i, j)] = v;
                w[(j, i)] = 1.0 / v;
            }
        }
        Ok(w)
    }
}

/// Free-function form of [`PosteriorModel::outlier_coefficients`].
pub fn outlier_coefficients(model: &PosteriorModel) -> DVector<f64> {
    model.outlier_coefficients()
}

fn check_labels(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    if num_classes < 2 {
        return Err(invalid("num_classes", "need at least two classes"));
    }
    let mut counts = vec![0.0; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(invalid("labels", format!("label {l} out of range for {num_classes} classes")));
        }
        counts[l] += 1.0;
    }
    if let Some(i) = counts.iter().position(|&c| c == 0.0) {
        return Err(Error::MissingClass { class: i + 1 });
    }
    Ok(counts)
}

/// Solve `(ΦᵀΦ + ρI) θᵢ = Φᵀ targetᵢ` for every target column.
fn solve_targets(phi: &DMatrix<f64>, targets: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let chol = cholesky(weighted_gram(phi, None, ridge))?;
    let rhs = phi.tr_mul(targets);
    let theta = chol.solve(&rhs).transpose();
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite posterior coefficients".into()));
    }
    Ok(theta)
}

fn check_inputs(data: &[Vec<f64>], n: usize, ridge: f64) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyInput("training data"));
    }
    if data.len() != n {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: n,
        });
    }
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(invalid("ridge", format!("must be positive, got {ridge}")));
    }
    Ok(())
}

/// Hard-label fit; `labels` are 0-based class indices in `0..num_classes`.
pub fn fit_posteriors(
    data: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    basis: &KernelBasis,
    ridge: f64,
) -> Result<PosteriorModel> {
    check_inputs(data, labels.len(), ridge)?;
    let counts = check_labels(labels, num_classes)?;
    let targets = ResponsibilityMatrix::from_labels(labels, num_classes)?;
    let phi = basis.design_matrix(data)?.into_inner();
    let coefficients = solve_targets(&phi, targets.values(), ridge)?;
    Ok(PosteriorModel {
        coefficients,
        class_counts: counts,
        basis: basis.clone(),
        ridge,
    })
}

/// Soft-label fit: responsibilities replace the class indicators as
/// regression targets, `θᵢ = (ΦᵀΦ + ρI)⁻¹Φᵀγᵢ`, and `nᵢ = Σₜ γᵢ(t)`.
///
/// One-hot responsibilities reproduce [`fit_posteriors`] exactly.
pub fn fit_posteriors_weighted(
    data: &[Vec<f64>],
    responsibilities: &ResponsibilityMatrix,
    basis: &KernelBasis,
    ridge: f64,
) -> Result<PosteriorModel> {
    check_inputs(data, responsibilities.len(), ridge)?;
    if responsibilities.num_states() < 2 {
        return Err(invalid("responsibilities", "need at least two classes"));
    }
    let totals = responsibilities.totals();
    if let Some(i) = totals.iter().position(|&m| m <= 0.0) {
        return Err(Error::MissingClass { class: i + 1 });
    }
    let phi = basis.design_matrix(data)?.into_inner();
    let coefficients = solve_targets(&phi, responsibilities.values(), ridge)?;
    Ok(PosteriorModel {
        coefficients,
        class_counts: totals,
        basis: basis.clone(),
        ridge,
    })
}

/// Grid search over (σ, ρ) shared by all classes, minimizing the summed
/// held-out objectives `Σᵢ [½·mean qᵢ² − mean qᵢ·mᵢ]`.
pub fn cross_validate_multiclass(
    data: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    basis: &KernelBasis,
    sigma_grid: &[f64],
    ridge_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvSelection> {
    check_grids(sigma_grid, ridge_grid, folds)?;
    check_inputs(data, labels.len(), 1.0)?;
    let counts = check_labels(labels, num_classes)?;
    if let Some(i) = counts.iter().position(|&c| c < folds as f64) {
        return Err(invalid(
            "labels",
            format!("class {} has {} samples, fewer than {folds} folds", i + 1, counts[i]),
        ));
    }
    let indicators = ResponsibilityMatrix::from_labels(labels, num_classes)?.values().clone();
    let assignment = stratified_folds(labels, num_classes, folds, seed);
    let splits: Vec<_> = (0..folds).map(|f| split(&assignment, f)).collect();

    let mut best: Option<CvSelection> = None;
    for &sigma in sigma_grid {
        let phi = basis.with_bandwidth(sigma)?.design_matrix(data)?.into_inner();
        let prepared: Vec<_> = splits
            .iter()
            .map(|(train, test)| {
                let sub = phi.select_rows(train);
                let gram = sub.tr_mul(&sub);
                let rhs = sub.tr_mul(&indicators.select_rows(train));
                (gram, rhs, test)
            })
            .collect();
        for &ridge in ridge_grid {
            let mut total = 0.0;
            for (gram, rhs, test) in &prepared {
                let mut g = gram.clone();
                for k in 0..g.nrows() {
                    g[(k, k)] += ridge;
                }
                let theta = cholesky(g)?.solve(rhs);
                total += held_out_objective(&phi, &indicators, test, &theta);
            }
            let score = total / folds as f64;
            if best.is_none_or(|b| score < b.score) {
                best = Some(CvSelection { sigma, ridge, score });
            }
        }
    }
    best.ok_or_else(|| invalid("grid", "no grid point evaluated"))
}

/// `theta` is `B × S` here (columns are classes).
fn held_out_objective(phi: &DMatrix<f64>, indicators: &DMatrix<f64>, rows: &[usize], theta: &DMatrix<f64>) -> f64 {
    let q = phi.select_rows(rows) * theta;
    let mut total = 0.0;
    for (r, &t) in rows.iter().enumerate() {
        for i in 0..theta.ncols() {
            let qi = q[(r, i)].max(0.0);
            total += 0.5 * qi * qi - qi * indicators[(t, i)];
        }
    }
    total / rows.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_eval;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn clusters(centers: &[f64], n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (c, &mu) in centers.iter().enumerate() {
            let d = Normal::new(mu, 1.0).unwrap();
            for _ in 0..n {
                data.push(vec![d.sample(&mut rng)]);
                labels.push(c);
            }
        }
        (data, labels)
    }

    fn random_instance(seed: u64, s: usize) -> (Vec<Vec<f64>>, Vec<usize>, KernelBasis) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let labels: Vec<usize> = (0..20).map(|t| if t < s { t } else { rng.random_range(0..s) }).collect();
        let basis = KernelBasis::build(&data, 5, 0.9, seed).unwrap();
        (data, labels, basis)
    }

    fn dense_phi(data: &[Vec<f64>], basis: &KernelBasis) -> DMatrix<f64> {
        DMatrix::from_fn(data.len(), basis.len(), |i, k| {
            kernel_eval(&data[i], &basis.centers()[k], basis.sigma()).unwrap()
        })
    }

    fn dense_weighted_oracle(data: &[Vec<f64>], gamma: &DMatrix<f64>, basis: &KernelBasis, ridge: f64) -> DMatrix<f64> {
        let phi = dense_phi(data, basis);
        let b = basis.len();
        let inv = (phi.transpose() * &phi + DMatrix::identity(b, b) * ridge).try_inverse().unwrap();
        (inv * phi.transpose() * gamma).transpose()
    }

    #[test]
    fn relabeling_swaps_rows() {
        let (data, labels) = clusters(&[-1.0, 1.0], 50, 1);
        let basis = KernelBasis::build(&data, 30, 1.0, 1).unwrap();
        let a = fit_posteriors(&data, &labels, 2, &basis, 0.1).unwrap();
        let swapped: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
        let b = fit_posteriors(&data, &swapped, 2, &basis, 0.1).unwrap();
        assert_eq!(a.coefficients().row(0), b.coefficients().row(1));
        assert_eq!(a.coefficients().row(1), b.coefficients().row(0));
    }

    #[test]
    fn separated_clusters_have_confident_posteriors() {
        let (data, labels) = clusters(&[-5.0, 5.0], 200, 2);
        let basis = KernelBasis::build(&data, 100, 1.0, 2).unwrap();
        let m = fit_posteriors(&data, &labels, 2, &basis, 0.1).unwrap();
        assert!(m.posterior(0, &[-5.0]).unwrap() > 0.9);
        assert!(m.posterior(1, &[-5.0]).unwrap() < 0.1);
        assert!(m.posterior(1, &[5.0]).unwrap() > 0.9);
        assert!(m.posterior(0, &[5.0]).unwrap() < 0.1);
        let q = m.posterior(0, &data[0]).unwrap();
        assert!((0.9..=1.1).contains(&q), "{q}");
        assert!(m.posterior(0, &[100.0]).unwrap() < 1e-12);
        assert!(m.posterior(2, &[0.0]).is_err());
    }

    #[test]
    fn class_sum_equals_all_ones_solution() {
        for seed in 0..10 {
            let (data, labels, basis) = random_instance(seed, 3);
            let m = fit_posteriors(&data, &labels, 3, &basis, 0.05).unwrap();
            let ones = DMatrix::from_element(data.len(), 1, 1.0);
            let direct = dense_weighted_oracle(&data, &ones, &basis, 0.05);
            assert!((m.outlier_coefficients() - direct.row(0).transpose()).amax() < 1e-10);
        }
    }

    #[test]
    fn outlier_coefficients_minimize_inlier_objective() {
        // Normal equations of ½Σ(1 − θᵀφ)² + ½ρ‖θ‖²: (ΦᵀΦ + ρI)θ = Φᵀ1.
        for seed in 0..10 {
            let (data, labels, basis) = random_instance(seed, 2);
            let m = fit_posteriors(&data, &labels, 2, &basis, 0.3).unwrap();
            let phi = dense_phi(&data, &basis);
            let b = basis.len();
            let lhs = phi.transpose() * &phi + DMatrix::identity(b, b) * 0.3;
            let rhs: DVector<f64> = phi.transpose() * DVector::from_element(data.len(), 1.0);
            let theta = lhs.try_inverse().unwrap() * rhs;
            assert!((outlier_coefficients(&m) - theta).amax() < 1e-10);
        }
    }

    #[test]
    fn opposite_rows_cancel() {
        let basis = KernelBasis::from_centers(vec![vec![0.0], vec![1.0]], 1.0).unwrap();
        let coef = DMatrix::from_row_slice(2, 2, &[0.5, -0.25, -0.5, 0.25]);
        let m = PosteriorModel::from_parts(coef, vec![1.0, 1.0], basis.clone(), 1.0).unwrap();
        assert_eq!(m.outlier_coefficients(), DVector::zeros(2));
        assert_eq!(m.outlier_score(&[0.3]).unwrap(), 1.0);

        let zero = PosteriorModel::from_parts(DMatrix::zeros(2, 2), vec![1.0, 1.0], basis, 1.0).unwrap();
        assert_eq!(zero.posterior(0, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn weighted_fit_cases() {
        let (data, labels, basis) = random_instance(3, 3);
        let hard = ResponsibilityMatrix::from_labels(&labels, 3).unwrap();
        let a = fit_posteriors(&data, &labels, 3, &basis, 0.1).unwrap();
        let b = fit_posteriors_weighted(&data, &hard, &basis, 0.1).unwrap();
        assert_eq!(a, b);

        let uniform = ResponsibilityMatrix::new(DMatrix::from_element(20, 3, 1.0 / 3.0)).unwrap();
        let u = fit_posteriors_weighted(&data, &uniform, &basis, 0.1).unwrap();
        assert_eq!(u.coefficients().row(0), u.coefficients().row(1));
        assert_eq!(u.coefficients().row(1), u.coefficients().row(2));

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut soft = DMatrix::from_fn(20, 3, |_, _| rng.random_range(0.05..1.0));
        for mut row in soft.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let r = ResponsibilityMatrix::new(soft.clone()).unwrap();
        let w = fit_posteriors_weighted(&data, &r, &basis, 0.1).unwrap();
        let oracle = dense_weighted_oracle(&data, &soft, &basis, 0.1);
        assert!((w.coefficients() - oracle).amax() < 1e-10);
        assert!((DVector::from_vec(w.class_counts().to_vec()) - soft.row_sum().transpose()).amax() < 1e-12);
    }

    #[test]
    fn weighted_fit_rejects_collapsed_class() {
        let (data, _, basis) = random_instance(4, 2);
        let mut g = DMatrix::zeros(20, 2);
        g.column_mut(0).fill(1.0);
        let r = ResponsibilityMatrix::new(g).unwrap();
        assert!(matches!(
            fit_posteriors_weighted(&data, &r, &basis, 0.1),
            Err(Error::MissingClass { class: 2 })
        ));
    }

    #[test]
    fn responsibility_validation() {
        assert!(ResponsibilityMatrix::new(DMatrix::from_row_slice(1, 2, &[0.6, 0.6])).is_err());
        assert!(ResponsibilityMatrix::new(DMatrix::from_row_slice(1, 2, &[1.2, -0.2])).is_err());
        assert!(ResponsibilityMatrix::from_labels(&[0, 2], 2).is_err());
    }

    #[test]
    fn missing_class_is_reported() {
        let (data, _, basis) = random_instance(5, 2);
        let labels = vec![0; 20];
        assert!(matches!(
            fit_posteriors(&data, &labels, 2, &basis, 0.1),
            Err(Error::MissingClass { class: 2 })
        ));
    }

    #[test]
    fn ratio_identities() {
        let (data, labels) = clusters(&[0.0, 1.0, 2.5], 100, 6);
        let basis = KernelBasis::build(&data, 60, 0.8, 6).unwrap();
        let m = fit_posteriors(&data, &labels, 3, &basis, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let y = [rng.random_range(-6.0..8.0)];
            for i in 0..3 {
                assert_eq!(m.likelihood_ratio(i, i, &y).unwrap(), 1.0);
                for j in 0..3 {
                    let p = m.likelihood_ratio(i, j, &y).unwrap() * m.likelihood_ratio(j, i, &y).unwrap();
                    assert!((p - 1.0).abs() < 1e-9);
                }
            }
            let w = m.ratio_matrix(&y).unwrap();
            assert!((w[(0, 2)] - m.likelihood_ratio(0, 2, &y).unwrap()).abs() <= 1e-12 * w[(0, 2)]);
        }
        assert!(m.likelihood_ratio(0, 3, &[0.0]).is_err());
    }

    fn ratio_tracks_gaussian(counts: (usize, usize), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (class, (mu, n)) in [(0.0, counts.0), (1.0, counts.1)].into_iter().enumerate() {
            let d = Normal::new(mu, 1.0).unwrap();
            for _ in 0..n {
                data.push(vec![d.sample(&mut rng)]);
                labels.push(class);
            }
        }
        let basis = KernelBasis::build(&data, 100, 1.0, seed).unwrap();
        let anchor = crate::kernel::median_heuristic(&data, 1000, seed).unwrap();
        let sel = cross_validate_multiclass(
            &data,
            &labels,
            2,
            &basis,
            &crate::kernel::bandwidth_grid(anchor),
            &crate::cv::DEFAULT_RIDGE_GRID,
            5,
            seed,
        )
        .unwrap();
        let m = fit_posteriors(&data, &labels, 2, &basis.with_bandwidth(sel.sigma).unwrap(), sel.ridge).unwrap();
        for k in 0..=30 {
            let y = -1.0 + 0.1 * k as f64;
            let w = m.likelihood_ratio(0, 1, &[y]).unwrap();
            let truth = (0.5 - y).exp();
            assert!(w / truth < 1.5 && truth / w < 1.5, "counts {counts:?}: w({y}) = {w}, truth {truth}");
        }
    }

    #[test]
    fn ratio_tracks_analytic_gaussian_ratio() {
        ratio_tracks_gaussian((2000, 2000), 7);
    }

    #[test]
    fn count_prefactor_orientation_with_unbalanced_classes() {
        // With 3:1 class sizes the posterior carries the prior; the nⱼ/nᵢ
        // prefactor must remove it.
        ratio_tracks_gaussian((3000, 1000), 8);
    }

    #[test]
    fn outlier_score_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = Normal::new(0.0, 1.0).unwrap();
        let data: Vec<Vec<f64>> = (0..500).map(|_| vec![n.sample(&mut rng)]).collect();
        let labels: Vec<usize> = data.iter().map(|y| usize::from(y[0] > 0.0)).collect();
        let basis = KernelBasis::build(&data, 100, 1.0, 9).unwrap();
        let anchor = crate::kernel::median_heuristic(&data, 1000, 9).unwrap();
        let sel = cross_validate_multiclass(
            &data,
            &labels,
            2,
            &basis,
            &crate::kernel::bandwidth_grid(anchor),
            &crate::cv::DEFAULT_RIDGE_GRID,
            5,
            9,
        )
        .unwrap();
        let m = fit_posteriors(&data, &labels, 2, &basis.with_bandwidth(sel.sigma).unwrap(), sel.ridge).unwrap();
        assert!(m.outlier_score(&[0.0]).unwrap() < 0.3);
        assert!(m.outlier_score(&[50.0]).unwrap() > 0.999);
    }

    #[test]
    fn multiclass_cv_on_separated_clusters() {
        let (data, labels) = clusters(&[-6.0, 0.0, 6.0], 60, 10);
        let basis = KernelBasis::build(&data, 100, 1.0, 10).unwrap();
        let anchor = crate::kernel::median_heuristic(&data, 1000, 10).unwrap();
        let grid = crate::kernel::bandwidth_grid(anchor);
        let sel = cross_validate_multiclass(&data, &labels, 3, &basis, &grid, &crate::cv::DEFAULT_RIDGE_GRID, 5, 10).unwrap();
        let again = cross_validate_multiclass(&data, &labels, 3, &basis, &grid, &crate::cv::DEFAULT_RIDGE_GRID, 5, 10).unwrap();
        assert_eq!(sel, again);

        let single = cross_validate_multiclass(&data, &labels, 3, &basis, &[1.3], &[0.2], 5, 10).unwrap();
        assert_eq!((single.sigma, single.ridge), (1.3, 0.2));

        let m = fit_posteriors(&data, &labels, 3, &basis.with_bandwidth(sel.sigma).unwrap(), sel.ridge).unwrap();
        let (test, truth) = clusters(&[-6.0, 0.0, 6.0], 100, 11);
        let correct = test
            .iter()
            .zip(&truth)
            .filter(|(y, &t)| m.classify(y).unwrap() == t)
            .count();
        // nearest-center oracle
        let oracle = test
            .iter()
            .zip(&truth)
            .filter(|(y, &t)| {
                let c = [-6.0f64, 0.0, 6.0];
                let best = (0..3).min_by(|&a, &b| (y[0] - c[a]).abs().total_cmp(&(y[0] - c[b]).abs())).unwrap();
                best == t
            })
            .count();
        let acc = correct as f64 / test.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}, oracle {}", oracle as f64 / 300.0);

        let sums_ok = data
            .iter()
            .filter(|y| {
                let s: f64 = m.posteriors(y).unwrap().iter().sum();
                (0.9..=1.1).contains(&s)
            })
            .count();
        assert!(sums_ok as f64 >= 0.95 * data.len() as f64, "{sums_ok}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn clipped_outputs(seed in 0u64..500, y in -6.0..6.0f64, z in -6.0..6.0f64) {
            let (data, labels, basis) = random_instance(seed, 3);
            let m = fit_posteriors(&data, &labels, 3, &basis, 1e-3).unwrap();
            for q in m.posteriors(&[y, z]).unwrap() {
                prop_assert!(q >= 0.0);
            }
            let s = m.outlier_score(&[y, z]).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
