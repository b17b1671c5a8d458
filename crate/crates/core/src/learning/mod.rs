//! Supervised and unsupervised estimation of a complete density-ratio HMM.
//!
//! Supervised learning counts transitions and fits the posterior model on
//! labeled frames. Unsupervised learning starts from k-means labels (on raw
//! frames or on local covariance features) and alternates a weighted posterior refit plus expected-count updates of
//! `A` and `π` with ratio-form smoothing.

pub mod kmeans;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cv::{CvSelection, DEFAULT_RIDGE_GRID};
use crate::error::{invalid, Error, Result};
use crate::inference::ratio_form::{forward_ratio_from, backward_ratio_from, likelihood_ratio_sequence, probs_from};
use crate::inference::{map_decode, ratios_to_probs, InferenceMode, TransitionModel, TRANSITION_FLOOR};
use crate::kernel::{bandwidth_grid, median_heuristic, KernelBasis, BANDWIDTH_FACTORS, DEFAULT_MAX_CENTERS};
use crate::posterior::{cross_validate_multiclass, fit_posteriors, fit_posteriors_weighted, PosteriorModel, ResponsibilityMatrix};

pub use kmeans::{kmeans, KMeans, MAX_LLOYD_ITERATIONS};

/// Total responsibility below which a state counts as collapsed.
pub const DEFAULT_INIT_HALF_WIDTH: usize = 5;
pub const COLLAPSE_THRESHOLD: f64 = 1e-8;

/// One observation sequence with optional 0-based state labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub observations: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl LabeledSequence {
    pub fn labeled(observations: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if observations.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: observations.len(),
                got: labels.len(),
            });
        }
        Ok(Self {
            observations,
            labels: Some(labels),
        })
    }

    pub fn unlabeled(observations: Vec<Vec<f64>>) -> Self {
        Self {
            observations,
            labels: None,
        }
    }
}

/// Sequences sharing one observation dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCorpus {
    sequences: Vec<LabeledSequence>,
    dim: usize,
}

impl TrainingCorpus {
    pub fn new(sequences: Vec<LabeledSequence>) -> Result<Self> {
        let first = sequences
            .iter()
            .flat_map(|s| s.observations.first())
            .next()
            .ok_or(Error::EmptyInput("training corpus"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(invalid("observations", "dimension must be at least 1"));
        }
        for seq in &sequences {
            if let Some(y) = seq.observations.iter().find(|y| y.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: y.len() });
            }
            if seq.observations.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("observation contains a non-finite value".into()));
            }
            if let Some(l) = &seq.labels {
                if l.len() != seq.observations.len() {
                    return Err(Error::DimensionMismatch {
                        expected: seq.observations.len(),
                        got: l.len(),
                    });
                }
            }
        }
        Ok(Self { sequences, dim })
    }

    pub fn single(sequence: LabeledSequence) -> Result<Self> {
        Self::new(vec![sequence])
    }

    pub fn sequences(&self) -> &[LabeledSequence] {
        &self.sequences
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sequences.iter().map(|s| s.observations.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All frames in corpus order.
    pub fn pooled_observations(&self) -> Vec<Vec<f64>> {
        self.sequences.iter().flat_map(|s| s.observations.iter().cloned()).collect()
    }

    fn pooled_labels(&self, num_states: usize) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.len());
        for (k, seq) in self.sequences.iter().enumerate() {
            let labels = seq
                .labels
                .as_ref()
                .ok_or_else(|| Error::Data(format!("sequence {} has no labels", k + 1)))?;
            if let Some(&l) = labels.iter().find(|&&l| l >= num_states) {
                return Err(Error::Data(format!("label {} exceeds S = {num_states}", l + 1)));
            }
            out.extend_from_slice(labels);
        }
        Ok(out)
    }
}

/// Sufficient statistics for `A` and `π`, pooled over sequences.
#[derive(Debug, Clone, PartialEq)]
struct TransitionCounts {
    initial: DVector<f64>,
    pairs: DMatrix<f64>,
}

impl TransitionCounts {
    fn zeros(s: usize) -> Self {
        Self {
            initial: DVector::zeros(s),
            pairs: DMatrix::zeros(s, s),
        }
    }

    fn to_model(&self, smoothing: f64) -> Result<TransitionModel> {
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(invalid("smoothing", format!("must be nonnegative, got {smoothing}")));
        }
        let s = self.initial.len();
        let mut a = self.pairs.add_scalar(smoothing);
        for i in 0..s {
            let total = a.row(i).sum();
            if !(total > 0.0) {
                return Err(Error::Data(format!(
                    "state {} is never the source of a transition; use smoothing > 0",
                    i + 1
                )));
            }
            a.row_mut(i).unscale_mut(total);
        }
        let pi = self.initial.add_scalar(smoothing);
        let total = pi.sum();
        if !(total > 0.0) {
            return Err(Error::Data("no initial frames to estimate π from".into()));
        }
        TransitionModel::new(a, pi / total)
    }
}

/// Frequency estimates `A(i,j) ∝ count(i→j) + smoothing`, `πᵢ ∝ count(x₁=i) + smoothing`.
///
/// Transitions never span sequence boundaries. Labels are 0-based.
pub fn estimate_transitions(corpus: &TrainingCorpus, num_states: usize, smoothing: f64) -> Result<TransitionModel> {
    if num_states == 0 {
        return Err(invalid("num_states", "must be at least 1"));
    }
    corpus.pooled_labels(num_states)?;
    let mut counts = TransitionCounts::zeros(num_states);
    for seq in corpus.sequences() {
        let labels = seq.labels.as_deref().unwrap_or_default();
        if let Some(&first) = labels.first() {
            counts.initial[first] += 1.0;
        }
        for w in labels.windows(2) {
            counts.pairs[(w[0], w[1])] += 1.0;
        }
    }
    counts.to_model(smoothing)
}

/// Basis, cross-validation and transition-smoothing settings shared by both
/// learning paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningConfig {
    pub max_centers: usize,
    /// Multipliers of the median-heuristic anchor forming the σ grid.
    pub bandwidth_factors: Vec<f64>,
    pub ridge_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Pairs subsampled for the median heuristic.
    pub median_subsample: usize,
    pub smoothing: f64,
    /// Skip cross-validation and use this (σ, ρ).
    pub fixed: Option<(f64, f64)>,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            max_centers: DEFAULT_MAX_CENTERS,
            bandwidth_factors: BANDWIDTH_FACTORS.to_vec(),
            ridge_grid: DEFAULT_RIDGE_GRID.to_vec(),
            folds: 5,
            seed: 0,
            median_subsample: 1000,
            smoothing: 1.0,
            fixed: None,
        }
    }
}

/// EM stopping rule on top of [`LearningConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnsupervisedConfig {
    pub learning: LearningConfig,
    pub max_iterations: usize,
    /// Stop once the max-abs responsibility change falls below this.
    pub tolerance: f64,
    /// Half-width of the neighbourhood used by [`init_local_covariance`];
    /// 0 clusters raw frames instead.
    pub init_half_width: usize,
}

impl Default for UnsupervisedConfig {
    fn default() -> Self {
        Self {
            learning: LearningConfig::default(),
            max_iterations: 50,
            tolerance: 1e-4,
            init_half_width: DEFAULT_INIT_HALF_WIDTH,
        }
    }
}

/// How a model was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub method: String,
    pub seed: u64,
    pub max_centers: usize,
    pub folds: usize,
    pub smoothing: f64,
    pub bandwidth_anchor: Option<f64>,
    pub selection: Option<CvSelection>,
    pub em_iterations: usize,
    /// Max-abs responsibility change after each EM iteration.
    pub em_changes: Vec<f64>,
    pub converged: Option<bool>,
}

/// Transition model, posterior model and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedDrHmm {
    pub transition_model: TransitionModel,
    pub posterior_model: PosteriorModel,
    pub metadata: FitMetadata,
}

impl FittedDrHmm {
    pub fn new(transition_model: TransitionModel, posterior_model: PosteriorModel, metadata: FitMetadata) -> Result<Self> {
        if transition_model.num_states() != posterior_model.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: transition_model.num_states(),
                got: posterior_model.num_classes(),
            });
        }
        Ok(Self {
            transition_model,
            posterior_model,
            metadata,
        })
    }

    pub fn num_states(&self) -> usize {
        self.transition_model.num_states()
    }

    pub fn dim(&self) -> usize {
        self.posterior_model.basis().dim()
    }

    /// Transition model as used by the recursions, floored away from zero.
    pub fn inference_transitions(&self) -> Result<TransitionModel> {
        self.transition_model.floored(TRANSITION_FLOOR)
    }

    /// `T × S` posterior probabilities in the requested mode.
    pub fn posteriors(&self, observations: &[Vec<f64>], mode: InferenceMode) -> Result<DMatrix<f64>> {
        let ratios = likelihood_ratio_sequence(&self.posterior_model, observations)?;
        if ratios.is_empty() {
            return Err(Error::EmptyInput("observations"));
        }
        match mode {
            InferenceMode::Independent => probs_from(&ratios),
            InferenceMode::Filter => probs_from(&forward_ratio_from(&self.inference_transitions()?, &ratios)?),
            InferenceMode::Smooth => {
                let model = self.inference_transitions()?;
                let fwd = forward_ratio_from(&model, &ratios)?;
                let bwd = backward_ratio_from(&model, &ratios)?;
                let combined: Vec<DMatrix<f64>> = fwd.iter().zip(&bwd).map(|(f, b)| f.component_mul(b)).collect();
                probs_from(&combined)
            }
        }
    }

    /// MAP state per frame, 0-based.
    pub fn decode(&self, observations: &[Vec<f64>], mode: InferenceMode) -> Result<Vec<usize>> {
        Ok(map_decode(&self.posteriors(observations, mode)?))
    }

    pub fn outlier_scores(&self, observations: &[Vec<f64>]) -> Result<Vec<f64>> {
        observations.iter().map(|y| self.posterior_model.outlier_score(y)).collect()
    }
}

struct Selected {
    basis: KernelBasis,
    ridge: f64,
    anchor: Option<f64>,
    selection: Option<CvSelection>,
}

/// Build the basis on pooled frames and pick (σ, ρ), by CV on `labels`
/// unless fixed in the config.
fn select(data: &[Vec<f64>], labels: &[usize], num_states: usize, config: &LearningConfig) -> Result<Selected> {
    if let Some((sigma, ridge)) = config.fixed {
        return Ok(Selected {
            basis: KernelBasis::build(data, config.max_centers, sigma, config.seed)?,
            ridge,
            anchor: None,
            selection: None,
        });
    }
    let anchor = median_heuristic(data, config.median_subsample, config.seed)?;
    let basis = KernelBasis::build(data, config.max_centers, anchor, config.seed)?;
    let sigma_grid: Vec<f64> = if config.bandwidth_factors.is_empty() {
        bandwidth_grid(anchor)
    } else {
        config.bandwidth_factors.iter().map(|f| f * anchor).collect()
    };
    let sel = cross_validate_multiclass(
        data,
        labels,
        num_states,
        &basis,
        &sigma_grid,
        &config.ridge_grid,
        config.folds,
        config.seed,
    )?;
    Ok(Selected {
        basis: basis.with_bandwidth(sel.sigma)?,
        ridge: sel.ridge,
        anchor: Some(anchor),
        selection: Some(sel),
    })
}

fn metadata(method: &str, config: &LearningConfig, selected: &Selected) -> FitMetadata {
    FitMetadata {
        method: method.to_string(),
        seed: config.seed,
        max_centers: config.max_centers,
        folds: config.folds,
        smoothing: config.smoothing,
        bandwidth_anchor: selected.anchor,
        selection: selected.selection,
        em_iterations: 0,
        em_changes: Vec::new(),
        converged: None,
    }
}

/// Frequency estimates for `A`, `π` and a cross-validated posterior model on labeled frames.
pub fn fit_supervised(corpus: &TrainingCorpus, num_states: usize, config: &LearningConfig) -> Result<FittedDrHmm> {
    if num_states < 2 {
        return Err(invalid("num_states", "need at least two states"));
    }
    let labels = corpus.pooled_labels(num_states)?;
    let transition_model = estimate_transitions(corpus, num_states, config.smoothing)?;
    let data = corpus.pooled_observations();
    let selected = select(&data, &labels, num_states, config)?;
    let posterior_model = fit_posteriors(&data, &labels, num_states, &selected.basis, selected.ridge)?;
    FittedDrHmm::new(transition_model, posterior_model, metadata("supervised", config, &selected))
}

/// k-means labels (0-based) over the pooled frames.
pub fn init_unsupervised(observations: &[Vec<f64>], num_states: usize, seed: u64) -> Result<Vec<usize>> {
    if num_states == 0 {
        return Err(invalid("num_states", "must be at least 1"));
    }
    if observations.len() < num_states {
        return Err(invalid(
            "observations",
            format!("{} frames cannot seed {num_states} states", observations.len()),
        ));
    }
    Ok(kmeans(observations, num_states, seed)?.labels)
}

/// Upper triangle of the covariance of the frames within `half_width` of
/// each frame, clipped at the sequence ends.
pub fn local_covariance_features(observations: &[Vec<f64>], half_width: usize) -> Vec<Vec<f64>> {
    let n = observations.len();
    let d = observations.first().map_or(0, Vec::len);
    (0..n)
        .map(|t| {
            let block = &observations[t.saturating_sub(half_width)..(t + half_width + 1).min(n)];
            let m = block.len() as f64;
            let mean: Vec<f64> = (0..d).map(|i| block.iter().map(|y| y[i]).sum::<f64>() / m).collect();
            let mut f = Vec::with_capacity(d * (d + 1) / 2);
            for i in 0..d {
                for j in i..d {
                    f.push(block.iter().map(|y| (y[i] - mean[i]) * (y[j] - mean[j])).sum::<f64>() / m);
                }
            }
            f
        })
        .collect()
}

/// k-means labels (0-based, pooled corpus order) on standardized
/// [`local_covariance_features`], computed within each sequence.
pub fn init_local_covariance(corpus: &TrainingCorpus, num_states: usize, half_width: usize, seed: u64) -> Result<Vec<usize>> {
    let mut features: Vec<Vec<f64>> = corpus
        .sequences()
        .iter()
        .flat_map(|s| local_covariance_features(&s.observations, half_width))
        .collect();
    let n = features.len() as f64;
    for c in 0..features.first().map_or(0, Vec::len) {
        let mean = features.iter().map(|f| f[c]).sum::<f64>() / n;
        let sd = (features.iter().map(|f| (f[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if sd > 0.0 { 1.0 / sd } else { 0.0 };
        for f in &mut features {
            f[c] = (f[c] - mean) * scale;
        }
    }
    init_unsupervised(&features, num_states, seed)
}

/// Smoothed responsibilities and expected transition counts for one sequence.
fn expectation(
    posterior: &PosteriorModel,
    transitions: &TransitionModel,
    observations: &[Vec<f64>],
    counts: &mut TransitionCounts,
) -> Result<DMatrix<f64>> {
    let s = transitions.num_states();
    let model = transitions.floored(TRANSITION_FLOOR)?;
    let ratios = likelihood_ratio_sequence(posterior, observations)?;
    let fwd = forward_ratio_from(&model, &ratios)?;
    let bwd = backward_ratio_from(&model, &ratios)?;
    let mut gamma = DMatrix::zeros(ratios.len(), s);
    for t in 0..ratios.len() {
        let g = ratios_to_probs(&fwd[t].component_mul(&bwd[t]))?;
        gamma.set_row(t, &g.transpose());
    }
    counts.initial += gamma.row(0).transpose();

    // ξₜ(i, j) ∝ αᵢ(t) Aᵢⱼ p(yₜ₊₁ | j) βⱼ(t+1); the last two factors, up to a
    // common scale, are a column of w(t+1) ⊙ r⃖(t+1).
    let a = model.transitions();
    for t in 0..ratios.len().saturating_sub(1) {
        let alpha = ratios_to_probs(&fwd[t])?;
        let evidence = ratios_to_probs(&ratios[t + 1].component_mul(&bwd[t + 1]))?;
        let mut xi = DMatrix::from_fn(s, s, |i, j| alpha[i] * a[(i, j)] * evidence[j]);
        let total = xi.sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Unnormalizable { frame: t + 1 });
        }
        xi.unscale_mut(total);
        counts.pairs += xi;
    }
    Ok(gamma)
}

fn stack_responsibilities(blocks: &[DMatrix<f64>], s: usize) -> Result<ResponsibilityMatrix> {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(total, s);
    let mut row = 0;
    for b in blocks {
        out.rows_mut(row, b.nrows()).copy_from(b);
        row += b.nrows();
    }
    ResponsibilityMatrix::new(out)
}

fn check_collapse(resp: &ResponsibilityMatrix) -> Result<()> {
    if let Some(i) = resp.totals().iter().position(|&m| m < COLLAPSE_THRESHOLD) {
        return Err(Error::MissingClass { class: i + 1 });
    }
    Ok(())
}

/// EM from k-means initial labels; labels in the corpus are ignored.
pub fn fit_unsupervised(corpus: &TrainingCorpus, num_states: usize, config: &UnsupervisedConfig) -> Result<FittedDrHmm> {
    let seed = config.learning.seed;
    let init = if config.init_half_width == 0 {
        init_unsupervised(&corpus.pooled_observations(), num_states, seed)?
    } else {
        init_local_covariance(corpus, num_states, config.init_half_width, seed)?
    };
    fit_unsupervised_from_labels(corpus, &init, num_states, config)
}

/// EM from caller-supplied initial hard labels (0-based, pooled corpus order).
pub fn fit_unsupervised_from_labels(
    corpus: &TrainingCorpus,
    init: &[usize],
    num_states: usize,
    config: &UnsupervisedConfig,
) -> Result<FittedDrHmm> {
    if num_states < 2 {
        return Err(invalid("num_states", "need at least two states"));
    }
    if !(config.tolerance >= 0.0) {
        return Err(invalid("tolerance", "must be nonnegative"));
    }
    let learning = &config.learning;
    let data = corpus.pooled_observations();
    if init.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: init.len(),
        });
    }
    let selected = select(&data, init, num_states, learning)?;

    // Initial M-step from hard labels.
    let mut labeled = Vec::with_capacity(corpus.sequences().len());
    let mut offset = 0;
    for seq in corpus.sequences() {
        let n = seq.observations.len();
        labeled.push(LabeledSequence::labeled(seq.observations.clone(), init[offset..offset + n].to_vec())?);
        offset += n;
    }
    let mut transitions = estimate_transitions(&TrainingCorpus::new(labeled)?, num_states, learning.smoothing)?;
    let mut resp = ResponsibilityMatrix::from_labels(&init, num_states)?;
    check_collapse(&resp)?;
    let mut posterior = fit_posteriors_weighted(&data, &resp, &selected.basis, selected.ridge)?;

    let mut meta = metadata("unsupervised", learning, &selected);
    let mut converged = config.max_iterations == 0;
    for _ in 0..config.max_iterations {
        let mut counts = TransitionCounts::zeros(num_states);
        let blocks = corpus
            .sequences()
            .iter()
            .filter(|s| !s.observations.is_empty())
            .map(|s| expectation(&posterior, &transitions, &s.observations, &mut counts))
            .collect::<Result<Vec<_>>>()?;
        let next = stack_responsibilities(&blocks, num_states)?;
        let change = (next.values() - resp.values()).amax();
        resp = next;
        check_collapse(&resp)?;
        transitions = counts.to_model(learning.smoothing)?;
        posterior = fit_posteriors_weighted(&data, &resp, &selected.basis, selected.ridge)?;
        meta.em_iterations += 1;
        meta.em_changes.push(change);
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    meta.converged = Some(converged);
    FittedDrHmm::new(transitions, posterior, meta)
}

/// Fraction of frames on which `estimate` matches `truth` under the best
/// relabeling of estimated states.
pub fn permutation_agreement(truth: &[usize], estimate: &[usize], num_states: usize) -> Result<f64> {
    if truth.len() != estimate.len() || truth.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if num_states > 8 {
        return Err(invalid("num_states", "permutation search is limited to 8 states"));
    }
    let mut confusion = vec![vec![0usize; num_states]; num_states];
    for (&t, &e) in truth.iter().zip(estimate) {
        if t >= num_states || e >= num_states {
            return Err(invalid("states", "state index out of range"));
        }
        confusion[e][t] += 1;
    }
    let mut perm: Vec<usize> = (0..num_states).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let hits: usize = p.iter().enumerate().map(|(e, &t)| confusion[e][t]).sum();
        best = best.max(hits);
    });
    Ok(best as f64 / truth.len() as f64)
}

fn permute(p: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}
