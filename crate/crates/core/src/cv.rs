//! Seeded, class-stratified fold assignment and grid bookkeeping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default ridge candidates.
pub const DEFAULT_RIDGE_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Grid point chosen by cross-validation and its mean held-out score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub sigma: f64,
    pub ridge: f64,
    pub score: f64,
}

pub(crate) fn check_grids(sigma_grid: &[f64], ridge_grid: &[f64], folds: usize) -> Result<()> {
    if sigma_grid.is_empty() {
        return Err(invalid("sigma_grid", "empty"));
    }
    if ridge_grid.is_empty() {
        return Err(invalid("ridge_grid", "empty"));
    }
    if let Some(s) = sigma_grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(invalid("sigma_grid", format!("bandwidth {s} is not positive")));
    }
    if let Some(r) = ridge_grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(invalid("ridge_grid", format!("ridge {r} is not positive")));
    }
    if folds < 2 {
        return Err(invalid("folds", "need at least 2 folds"));
    }
    Ok(())
}

/// Fold index per sample. Each class is shuffled independently and dealt
/// round-robin, so every fold receives `⌊n_c / folds⌋` or one more of class `c`.
pub(crate) fn stratified_folds(labels: &[usize], num_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for class in 0..num_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

/// Row indices split into (training, held-out) for one fold.
pub(crate) fn split(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 20)).collect();
        let a = stratified_folds(&labels, 2, 5, 1);
        for f in 0..5 {
            let zeros = (0..30).filter(|&i| a[i] == f && labels[i] == 0).count();
            let ones = (0..30).filter(|&i| a[i] == f && labels[i] == 1).count();
            assert_eq!((zeros, ones), (4, 2));
        }
        assert_eq!(a, stratified_folds(&labels, 2, 5, 1));
    }
}
