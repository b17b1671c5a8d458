//! Gaussian kernel density estimates with a cross-validated bandwidth per class.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cv::{split, stratified_folds};
use crate::error::{invalid, Error, Result};
use crate::inference::EmissionModel;
use crate::kernel::median_heuristic;
use crate::linalg::{log_sum_exp, squared_distance};

/// Multipliers of the median-heuristic anchor tried by default.
pub const KDE_BANDWIDTH_FACTORS: [f64; 7] = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 1.0, 2.0];

/// `p̂(y) = (1/n) Σₖ N(y; yₖ, σ²I)` for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDensity {
    points: Vec<Vec<f64>>,
    sigma: f64,
}

impl KernelDensity {
    pub fn new(points: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let d = points.first().ok_or(Error::EmptyInput("kernel density points"))?.len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(Self { points, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(log_kde(&self.points, self.sigma, y))
    }
}

fn log_kde<P: AsRef<[f64]>>(points: &[P], sigma: f64, y: &[f64]) -> f64 {
    let s2 = sigma * sigma;
    let d = y.len() as f64;
    let terms: Vec<f64> = points.iter().map(|p| -0.5 * squared_distance(y, p.as_ref()) / s2).collect();
    log_sum_exp(&terms) - (points.len() as f64).ln() - 0.5 * d * (2.0 * PI * s2).ln()
}

/// Bandwidth maximizing mean held-out log density over `folds` seeded folds.
pub fn select_bandwidth(samples: &[Vec<f64>], grid: &[f64], folds: usize, seed: u64) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(invalid("bandwidth_grid", "empty"));
    }
    if folds < 2 || samples.len() < folds {
        return Err(invalid(
            "folds",
            format!("{folds} folds need at least {folds} samples, got {}", samples.len()),
        ));
    }
    let assignment = stratified_folds(&vec![0; samples.len()], 1, folds, seed);
    let splits: Vec<_> = (0..folds).map(|f| split(&assignment, f)).collect();
    let mut best: Option<(f64, f64)> = None;
    for &sigma in grid {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("bandwidth_grid", format!("entry {sigma} is not positive")));
        }
        let mut total = 0.0;
        for (train, test) in &splits {
            let pts: Vec<&Vec<f64>> = train.iter().map(|&i| &samples[i]).collect();
            let ll: f64 = test.iter().map(|&i| log_kde(&pts, sigma, &samples[i])).sum();
            total += ll / test.len() as f64;
        }
        let score = total / folds as f64;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((sigma, score));
        }
    }
    best.ok_or_else(|| invalid("bandwidth_grid", "empty"))
}

/// One cross-validated kernel density per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeEmission {
    classes: Vec<KernelDensity>,
}

impl KdeEmission {
    pub fn new(classes: Vec<KernelDensity>) -> Result<Self> {
        let d = classes.first().ok_or(Error::EmptyInput("kernel density classes"))?.dim();
        if let Some(c) = classes.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[KernelDensity] {
        &self.classes
    }
}

/// Per-class bandwidth from `grid`, or from the median anchor times
/// [`KDE_BANDWIDTH_FACTORS`] when `grid` is `None`. A class with fewer
/// samples than `folds` keeps the anchor itself.
pub fn fit_kde(per_class: &[Vec<Vec<f64>>], grid: Option<&[f64]>, folds: usize, seed: u64) -> Result<KdeEmission> {
    let classes = per_class
        .iter()
        .enumerate()
        .map(|(i, samples)| {
            if samples.is_empty() {
                return Err(Error::MissingClass { class: i + 1 });
            }
            let class_seed = seed.wrapping_add(i as u64);
            let anchor = if samples.len() >= 2 {
                median_heuristic(samples, 1000, class_seed).unwrap_or(1.0)
            } else {
                1.0
            };
            let sigma = if samples.len() < folds.max(2) {
                anchor
            } else {
                let default: Vec<f64>;
                let grid = match grid {
                    Some(g) => g,
                    None => {
                        default = KDE_BANDWIDTH_FACTORS.iter().map(|f| f * anchor).collect();
                        &default
                    }
                };
                select_bandwidth(samples, grid, folds, class_seed)?.0
            };
            KernelDensity::new(samples.clone(), sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    KdeEmission::new(classes)
}

impl EmissionModel for KdeEmission {
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
