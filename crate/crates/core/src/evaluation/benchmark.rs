//! Seeded comparison of DR-HMM against KDE-HMM and GMM-HMM on the switching
//! sine toy problem.
//!
//! Each run draws one contiguous training segment per regime, starting at a
//! uniform random time within the test horizon, fits every
//! requested method on exactly those segments, and scores MAP decoding on an
//! independent test sequence under three inference modes.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::accuracy;
use crate::baselines::{fit_gmm_bic, fit_kde, DEFAULT_K_CANDIDATES, DEFAULT_RESTARTS};
use crate::error::{invalid, Error, Result};
use crate::inference::{emission_likelihood_matrix, map_decode, EmissionModel, InferenceMode, ProbMessages, TransitionModel};
use crate::learning::{fit_supervised, FittedDrHmm, LabeledSequence, LearningConfig, TrainingCorpus};
use crate::synth::{generate, regime_segment, ToyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    DrHmm,
    KdeHmm,
    GmmHmm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::DrHmm, Method::KdeHmm, Method::GmmHmm];

    pub fn name(self) -> &'static str {
        match self {
            Method::DrHmm => "drhmm",
            Method::KdeHmm => "kdehmm",
            Method::GmmHmm => "gmmhmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("method", format!("unknown method {s:?}; expected drhmm, kdehmm or gmmhmm")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Training windows per regime.
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub methods: Vec<Method>,
    /// Test windows per run.
    pub test_length: usize,
    pub seed: u64,
    /// Generator settings; its own seed is ignored.
    pub toy: ToyConfig,
    /// DR-HMM settings; its seed is replaced by the run seed.
    pub learning: LearningConfig,
    pub kde_folds: usize,
    pub gmm_components: Vec<usize>,
    pub gmm_restarts: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            sizes: vec![50, 125, 250, 500],
            runs: 50,
            methods: Method::ALL.to_vec(),
            test_length: 1000,
            seed: 0,
            toy: ToyConfig::default(),
            learning: LearningConfig::default(),
            kde_folds: 5,
            gmm_components: DEFAULT_K_CANDIDATES.to_vec(),
            gmm_restarts: DEFAULT_RESTARTS,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(invalid("sizes", "need at least one positive training size"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "need at least one method"));
        }
        if self.runs == 0 || self.test_length == 0 {
            return Err(invalid("runs", "runs and test_length must be positive"));
        }
        self.toy.validate()
    }
}

/// Accuracies of one method in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: Method,
    pub size: usize,
    pub run: usize,
    pub seed: u64,
    /// Hash of the training windows, identical across methods within a run.
    pub train_hash: u64,
    pub smoothing: f64,
    pub filtering: f64,
    pub independent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFailure {
    pub method: Method,
    pub size: usize,
    pub run: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Aggregate over the successful runs of one (method, size) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub method: Method,
    pub size: usize,
    pub count: usize,
    pub smoothing: Summary,
    pub filtering: Summary,
    pub independent: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub rows: Vec<BenchmarkRow>,
    pub failures: Vec<BenchmarkFailure>,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkResult {
    pub fn cell(&self, method: Method, size: usize) -> Option<&BenchmarkCell> {
        self.cells.iter().find(|c| c.method == method && c.size == size)
    }

    /// Rows of one cell in run order.
    pub fn rows_for(&self, method: Method, size: usize) -> Vec<&BenchmarkRow> {
        self.rows.iter().filter(|r| r.method == method && r.size == size).collect()
    }
}

/// Seed of run `index` (sizes outer, runs inner): the first output of a
/// ChaCha8 stream keyed by the master seed and selected by `index`.
pub fn run_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

fn hash_windows(per_class: &[Vec<Vec<f64>>]) -> u64 {
    let mut h = DefaultHasher::new();
    for class in per_class {
        class.len().hash(&mut h);
        for y in class {
            for v in y {
                v.to_bits().hash(&mut h);
            }
        }
    }
    h.finish()
}

struct RunData {
    per_class: Vec<Vec<Vec<f64>>>,
    test_windows: Vec<Vec<f64>>,
    test_states: Vec<usize>,
}

fn draw_run(config: &BenchmarkConfig, size: usize, seed: u64) -> Result<RunData> {
    let toy = &config.toy;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_class = (0..toy.num_states())
        .map(|regime| {
            let start = rng.random_range(1..=config.test_length);
            regime_segment(toy, regime, size, start, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let test = generate(&ToyConfig {
        length: config.test_length + toy.window - 1,
        seed: rng.next_u64(),
        ..toy.clone()
    })?;
    Ok(RunData {
        per_class,
        test_windows: test.windows,
        test_states: test.window_states,
    })
}

/// Accuracies `(smoothing, filtering, independent)` for an explicit-density
/// emission model under the true dynamics.
fn score_emissions<E: EmissionModel>(
    emissions: &E,
    transitions: &TransitionModel,
    data: &RunData,
) -> Result<(f64, f64, f64)> {
    let lik = emission_likelihood_matrix(emissions, &data.test_windows)?;
    let messages = ProbMessages::compute(transitions, &lik)?;
    Ok((
        accuracy(&data.test_states, &map_decode(&messages.gamma))?,
        accuracy(&data.test_states, &map_decode(&messages.alpha))?,
        accuracy(&data.test_states, &map_decode(&lik))?,
    ))
}

fn score_drhmm(model: &FittedDrHmm, data: &RunData) -> Result<(f64, f64, f64)> {
    let acc = |mode| accuracy(&data.test_states, &model.decode(&data.test_windows, mode)?);
    Ok((
        acc(InferenceMode::Smooth)?,
        acc(InferenceMode::Filter)?,
        acc(InferenceMode::Independent)?,
    ))
}

fn evaluate_method(
    method: Method,
    config: &BenchmarkConfig,
    transitions: &TransitionModel,
    data: &RunData,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    match method {
        Method::DrHmm => {
            let sequences = data
                .per_class
                .iter()
                .enumerate()
                .map(|(i, w)| LabeledSequence::labeled(w.clone(), vec![i; w.len()]))
                .collect::<Result<Vec<_>>>()?;
            let learning = LearningConfig {
                seed,
                ..config.learning.clone()
            };
            let fitted = fit_supervised(&TrainingCorpus::new(sequences)?, transitions.num_states(), &learning)?;
            let model = FittedDrHmm::new(transitions.clone(), fitted.posterior_model, fitted.metadata)?;
            score_drhmm(&model, data)
        }
        Method::KdeHmm => score_emissions(&fit_kde(&data.per_class, None, config.kde_folds, seed)?, transitions, data),
        Method::GmmHmm => score_emissions(
            &fit_gmm_bic(&data.per_class, &config.gmm_components, config.gmm_restarts, seed)?,
            transitions,
            data,
        ),
    }
}

/// Run every (size, run) pair in parallel; results are ordered by size,
/// run, then method, and depend only on the configuration.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkResult> {
    config.validate()?;
    let transitions = config.toy.transition_model()?;
    let jobs: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&size| (0..config.runs).map(move |run| (size, run)))
        .collect();
    let outcomes: Vec<Vec<std::result::Result<BenchmarkRow, BenchmarkFailure>>> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, &(size, run))| {
            let seed = run_seed(config.seed, index as u64);
            let fail = |method, message: String| BenchmarkFailure {
                method,
                size,
                run,
                seed,
                message,
            };
            let data = match draw_run(config, size, seed) {
                Ok(d) => d,
                Err(e) => return config.methods.iter().map(|&m| Err(fail(m, e.to_string()))).collect(),
            };
            let train_hash = hash_windows(&data.per_class);
            config
                .methods
                .iter()
                .map(|&method| {
                    evaluate_method(method, config, &transitions, &data, seed)
                        .map(|(smoothing, filtering, independent)| BenchmarkRow {
                            method,
                            size,
                            run,
                            seed,
                            train_hash,
                            smoothing,
                            filtering,
                            independent,
                        })
                        .map_err(|e| fail(method, e.to_string()))
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(r) => rows.push(r),
            Err(f) => failures.push(f),
        }
    }
    let mut cells = Vec::new();
    for &method in &config.methods {
        for &size in &config.sizes {
            let cell_rows: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.method == method && r.size == size).collect();
            let summary = |f: fn(&BenchmarkRow) -> f64| Summary::of(&cell_rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            cells.push(BenchmarkCell {
                method,
                size,
                count: cell_rows.len(),
                smoothing: summary(|r| r.smoothing),
                filtering: summary(|r| r.filtering),
                independent: summary(|r| r.independent),
            });
        }
    }
    Ok(BenchmarkResult {
        config: config.clone(),
        rows,
        failures,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: Vec<Method>, runs: usize, sizes: Vec<usize>) -> BenchmarkConfig {
        BenchmarkConfig {
            sizes,
            runs,
            methods,
            test_length: 200,
            ..BenchmarkConfig::default()
        }
    }

    #[test]
    fn skeleton_single_row() {
        let result = run_benchmark(&small(vec![Method::DrHmm], 1, vec![50])).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert!(result.failures.is_empty());
        let row = &result.rows[0];
        assert_eq!(row.seed, run_seed(0, 0));
        for acc in [row.smoothing, row.filtering, row.independent] {
            assert!((0.0..=1.0).contains(&acc));
        }
        assert_eq!(result.cells.len(), 1);
        assert_eq!(result.cells[0].count, 1);
        assert_eq!(result.cells[0].smoothing.std, 0.0);
    }

    #[test]
    fn methods_share_training_data_and_results_reproduce() {
        let config = small(Method::ALL.to_vec(), 2, vec![30]);
        let a = run_benchmark(&config).unwrap();
        let b = run_benchmark(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 6);
        for run in 0..2 {
            let hashes: Vec<u64> = a.rows.iter().filter(|r| r.run == run).map(|r| r.train_hash).collect();
            assert!(hashes.windows(2).all(|w| w[0] == w[1]));
        }
        assert_ne!(a.rows[0].train_hash, a.rows[3].train_hash);
    }

    #[test]
    fn aggregates_match_rows() {
        let result = run_benchmark(&small(vec![Method::KdeHmm], 3, vec![20, 40])).unwrap();
        for cell in &result.cells {
            let rows = result.rows_for(cell.method, cell.size);
            assert_eq!(cell.count, 3);
            let mean = rows.iter().map(|r| r.filtering).sum::<f64>() / 3.0;
            assert!((cell.filtering.mean - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn run_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| run_seed(9, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("hmm".parse::<Method>().is_err());
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        assert!(run_benchmark(&small(vec![], 1, vec![10])).is_err());
        assert!(run_benchmark(&small(vec![Method::DrHmm], 1, vec![])).is_err());
        assert!(run_benchmark(&small(vec![Method::DrHmm], 0, vec![10])).is_err());
    }
}
