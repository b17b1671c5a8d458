//! Switching noisy-sine generator and sliding-window embedding.
//!
//! Regime `i` emits `yₜ = sin(fᵢ·t) + ηₜ`, `ηₜ ~ N(0, noise_std²)`, where `t`
//! is the absolute frame index starting at 1. Windows `yₜ = y[t−d+1 ..= t]`
//! are labeled by their final frame.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::inference::TransitionModel;

/// Generator parameters. `Default` is the three-regime toy problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    /// Row-stochastic, `transitions[i][j] = p(xₜ = j | xₜ₋₁ = i)`.
    pub transitions: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// Angular frequency per regime, radians per frame.
    pub frequencies: Vec<f64>,
    pub noise_std: f64,
    pub length: usize,
    pub window: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            transitions: vec![
                vec![0.98, 0.01, 0.01],
                vec![0.01, 0.98, 0.01],
                vec![0.01, 0.01, 0.98],
            ],
            initial: vec![1.0 / 3.0; 3],
            frequencies: vec![0.2, 0.4, 0.6],
            noise_std: 0.5,
            length: 1000,
            window: 4,
            seed: 0,
        }
    }
}

impl ToyConfig {
    pub fn num_states(&self) -> usize {
        self.frequencies.len()
    }

    pub fn transition_model(&self) -> Result<TransitionModel> {
        TransitionModel::from_rows(&self.transitions, &self.initial)
    }

    pub fn validate(&self) -> Result<()> {
        let tm = self.transition_model()?;
        if tm.num_states() != self.num_states() {
            return Err(Error::DimensionMismatch {
                expected: self.num_states(),
                got: tm.num_states(),
            });
        }
        if self.frequencies.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(invalid("frequencies", "must be positive and finite"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(invalid("noise_std", "must be nonnegative and finite"));
        }
        if self.window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        if self.length < self.window {
            return Err(invalid(
                "length",
                format!("{} is shorter than the window {}", self.length, self.window),
            ));
        }
        Ok(())
    }
}

/// Raw and windowed output of one generator run.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySequence {
    /// 0-based regime per raw frame.
    pub states: Vec<usize>,
    pub series: Vec<f64>,
    /// Window ending at raw frame `window − 1 + k` (0-based) for position `k`.
    pub windows: Vec<Vec<f64>>,
    pub window_states: Vec<usize>,
}

/// Markov chain of length `config.length`, 0-based states.
pub fn sample_states(config: &ToyConfig) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_states_with(&config.transition_model()?, config.length, &mut rng)
}

pub(crate) fn sample_states_with(model: &TransitionModel, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let s = model.num_states();
    let weights = |v: Vec<f64>| WeightedIndex::new(v).map_err(|e| invalid("transitions", e.to_string()));
    let initial = weights(model.initial().iter().copied().collect())?;
    let rows = (0..s)
        .map(|i| weights(model.transitions().row(i).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    let mut states = Vec::with_capacity(length);
    if length == 0 {
        return Ok(states);
    }
    let mut x = initial.sample(rng);
    states.push(x);
    for _ in 1..length {
        x = rows[x].sample(rng);
        states.push(x);
    }
    Ok(states)
}

/// `sin(f_{xₜ}·t) + ηₜ` for `t = 1..T`. Noise is drawn from a stream
/// independent of the one used for [`sample_states`].
pub fn sample_observations(states: &[usize], config: &ToyConfig) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    sample_observations_with(states, &config.frequencies, config.noise_std, 1, &mut rng)
}

/// As [`sample_observations`], with the first frame at absolute index `t0`.
pub(crate) fn sample_observations_with(
    states: &[usize],
    frequencies: &[f64],
    noise_std: f64,
    t0: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let noise = Normal::new(0.0, noise_std).map_err(|e| invalid("noise_std", e.to_string()))?;
    states
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = frequencies.get(x).ok_or_else(|| {
                invalid(
                    "states",
                    format!("state {} exceeds the {} configured frequencies", x + 1, frequencies.len()),
                )
            })?;
            let t = (t0 + k) as f64;
            Ok((f * t).sin() + noise.sample(rng))
        })
        .collect()
}

/// `T − d + 1` windows, oldest sample first.
pub fn sliding_window(series: &[f64], window: usize) -> Result<Vec<Vec<f64>>> {
    if window == 0 {
        return Err(invalid("window", "must be at least 1"));
    }
    if series.len() < window {
        return Err(invalid(
            "window",
            format!("series of length {} is shorter than the window {window}", series.len()),
        ));
    }
    Ok(series.windows(window).map(<[f64]>::to_vec).collect())
}

/// Labels aligned with [`sliding_window`] output: the state at each window's last frame.
pub fn window_labels(states: &[usize], window: usize) -> Result<Vec<usize>> {
    if window == 0 || states.len() < window {
        return Err(invalid("window", "window must be in 1..=T"));
    }
    Ok(states[window - 1..].to_vec())
}

/// Full pipeline: states, noisy series, windows and window labels.
pub fn generate(config: &ToyConfig) -> Result<ToySequence> {
    config.validate()?;
    let states = sample_states(config)?;
    let series = sample_observations(&states, config)?;
    let windows = sliding_window(&series, config.window)?;
    let window_states = window_labels(&states, config.window)?;
    Ok(ToySequence {
        states,
        series,
        windows,
        window_states,
    })
}

/// One contiguous single-regime segment of `frames` windows, for training.
///
/// Raw frames run `t = start .. start + frames + window − 2`, so the first
/// window ends at `t = start + window − 1`.
pub fn regime_segment(
    config: &ToyConfig,
    regime: usize,
    frames: usize,
    start: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    if frames == 0 {
        return Err(invalid("frames", "must be at least 1"));
    }
    if start == 0 {
        return Err(invalid("start", "absolute time starts at 1"));
    }
    let raw = vec![regime; frames + config.window - 1];
    let series = sample_observations_with(&raw, &config.frequencies, config.noise_std, start, rng)?;
    sliding_window(&series, config.window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_chain_stays_put() {
        let config = ToyConfig {
            transitions: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            initial: vec![1.0, 0.0, 0.0],
            length: 50,
            ..ToyConfig::default()
        };
        assert_eq!(sample_states(&config).unwrap(), vec![0; 50]);
    }

    #[test]
    fn self_transition_frequency() {
        let config = ToyConfig {
            length: 100_000,
            seed: 4,
            ..ToyConfig::default()
        };
        let states = sample_states(&config).unwrap();
        for s in 0..3 {
            let (mut stay, mut total) = (0usize, 0usize);
            for w in states.windows(2) {
                if w[0] == s {
                    total += 1;
                    stay += usize::from(w[1] == s);
                }
            }
            let freq = stay as f64 / total as f64;
            assert!((freq - 0.98).abs() < 0.005, "state {s}: {freq}");
        }
    }

    #[test]
    fn noiseless_sine() {
        let config = ToyConfig {
            noise_std: 0.0,
            ..ToyConfig::default()
        };
        let y = sample_observations(&[0; 10], &config).unwrap();
        for (k, v) in y.iter().enumerate() {
            assert_eq!(*v, (0.2 * (k + 1) as f64).sin());
        }
    }

    #[test]
    fn noise_variance() {
        let config = ToyConfig {
            length: 100_000,
            seed: 8,
            ..ToyConfig::default()
        };
        let states = sample_states(&config).unwrap();
        let y = sample_observations(&states, &config).unwrap();
        let resid: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(k, v)| v - (config.frequencies[states[k]] * (k + 1) as f64).sin())
            .collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((var - 0.25).abs() < 0.01, "{var}");
    }

    #[test]
    fn rejects_unknown_state() {
        assert!(sample_observations(&[3], &ToyConfig::default()).is_err());
    }

    #[test]
    fn windows_by_hand() {
        let w = sliding_window(&[1.0, 2.0, 3.0, 4.0, 5.0], 4).unwrap();
        assert_eq!(w, vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 3.0, 4.0, 5.0]]);
        assert_eq!(sliding_window(&[1.0, 2.0], 1).unwrap(), vec![vec![1.0], vec![2.0]]);
        assert!(sliding_window(&[1.0], 2).is_err());
        assert!(sliding_window(&[1.0], 0).is_err());
    }

    #[test]
    fn pipeline_alignment_and_determinism() {
        let config = ToyConfig {
            length: 300,
            seed: 21,
            ..ToyConfig::default()
        };
        let a = generate(&config).unwrap();
        assert_eq!(a, generate(&config).unwrap());
        assert_eq!(a.windows.len(), 297);
        assert_eq!(a.window_states.len(), 297);
        for (k, w) in a.windows.iter().enumerate() {
            assert_eq!(w[3], a.series[k + 3]);
            assert_eq!(a.window_states[k], a.states[k + 3]);
        }
        let other = generate(&ToyConfig { seed: 22, ..config }).unwrap();
        assert_ne!(a.series, other.series);
    }

    #[test]
    fn invalid_configs() {
        let bad = |c: ToyConfig| c.validate().is_err();
        assert!(bad(ToyConfig { window: 0, ..ToyConfig::default() }));
        assert!(bad(ToyConfig { length: 3, ..ToyConfig::default() }));
        assert!(bad(ToyConfig { noise_std: -1.0, ..ToyConfig::default() }));
        assert!(bad(ToyConfig { frequencies: vec![0.2, 0.4], ..ToyConfig::default() }));
        assert!(bad(ToyConfig { frequencies: vec![0.2, -0.4, 0.6], ..ToyConfig::default() }));
    }

    #[test]
    fn segment_uses_absolute_time() {
        let config = ToyConfig {
            noise_std: 0.0,
            ..ToyConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seg = regime_segment(&config, 2, 5, 1, &mut rng).unwrap();
        assert_eq!(seg.len(), 5);
        assert_eq!(seg[0][3], (0.6f64 * 4.0).sin());
        let later = regime_segment(&config, 0, 3, 100, &mut rng).unwrap();
        assert_eq!(later[0][0], (0.2f64 * 100.0).sin());
        assert_eq!(later[2][3], (0.2f64 * 105.0).sin());
        assert!(regime_segment(&config, 0, 3, 0, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn window_count(t in 1usize..200, d in 1usize..10) {
            prop_assume!(d <= t);
            let series: Vec<f64> = (0..t).map(|v| v as f64).collect();
            prop_assert_eq!(sliding_window(&series, d).unwrap().len(), t - d + 1);
        }

        #[test]
        fn noiseless_single_regime_windows_overlap(t in 8usize..60, d in 1usize..6) {
            let config = ToyConfig { noise_std: 0.0, ..ToyConfig::default() };
            let y = sample_observations(&vec![1; t], &config).unwrap();
            let w = sliding_window(&y, d).unwrap();
            for pair in w.windows(2) {
                prop_assert_eq!(&pair[0][1..], &pair[1][..d - 1]);
            }
        }
    }
}
