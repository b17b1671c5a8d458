#![allow(dead_code)]

use drhmm::inference::{GaussianEmissions, TransitionModel};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Random strictly positive stochastic vector.
pub fn positive_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

pub struct RandomHmm {
    pub model: TransitionModel,
    pub emissions: GaussianEmissions,
    pub states: Vec<usize>,
    pub observations: Vec<Vec<f64>>,
}

/// HMM with random positive `A` and `π`, isotropic Gaussian emissions in
/// `dim` dimensions, and a sampled path of length `len`.
pub fn random_hmm<R: Rng>(rng: &mut R, num_states: usize, dim: usize, len: usize) -> RandomHmm {
    let rows: Vec<Vec<f64>> = (0..num_states).map(|_| positive_simplex(rng, num_states)).collect();
    let initial = positive_simplex(rng, num_states);
    let model = TransitionModel::from_rows(&rows, &initial).unwrap();
    let means: Vec<Vec<f64>> = (0..num_states)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let stds: Vec<f64> = (0..num_states).map(|_| rng.random_range(0.5..1.5)).collect();
    let emissions = GaussianEmissions::new(means, stds).unwrap();

    let (states, observations) = sample_path(rng, &model, &emissions, len);
    RandomHmm {
        model,
        emissions,
        states,
        observations,
    }
}

fn draw<R: Rng>(rng: &mut R, p: impl IntoIterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, pi) in p.into_iter().enumerate() {
        acc += pi;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Sample states and observations from `model` with the given emissions.
pub fn sample_path<R: Rng>(
    rng: &mut R,
    model: &TransitionModel,
    emissions: &GaussianEmissions,
    len: usize,
) -> (Vec<usize>, Vec<Vec<f64>>) {
    let a = model.transitions();
    let mut states: Vec<usize> = Vec::with_capacity(len);
    let mut observations = Vec::with_capacity(len);
    for t in 0..len {
        let x = if t == 0 {
            draw(rng, model.initial().iter().copied())
        } else {
            draw(rng, a.row(states[t - 1]).iter().copied())
        };
        let noise = Normal::new(0.0, emissions.std_devs()[x]).unwrap();
        observations.push(emissions.means()[x].iter().map(|m| m + noise.sample(rng)).collect());
        states.push(x);
    }
    (states, observations)
}

/// `p(xₜ = i | y₁:T)` by summing the joint over every state path.
pub fn enumerate_smoothing(model: &TransitionModel, likelihoods: &DMatrix<f64>) -> DMatrix<f64> {
    let (t_len, s) = likelihoods.shape();
    let a = model.transitions();
    let pi = model.initial();
    let mut marginals = DMatrix::zeros(t_len, s);
    let mut path = vec![0usize; t_len];
    let total_paths = s.pow(t_len as u32);
    for code in 0..total_paths {
        let mut c = code;
        for x in path.iter_mut() {
            *x = c % s;
            c /= s;
        }
        let mut p = pi[path[0]] * likelihoods[(0, path[0])];
        for t in 1..t_len {
            p *= a[(path[t - 1], path[t])] * likelihoods[(t, path[t])];
        }
        for (t, &x) in path.iter().enumerate() {
            marginals[(t, x)] += p;
        }
    }
    for mut row in marginals.row_iter_mut() {
        let z = row.sum();
        row /= z;
    }
    marginals
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
