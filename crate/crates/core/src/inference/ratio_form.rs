//! Forward-backward expressed in pairwise posterior ratios.
//!
//! With `r⃗ᵢⱼ(t) = αᵢ(t)/αⱼ(t)` the forward recursion becomes
//!
//! ```text
//! r⃗ᵢⱼ(1) = (πᵢ/πⱼ) wᵢⱼ(y₁)
//! r⃗ᵢⱼ(t) = Σₖ [ Σₖ' (Aₖ'ⱼ / Aₖᵢ) r⃗ₖ'ₖ(t−1) ]⁻¹ · wᵢⱼ(yₜ)
//! ```
//!
//! and with `r⃖ᵢⱼ(t) = βᵢ(t)/βⱼ(t)` the backward recursion is
//!
//! ```text
//! r⃖ᵢⱼ(T) = 1
//! r⃖ᵢⱼ(t) = Σₖ [ Σₖ' (Aⱼₖ' / Aᵢₖ) r⃖ₖ'ₖ(t+1) wₖ'ₖ(yₜ₊₁) ]⁻¹
//! ```
//!
//! Both are derived term by term from the normalized recursions, so the
//! prefactor of the forward step equals `Σₖ αₖAₖᵢ / Σₖ' αₖ'Aₖ'ⱼ` and the
//! backward step equals `Σₖ Aᵢₖpₖβₖ / Σₖ' Aⱼₖ'pₖ'βₖ'`. Smoothing ratios are
//! the elementwise product `rᵢⱼ = r⃗ᵢⱼ · r⃖ᵢⱼ`. No step normalizes.
//!
//! Only the upper triangle of each message is computed from the recursion;
//! the diagonal is exactly one and the lower triangle holds reciprocals.

use nalgebra::{DMatrix, DVector};

use super::{LikelihoodRatioProvider, TransitionModel, TRANSITION_FLOOR};
use crate::error::{invalid, Error, Result};

/// Per-frame `S × S` forward, backward and combined ratio messages.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioMessages {
    pub forward: Vec<DMatrix<f64>>,
    pub backward: Vec<DMatrix<f64>>,
    pub combined: Vec<DMatrix<f64>>,
}

impl RatioMessages {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// `p(xₜ | y₁:ₜ)` recovered from the forward ratios, `T × S`.
    pub fn filtering_probs(&self) -> Result<DMatrix<f64>> {
        probs_from(&self.forward)
    }

    /// `p(xₜ | y₁:T)` recovered from the combined ratios, `T × S`.
    pub fn smoothing_probs(&self) -> Result<DMatrix<f64>> {
        probs_from(&self.combined)
    }
}

/// Convert each ratio slice to a probability row.
pub fn probs_from(slices: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let s = slices.first().map_or(0, |m| m.nrows());
    let mut out = DMatrix::zeros(slices.len(), s);
    for (t, slice) in slices.iter().enumerate() {
        out.set_row(t, &ratios_to_probs(slice)?.transpose());
    }
    Ok(out)
}

/// `wᵢⱼ(yₜ)` for every frame.
pub fn likelihood_ratio_sequence<P: LikelihoodRatioProvider + ?Sized>(
    provider: &P,
    observations: &[Vec<f64>],
) -> Result<Vec<DMatrix<f64>>> {
    let s = provider.num_states();
    observations
        .iter()
        .map(|y| {
            let w = provider.ratio_matrix(y)?;
            if w.nrows() != s || w.ncols() != s {
                return Err(Error::DimensionMismatch { expected: s, got: w.nrows() });
            }
            if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::NonFinite("likelihood ratio is negative or non-finite".into()));
            }
            Ok(w)
        })
        .collect()
}

fn check_model(model: &TransitionModel, ratios: &[DMatrix<f64>]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::EmptyInput("observations"));
    }
    let s = model.num_states();
    if let Some(w) = ratios.iter().find(|w| w.nrows() != s || w.ncols() != s) {
        return Err(Error::DimensionMismatch { expected: s, got: w.nrows() });
    }
    if let Some(p) = model.initial().iter().find(|&&p| p <= 0.0) {
        return Err(invalid("initial", format!("ratio recursions need π > 0, found {p}")));
    }
    let min = model.min_transition();
    if min < TRANSITION_FLOOR {
        return Err(invalid(
            "transitions",
            format!("entry {min} is below the floor {TRANSITION_FLOOR}; use TransitionModel::floored"),
        ));
    }
    Ok(())
}

fn fill_reciprocal(r: &mut DMatrix<f64>, frame: usize) -> Result<()> {
    let s = r.nrows();
    for i in 0..s {
        r[(i, i)] = 1.0;
        for j in (i + 1)..s {
            let v = r[(i, j)];
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonFinite(format!("ratio message ({i},{j}) at frame {frame} is {v}")));
            }
            r[(j, i)] = 1.0 / v;
        }
    }
    Ok(())
}

/// Forward ratios from a precomputed likelihood-ratio sequence.
pub fn forward_ratio_from(model: &TransitionModel, ratios: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    check_model(model, ratios)?;
    let s = model.num_states();
    let a = model.transitions();
    let pi = model.initial();
    let mut out = Vec::with_capacity(ratios.len());

    let mut first = DMatrix::from_element(s, s, 1.0);
    for i in 0..s {
        for j in (i + 1)..s {
            first[(i, j)] = pi[i] / pi[j] * ratios[0][(i, j)];
        }
    }
    fill_reciprocal(&mut first, 0)?;
    out.push(first);

    let mut inner = DMatrix::<f64>::zeros(s, s);
    for (t, w) in ratios.iter().enumerate().skip(1) {
        let prev = &out[t - 1];
        // inner[(j, k)] = Σₖ' Aₖ'ⱼ r⃗ₖ'ₖ(t−1)
        for j in 0..s {
            for k in 0..s {
                inner[(j, k)] = (0..s).map(|kp| a[(kp, j)] * prev[(kp, k)]).sum();
            }
        }
        let mut next = DMatrix::from_element(s, s, 1.0);
        for i in 0..s {
            for j in (i + 1)..s {
                let prefactor: f64 = (0..s).map(|k| a[(k, i)] / inner[(j, k)]).sum();
                next[(i, j)] = prefactor * w[(i, j)];
            }
        }
        fill_reciprocal(&mut next, t)?;
        out.push(next);
    }
    Ok(out)
}

/// Backward ratios from a precomputed likelihood-ratio sequence.
pub fn backward_ratio_from(model: &TransitionModel, ratios: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    check_model(model, ratios)?;
    let s = model.num_states();
    let a = model.transitions();
    let t_len = ratios.len();
    let mut out = vec![DMatrix::from_element(s, s, 1.0); t_len];

    let mut inner = DMatrix::<f64>::zeros(s, s);
    for t in (0..t_len - 1).rev() {
        // evidence[(k', k)] = r⃖ₖ'ₖ(t+1) wₖ'ₖ(yₜ₊₁)
        let evidence = out[t + 1].component_mul(&ratios[t + 1]);
        // inner[(j, k)] = Σₖ' Aⱼₖ' evidence[(k', k)]
        for j in 0..s {
            for k in 0..s {
                inner[(j, k)] = (0..s).map(|kp| a[(j, kp)] * evidence[(kp, k)]).sum();
            }
        }
        let mut msg = DMatrix::from_element(s, s, 1.0);
        for i in 0..s {
            for j in (i + 1)..s {
                msg[(i, j)] = (0..s).map(|k| a[(i, k)] / inner[(j, k)]).sum();
            }
        }
        fill_reciprocal(&mut msg, t)?;
        out[t] = msg;
    }
    Ok(out)
}

/// `r⃗ᵢⱼ(t)` for every frame.
pub fn forward_ratio<P: LikelihoodRatioProvider + ?Sized>(
    model: &TransitionModel,
    provider: &P,
    observations: &[Vec<f64>],
) -> Result<Vec<DMatrix<f64>>> {
    check_states(model, provider)?;
    forward_ratio_from(model, &likelihood_ratio_sequence(provider, observations)?)
}

/// `r⃖ᵢⱼ(t)` for every frame.
pub fn backward_ratio<P: LikelihoodRatioProvider + ?Sized>(
    model: &TransitionModel,
    provider: &P,
    observations: &[Vec<f64>],
) -> Result<Vec<DMatrix<f64>>> {
    check_states(model, provider)?;
    backward_ratio_from(model, &likelihood_ratio_sequence(provider, observations)?)
}

fn check_states<P: LikelihoodRatioProvider + ?Sized>(model: &TransitionModel, provider: &P) -> Result<()> {
    if provider.num_states() != model.num_states() {
        return Err(Error::DimensionMismatch {
            expected: model.num_states(),
            got: provider.num_states(),
        });
    }
    Ok(())
}

/// Elementwise product of forward and backward messages.
pub fn combine_ratios(forward: &[DMatrix<f64>], backward: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    if forward.len() != backward.len() {
        return Err(Error::DimensionMismatch {
            expected: forward.len(),
            got: backward.len(),
        });
    }
    forward
        .iter()
        .zip(backward)
        .map(|(f, b)| {
            if f.shape() != b.shape() {
                return Err(Error::DimensionMismatch {
                    expected: f.nrows(),
                    got: b.nrows(),
                });
            }
            Ok(f.component_mul(b))
        })
        .collect()
}

/// Forward, backward and combined messages, evaluating the provider once per frame.
pub fn ratio_forward_backward<P: LikelihoodRatioProvider + ?Sized>(
    model: &TransitionModel,
    provider: &P,
    observations: &[Vec<f64>],
) -> Result<RatioMessages> {
    check_states(model, provider)?;
    let ratios = likelihood_ratio_sequence(provider, observations)?;
    let forward = forward_ratio_from(model, &ratios)?;
    let backward = backward_ratio_from(model, &ratios)?;
    let combined = combine_ratios(&forward, &backward)?;
    Ok(RatioMessages {
        forward,
        backward,
        combined,
    })
}

/// Probabilities from one ratio slice: `pᵢ = rᵢ,ref / Σⱼ rⱼ,ref`.
///
/// Candidate reference columns are visited in the order `S, S−1, …, 1`; a
/// column is admissible when its entries are finite and nonnegative with a
/// positive sum. Among admissible columns the one with the smallest maximum
/// entry wins (the most probable state, whose column is bounded by one),
/// ties resolved by visiting order.
pub fn ratios_to_probs(slice: &DMatrix<f64>) -> Result<DVector<f64>> {
    let s = slice.nrows();
    if s == 0 || slice.ncols() != s {
        return Err(invalid("slice", "ratio slice must be square and nonempty"));
    }
    let mut best: Option<(usize, f64)> = None;
    for j in (0..s).rev() {
        let col = slice.column(j);
        let admissible = col.iter().all(|&v| v >= 0.0 && v.is_finite()) && col.sum() > 0.0;
        if !admissible {
            continue;
        }
        let peak = col.max();
        if best.is_none_or(|(_, b)| peak < b) {
            best = Some((j, peak));
        }
    }
    let (j, _) = best.ok_or_else(|| Error::NonFinite("no admissible reference column".into()))?;
    let col = slice.column(j);
    Ok(col / col.sum())
}

/// Two-state forward ratio `r⃗₁₂`:
/// `r(t) = (A₁₁ r(t−1) + A₂₁) / (A₁₂ r(t−1) + A₂₂) · w₁₂(yₜ)`.
pub fn two_state_forward(model: &TransitionModel, w12: &[f64]) -> Result<Vec<f64>> {
    check_two_state(model, w12)?;
    let a = model.transitions();
    let pi = model.initial();
    let mut out = Vec::with_capacity(w12.len());
    let mut r = pi[0] / pi[1] * w12[0];
    out.push(r);
    for &w in &w12[1..] {
        r = (a[(0, 0)] * r + a[(1, 0)]) / (a[(0, 1)] * r + a[(1, 1)]) * w;
        out.push(r);
    }
    Ok(out)
}

/// Two-state backward ratio `r⃖₁₂`:
/// `r(t) = (A₁₁ r(t+1) w(t+1) + A₁₂) / (A₂₁ r(t+1) w(t+1) + A₂₂)`.
pub fn two_state_backward(model: &TransitionModel, w12: &[f64]) -> Result<Vec<f64>> {
    check_two_state(model, w12)?;
    let a = model.transitions();
    let mut out = vec![1.0; w12.len()];
    for t in (0..w12.len() - 1).rev() {
        let e = out[t + 1] * w12[t + 1];
        out[t] = (a[(0, 0)] * e + a[(0, 1)]) / (a[(1, 0)] * e + a[(1, 1)]);
    }
    Ok(out)
}

fn check_two_state(model: &TransitionModel, w12: &[f64]) -> Result<()> {
    if model.num_states() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: model.num_states(),
        });
    }
    if w12.is_empty() {
        return Err(Error::EmptyInput("observations"));
    }
    if model.initial().iter().any(|&p| p <= 0.0) {
        return Err(invalid("initial", "ratio recursions need π > 0"));
    }
    Ok(())
}
