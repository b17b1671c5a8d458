use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest transition probability admitted by the ratio recursions, which
/// divide by transition entries.
pub const TRANSITION_FLOOR: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-9;

/// Row-stochastic `A` with `A[(i, j)] = p(xₜ = j | xₜ₋₁ = i)` and initial
/// distribution `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    transitions: DMatrix<f64>,
    initial: DVector<f64>,
}

impl TransitionModel {
    pub fn new(transitions: DMatrix<f64>, initial: DVector<f64>) -> Result<Self> {
        let s = transitions.nrows();
        if s == 0 {
            return Err(Error::EmptyInput("transition matrix"));
        }
        if transitions.ncols() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: transitions.ncols(),
            });
        }
        if initial.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: initial.len(),
            });
        }
        for (i, row) in transitions.row_iter().enumerate() {
            if row.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
                return Err(invalid("transitions", format!("row {i} has a negative or non-finite entry")));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(invalid("transitions", format!("row {i} sums to {sum}")));
            }
        }
        if initial.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(invalid("initial", "negative or non-finite entry"));
        }
        let sum = initial.sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid("initial", format!("sums to {sum}")));
        }
        Ok(Self { transitions, initial })
    }

    /// Row-major convenience constructor.
    pub fn from_rows(rows: &[Vec<f64>], initial: &[f64]) -> Result<Self> {
        let s = rows.len();
        if rows.iter().any(|r| r.len() != s) {
            return Err(invalid("transitions", "matrix is not square"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(s, s, &flat), DVector::from_column_slice(initial))
    }

    /// `Aᵢⱼ = 1/S`, `πᵢ = 1/S`.
    pub fn uniform(num_states: usize) -> Self {
        let u = 1.0 / num_states as f64;
        Self {
            transitions: DMatrix::from_element(num_states, num_states, u),
            initial: DVector::from_element(num_states, u),
        }
    }

    /// Two-state chain `[[α, 1−α], [1−α, α]]` with uniform `π`.
    pub fn symmetric_two_state(stay: f64) -> Result<Self> {
        Self::from_rows(&[vec![stay, 1.0 - stay], vec![1.0 - stay, stay]], &[0.5, 0.5])
    }

    /// `S`-state chain with `stay` on the diagonal and the remainder spread
    /// evenly off it.
    pub fn sticky(num_states: usize, stay: f64) -> Result<Self> {
        if num_states < 2 {
            return Self::from_rows(&[vec![1.0]], &[1.0]);
        }
        let off = (1.0 - stay) / (num_states - 1) as f64;
        let rows: Vec<Vec<f64>> = (0..num_states)
            .map(|i| (0..num_states).map(|j| if i == j { stay } else { off }).collect())
            .collect();
        Self::from_rows(&rows, &vec![1.0 / num_states as f64; num_states])
    }

    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    /// Lift every entry of `A` and `π` to at least `floor` by mixing with
    /// the uniform distribution: `a' = (1 − S·floor)·a + floor`. Rows stay
    /// stochastic.
    pub fn floored(&self, floor: f64) -> Result<Self> {
        let s = self.num_states() as f64;
        if !(floor >= 0.0 && floor * s < 1.0) {
            return Err(invalid("floor", format!("{floor} is not admissible for {s} states")));
        }
        let mix = |a: f64| (1.0 - s * floor) * a + floor;
        Ok(Self {
            transitions: self.transitions.map(mix),
            initial: self.initial.map(mix),
        })
    }

    /// Smallest entry of `A`.
    pub fn min_transition(&self) -> f64 {
        self.transitions.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TransitionModel::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8]], &[0.3, 0.7]).is_ok());
        assert!(TransitionModel::from_rows(&[vec![0.5, 0.6], vec![0.2, 0.8]], &[0.3, 0.7]).is_err());
        assert!(TransitionModel::from_rows(&[vec![1.5, -0.5], vec![0.2, 0.8]], &[0.3, 0.7]).is_err());
        assert!(TransitionModel::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8]], &[0.3, 0.6]).is_err());
        assert!(TransitionModel::from_rows(&[vec![0.5, 0.5]], &[1.0]).is_err());
    }

    #[test]
    fn flooring_keeps_rows_stochastic() {
        let m = TransitionModel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]).unwrap();
        let f = m.floored(TRANSITION_FLOOR).unwrap();
        assert!(f.min_transition() >= TRANSITION_FLOOR);
        for row in f.transitions().row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-15);
        }
        assert!(m.floored(0.6).is_err());
    }
}
