//! Per-frame decisions.

use nalgebra::DMatrix;

use super::ratio_form::likelihood_ratio_sequence;
use super::LikelihoodRatioProvider;
use crate::error::Result;

/// Index of the largest entry; ties go to the lowest index. NaN never wins.
pub fn argmax<'a, I: IntoIterator<Item = &'a f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Row-wise argmax of a `T × S` posterior matrix.
pub fn map_decode(posteriors: &DMatrix<f64>) -> Vec<usize> {
    posteriors.row_iter().map(|row| argmax(row.iter())).collect()
}

/// `argmaxᵢ Σⱼ wᵢⱼ(yₜ)` per frame, ignoring dynamics.
pub fn classify_independent<P: LikelihoodRatioProvider + ?Sized>(
    provider: &P,
    observations: &[Vec<f64>],
) -> Result<Vec<usize>> {
    Ok(likelihood_ratio_sequence(provider, observations)?
        .iter()
        .map(|w| {
            let sums: Vec<f64> = w.row_iter().map(|r| r.sum()).collect();
            argmax(&sums)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_and_nan() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[f64::NAN, 0.5]), 1);
        assert_eq!(argmax(&[-1.0]), 0);
    }

    #[test]
    fn decode_rows() {
        let p = DMatrix::from_row_slice(3, 2, &[0.9, 0.1, 0.2, 0.8, 0.5, 0.5]);
        assert_eq!(map_decode(&p), vec![0, 1, 0]);
    }
}
