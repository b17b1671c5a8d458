//! Small dense helpers shared by the kernel estimators.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Factor a symmetric positive-definite system matrix.
pub(crate) fn cholesky(mut m: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("system matrix has non-finite entries".into()));
    }
    // symmetrize against round-off in the accumulated Gram matrix
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Cholesky::new(m).ok_or_else(|| Error::SingularSystem("matrix is not positive definite".into()))
}

/// `Φᵀ diag(w) Φ + ρ I`; `weights = None` means unit weights.
pub(crate) fn weighted_gram(phi: &DMatrix<f64>, weights: Option<&[f64]>, ridge: f64) -> DMatrix<f64> {
    let mut g = match weights {
        None => phi.tr_mul(phi),
        Some(w) => {
            let mut scaled = phi.clone();
            for (mut row, &wi) in scaled.row_iter_mut().zip(w) {
                row *= wi;
            }
            phi.tr_mul(&scaled)
        }
    };
    for i in 0..g.nrows() {
        g[(i, i)] += ridge;
    }
    g
}

/// `Φᵀ v`.
pub(crate) fn project(phi: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    phi.tr_mul(&DVector::from_column_slice(v))
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
