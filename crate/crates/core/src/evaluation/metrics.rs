//! Frame accuracy and threshold-free detection metrics.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};

/// Fraction of frames where `estimate` equals `truth`.
pub fn accuracy(truth: &[usize], estimate: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyInput("truth sequence"));
    }
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    let hits = truth.iter().zip(estimate).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("score is NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(invalid("labels", "both classes must be present"));
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from mid-ranks.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_scores(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid_rank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// `(FPR, FNR)` at every distinct threshold, from "nothing positive" to
/// "everything positive", predicting positive when `score ≥ threshold`.
pub fn error_tradeoff(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = check_scores(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut points = vec![(0.0, 1.0)];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        points.push((fp as f64 / neg as f64, 1.0 - tp as f64 / pos as f64));
        i = j;
    }
    Ok(points)
}

/// Rate where false-positive and false-negative rates cross, linearly
/// interpolated between adjacent thresholds. Scores are negated first if
/// their AUC is below one half.
pub fn equal_error_rate(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let flipped: Vec<f64>;
    let scores = if roc_auc(scores, labels)? < 0.5 {
        flipped = scores.iter().map(|s| -s).collect();
        &flipped
    } else {
        scores
    };
    let points = error_tradeoff(scores, labels)?;
    for w in points.windows(2) {
        let ((f1, n1), (f2, n2)) = (w[0], w[1]);
        let (d1, d2) = (n1 - f1, n2 - f2);
        if d1 >= 0.0 && d2 <= 0.0 {
            if d1 == d2 {
                return Ok(f1);
            }
            let lambda = d1 / (d1 - d2);
            return Ok(f1 + lambda * (f2 - f1));
        }
    }
    unreachable!("the tradeoff curve runs from (0, 1) to (1, 0)")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 2, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[1.0; 6], &[false, true, false, true, true, false]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(), 0.75);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(roc_auc(&[f64::NAN, 0.2], &[true, false]).is_err());
    }

    #[test]
    fn eer_examples() {
        assert_eq!(equal_error_rate(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 0.0);
        assert_eq!(equal_error_rate(&[0.9, 0.8, 0.2, 0.1], &[false, false, true, true]).unwrap(), 0.0);
        assert_eq!(equal_error_rate(&[1.0; 4], &[false, true, false, true]).unwrap(), 0.5);
        assert!(equal_error_rate(&[0.1], &[false]).is_err());
    }

    #[test]
    fn eer_is_one_half_for_uninformative_scores() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let scores: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..20_000).map(|_| rng.random_bool(0.5)).collect();
        assert!((equal_error_rate(&scores, &labels).unwrap() - 0.5).abs() < 0.05);
    }

    /// AUC by enumerating every positive-negative pair.
    fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        Ordering::Greater => 1.0,
                        Ordering::Equal => 0.5,
                        Ordering::Less => 0.0,
                    };
                }
            }
        }
        wins / pairs
    }

    /// EER by bisection on the piecewise-linear tradeoff curve, with
    /// rates recomputed by direct counting at each threshold.
    fn eer_bisection(scores: &[f64], labels: &[bool]) -> f64 {
        let s: Vec<f64> = if auc_pairs(scores, labels) < 0.5 {
            scores.iter().map(|v| -v).collect()
        } else {
            scores.to_vec()
        };
        let mut thresholds: Vec<f64> = s.clone();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let pos = labels.iter().filter(|&&l| l).count() as f64;
        let neg = labels.len() as f64 - pos;
        let mut pts = vec![(0.0, 1.0)];
        for &t in &thresholds {
            let fp = s.iter().zip(labels).filter(|(v, l)| **v >= t && !**l).count() as f64;
            let tp = s.iter().zip(labels).filter(|(v, l)| **v >= t && **l).count() as f64;
            pts.push((fp / neg, 1.0 - tp / pos));
        }
        let at = |u: f64| {
            let k = (u.floor() as usize).min(pts.len() - 2);
            let frac = u - k as f64;
            let f = pts[k].0 + frac * (pts[k + 1].0 - pts[k].0);
            let n = pts[k].1 + frac * (pts[k + 1].1 - pts[k].1);
            (f, n)
        };
        let (mut lo, mut hi) = (0.0, (pts.len() - 1) as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (f, n) = at(mid);
            if n - f > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi).0
    }

    fn labeled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![(-5i32..5).prop_map(f64::from), -5.0f64..5.0], n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_filter("both classes", |(_, l)| l.iter().any(|&x| x) && l.iter().any(|&x| !x))
        })
    }

    proptest! {
        #[test]
        fn auc_matches_pair_enumeration((s, l) in labeled_scores()) {
            prop_assert!((roc_auc(&s, &l).unwrap() - auc_pairs(&s, &l)).abs() < 1e-12);
        }

        #[test]
        fn auc_invariant_under_increasing_transform((s, l) in labeled_scores()) {
            let t: Vec<f64> = s.iter().map(|v| (0.7 * v).exp() + v.powi(3)).collect();
            prop_assert!((roc_auc(&s, &l).unwrap() - roc_auc(&t, &l).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn eer_matches_brute_force_and_auc_bound((s, l) in labeled_scores()) {
            let e = equal_error_rate(&s, &l).unwrap();
            prop_assert!((e - eer_bisection(&s, &l)).abs() < 1e-9);
            let auc = roc_auc(&s, &l).unwrap().max(1.0 - roc_auc(&s, &l).unwrap());
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert!(e <= (1.0 - auc).sqrt() + 1e-12);
        }

        #[test]
        fn accuracy_is_permutation_covariant(
            truth in prop::collection::vec(0usize..3, 1..50),
            est_seed in prop::collection::vec(0usize..3, 50),
            perm in Just([0usize, 1, 2]).prop_shuffle(),
        ) {
            let est = &est_seed[..truth.len()];
            let pt: Vec<usize> = truth.iter().map(|&x| perm[x]).collect();
            let pe: Vec<usize> = est.iter().map(|&x| perm[x]).collect();
            prop_assert_eq!(accuracy(&truth, est).unwrap(), accuracy(&pt, &pe).unwrap());
        }
    }

    #[test]
    fn eer_can_exceed_one_half_with_auc_above_one_half() {
        // ROC: (0, 0) -> (0, 0.4) -> (0.6, 0.4) -> (0.6, 1) -> (1, 1).
        let mut labels = vec![true; 4];
        labels.extend([false; 6]);
        labels.extend([true; 6]);
        labels.extend([false; 4]);
        let scores: Vec<f64> = (0..20).rev().map(f64::from).collect();
        assert!((roc_auc(&scores, &labels).unwrap() - 0.64).abs() < 1e-12);
        assert!((equal_error_rate(&scores, &labels).unwrap() - 0.6).abs() < 1e-12);
    }
}
