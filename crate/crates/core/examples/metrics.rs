//! Accuracy, ROC AUC and equal error rate on hand-made inputs.

use drhmm::evaluation::{accuracy, equal_error_rate, error_tradeoff, roc_auc};

fn main() -> drhmm::Result<()> {
    let truth = [0, 0, 1, 1, 2, 2];
    let estimate = [0, 1, 1, 1, 2, 0];
    println!("accuracy {:.3}", accuracy(&truth, &estimate)?);

    let scores = [0.1, 0.3, 0.35, 0.4, 0.6, 0.7, 0.8, 0.9];
    let labels = [false, false, true, false, true, false, true, true];
    println!("AUC {:.4}", roc_auc(&scores, &labels)?);
    println!("EER {:.4}", equal_error_rate(&scores, &labels)?);
    for (fpr, fnr) in error_tradeoff(&scores, &labels)? {
        println!("  FPR {fpr:.2}  FNR {fnr:.2}");
    }
    Ok(())
}
