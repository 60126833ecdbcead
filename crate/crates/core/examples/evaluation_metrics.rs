//! Classification and regression metrics on small hand-made inputs.
//!
//! cargo run --example evaluation_metrics

use plumestack::metrics::{
    auc_roc, classification_metrics, evaluate_classification, regression_metrics, ConfusionMatrix,
};

fn main() -> plumestack::Result<()> {
    let cm = ConfusionMatrix { tp: 50, tn: 40, fp: 10, fn_: 0 };
    let m = classification_metrics(&cm);
    println!("confusion {cm:?}");
    println!(
        "  accuracy {:.4}  precision {:.4}  recall {:.4}  F1 {:.4}  MCC {:.4}",
        m.accuracy, m.precision, m.recall, m.f1, m.mcc
    );

    let y = [0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let scores = [0.1, 0.4, 0.4, 0.8, 0.6, 0.9];
    println!("\nAUC with a tied score pair: {:.4}", auc_roc(&y, &scores)?);
    let r = evaluate_classification(&y, &scores)?;
    println!("thresholded at 0.5: accuracy {:.4}, MCC {:.4}", r.accuracy, r.mcc);

    // A degenerate predictor: precision and MCC have zero denominators.
    let all_negative = classification_metrics(&ConfusionMatrix { tp: 0, tn: 8, fp: 0, fn_: 2 });
    println!("\nall-negative predictor: accuracy {:.2}, degenerate {:?}", all_negative.accuracy, all_negative.degenerate);

    let reg = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0])?;
    println!("\nregression: R2 {:.4}  MSE {:.4}  RMSE {:.4}", reg.r2, reg.mse, reg.rmse);
    Ok(())
}
