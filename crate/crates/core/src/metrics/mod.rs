//! Binary classification and regression metrics.

mod report;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use report::{ClassificationRow, RegressionRow, ReportTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    /// Filled in when scores are available.
    pub auc_roc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub confusion: ConfusionMatrix,
    /// Metrics whose denominator was zero and were reported as 0.0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

impl ClassificationReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub ssr: f64,
    pub sst: f64,
    pub n: usize,
    pub r2: f64,
    pub mse: f64,
    pub rmse: f64,
}

fn check_binary(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|&&x| x != 0.0 && x != 1.0) {
        Some(x) => Err(Error::InvalidArgument(format!("{name} contains non-binary value {x}"))),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[f64], y_pred: &[f64]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    check_binary("y_true", y_true)?;
    check_binary("y_pred", y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1.0, p == 1.0) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Every count-based metric. Zero denominators give 0.0 and are listed in
/// `degenerate`.
pub fn classification_metrics(cm: &ConfusionMatrix) -> ClassificationReport {
    let (tp, tn, fp, fn_) = (cm.tp as f64, cm.tn as f64, cm.fp as f64, cm.fn_ as f64);
    let mut degenerate = Vec::new();
    let mut ratio = |name: &str, num: f64, den: f64| {
        if den == 0.0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num / den
        }
    };
    let accuracy = ratio("accuracy", tp + tn, tp + tn + fp + fn_);
    let precision = ratio("precision", tp, tp + fp);
    let recall = ratio("recall", tp, tp + fn_);
    let f1 = ratio("f1", tp, tp + (fp + fn_) / 2.0);
    let den = ((tp + fp) * (tp + fn_)).sqrt() * ((tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio("mcc", tp * tn - fp * fn_, den);
    ClassificationReport {
        accuracy,
        f1,
        mcc,
        auc_roc: None,
        precision,
        recall,
        confusion: *cm,
        degenerate,
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic, using average
/// ranks for tied scores.
pub fn auc_roc(y_true: &[f64], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} labels vs {} scores",
            y_true.len(),
            scores.len()
        )));
    }
    check_binary("y_true", y_true)?;
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s}")));
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1.0).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate("AUC needs both classes present".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of (1-based) positive ranks, doubled to stay integral.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg2 = (i + 1 + j + 1) as u128;
        let pos = idx[i..=j].iter().filter(|&&k| y_true[k] == 1.0).count() as u128;
        rank_sum2 += avg2 * pos;
        i = j + 1;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

/// Threshold scores at 0.5 and compute every classification metric.
pub fn evaluate_classification(y_true: &[f64], scores: &[f64]) -> Result<ClassificationReport> {
    let labels: Vec<f64> = scores.iter().map(|&s| f64::from(u8::from(s >= 0.5))).collect();
    let mut r = classification_metrics(&confusion(y_true, &labels)?);
    r.auc_roc = Some(auc_roc(y_true, scores)?);
    Ok(r)
}

pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<RegressionReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} targets vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let n = y_true.len();
    if n < 2 {
        return Err(Error::InvalidArgument("regression metrics need at least two rows".into()));
    }
    let mean = y_true.iter().sum::<f64>() / n as f64;
    let sst: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if sst == 0.0 {
        return Err(Error::Degenerate("constant truth: total sum of squares is zero".into()));
    }
    let ssr: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    let mse = ssr / n as f64;
    Ok(RegressionReport {
        ssr,
        sst,
        n,
        r2: 1.0 - ssr / sst,
        mse,
        rmse: mse.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    #[test]
    fn confusion_counts() {
        assert_eq!(confusion(&[1., 1., 0., 0.], &[1., 0., 0., 1.]).unwrap(), cm(1, 1, 1, 1));
        assert_eq!(confusion(&[1., 1.], &[0., 0.]).unwrap(), cm(0, 0, 0, 2));
        assert!(confusion(&[1.], &[1., 0.]).is_err());
        assert!(confusion(&[2.], &[1.]).is_err());
    }

    #[test]
    fn hand_evaluated_report() {
        let r = classification_metrics(&cm(50, 40, 10, 0));
        assert!((r.accuracy - 0.9).abs() < 1e-12);
        assert!((r.precision - 50.0 / 60.0).abs() < 1e-12);
        assert_eq!(r.recall, 1.0);
        assert!((r.f1 - 0.9090909).abs() < 1e-6);
        assert!((r.mcc - 0.8164966).abs() < 1e-6);
        assert!(!r.is_degenerate());
    }

    #[test]
    fn degenerate_denominators_are_flagged() {
        let r = classification_metrics(&cm(25, 25, 25, 25));
        assert_eq!((r.accuracy, r.mcc), (0.5, 0.0));
        let r = classification_metrics(&cm(10, 0, 0, 0));
        assert_eq!((r.accuracy, r.f1, r.precision, r.recall, r.mcc), (1.0, 1.0, 1.0, 1.0, 0.0));
        assert_eq!(r.degenerate, vec!["mcc".to_string()]);
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc_roc(&[1., 0., 1., 0.], &[0.9, 0.8, 0.7, 0.1]).unwrap(), 0.75);
        assert_eq!(auc_roc(&[0., 0., 1.], &[0.1, 0.2, 0.3]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0., 1., 1.], &[0.4; 3]).unwrap(), 0.5);
        assert!(matches!(auc_roc(&[1., 1.], &[0.1, 0.2]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn regression_cases() {
        let r = regression_metrics(&[1., 2., 3.], &[1., 2., 2.]).unwrap();
        assert_eq!((r.ssr, r.sst, r.r2), (1.0, 2.0, 0.5));
        assert!((r.rmse - 0.5773503).abs() < 1e-6);
        assert_eq!(regression_metrics(&[1., 2., 3.], &[2., 2., 2.]).unwrap().r2, 0.0);
        assert!(matches!(regression_metrics(&[1., 1.], &[1., 2.]), Err(Error::Degenerate(_))));
        assert!(regression_metrics(&[1.], &[1.]).is_err());
    }

    fn pair_count_auc(y: &[f64], s: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in (0..y.len()).filter(|&i| y[i] == 1.0) {
            for j in (0..y.len()).filter(|&j| y[j] == 0.0) {
                den += 1.0;
                num += match s[i].partial_cmp(&s[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
        num / den
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(v in proptest::collection::vec((0u8..2, 0u8..8), 2..120)) {
            let y: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
            let s: Vec<f64> = v.iter().map(|p| p.1 as f64 / 8.0).collect();
            prop_assume!(y.contains(&0.0) && y.contains(&1.0));
            let a = auc_roc(&y, &s).unwrap();
            prop_assert!((a - pair_count_auc(&y, &s)).abs() < 1e-12);
            let neg: Vec<f64> = s.iter().map(|x| -x).collect();
            prop_assert!((auc_roc(&y, &neg).unwrap() - (1.0 - a)).abs() < 1e-12);
            let swapped: Vec<f64> = y.iter().map(|x| 1.0 - x).collect();
            prop_assert!((auc_roc(&swapped, &neg).unwrap() - a).abs() < 1e-12);
        }

        #[test]
        fn accuracy_is_an_integer_identity(tp in 0u64..1000, tn in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000) {
            let c = cm(tp, tn, fp, fn_);
            prop_assume!(c.total() > 0);
            let r = classification_metrics(&c);
            prop_assert_eq!((r.accuracy * c.total() as f64).round() as u64, tp + tn);
            if tp * tn == fp * fn_ {
                prop_assert_eq!(r.mcc, 0.0);
            }
        }

        #[test]
        fn r2_is_affine_invariant(v in proptest::collection::vec((-100i32..100, -100i32..100), 3..50), a in 0.5f64..20.0, b in -50f64..50.0) {
            let y: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
            let p: Vec<f64> = v.iter().map(|p| p.1 as f64).collect();
            prop_assume!(y.iter().any(|&x| x != y[0]));
            let r = regression_metrics(&y, &p).unwrap().r2;
            let ya: Vec<f64> = y.iter().map(|x| a * x + b).collect();
            let pa: Vec<f64> = p.iter().map(|x| a * x + b).collect();
            let ra = regression_metrics(&ya, &pa).unwrap().r2;
            prop_assert!((r - ra).abs() <= 1e-9 * r.abs().max(1.0));
        }
    }
}
