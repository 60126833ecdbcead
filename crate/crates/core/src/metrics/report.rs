//! Leaderboard tables in plain text, CSV and JSON.

use serde::{Deserialize, Serialize};

use super::{ClassificationReport, RegressionReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub model: String,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub model: String,
    pub test: RegressionReport,
    /// R² of the out-of-fold predictions on the training split.
    pub validation_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", content = "rows", rename_all = "snake_case")]
pub enum ReportTable {
    Classification(Vec<ClassificationRow>),
    Regression(Vec<RegressionRow>),
}

const CLASSIFICATION_HEADERS: [&str; 7] = [
    "Model",
    "Accuracy (%)",
    "F1-Score",
    "AUC_ROC",
    "Precision",
    "Recall",
    "MCC",
];
const REGRESSION_HEADERS: [&str; 5] = ["Model", "RMSE", "MSE", "Test R2", "Validation R2"];

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(String::new, f)
}

impl ReportTable {
    /// Rows ordered by the headline metric (accuracy or test R²), best
    /// first; ties keep model-name order.
    pub fn sorted(mut self) -> Self {
        match &mut self {
            ReportTable::Classification(rows) => rows.sort_by(|a, b| {
                b.report
                    .accuracy
                    .total_cmp(&a.report.accuracy)
                    .then_with(|| a.model.cmp(&b.model))
            }),
            ReportTable::Regression(rows) => rows.sort_by(|a, b| {
                b.test.r2.total_cmp(&a.test.r2).then_with(|| a.model.cmp(&b.model))
            }),
        }
        self
    }

    pub fn headers(&self) -> &'static [&'static str] {
        match self {
            ReportTable::Classification(_) => &CLASSIFICATION_HEADERS,
            ReportTable::Regression(_) => &REGRESSION_HEADERS,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ReportTable::Classification(r) => r.len(),
            ReportTable::Regression(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cells(&self, fmt: &dyn Fn(f64, usize) -> String) -> Vec<Vec<String>> {
        match self {
            ReportTable::Classification(rows) => rows
                .iter()
                .map(|r| {
                    let m = &r.report;
                    vec![
                        r.model.clone(),
                        fmt(100.0 * m.accuracy, 1),
                        fmt(m.f1, 3),
                        opt(m.auc_roc, |v| fmt(v, 3)),
                        fmt(m.precision, 3),
                        fmt(m.recall, 3),
                        fmt(m.mcc, 3),
                    ]
                })
                .collect(),
            ReportTable::Regression(rows) => rows
                .iter()
                .map(|r| {
                    vec![
                        r.model.clone(),
                        fmt(r.test.rmse, 3),
                        fmt(r.test.mse, 3),
                        fmt(r.test.r2, 3),
                        opt(r.validation_r2, |v| fmt(v, 3)),
                    ]
                })
                .collect(),
        }
    }

    /// Aligned text with the conventional rounding (accuracy to 0.1 %, the
    /// rest to three decimals).
    pub fn to_text(&self) -> String {
        let cells = self.cells(&|v, p| format!("{v:.p$}"));
        let headers = self.headers();
        let widths: Vec<usize> = (0..headers.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([headers[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |row: &[String]| {
            let mut s = String::new();
            for (j, c) in row.iter().enumerate() {
                if j == 0 {
                    s.push_str(&format!("{c:<w$}", w = widths[j]));
                } else {
                    s.push_str(&format!("  {c:>w$}", w = widths[j]));
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let header: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
        let mut out = line(&header);
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
        }
        out
    }

    /// CSV with full-precision values.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.headers()).expect("in-memory write");
        for row in self.cells(&|v, _| v.to_string()) {
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{classification_metrics, regression_metrics, ConfusionMatrix};

    fn table() -> ReportTable {
        let mk = |model: &str, tp, tn| {
            let mut report = classification_metrics(&ConfusionMatrix { tp, tn, fp: 3, fn_: 2 });
            report.auc_roc = Some(0.99);
            ClassificationRow { model: model.into(), report }
        };
        ReportTable::Classification(vec![mk("KNN_Uniform_BAG_L1", 40, 40), mk("WeightedEnsemble_L2", 48, 47)])
    }

    #[test]
    fn classification_columns_and_order() {
        let t = table().sorted();
        let text = t.to_text();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("Model"));
        assert!(first.ends_with("MCC"));
        let body: Vec<&str> = text.lines().skip(2).collect();
        assert!(body[0].starts_with("WeightedEnsemble_L2"));
        let csv = t.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "Model,Accuracy (%),F1-Score,AUC_ROC,Precision,Recall,MCC");
        assert_eq!(csv.lines().count(), 3);
        let back: ReportTable = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn regression_columns() {
        let r = regression_metrics(&[1., 2., 3.], &[1., 2., 2.]).unwrap();
        let t = ReportTable::Regression(vec![RegressionRow {
            model: "CatBoost_BAG_L2".into(),
            test: r,
            validation_r2: Some(0.8),
        }]);
        assert_eq!(t.to_csv().lines().next().unwrap(), "Model,RMSE,MSE,Test R2,Validation R2");
        let row: Vec<String> = t.to_text().lines().nth(2).unwrap().split_whitespace().map(String::from).collect();
        assert_eq!(row, ["CatBoost_BAG_L2", "0.577", "0.333", "0.500", "0.800"]);
    }
}
