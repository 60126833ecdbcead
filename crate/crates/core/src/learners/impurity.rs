use super::Criterion;
use crate::{Error, Result};

pub enum ImpurityInput<'a> {
    /// Per-class (weighted) counts.
    ClassCounts(&'a [f64]),
    /// Regression targets.
    Targets(&'a [f64]),
}

/// Node impurity: Gini `1 - Σp²`, entropy `-Σ p log2 p`, or the variance of
/// the targets for squared error.
pub fn impurity(input: ImpurityInput<'_>, criterion: Criterion) -> Result<f64> {
    match (input, criterion) {
        (ImpurityInput::ClassCounts(counts), Criterion::Gini | Criterion::Entropy) => {
            let total: f64 = counts.iter().sum();
            if total <= 0.0 {
                return Err(Error::Degenerate("impurity of an empty node".into()));
            }
            let ps = counts.iter().map(|c| c / total);
            Ok(match criterion {
                Criterion::Gini => 1.0 - ps.map(|p| p * p).sum::<f64>(),
                _ => -ps.filter(|&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>(),
            })
        }
        (ImpurityInput::Targets(y), Criterion::SquaredError) => {
            if y.is_empty() {
                return Err(Error::Degenerate("impurity of an empty node".into()));
            }
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            Ok(y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
        }
        (_, c) => Err(Error::InvalidArgument(format!(
            "criterion {c:?} does not match the impurity input"
        ))),
    }
}

/// Per-node score whose increase over the parent is the impurity decrease of
/// a split, in weighted-count units. `n` is the (weighted) row count, `a` and
/// `b` the accumulated row statistics: `(w, w·y)` for the CART criteria and
/// `(Σh, Σg)` for Newton boosting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SplitScore {
    Gini,
    Entropy,
    SquaredError,
    Newton { lambda: f64 },
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

impl SplitScore {
    #[inline]
    pub(crate) fn score(self, a: f64, b: f64) -> f64 {
        match self {
            SplitScore::Gini => {
                let w0 = a - b;
                (w0 * w0 + b * b) / a
            }
            SplitScore::Entropy => xlog2x(a - b) + xlog2x(b) - xlog2x(a),
            SplitScore::SquaredError => b * b / a,
            SplitScore::Newton { lambda } => b * b / (a + lambda),
        }
    }

    #[inline]
    pub(crate) fn leaf_value(self, a: f64, b: f64) -> f64 {
        match self {
            SplitScore::Newton { lambda } => -b / (a + lambda),
            _ => b / a,
        }
    }

    pub(crate) fn from_criterion(c: Criterion) -> Self {
        match c {
            Criterion::Gini => SplitScore::Gini,
            Criterion::Entropy => SplitScore::Entropy,
            Criterion::SquaredError => SplitScore::SquaredError,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_and_even_nodes() {
        let g = |c: &[f64]| impurity(ImpurityInput::ClassCounts(c), Criterion::Gini).unwrap();
        let e = |c: &[f64]| impurity(ImpurityInput::ClassCounts(c), Criterion::Entropy).unwrap();
        assert_eq!(g(&[8.0, 0.0]), 0.0);
        assert_eq!(e(&[8.0, 0.0]), 0.0);
        assert_eq!(g(&[5.0, 5.0]), 0.5);
        assert_eq!(e(&[5.0, 5.0]), 1.0);
        let v = impurity(ImpurityInput::Targets(&[1.0, 1.0, 1.0]), Criterion::SquaredError).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn empty_and_mismatched_inputs_fail() {
        assert!(impurity(ImpurityInput::ClassCounts(&[0.0, 0.0]), Criterion::Gini).is_err());
        assert!(impurity(ImpurityInput::Targets(&[]), Criterion::SquaredError).is_err());
        assert!(impurity(ImpurityInput::Targets(&[1.0]), Criterion::Gini).is_err());
    }

    #[test]
    fn score_differences_equal_weighted_impurity_decrease() {
        // parent [6 neg, 4 pos] -> left [5, 1], right [1, 3]
        for (c, s) in [(Criterion::Gini, SplitScore::Gini), (Criterion::Entropy, SplitScore::Entropy)] {
            let imp = |w0: f64, w1: f64| impurity(ImpurityInput::ClassCounts(&[w0, w1]), c).unwrap();
            let direct = 10.0 * imp(6.0, 4.0) - 6.0 * imp(5.0, 1.0) - 4.0 * imp(1.0, 3.0);
            let via = s.score(6.0, 1.0) + s.score(4.0, 3.0) - s.score(10.0, 4.0);
            assert!((direct - via).abs() < 1e-12, "{c:?}: {direct} vs {via}");
        }
        // regression targets [1,2] | [5,6,7]
        let y = [1.0, 2.0, 5.0, 6.0, 7.0];
        let var = |v: &[f64]| impurity(ImpurityInput::Targets(v), Criterion::SquaredError).unwrap();
        let direct = 5.0 * var(&y) - 2.0 * var(&y[..2]) - 3.0 * var(&y[2..]);
        let s = SplitScore::SquaredError;
        let via = s.score(2.0, 3.0) + s.score(3.0, 18.0) - s.score(5.0, 21.0);
        assert!((direct - via).abs() < 1e-12);
    }
}
