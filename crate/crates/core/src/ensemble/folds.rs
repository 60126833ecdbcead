use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::tabular::class_groups;
use crate::{Error, Result};

/// Assignment of training rows to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of_row: Vec<u32>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldAssignment {
    pub fn n_rows(&self) -> usize {
        self.fold_of_row.len()
    }

    /// Rows the `fold`-th model trains on.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&r| self.fold_of_row[r] as usize != fold).collect()
    }

    /// Rows held out from the `fold`-th model.
    pub fn held_out_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&r| self.fold_of_row[r] as usize == fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.fold_of_row {
            s[f as usize] += 1;
        }
        s
    }
}

/// Shuffle rows and deal them round-robin into `k` folds. With labels, each
/// class is dealt in turn with the counter carried across classes, so every
/// fold gets its share of every class to within one row.
pub fn kfold_assign(
    n_rows: usize,
    k: usize,
    seed: u64,
    stratify_labels: Option<&[f64]>,
) -> Result<FoldAssignment> {
    if k < 2 || k > n_rows {
        return Err(Error::InvalidArgument(format!(
            "k = {k} folds is outside [2, {n_rows}]"
        )));
    }
    let mut r = rng::stage_rng(seed, "fold");
    let groups = match stratify_labels {
        Some(labels) => {
            if labels.len() != n_rows {
                return Err(Error::InvalidArgument(format!(
                    "{} stratification labels for {n_rows} rows",
                    labels.len()
                )));
            }
            class_groups(labels, "fold labels")?
        }
        None => vec![(0..n_rows).collect()],
    };
    let mut fold_of_row = vec![0u32; n_rows];
    let mut counter = 0usize;
    for mut g in groups {
        g.shuffle(&mut r);
        for row in g {
            fold_of_row[row] = (counter % k) as u32;
            counter += 1;
        }
    }
    Ok(FoldAssignment {
        k,
        fold_of_row,
        seed,
        stratified: stratify_labels.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes_follow_the_remainder_rule() {
        assert_eq!(kfold_assign(10, 5, 0, None).unwrap().fold_sizes(), vec![2; 5]);
        let mut s = kfold_assign(11, 5, 0, None).unwrap().fold_sizes();
        s.sort_unstable();
        assert_eq!(s, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn stratified_even_classes() {
        let labels: Vec<f64> = (0..20).map(|i| f64::from(i % 2 == 0)).collect();
        let f = kfold_assign(20, 5, 9, Some(&labels)).unwrap();
        for fold in 0..5 {
            let rows = f.held_out_rows(fold);
            assert_eq!(rows.len(), 4);
            assert_eq!(rows.iter().filter(|&&r| labels[r] == 1.0).count(), 2);
        }
    }

    #[test]
    fn k_out_of_range() {
        assert!(kfold_assign(4, 1, 0, None).is_err());
        assert!(kfold_assign(4, 5, 0, None).is_err());
    }

    proptest! {
        #[test]
        fn folds_are_balanced(n in 2usize..300, k in 2usize..10, seed in 0u64..50, p in 0.05f64..0.95) {
            prop_assume!(k <= n);
            let labels: Vec<f64> = (0..n).map(|i| f64::from((i as f64 * p).fract() < p)).collect();
            prop_assume!(labels.iter().filter(|&&v| v == 1.0).count() >= 2 && labels.iter().filter(|&&v| v == 0.0).count() >= 2);
            let f = kfold_assign(n, k, seed, Some(&labels)).unwrap();
            let sizes = f.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for class in [0.0, 1.0] {
                let per: Vec<usize> = (0..k)
                    .map(|j| f.held_out_rows(j).iter().filter(|&&r| labels[r] == class).count())
                    .collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
            prop_assert_eq!(f, kfold_assign(n, k, seed, Some(&labels)).unwrap());
        }
    }
}
