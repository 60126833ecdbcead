use rand::seq::{index, SliceRandom};

use super::Dataset;
use crate::rng::stage_rng;
use crate::{Error, Result};

/// Replace `source` by a binary column `new_label` equal to 1 where the source
/// is strictly positive. The new column becomes the dataset target.
pub fn derive_binary_label(ds: &Dataset, source: &str, new_label: &str) -> Result<Dataset> {
    let labels = ds
        .column(source)?
        .iter()
        .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
        .collect();
    ds.drop_columns(&[source])
        .add_column(new_label, labels)?
        .with_target(new_label)
}

fn binary_classes(values: &[f64], name: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            zeros.push(i);
        } else if v == 1.0 {
            ones.push(i);
        } else {
            return Err(Error::Degenerate(format!(
                "label column {name:?} is not binary (value {v} at row {})",
                i + 1
            )));
        }
    }
    Ok((zeros, ones))
}

/// Randomly drop majority-class rows until both classes have the minority
/// count. Minority rows are all kept; output rows keep their input order.
pub fn undersample_majority(ds: &Dataset, label: &str, seed: u64) -> Result<Dataset> {
    if ds.is_empty() {
        return Err(Error::Degenerate("cannot undersample an empty dataset".into()));
    }
    let (zeros, ones) = binary_classes(ds.column(label)?, label)?;
    if zeros.is_empty() || ones.is_empty() {
        return Err(Error::Degenerate(format!(
            "label {label:?} has a single class ({} zeros, {} ones)",
            zeros.len(),
            ones.len()
        )));
    }
    let (minority, majority) = if ones.len() <= zeros.len() {
        (ones, zeros)
    } else {
        (zeros, ones)
    };
    let mut rng = stage_rng(seed, "undersample");
    let mut keep: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .chain(minority.iter().copied())
        .collect();
    keep.sort_unstable();
    Ok(ds.select_rows(&keep))
}

/// Drop every listed feature column that holds fewer than two distinct values.
/// Returns the pruned dataset and the dropped names in listing order.
pub fn drop_constant_columns(ds: &Dataset, feature_columns: &[String]) -> Result<(Dataset, Vec<String>)> {
    let mut dropped = Vec::new();
    for name in feature_columns {
        let col = ds.column(name)?;
        let constant = col.first().map_or(true, |&v0| col.iter().all(|&v| v == v0));
        if constant {
            dropped.push(name.clone());
        }
    }
    let names: Vec<&str> = dropped.iter().map(String::as_str).collect();
    Ok((ds.drop_columns(&names), dropped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Random train/test partition with `round(train_fraction * n)` training rows.
///
/// With `stratify_on`, each class contributes its proportional share (largest
/// remainder rounding), so class proportions hold to within one row per class.
pub fn random_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
    stratify_on: Option<&str>,
) -> Result<SplitResult> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::Degenerate(format!("cannot split {n} rows")));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = stage_rng(seed, "split");

    let (mut train_rows, mut test_rows) = match stratify_on {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let test = idx.split_off(n_train);
            (idx, test)
        }
        Some(col) => {
            let groups = class_groups(ds.column(col)?, col)?;
            let quotas = largest_remainder(
                &groups.iter().map(|g| g.len()).collect::<Vec<_>>(),
                train_fraction,
                n_train,
            );
            let mut train = Vec::with_capacity(n_train);
            let mut test = Vec::with_capacity(n - n_train);
            for (mut g, q) in groups.into_iter().zip(quotas) {
                g.shuffle(&mut rng);
                test.extend_from_slice(&g[q..]);
                train.extend_from_slice(&g[..q]);
            }
            (train, test)
        }
    };
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitResult {
        train: ds.select_rows(&train_rows),
        test: ds.select_rows(&test_rows),
        train_rows,
        test_rows,
        seed,
    })
}

/// Row indices per class, classes in ascending label order.
pub(crate) fn class_groups(values: &[f64], name: &str) -> Result<Vec<Vec<usize>>> {
    let mut labels: Vec<f64> = Vec::new();
    for &v in values {
        if v.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "stratify column {name:?} is not categorical (value {v})"
            )));
        }
        if !labels.contains(&v) {
            labels.push(v);
        }
    }
    labels.sort_by(f64::total_cmp);
    let groups: Vec<Vec<usize>> = labels
        .iter()
        .map(|l| (0..values.len()).filter(|&i| values[i] == *l).collect())
        .collect();
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::Degenerate(format!(
            "class with {} row(s) in {name:?}; stratification needs at least 2",
            g.len()
        )));
    }
    Ok(groups)
}

/// Split `total` across groups proportionally to `sizes * fraction`.
fn largest_remainder(sizes: &[usize], fraction: f64, total: usize) -> Vec<usize> {
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * fraction).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut assigned: usize = quotas.iter().sum();
    for &g in order.iter().cycle().take(4 * sizes.len()) {
        if assigned >= total {
            break;
        }
        if quotas[g] < sizes[g] {
            quotas[g] += 1;
            assigned += 1;
        }
    }
    quotas
}
