use super::{ClassLabel, DataError, Dataset};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub fn class_counts(labels: &[ClassLabel]) -> BTreeMap<ClassLabel, usize> {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}

fn group_by<K: Ord + Copy>(strata: &[K]) -> BTreeMap<K, Vec<usize>> {
    let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, &k) in strata.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    groups
}

/// Stratified seeded split. Returns `(train, test)` row indices, each sorted.
/// Each stratum contributes `round(ratio * n)` rows to the train side; strata
/// with fewer than two rows go entirely to train.
pub fn split_indices<K: Ord + Copy + fmt::Debug>(
    strata: &[K],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (key, mut rows) in group_by(strata) {
        if rows.len() < 2 {
            log::warn!(
                "class {key:?} has {} row(s); keeping it in the train split",
                rows.len()
            );
            train.extend(rows);
            continue;
        }
        rows.shuffle(&mut rng);
        let n_train = (ratio * rows.len() as f64).round() as usize;
        test.extend_from_slice(&rows[n_train..]);
        rows.truncate(n_train);
        train.extend(rows);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified (by 5-class label) train/test split of a dataset.
pub fn split_train_test(
    ds: &Dataset,
    ratio: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    let (train, test) = split_indices(&ds.labels5, ratio, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// At most `max_rows` rows, drawn stratified by 5-class label.
pub fn stratified_subsample(
    ds: &Dataset,
    max_rows: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if ds.len() <= max_rows {
        return Ok(ds.clone());
    }
    let ratio = max_rows as f64 / ds.len() as f64;
    let (keep, _) = split_indices(&ds.labels5, ratio, seed)?;
    Ok(ds.subset(&keep))
}

/// Per-class row cap used by majority-class downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceTarget {
    Cap(usize),
    /// Cap every class at this class's row count.
    Reference(ClassLabel),
}

impl FromStr for BalanceTarget {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(n) = s.parse::<f64>() {
            if n >= 1.0 {
                return Ok(BalanceTarget::Cap(n.min(usize::MAX as f64) as usize));
            }
            return Err(DataError::ZeroTarget);
        }
        s.parse::<ClassLabel>().map(BalanceTarget::Reference)
    }
}

impl fmt::Display for BalanceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalanceTarget::Cap(n) => write!(f, "{n}"),
            BalanceTarget::Reference(c) => write!(f, "{c}"),
        }
    }
}

/// Rows kept after capping every class at the target: classes above the cap
/// are sampled uniformly without replacement, the rest are kept whole. The
/// returned order is a seeded shuffle.
pub fn balance_indices(
    labels: &[ClassLabel],
    target: BalanceTarget,
    seed: u64,
) -> Result<Vec<usize>, DataError> {
    let groups = group_by(labels);
    let cap = match target {
        BalanceTarget::Cap(0) => return Err(DataError::ZeroTarget),
        BalanceTarget::Cap(n) => n,
        BalanceTarget::Reference(class) => groups
            .get(&class)
            .map(Vec::len)
            .ok_or(DataError::MissingReferenceClass(class))?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(labels.len());
    for rows in groups.values() {
        if rows.len() > cap {
            let mut picked = index::sample(&mut rng, rows.len(), cap).into_vec();
            picked.sort_unstable();
            kept.extend(picked.into_iter().map(|i| rows[i]));
        } else {
            kept.extend_from_slice(rows);
        }
    }
    kept.shuffle(&mut rng);
    Ok(kept)
}

pub fn balance_downsample(
    ds: &Dataset,
    target: BalanceTarget,
    seed: u64,
) -> Result<Dataset, DataError> {
    let kept = balance_indices(&ds.labels5, target, seed)?;
    Ok(ds.subset(&kept))
}
