use super::EventLog;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Trace indices of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions the traces of `log` into `k` folds.
///
/// Trace indices are shuffled with `Rng::new(seed)`; fold `f` takes the
/// `f`-th contiguous chunk as its test set, the first `n mod k` chunks being
/// one trace longer. The remaining indices, in shuffled order, form the
/// training portion; `floor(validation_fraction * |training|)` of them are
/// moved to validation by shuffling a copy with `Rng::new(seed + 1 + f)` and
/// taking its prefix.
pub fn split_folds(
    log: &EventLog,
    k: usize,
    seed: u64,
    validation_fraction: f64,
) -> Result<Vec<FoldSplit>> {
    let n = log.len();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("{k} folds requested for {n} traces")));
    }
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::Config(format!(
            "validation fraction {validation_fraction} outside [0, 1)"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);

    let base = n / k;
    let extra = n % k;
    let mut bounds = Vec::with_capacity(k + 1);
    bounds.push(0);
    for f in 0..k {
        let size = base + usize::from(f < extra);
        bounds.push(bounds[f] + size);
    }

    Ok((0..k)
        .map(|f| {
            let test = order[bounds[f]..bounds[f + 1]].to_vec();
            let rest: Vec<usize> = order[..bounds[f]]
                .iter()
                .chain(&order[bounds[f + 1]..])
                .copied()
                .collect();
            let n_val = (validation_fraction * rest.len() as f64).floor() as usize;
            let mut picked = rest.clone();
            Rng::new(seed.wrapping_add(1 + f as u64)).shuffle(&mut picked);
            let mut is_val = vec![false; n];
            for &i in &picked[..n_val] {
                is_val[i] = true;
            }
            let (validation, train) = rest.into_iter().partition(|&i| is_val[i]);
            FoldSplit {
                train,
                validation,
                test,
            }
        })
        .collect())
}
