//! Execution policy for the data-parallel kernels.
//!
//! Without the `parallel` feature every policy runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work is actually dispatched to the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()` under the given policy. Output order is the
/// index order either way.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Map over a slice under the given policy.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(exec, items.len(), |i| f(&items[i]))
}

/// Index of the smallest key; ties resolve to the lowest index. NaN keys are
/// never selected unless every key is NaN.
pub fn argmin_by_key(keys: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, k) in keys.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                if keys[b].is_nan() && !k.is_nan() || *k < keys[b] {
                    best = Some(i);
                }
            }
        }
    }
    best
}

pub fn argmax_by_key(keys: &[f64]) -> Option<usize> {
    let neg: Vec<f64> = keys.iter().map(|k| -k).collect();
    argmin_by_key(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| (i as f64).sin();
        assert_eq!(map_indexed(Execution::Sequential, 1000, f), map_indexed(Execution::Parallel, 1000, f));
    }

    #[test]
    fn argmin_ties_go_low() {
        assert_eq!(argmin_by_key(&[3.0, 1.0, 1.0, 2.0]), Some(1));
        assert_eq!(argmin_by_key(&[f64::NAN, 2.0]), Some(1));
        assert_eq!(argmin_by_key(&[]), None);
        assert_eq!(argmax_by_key(&[1.0, 4.0, 4.0]), Some(1));
    }
}
