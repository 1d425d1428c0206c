use rayon::prelude::*;

use crate::error::Result;

/// Evaluates `f(0..n)` in parallel and collects in index order. The error
/// reported is the one with the smallest index, whatever finished first.
pub(crate) fn try_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    out.into_iter().collect()
}
