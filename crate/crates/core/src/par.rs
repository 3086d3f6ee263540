//! Per-index data parallelism with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`map_indices`]. Each index
//! is evaluated independently with a fixed inner summation order, so results
//! are bitwise identical whichever [`Execution`] runs them.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Like [`map_indices`] but over an explicit index list.
pub fn map_over<T, F>(exec: Execution, indices: &[usize], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => indices.iter().map(|&i| f(i)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => indices.par_iter().map(|&i| f(i)).collect(),
    }
}

/// Fallible map; on failure the error of the lowest failing index wins.
pub fn try_map_indices<T, F>(exec: Execution, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indices(exec, n, f).into_iter().collect()
}

pub fn try_map_over<T, F>(exec: Execution, indices: &[usize], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_over(exec, indices, f).into_iter().collect()
}
