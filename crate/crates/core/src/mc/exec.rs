//! Sequential or rayon-parallel evaluation of independent chunks.
//!
//! Work is always split into the same fixed-size chunks, each with its own
//! random stream, and results are combined in chunk order. Both execution
//! modes therefore produce bit-identical output.

/// Rows per chunk for sampling and scoring.
pub const CHUNK_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool. Without the `parallel` feature this runs sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `(0..n).map(f)`, results in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map_indexed(n, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Number of chunks covering `count` rows.
pub fn chunk_count(count: usize) -> usize {
    count.div_ceil(CHUNK_ROWS)
}

/// Row range `[start, end)` of chunk `c`.
pub fn chunk_range(c: usize, count: usize) -> std::ops::Range<usize> {
    let start = c * CHUNK_ROWS;
    start..(start + CHUNK_ROWS).min(count)
}
