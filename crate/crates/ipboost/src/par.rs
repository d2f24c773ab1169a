//! Thin shim over rayon so every data-parallel loop has a sequential
//! fallback when the `parallel` feature is disabled.

/// Maps `f` over `0..len` and collects the results in index order.
/// Runs on the rayon pool when the `parallel` feature is enabled.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Sequential reference version of [`map_indexed`]; always available so
/// benchmarks can compare both code paths in one build.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}
