//! Sequential/parallel execution switch.
//!
//! Heavy loops (pairwise graph construction, cluster distance matrices,
//! per-iteration ant walks, evaluation sweeps) run through [`map_indexed`],
//! which dispatches to rayon when the `parallel` feature is enabled and the
//! caller asked for [`ExecMode::Parallel`]. Results are bit-identical in
//! both modes: parallel regions only map independent items and every
//! order-sensitive reduction stays sequential.

/// Whether data-parallel loops may use the rayon thread pool.
///
/// Without the `parallel` feature, `Parallel` degrades to sequential
/// execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// True when this mode will actually fan out to the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `0..n`, preserving index order in the returned vector.
pub fn map_indexed<R, F>(mode: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(|i| f(i)).collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = mode;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_preserve_order() {
        let seq = map_indexed(ExecMode::Sequential, 100, |i| i * i);
        let par = map_indexed(ExecMode::Parallel, 100, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
