use kuramoto_core::ensemble::{stage_chunk, Executor, Osc, Stage, CHUNK};
use kuramoto_core::Complex64;
use rayon::prelude::*;

/// Chunks processed on the rayon pool; partial sums come back in chunk
/// order, so results match [`kuramoto_core::ensemble::Sequential`] bitwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn map_chunks(&self, osc: &mut [Osc], stage: Stage) -> Vec<Complex64> {
        osc.par_chunks_mut(CHUNK).map(|c| stage_chunk(c, stage)).collect()
    }
}
