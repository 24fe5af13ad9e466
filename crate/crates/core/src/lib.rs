pub mod analytic;
pub mod assembly;
pub mod eigensolve;
pub mod error;
pub mod format;
pub mod geometry;
pub mod reflection;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};

/// Caps the threads used by the sparse and dense factorizations; `1` runs
/// them sequentially.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n <= 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
}
