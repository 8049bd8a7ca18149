//! Properties checked by the fuzz targets. `checks.rs` is also replayed over
//! the checked-in corpus by the core crate's `fuzz_seeds` test.

pub mod checks;
