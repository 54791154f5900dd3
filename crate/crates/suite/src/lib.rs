//! Acceptance suite for `bipkit`; see `tests/acceptance.rs`.
//!
//! Kept in its own package so that `cargo test --workspace` runs it after
//! every other test target and a red criterion cannot hide their results.
