//! Holds the end-to-end acceptance harness in `tests/acceptance.rs`.
