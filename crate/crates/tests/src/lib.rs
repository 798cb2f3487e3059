//! Holds the `acceptance` integration suite; see `tests/acceptance.rs`.
