//! Holds the release acceptance suite (`tests/acceptance.rs`); run it with
//! `cargo test -p scenebm-validation`.
