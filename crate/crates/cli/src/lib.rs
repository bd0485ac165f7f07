//! Verification suites, grid dumps and tame-symbol input for the `kzb` binary.

pub mod dump;
pub mod suite;
pub mod tame_input;
