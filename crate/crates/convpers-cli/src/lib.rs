//! Library half of the `convpers` binary: file formats, config parsing,
//! synthetic dataset generation, and SVG plotting. The binary in `main.rs`
//! is a thin clap wrapper over these modules and the `convpers` crate.

pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod synth;
