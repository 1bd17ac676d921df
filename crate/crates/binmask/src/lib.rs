//! File formats, parallel sweeps and the command-line front end for
//! [`binmask_core`].
//!
//! - [`wav`]: mono WAV reading (with downmix) and writing with clip counts.
//! - [`export`]: sweep reports as CSV/JSON, spectrogram and mask grids.
//! - [`runner`]: the window sweep on a thread pool.
//! - [`cli`]: the `binmask` binary.

#![warn(missing_debug_implementations)]

pub mod cli;
mod error;
pub mod export;
mod fsutil;
pub mod runner;
pub mod wav;

pub use binmask_core as core;
pub use error::{Error, Result, EXIT_IO, EXIT_NUMERIC, EXIT_USAGE};
pub use runner::{run_sweep, RunOptions};
pub use wav::{read_wav, write_wav, BitDepth, WriteReport};
