//! Oracle (ideal) binary-mask source separation across STFT window sizes.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the whole numeric
//! pipeline:
//!
//! - [`signal`]: the [`AudioSignal`] currency type, linear mixing and segmentation.
//! - [`synth`]: deterministic tonal and noise-burst test sources.
//! - [`fft`]: real-input FFT used by the STFT (radix-2 with a Bluestein fallback).
//! - [`stft`]: periodic-Hann STFT analysis, weighted overlap-add synthesis and a
//!   streaming frame producer whose memory use does not grow with signal length.
//! - [`mask`]: ideal binary masks and the fused streaming two-source separator.
//! - [`bss_eval`]: SDR/SIR/SAR via projection onto delayed true sources.
//! - [`sweep`]: the window-size sweep, its report and optimal-window queries.
//!
//! File formats, the threaded sweep runner and the command-line tool live in the
//! companion `binmask` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bss_eval;
mod error;
pub mod fft;
mod linalg;
pub mod mask;
pub mod signal;
pub mod stft;
pub mod sweep;
pub mod synth;

pub use bss_eval::{Decomposition, EvalConfig, Evaluator, Metrics};
pub use error::{Error, Result};
pub use mask::{BinaryMask, SeparationResult};
pub use signal::AudioSignal;
pub use stft::{FrameStream, Spectrogram, StftParams};
pub use sweep::{HopPolicy, SweepConfig, SweepReport, SweepRow};

pub use num_complex::Complex64;
