//! Mono audio signals, linear mixing and segmentation.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A mono sample sequence at a fixed sample rate.
///
/// Samples are full-scale `f64` (nominally within ±1.0) and always finite.
/// Empty signals can be constructed; pipeline entry points reject them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self { samples, sample_rate })
    }

    /// All-zero signal of `len` samples.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(alloc::vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.samples.is_empty() {
            Err(Error::EmptySignal)
        } else {
            Ok(())
        }
    }

    pub fn require_aligned(&self, other: &AudioSignal) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::RateMismatch { left: self.sample_rate, right: other.sample_rate });
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }
}

/// `gain_a * a + gain_b * b`, sample by sample. No normalization is applied.
pub fn mix(a: &AudioSignal, b: &AudioSignal, gain_a: f64, gain_b: f64) -> Result<AudioSignal> {
    a.require_aligned(b)?;
    if !gain_a.is_finite() || !gain_b.is_finite() {
        return Err(Error::invalid("mixing gains must be finite"));
    }
    let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| gain_a * x + gain_b * y).collect();
    AudioSignal::new(samples, a.sample_rate)
}

/// `gain * signal`. The product may exceed full scale.
pub fn scale(signal: &AudioSignal, gain: f64) -> Result<AudioSignal> {
    if !gain.is_finite() {
        return Err(Error::invalid("gain must be finite"));
    }
    AudioSignal::new(signal.samples.iter().map(|x| x * gain).collect(), signal.sample_rate)
}

/// Sample-accurate slice starting at `round(start * rate)` spanning
/// `round(duration * rate)` samples.
pub fn segment(signal: &AudioSignal, start_seconds: f64, duration_seconds: f64) -> Result<AudioSignal> {
    if !(start_seconds >= 0.0 && duration_seconds >= 0.0) || !start_seconds.is_finite() || !duration_seconds.is_finite()
    {
        return Err(Error::invalid("segment start and duration must be finite and non-negative"));
    }
    let rate = f64::from(signal.sample_rate);
    let start = libm::round(start_seconds * rate) as usize;
    let len = libm::round(duration_seconds * rate) as usize;
    let end = start.saturating_add(len);
    if end > signal.len() {
        return Err(Error::OutOfRange { start, end, len: signal.len() });
    }
    AudioSignal::new(signal.samples[start..end].to_vec(), signal.sample_rate)
}
