//! Deterministic synthetic sources.
//!
//! Tonal (piano-like) and noise-burst (snare-like) generators stand in for
//! recorded excerpts when exercising the separation pipeline.
//!
//! # Random numbers
//!
//! Noise comes from a counter-based SplitMix64: sample `i` of the stream with
//! seed `s` is `mix(s + (i + 1) * 0x9E3779B97F4A7C15)` (wrapping), where `mix`
//! is the SplitMix64 finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! and the top 53 bits map to `u` in `[0, 1)`, giving the sample `2u - 1`.
//! Any sample can be computed independently of the others, so output does not
//! depend on evaluation order or threading. [`split_seed`] derives independent
//! stream seeds from a parent seed.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit value at position `index` of the stream for `seed`.
pub fn counter_u64(seed: u64, index: u64) -> u64 {
    splitmix_finalize(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform sample in `[-1, 1)` at position `index` of the stream for `seed`.
pub fn counter_uniform(seed: u64, index: u64) -> f64 {
    let u = (counter_u64(seed, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// Infinite uniform `[-1, 1)` stream for `seed`.
pub fn uniform_stream(seed: u64) -> impl Iterator<Item = f64> {
    (0u64..).map(move |i| counter_uniform(seed, i))
}

/// Seed for child stream `key` of `seed`.
pub fn split_seed(seed: u64, key: u64) -> u64 {
    splitmix_finalize(seed ^ splitmix_finalize(key.wrapping_add(GOLDEN_GAMMA)))
}

/// Edge length of the raised-cosine burst ramps.
pub const BURST_RAMP_SECONDS: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HarmonicTone {
    pub fundamental_hz: f64,
    pub harmonics: u32,
    /// Exponential decay rate in 1/s; zero gives a stationary tone.
    pub decay_rate: f64,
    /// Restart the note (phase and envelope) every this many seconds.
    pub note_period: Option<f64>,
}

impl HarmonicTone {
    /// Piano-like default: 220 Hz, 10 harmonics, struck once per second.
    pub fn piano_like() -> Self {
        Self { fundamental_hz: 220.0, harmonics: 10, decay_rate: 1.5, note_period: Some(1.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseBursts {
    pub burst_len: f64,
    pub period: f64,
}

impl NoiseBursts {
    /// Snare-like default: 100 ms bursts every 0.5 s.
    pub fn snare_like() -> Self {
        Self { burst_len: 0.1, period: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum SynthKind {
    Sine { freq_hz: f64, phase: f64 },
    HarmonicTone(HarmonicTone),
    WhiteNoise,
    NoiseBursts(NoiseBursts),
}

/// Complete description of a synthetic signal. Equal specs give identical samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub duration_seconds: f64,
    pub sample_rate: u32,
    pub amplitude: f64,
    /// Only used by the stochastic kinds.
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<AudioSignal> {
        let (d, r, a) = (self.duration_seconds, self.sample_rate, self.amplitude);
        match self.kind {
            SynthKind::Sine { freq_hz, phase } => sine(freq_hz, d, r, a, phase),
            SynthKind::HarmonicTone(tone) => harmonic_tone(&tone, d, r, a),
            SynthKind::WhiteNoise => white_noise(d, r, a, self.seed),
            SynthKind::NoiseBursts(bursts) => noise_bursts(&bursts, d, r, a, self.seed),
        }
    }
}

fn sample_count(duration: f64, rate: u32, amplitude: f64) -> Result<usize> {
    if rate == 0 {
        return Err(Error::InvalidSampleRate);
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::invalid("duration must be finite and non-negative"));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::invalid("amplitude must lie in (0, 1]"));
    }
    Ok(libm::round(duration * f64::from(rate)) as usize)
}

fn check_nyquist(freq: f64, rate: u32) -> Result<()> {
    let nyquist = f64::from(rate) / 2.0;
    if !freq.is_finite() || freq.abs() >= nyquist {
        return Err(Error::Aliasing { freq, nyquist });
    }
    Ok(())
}

/// `amplitude * sin(2 pi freq n / rate + phase)`.
pub fn sine(freq: f64, duration: f64, rate: u32, amplitude: f64, phase: f64) -> Result<AudioSignal> {
    let len = sample_count(duration, rate, amplitude)?;
    check_nyquist(freq, rate)?;
    let r = f64::from(rate);
    let samples = (0..len).map(|n| amplitude * libm::sin(TAU * freq * n as f64 / r + phase)).collect();
    AudioSignal::new(samples, rate)
}

/// Harmonics `k * f0` weighted `1/k` under a shared exponential decay,
/// peak-normalized to `amplitude`.
pub fn harmonic_tone(tone: &HarmonicTone, duration: f64, rate: u32, amplitude: f64) -> Result<AudioSignal> {
    let len = sample_count(duration, rate, amplitude)?;
    if tone.harmonics == 0 {
        return Err(Error::invalid("harmonic count must be at least 1"));
    }
    if tone.fundamental_hz.is_nan() || tone.fundamental_hz <= 0.0 {
        return Err(Error::invalid("fundamental must be positive"));
    }
    check_nyquist(tone.fundamental_hz * f64::from(tone.harmonics), rate)?;
    if !(tone.decay_rate.is_finite() && tone.decay_rate >= 0.0) {
        return Err(Error::invalid("decay rate must be finite and non-negative"));
    }
    let r = f64::from(rate);
    let period_samples = match tone.note_period {
        Some(p) if p.is_finite() && p > 0.0 => Some((libm::round(p * r) as usize).max(1)),
        Some(_) => return Err(Error::invalid("note period must be positive")),
        None => None,
    };

    let mut samples: Vec<f64> = (0..len)
        .map(|n| {
            let local = period_samples.map_or(n, |p| n % p);
            let t = local as f64 / r;
            let sum: f64 = (1..=tone.harmonics)
                .map(|k| {
                    let k = f64::from(k);
                    libm::sin(TAU * k * tone.fundamental_hz * t) / k
                })
                .sum();
            sum * libm::exp(-tone.decay_rate * t)
        })
        .collect();
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let scale = amplitude / peak;
        samples.iter_mut().for_each(|s| *s *= scale);
    }
    AudioSignal::new(samples, rate)
}

/// I.i.d. uniform samples in `[-amplitude, amplitude)` from the counter generator.
pub fn white_noise(duration: f64, rate: u32, amplitude: f64, seed: u64) -> Result<AudioSignal> {
    let len = sample_count(duration, rate, amplitude)?;
    AudioSignal::new(uniform_stream(seed).take(len).map(|u| amplitude * u).collect(), rate)
}

/// White noise gated on for `burst_len` at the start of every `period`, with
/// raised-cosine edges of [`BURST_RAMP_SECONDS`]. Samples between bursts are
/// exactly zero. When `burst_len == period` the gate never closes.
pub fn noise_bursts(bursts: &NoiseBursts, duration: f64, rate: u32, amplitude: f64, seed: u64) -> Result<AudioSignal> {
    let len = sample_count(duration, rate, amplitude)?;
    let NoiseBursts { burst_len, period } = *bursts;
    if !(period.is_finite() && period > 0.0 && burst_len > 0.0 && burst_len <= period) {
        return Err(Error::invalid("noise bursts need 0 < burst_len <= period"));
    }
    let r = f64::from(rate);
    let period_samples = (libm::round(period * r) as usize).max(1);
    let burst_samples = (libm::round(burst_len * r) as usize).clamp(1, period_samples);
    let continuous = burst_samples == period_samples;
    let ramp = (libm::round(BURST_RAMP_SECONDS * r) as usize).min(burst_samples / 2);

    let envelope = |offset: usize| -> f64 {
        if continuous {
            return 1.0;
        }
        if offset >= burst_samples {
            return 0.0;
        }
        let edge = offset.min(burst_samples - 1 - offset);
        if edge < ramp {
            let x = libm::sin(0.5 * PI * (edge as f64 + 0.5) / ramp as f64);
            x * x
        } else {
            1.0
        }
    };

    let samples = (0..len)
        .map(|n| {
            let env = envelope(n % period_samples);
            if env == 0.0 {
                0.0
            } else {
                env * amplitude * counter_uniform(seed, n as u64)
            }
        })
        .collect();
    AudioSignal::new(samples, rate)
}
