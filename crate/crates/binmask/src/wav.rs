//! WAV reading and writing.
//!
//! Input may be 16-, 24- or 32-bit integer PCM or 32-bit float, any channel
//! count; channels are averaged to mono. Integer samples are scaled by
//! `2^(bits - 1)`, so full scale maps to `[-1, 1)`.

use std::io::{self, BufWriter};
use std::path::Path;

use binmask_core::AudioSignal;
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

/// Sample formats accepted by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    Int16,
    Int24,
    #[default]
    Float32,
}

impl BitDepth {
    fn spec(self, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            BitDepth::Int16 => (16, SampleFormat::Int),
            BitDepth::Int24 => (24, SampleFormat::Int),
            BitDepth::Float32 => (32, SampleFormat::Float),
        };
        WavSpec { channels: 1, sample_rate, bits_per_sample, sample_format }
    }

    /// Largest round-trip error for an in-range sample.
    pub fn quantization_step(self) -> f64 {
        match self {
            BitDepth::Int16 => 2f64.powi(-15),
            BitDepth::Int24 => 2f64.powi(-23),
            BitDepth::Float32 => f64::from(f32::EPSILON),
        }
    }
}

impl std::str::FromStr for BitDepth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "16" => Ok(BitDepth::Int16),
            "24" => Ok(BitDepth::Int24),
            "32f" => Ok(BitDepth::Float32),
            other => Err(format!("unsupported bit depth '{other}' (expected 16, 24 or 32f)")),
        }
    }
}

/// Outcome of a successful [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteReport {
    /// Samples outside `[-1, 1]` that were clipped to full scale.
    pub clipped: usize,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| classify(path, e))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(Error::Malformed { path: path.into(), detail: "zero channels".into() });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / 2f64.powi(i32::from(bits) - 1);
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| classify(path, e))?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| classify(path, e))?,
        (format, bits) => {
            return Err(Error::Unsupported { path: path.into(), detail: format!("{bits}-bit {format:?}") });
        }
    };
    if interleaved.len() % channels != 0 {
        return Err(Error::Malformed { path: path.into(), detail: "partial sample frame".into() });
    }
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(channels).map(|frame| frame.iter().sum::<f64>() / channels as f64).collect()
    };
    AudioSignal::new(mono, spec.sample_rate).map_err(|e| Error::Malformed { path: path.into(), detail: e.to_string() })
}

/// Writes `signal` as a mono WAV file, replacing `path` atomically.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal, depth: BitDepth) -> Result<WriteReport> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mut clipped = 0;
    write_atomic(path.as_ref(), |file| {
        let mut writer = WavWriter::new(BufWriter::new(file), depth.spec(signal.sample_rate())).map_err(to_io)?;
        for &x in signal.samples() {
            if x.abs() > 1.0 {
                clipped += 1;
            }
            let x = x.clamp(-1.0, 1.0);
            match depth {
                BitDepth::Int16 => writer.write_sample(quantize(x, 16) as i16),
                BitDepth::Int24 => writer.write_sample(quantize(x, 24)),
                BitDepth::Float32 => writer.write_sample(x as f32),
            }
            .map_err(to_io)?;
        }
        writer.finalize().map_err(to_io)
    })?;
    Ok(WriteReport { clipped })
}

fn quantize(x: f64, bits: i32) -> i32 {
    let full = 2f64.powi(bits - 1);
    (x * full).round().clamp(-full, full - 1.0) as i32
}

fn to_io(e: hound::Error) -> io::Error {
    match e {
        hound::Error::IoError(e) => e,
        other => io::Error::other(other),
    }
}

fn classify(path: &Path, e: hound::Error) -> Error {
    match e {
        // hound reports short reads as `Other`.
        hound::Error::IoError(e) if matches!(e.kind(), io::ErrorKind::UnexpectedEof | io::ErrorKind::Other) => {
            Error::Malformed { path: path.into(), detail: e.to_string() }
        }
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::FormatError(detail) => Error::Malformed { path: path.into(), detail: detail.into() },
        hound::Error::Unsupported => Error::Unsupported { path: path.into(), detail: "unsupported encoding".into() },
        other => Error::Malformed { path: path.into(), detail: other.to_string() },
    }
}
