//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Framing: the signal is conceptually zero-padded by `N - 1` samples on both
//! sides and frame `t` covers padded samples `[t*H, t*H + N)`, so every input
//! sample is seen by every window position that overlaps it. That gives
//! `ceil((len + N - 1) / H)` frames. Each frame is multiplied by a periodic
//! Hann window and transformed with a length-`N` real DFT (no zero padding).
//!
//! Synthesis inverse-transforms each frame, applies the same window again,
//! overlap-adds, divides by the accumulated squared window and trims the
//! padding. This inverts analysis exactly wherever the squared-window sum is
//! nonzero, for any hop.
//!
//! [`FrameStream`] produces the same frames one at a time with `O(N)` memory;
//! a hop-1 spectrogram of a few seconds of audio at large `N` does not fit in
//! memory, so the separation pipeline is built on the stream.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::RealFft;
use crate::signal::AudioSignal;

/// Default cap on the size of a materialized spectrogram: 2 GiB.
pub const DEFAULT_MEMORY_BUDGET: u128 = 2 << 30;

/// Squared-window sums below this are treated as 1 during synthesis.
pub const WINDOW_SUM_FLOOR: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WindowKind {
    HannPeriodic,
}

/// Window size `N` and hop `H`; the window is always periodic Hann and the
/// FFT length always equals `N`.
///
/// Analysis followed by synthesis is the identity for every `H < N`. With
/// `H == N` the window's zero at `n = 0` falls on the same sample offset in
/// every frame, so one sample per frame is lost and synthesized as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawParams", into = "RawParams"))]
pub struct StftParams {
    window_size: usize,
    hop: usize,
}

impl StftParams {
    pub fn new(window_size: usize, hop: usize) -> Result<Self> {
        if window_size < 2 {
            return Err(Error::invalid("window size must be at least 2"));
        }
        if hop == 0 || hop > window_size {
            return Err(Error::invalid("hop must satisfy 1 <= hop <= window size"));
        }
        Ok(Self { window_size, hop })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn fft_size(&self) -> usize {
        self.window_size
    }

    pub fn window_kind(&self) -> WindowKind {
        WindowKind::HannPeriodic
    }

    pub fn bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    /// Number of frames for a signal of `len` samples (zero for an empty signal).
    pub fn frame_count(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            (len + self.window_size - 2) / self.hop + 1
        }
    }

    /// Offset of frame `t`'s first sample relative to the unpadded signal.
    fn frame_origin(&self, t: usize) -> isize {
        (t * self.hop) as isize - (self.window_size as isize - 1)
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawParams {
    window_size: usize,
    hop: usize,
    window: WindowKind,
    fft_size: usize,
}

#[cfg(feature = "serde")]
impl From<StftParams> for RawParams {
    fn from(p: StftParams) -> Self {
        Self { window_size: p.window_size, hop: p.hop, window: p.window_kind(), fft_size: p.fft_size() }
    }
}

#[cfg(feature = "serde")]
impl TryFrom<RawParams> for StftParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        if raw.fft_size != raw.window_size {
            return Err(Error::invalid("fft_size must equal window_size"));
        }
        StftParams::new(raw.window_size, raw.hop)
    }
}

/// Periodic (DFT-even) Hann window, `w[n] = 0.5 (1 - cos(2 pi n / N))`.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5 * (1.0 - libm::cos(TAU * n as f64 / len as f64))).collect()
}

/// Complex STFT matrix, frames x bins, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    params: StftParams,
    frames: usize,
    bins: usize,
    data: Vec<Complex64>,
    original_length: usize,
    sample_rate: u32,
}

impl Spectrogram {
    /// Assembles a spectrogram, checking shape and finiteness.
    pub fn from_parts(
        params: StftParams,
        data: Vec<Complex64>,
        original_length: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate);
        }
        let frames = params.frame_count(original_length);
        let bins = params.bins();
        if data.len() != frames * bins {
            return Err(Error::DimensionMismatch(alloc::format!(
                "expected {frames} x {bins} cells, got {}",
                data.len()
            )));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("spectrogram entries must be finite"));
        }
        Ok(Self { params, frames, bins, data, original_length, sample_rate })
    }

    pub(crate) fn from_parts_unchecked(
        params: StftParams,
        data: Vec<Complex64>,
        original_length: usize,
        sample_rate: u32,
    ) -> Self {
        let frames = params.frame_count(original_length);
        let bins = params.bins();
        debug_assert_eq!(data.len(), frames * bins);
        Self { params, frames, bins, data, original_length, sample_rate }
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.bins.max(1)).take(self.frames)
    }

    /// Centre frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.sample_rate) / self.params.window_size as f64
    }

    pub(crate) fn same_shape(&self, other: &Spectrogram) -> Result<()> {
        if self.params != other.params
            || self.frames != other.frames
            || self.bins != other.bins
            || self.original_length != other.original_length
        {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{}x{} (N={}, H={}) vs {}x{} (N={}, H={})",
                self.frames,
                self.bins,
                self.params.window_size,
                self.params.hop,
                other.frames,
                other.bins,
                other.params.window_size,
                other.params.hop
            )));
        }
        Ok(())
    }
}

/// Sequential producer of the STFT frames of a signal.
///
/// Holds one frame of samples and one of bins; nothing grows with the signal.
#[derive(Debug)]
pub struct FrameStream<'a> {
    signal: &'a [f64],
    params: StftParams,
    window: Vec<f64>,
    fft: RealFft,
    frame: Vec<f64>,
    spectrum: Vec<Complex64>,
    next: usize,
    frames: usize,
}

impl<'a> FrameStream<'a> {
    pub fn new(signal: &'a AudioSignal, params: StftParams) -> Self {
        Self::over(signal.samples(), params)
    }

    pub(crate) fn over(signal: &'a [f64], params: StftParams) -> Self {
        let n = params.window_size;
        Self {
            signal,
            params,
            window: hann_periodic(n),
            fft: RealFft::new(n),
            frame: vec![0.0; n],
            spectrum: vec![ZERO; params.bins()],
            next: 0,
            frames: params.frame_count(signal.len()),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    /// Advances to the next frame and lends its bins.
    pub fn next_frame(&mut self) -> Option<(usize, &[Complex64])> {
        if self.next >= self.frames {
            return None;
        }
        let t = self.next;
        self.next += 1;
        let origin = self.params.frame_origin(t);
        let len = self.signal.len() as isize;
        for (j, (slot, w)) in self.frame.iter_mut().zip(&self.window).enumerate() {
            let idx = origin + j as isize;
            *slot = if (0..len).contains(&idx) { w * self.signal[idx as usize] } else { 0.0 };
        }
        self.fft.forward(&self.frame, &mut self.spectrum);
        Some((t, &self.spectrum))
    }
}

impl Iterator for FrameStream<'_> {
    type Item = (usize, Vec<Complex64>);

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().map(|(t, row)| (t, row.to_vec()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.frames - self.next;
        (left, Some(left))
    }
}

/// Streaming frames of `signal` (see [`FrameStream`]).
pub fn frame_stream(signal: &AudioSignal, params: StftParams) -> FrameStream<'_> {
    FrameStream::new(signal, params)
}

/// Weighted overlap-add accumulator writing straight into the unpadded output.
#[derive(Debug)]
pub(crate) struct OverlapAdd {
    params: StftParams,
    window: Vec<f64>,
    fft: RealFft,
    frame: Vec<f64>,
    out: Vec<f64>,
    window_sum: Vec<f64>,
}

impl OverlapAdd {
    pub(crate) fn new(len: usize, params: StftParams) -> Self {
        let n = params.window_size;
        Self {
            params,
            window: hann_periodic(n),
            fft: RealFft::new(n),
            frame: vec![0.0; n],
            out: vec![0.0; len],
            window_sum: vec![0.0; len],
        }
    }

    pub(crate) fn add_frame(&mut self, t: usize, row: &[Complex64]) {
        self.fft.inverse(row, &mut self.frame);
        let (start, lo, hi) = self.overlap(t);
        for j in lo..hi {
            let idx = (start + j as isize) as usize;
            let w = self.window[j];
            self.out[idx] += w * self.frame[j];
            self.window_sum[idx] += w * w;
        }
    }

    /// Accounts for frame `t`'s window without adding signal (an all-zero row).
    pub(crate) fn add_silent_frame(&mut self, t: usize) {
        let (start, lo, hi) = self.overlap(t);
        for j in lo..hi {
            let w = self.window[j];
            self.window_sum[(start + j as isize) as usize] += w * w;
        }
    }

    fn overlap(&self, t: usize) -> (isize, usize, usize) {
        let start = self.params.frame_origin(t);
        let len = self.out.len() as isize;
        let lo = (-start).clamp(0, self.params.window_size as isize) as usize;
        let hi = (len - start).clamp(0, self.params.window_size as isize) as usize;
        (start, lo, hi.max(lo))
    }

    pub(crate) fn finish(mut self) -> Vec<f64> {
        for (x, s) in self.out.iter_mut().zip(&self.window_sum) {
            if *s >= WINDOW_SUM_FLOOR {
                *x /= s;
            }
        }
        self.out
    }
}

/// Materialized STFT under the default memory budget.
pub fn analyze(signal: &AudioSignal, params: StftParams) -> Result<Spectrogram> {
    analyze_with_budget(signal, params, DEFAULT_MEMORY_BUDGET)
}

/// Size in bytes of the materialized spectrogram of `len` samples.
pub fn spectrogram_bytes(len: usize, params: StftParams) -> u128 {
    params.frame_count(len) as u128 * params.bins() as u128 * core::mem::size_of::<Complex64>() as u128
}

pub fn analyze_with_budget(signal: &AudioSignal, params: StftParams, budget_bytes: u128) -> Result<Spectrogram> {
    signal.require_nonempty()?;
    let required = spectrogram_bytes(signal.len(), params);
    if required > budget_bytes {
        return Err(Error::MemoryBudget { required, budget: budget_bytes });
    }
    let mut stream = FrameStream::new(signal, params);
    let mut data = Vec::with_capacity(stream.frame_count() * params.bins());
    while let Some((_, row)) = stream.next_frame() {
        data.extend_from_slice(row);
    }
    Ok(Spectrogram::from_parts_unchecked(params, data, signal.len(), signal.sample_rate()))
}

/// Weighted overlap-add inverse of [`analyze`].
pub fn synthesize(spec: &Spectrogram) -> Result<AudioSignal> {
    if spec.data.len() != spec.frames * spec.bins || spec.frames != spec.params.frame_count(spec.original_length) {
        return Err(Error::DimensionMismatch("spectrogram frame count disagrees with its parameters".into()));
    }
    let mut ola = OverlapAdd::new(spec.original_length, spec.params);
    for (t, row) in spec.rows().enumerate() {
        ola.add_frame(t, row);
    }
    AudioSignal::new(ola.finish(), spec.sample_rate)
}

/// `synthesize(analyze(signal))` one frame at a time, without holding the spectrogram.
pub fn round_trip(signal: &AudioSignal, params: StftParams) -> Result<AudioSignal> {
    signal.require_nonempty()?;
    let mut stream = FrameStream::new(signal, params);
    let mut ola = OverlapAdd::new(signal.len(), params);
    while let Some((t, row)) = stream.next_frame() {
        ola.add_frame(t, row);
    }
    AudioSignal::new(ola.finish(), signal.sample_rate())
}

/// Floor added to magnitudes before taking decibels; a zero bin maps to -240 dB.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;

/// `20 log10(|z| + 1e-12)`.
pub fn bin_db(z: Complex64) -> f64 {
    20.0 * libm::log10(z.norm() + MAGNITUDE_FLOOR)
}

/// [`bin_db`] of every bin of every `time_decimation`-th frame.
pub fn magnitude_db(spec: &Spectrogram, time_decimation: usize) -> Result<Vec<Vec<f64>>> {
    if time_decimation == 0 {
        return Err(Error::invalid("time decimation must be at least 1"));
    }
    Ok(spec.rows().step_by(time_decimation).map(|row| row.iter().copied().map(bin_db).collect()).collect())
}
