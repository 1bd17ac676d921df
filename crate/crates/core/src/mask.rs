//! Ideal binary masks and two-source oracle separation.
//!
//! A cell belongs to the target when the target's magnitude is strictly
//! greater than the other source's; ties (both zero included) go to the other
//! source. The mixture spectrogram is then split by the mask and its
//! complement, so the two estimates always partition the mixture.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{mix, scale, AudioSignal};
use crate::stft::{analyze, synthesize, FrameStream, OverlapAdd, Spectrogram, StftParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Mask decision for one cell, comparing magnitudes.
#[inline]
pub fn target_dominates(target: Complex64, other: Complex64) -> bool {
    target.norm() > other.norm()
}

/// Boolean frames x bins matrix tied to the STFT parameters it was built with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    params: StftParams,
    frames: usize,
    bins: usize,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn params(&self) -> StftParams {
        self.params
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, frame: usize, bin: usize) -> bool {
        self.cells[frame * self.bins + bin]
    }

    pub fn row(&self, frame: usize) -> &[bool] {
        &self.cells[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn count_true(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Fraction of cells assigned to the target.
    pub fn density(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.count_true() as f64 / self.cells.len() as f64
        }
    }

    fn check_against(&self, spec: &Spectrogram) -> Result<()> {
        if self.params != spec.params() || self.frames != spec.frames() || self.bins != spec.bins() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "mask {}x{} vs spectrogram {}x{}",
                self.frames,
                self.bins,
                spec.frames(),
                spec.bins()
            )));
        }
        Ok(())
    }
}

impl core::ops::Not for &BinaryMask {
    type Output = BinaryMask;

    fn not(self) -> BinaryMask {
        complement(self)
    }
}

/// Ideal binary mask: true where `|target| > |other|`.
pub fn ideal_binary_mask(spec_target: &Spectrogram, spec_other: &Spectrogram) -> Result<BinaryMask> {
    mask_by_magnitude(spec_target, spec_other, Complex64::norm)
}

/// Mask from an arbitrary magnitude-like map. Any strictly increasing
/// function of `|z|` (power, dB) yields the same mask.
pub fn mask_by_magnitude(
    spec_target: &Spectrogram,
    spec_other: &Spectrogram,
    magnitude: impl Fn(Complex64) -> f64,
) -> Result<BinaryMask> {
    spec_target.same_shape(spec_other)?;
    let cells = spec_target.data().iter().zip(spec_other.data()).map(|(&t, &o)| magnitude(t) > magnitude(o)).collect();
    Ok(BinaryMask { params: spec_target.params(), frames: spec_target.frames(), bins: spec_target.bins(), cells })
}

/// Cell-wise logical NOT (`1 - mask`).
pub fn complement(mask: &BinaryMask) -> BinaryMask {
    BinaryMask { cells: mask.cells.iter().map(|c| !c).collect(), ..mask.clone() }
}

/// Cell-wise product; masked-out cells become exactly zero.
pub fn apply(mask: &BinaryMask, spec: &Spectrogram) -> Result<Spectrogram> {
    mask.check_against(spec)?;
    let data = spec.data().iter().zip(&mask.cells).map(|(&z, &keep)| if keep { z } else { ZERO }).collect();
    Ok(Spectrogram::from_parts_unchecked(spec.params(), data, spec.original_length(), spec.sample_rate()))
}

/// Output of [`separate_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub estimate_a: AudioSignal,
    pub estimate_b: AudioSignal,
    /// Fraction of time-frequency cells assigned to source a.
    pub mask_density: f64,
    pub params: StftParams,
}

fn check_pair(a: &AudioSignal, b: &AudioSignal) -> Result<()> {
    a.require_nonempty()?;
    a.require_aligned(b)
}

/// Oracle separation of `gain_a * a + gain_b * b` with the ideal binary mask
/// built from the gain-scaled sources.
///
/// Runs frame by frame: the three analyses, the mask row, both masked rows and
/// both overlap-add accumulators advance together, so memory is `O(N + len)`
/// regardless of hop.
pub fn separate_pair(
    source_a: &AudioSignal,
    source_b: &AudioSignal,
    gains: (f64, f64),
    params: StftParams,
) -> Result<SeparationResult> {
    check_pair(source_a, source_b)?;
    let mixture = mix(source_a, source_b, gains.0, gains.1)?;
    let (source_a, source_b) = scaled_components(source_a, source_b, gains)?;
    let len = mixture.len();

    let mut stream_a = FrameStream::new(&source_a, params);
    let mut stream_b = FrameStream::new(&source_b, params);
    let mut stream_m = FrameStream::new(&mixture, params);
    let mut ola_a = OverlapAdd::new(len, params);
    let mut ola_b = OverlapAdd::new(len, params);
    let bins = params.bins();
    let mut row_a = vec![ZERO; bins];
    let mut row_b = vec![ZERO; bins];
    let mut assigned_a = 0usize;

    while let Some((t, spec_a)) = stream_a.next_frame() {
        let (_, spec_b) = stream_b.next_frame().expect("streams share a frame count");
        let (_, spec_m) = stream_m.next_frame().expect("streams share a frame count");
        let mut count = 0;
        for k in 0..bins {
            if target_dominates(spec_a[k], spec_b[k]) {
                row_a[k] = spec_m[k];
                row_b[k] = ZERO;
                count += 1;
            } else {
                row_a[k] = ZERO;
                row_b[k] = spec_m[k];
            }
        }
        assigned_a += count;
        // An all-zero row inverse-transforms to exact zeros; skip the IFFT.
        if count == 0 {
            ola_a.add_silent_frame(t);
        } else {
            ola_a.add_frame(t, &row_a);
        }
        if count == bins {
            ola_b.add_silent_frame(t);
        } else {
            ola_b.add_frame(t, &row_b);
        }
    }

    let cells = params.frame_count(len) * bins;
    let rate = mixture.sample_rate();
    Ok(SeparationResult {
        estimate_a: AudioSignal::new(ola_a.finish(), rate)?,
        estimate_b: AudioSignal::new(ola_b.finish(), rate)?,
        mask_density: if cells == 0 { 0.0 } else { assigned_a as f64 / cells as f64 },
        params,
    })
}

// The mask compares the sources as they appear in the mixture.
fn scaled_components(a: &AudioSignal, b: &AudioSignal, gains: (f64, f64)) -> Result<(AudioSignal, AudioSignal)> {
    Ok((scale(a, gains.0)?, scale(b, gains.1)?))
}

/// Reference implementation of [`separate_pair`] that materializes every
/// spectrogram. Only suitable for small inputs; used for equivalence checks.
pub fn separate_pair_materialized(
    source_a: &AudioSignal,
    source_b: &AudioSignal,
    gains: (f64, f64),
    params: StftParams,
) -> Result<SeparationResult> {
    check_pair(source_a, source_b)?;
    let mixture = mix(source_a, source_b, gains.0, gains.1)?;
    let (source_a, source_b) = scaled_components(source_a, source_b, gains)?;
    let spec_a = analyze(&source_a, params)?;
    let spec_b = analyze(&source_b, params)?;
    let spec_m = analyze(&mixture, params)?;
    let mask = ideal_binary_mask(&spec_a, &spec_b)?;
    let estimate_a = synthesize(&apply(&mask, &spec_m)?)?;
    let estimate_b = synthesize(&apply(&complement(&mask), &spec_m)?)?;
    Ok(SeparationResult { estimate_a, estimate_b, mask_density: mask.density(), params })
}
