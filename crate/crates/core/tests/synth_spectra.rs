//! Spectral checks of the synthetic sources against a brute-force DFT.

use std::f64::consts::PI;

use binmask_core::synth::{harmonic_tone, noise_bursts, HarmonicTone, NoiseBursts};

const RATE: u32 = 44100;

/// `|X[k]|^2` for `k = 0..=N/2`, by direct summation.
fn power_spectrum(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let table: Vec<(f64, f64)> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).sin_cos()).collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                let (s, c) = table[(k * j) % n];
                re += v * c;
                im -= v * s;
            }
            re * re + im * im
        })
        .collect()
}

fn stationary(f0: f64) -> HarmonicTone {
    HarmonicTone { fundamental_hz: f0, harmonics: 10, decay_rate: 0.0, note_period: None }
}

#[test]
fn stationary_tone_energy_sits_on_its_harmonics() {
    let n = 1 << 14;
    // Bin-centred fundamental closest to 220 Hz.
    let bin = 82;
    let f0 = bin as f64 * f64::from(RATE) / n as f64;
    let x = harmonic_tone(&stationary(f0), n as f64 / f64::from(RATE), RATE, 1.0).unwrap();
    assert_eq!(x.len(), n);
    let p = power_spectrum(x.samples());
    // One-sided weights: DC and Nyquist appear once in the full spectrum.
    let weight = |k: usize| if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
    let total: f64 = p.iter().enumerate().map(|(k, v)| weight(k) * v).sum();
    let near: f64 = p
        .iter()
        .enumerate()
        .filter(|&(k, _)| (1..=10).any(|h| (k as i64 - (h * bin) as i64).abs() <= 2))
        .map(|(k, v)| weight(k) * v)
        .sum();
    assert!(near / total >= 0.99, "only {:.4} of the energy is near the harmonics", near / total);
}

#[test]
fn tone_peaks_only_at_harmonic_bins() {
    // 0.1 s gives 10 Hz bins, so every multiple of 220 Hz is bin-centred.
    for tone in [stationary(220.0), HarmonicTone::piano_like()] {
        let x = harmonic_tone(&tone, 0.1, RATE, 1.0).unwrap();
        let p = power_spectrum(x.samples());
        let max = p.iter().cloned().fold(0.0, f64::max);
        let peaks: Vec<usize> =
            (1..p.len() - 1).filter(|&k| p[k] > p[k - 1] && p[k] > p[k + 1] && p[k] > 1e-6 * max).collect();
        let expected: Vec<usize> = (1..=10).map(|h| 22 * h).collect();
        assert_eq!(peaks, expected, "{tone:?}");
    }
}

#[test]
fn bursts_have_exact_silence_between_them() {
    let x = noise_bursts(&NoiseBursts::snare_like(), 1.0, RATE, 1.0, 3).unwrap();
    let (burst, gap) = (0.1 * f64::from(RATE), 0.5 * f64::from(RATE));
    let mut on = 0.0;
    for (i, v) in x.samples().iter().enumerate() {
        let phase = i as f64 % gap;
        if phase >= burst {
            assert_eq!(*v, 0.0, "sample {i} should be silent");
        } else {
            on += v * v;
        }
    }
    assert!(on > 1e3, "burst energy {on}");
}
