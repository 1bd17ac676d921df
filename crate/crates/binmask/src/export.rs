//! CSV and JSON renderings of sweep reports, spectrogram magnitudes and masks.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so every
//! value parses back to the same `f64` and identical reports give identical
//! bytes.

use std::io::{self, Write};
use std::path::Path;

use binmask_core::mask::target_dominates;
use binmask_core::signal::scale;
use binmask_core::stft::bin_db;
use binmask_core::{AudioSignal, FrameStream, Metrics, StftParams, SweepReport};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, write_string};

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "window_size",
    "hop",
    "source",
    "sdr_db",
    "sir_db",
    "sar_db",
    "sdr_capped",
    "sir_capped",
    "sar_capped",
    "mask_density",
];

fn float(x: f64) -> String {
    format!("{x:?}")
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// Two lines per window size, source `a` then `b`. `mask_density` is the
/// fraction of cells assigned to source `a` and is repeated on both lines.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(SWEEP_CSV_HEADER).expect("writing to memory");
    for row in &report.rows {
        for (label, m) in [("a", &row.metrics_a), ("b", &row.metrics_b)] {
            out.write_record(metric_record(row.window_size, row.hop, label, m, row.mask_density))
                .expect("writing to memory");
        }
    }
    String::from_utf8(out.into_inner().expect("writing to memory")).expect("CSV output is ASCII")
}

fn metric_record(window_size: usize, hop: usize, source: &str, m: &Metrics, density: f64) -> [String; 10] {
    [
        window_size.to_string(),
        hop.to_string(),
        source.to_string(),
        float(m.sdr_db),
        float(m.sir_db),
        float(m.sar_db),
        m.sdr_capped.to_string(),
        m.sir_capped.to_string(),
        m.sar_capped.to_string(),
        float(density),
    ]
}

pub fn sweep_json(report: &SweepReport) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only finite numbers") + "\n"
}

pub fn write_sweep_csv(report: &SweepReport, path: &Path) -> Result<()> {
    write_string(path, &sweep_csv(report))
}

pub fn write_sweep_json(report: &SweepReport, path: &Path) -> Result<()> {
    write_string(path, &sweep_json(report))
}

/// Frequencies of the `N/2 + 1` bins, `k * rate / N`.
pub fn bin_frequencies(params: StftParams, sample_rate: u32) -> Vec<f64> {
    let n = params.window_size() as f64;
    (0..params.bins()).map(|k| k as f64 * f64::from(sample_rate) / n).collect()
}

fn metadata_line(kind: &str, params: StftParams, rate: u32, decimation: usize, frames: usize) -> String {
    format!(
        "# {kind} window_size={} hop={} sample_rate={rate} time_decimation={decimation} frames={frames} bin_hz=k*{rate}/{}\n",
        params.window_size(),
        params.hop(),
        params.window_size(),
    )
}

fn check_decimation(decimation: usize) -> Result<()> {
    if decimation == 0 {
        return Err(Error::Usage("time decimation must be at least 1".into()));
    }
    Ok(())
}

/// Streams the `20 log10(|X| + 1e-12)` grid of every `decimation`-th frame as
/// CSV: a `#` metadata line, a header of bin frequencies in Hz, then one row
/// per retained frame. Never holds more than one frame in memory.
pub fn write_spectrogram_csv(signal: &AudioSignal, params: StftParams, decimation: usize, path: &Path) -> Result<()> {
    check_decimation(decimation)?;
    signal.require_nonempty()?;
    let mut stream = FrameStream::new(signal, params);
    let rate = signal.sample_rate();
    write_atomic(path, |file| {
        let mut raw = io::BufWriter::new(file);
        raw.write_all(metadata_line("magnitude_db", params, rate, decimation, stream.frame_count()).as_bytes())?;
        let mut out = csv::Writer::from_writer(raw);
        out.write_record(bin_frequencies(params, rate).into_iter().map(float)).map_err(csv_err)?;
        while let Some((t, row)) = stream.next_frame() {
            if t % decimation == 0 {
                out.write_record(row.iter().map(|&z| float(bin_db(z)))).map_err(csv_err)?;
            }
        }
        out.flush()
    })
}

#[derive(Debug, Serialize)]
struct SpectrogramJson {
    window_size: usize,
    hop: usize,
    sample_rate: u32,
    time_decimation: usize,
    frame_indices: Vec<usize>,
    bin_hz: Vec<f64>,
    magnitude_db: Vec<Vec<f64>>,
}

/// JSON counterpart of [`write_spectrogram_csv`]; the grid is held in memory.
pub fn write_spectrogram_json(signal: &AudioSignal, params: StftParams, decimation: usize, path: &Path) -> Result<()> {
    check_decimation(decimation)?;
    signal.require_nonempty()?;
    let mut doc = SpectrogramJson {
        window_size: params.window_size(),
        hop: params.hop(),
        sample_rate: signal.sample_rate(),
        time_decimation: decimation,
        frame_indices: Vec::new(),
        bin_hz: bin_frequencies(params, signal.sample_rate()),
        magnitude_db: Vec::new(),
    };
    let mut stream = FrameStream::new(signal, params);
    while let Some((t, row)) = stream.next_frame() {
        if t % decimation == 0 {
            doc.frame_indices.push(t);
            doc.magnitude_db.push(row.iter().map(|&z| bin_db(z)).collect());
        }
    }
    write_string(path, &(serde_json::to_string(&doc).expect("finite values") + "\n"))
}

/// Streams the ideal binary mask of `gain_a * a` against `gain_b * b` as a CSV
/// of 0/1 cells (1 where source `a` dominates), one row per retained frame.
pub fn write_mask_csv(
    source_a: &AudioSignal,
    source_b: &AudioSignal,
    gains: (f64, f64),
    params: StftParams,
    decimation: usize,
    path: &Path,
) -> Result<()> {
    check_decimation(decimation)?;
    source_a.require_nonempty()?;
    source_a.require_aligned(source_b)?;
    let (scaled_a, scaled_b) = (scale(source_a, gains.0)?, scale(source_b, gains.1)?);
    let mut stream_a = FrameStream::new(&scaled_a, params);
    let mut stream_b = FrameStream::new(&scaled_b, params);
    let rate = source_a.sample_rate();
    write_atomic(path, |file| {
        let mut raw = io::BufWriter::new(file);
        raw.write_all(metadata_line("mask", params, rate, decimation, stream_a.frame_count()).as_bytes())?;
        let mut out = csv::Writer::from_writer(raw);
        out.write_record(bin_frequencies(params, rate).into_iter().map(float)).map_err(csv_err)?;
        while let Some((t, row_a)) = stream_a.next_frame() {
            let (_, row_b) = stream_b.next_frame().expect("streams share a frame count");
            if t % decimation == 0 {
                let cells = row_a.iter().zip(row_b).map(|(&x, &y)| if target_dominates(x, y) { "1" } else { "0" });
                out.write_record(cells).map_err(csv_err)?;
            }
        }
        out.flush()
    })
}
