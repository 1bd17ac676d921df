//! The `binmask` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid arguments or inputs, 3 file or format
//! errors, 4 numerical failures. Machine-readable output goes to stdout,
//! diagnostics to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binmask_core::bss_eval::{evaluate, EvalConfig, Metrics};
use binmask_core::mask::{separate_pair, separate_pair_materialized};
use binmask_core::signal::mix;
use binmask_core::sweep::{optimal_window, Metric, Source};
use binmask_core::synth::{HarmonicTone, NoiseBursts, SynthKind, SynthSpec};
use binmask_core::{AudioSignal, HopPolicy, StftParams, SweepConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export;
use crate::fsutil::write_string;
use crate::runner::{run_sweep, RunOptions};
use crate::wav::{read_wav, write_wav, BitDepth};

#[derive(Debug, Parser)]
#[command(name = "binmask", version, about = "Ideal binary-mask separation and STFT window-size sweeps")]
pub struct Cli {
    /// Maximum worker threads [default: available cores].
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Seed for the stochastic synth kinds.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print human-readable summaries to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate a mixture of two sources with the ideal binary mask.
    Separate(SeparateArgs),
    /// Separate and score across a range of window sizes.
    Sweep(SweepArgs),
    /// Score an estimate against its reference sources.
    Eval(EvalArgs),
    /// Generate a synthetic test signal.
    #[command(subcommand)]
    Synth(SynthArgs),
    /// Write a magnitude spectrogram in decibels.
    ExportSpectrogram(SpectrogramArgs),
    /// Write the ideal binary mask of source a against source b.
    ExportMask(MaskArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HopPolicyArg {
    /// Hop of one sample.
    One,
    /// Hop of max(1, N/4).
    Quarter,
}

impl From<HopPolicyArg> for HopPolicy {
    fn from(p: HopPolicyArg) -> Self {
        match p {
            HopPolicyArg::One => HopPolicy::One,
            HopPolicyArg::Quarter => HopPolicy::Quarter,
        }
    }
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub source_a: PathBuf,
    #[arg(long)]
    pub source_b: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, value_parser = finite)]
    pub gain_a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, value_parser = finite)]
    pub gain_b: f64,
}

#[derive(Debug, Args)]
#[group(id = "hop_choice", required = true, multiple = false)]
pub struct HopArgs {
    /// Hop size in samples, 1 <= hop <= window.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub hop: Option<u64>,
    #[arg(long, value_enum)]
    pub hop_policy: Option<HopPolicyArg>,
}

impl HopArgs {
    fn params(&self, window: usize) -> Result<StftParams> {
        let hop = match (self.hop, self.hop_policy) {
            (Some(h), _) => h as usize,
            (None, Some(p)) => HopPolicy::from(p).hop_for(window),
            (None, None) => unreachable!("clap requires one of --hop and --hop-policy"),
        };
        StftParams::new(window, hop).map_err(|e| Error::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Window size in samples (at least 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub window: u64,
    #[command(flatten)]
    pub hop: HopArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also score both estimates and include the metrics in report.json.
    #[arg(long)]
    pub eval: bool,
    /// Distortion filter length used by --eval.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    pub filter_len: u64,
    /// Output sample format: 16, 24 or 32f.
    #[arg(long, default_value = "32f")]
    pub bit_depth: BitDepth,
    /// Use the reference path that materializes every spectrogram.
    #[arg(long, hide = true)]
    pub materialized: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Comma-separated window sizes, or pow2:MIN:MAX for every power of two
    /// from MIN to MAX.
    #[arg(long, value_parser = parse_windows)]
    pub windows: Windows,
    #[arg(long, value_enum)]
    pub hop_policy: HopPolicyArg,
    /// Write the per-window metrics as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the full report, including optima and provenance, as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    pub filter_len: u64,
    /// Record per-row wall time in the JSON report.
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub label_a: Option<String>,
    #[arg(long)]
    pub label_b: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    /// Reference sources, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub sources: Vec<PathBuf>,
    /// Position of the target in --sources.
    #[arg(long, default_value_t = 0)]
    pub target_index: usize,
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    pub filter_len: u64,
}

#[derive(Debug, Args)]
pub struct SynthCommon {
    /// Output WAV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Duration in seconds.
    #[arg(long, default_value_t = 4.0, value_parser = finite)]
    pub duration: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 44100, value_parser = clap::value_parser!(u32).range(1..))]
    pub rate: u32,
    /// Peak amplitude in (0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = finite)]
    pub amplitude: f64,
    #[arg(long, default_value = "32f")]
    pub bit_depth: BitDepth,
}

#[derive(Debug, Subcommand)]
pub enum SynthArgs {
    /// Pure sinusoid below the Nyquist frequency.
    Sine {
        #[command(flatten)]
        common: SynthCommon,
        #[arg(long, value_parser = finite)]
        freq: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, value_parser = finite)]
        phase: f64,
    },
    /// Decaying harmonic notes with 1/k partial amplitudes.
    HarmonicTone {
        #[command(flatten)]
        common: SynthCommon,
        #[arg(long, default_value_t = 220.0, value_parser = finite)]
        f0: f64,
        #[arg(long, default_value_t = 10)]
        harmonics: u32,
        /// Amplitude decay rate in 1/s.
        #[arg(long, default_value_t = 1.5, value_parser = finite)]
        decay: f64,
        /// Restart the note every this many seconds; 0 for a single note.
        #[arg(long, default_value_t = 1.0, value_parser = finite)]
        note_period: f64,
    },
    /// Uniform white noise.
    WhiteNoise {
        #[command(flatten)]
        common: SynthCommon,
    },
    /// Noise gated into bursts with 5 ms raised-cosine edges.
    NoiseBursts {
        #[command(flatten)]
        common: SynthCommon,
        #[arg(long, default_value_t = 0.1, value_parser = finite)]
        burst_len: f64,
        #[arg(long, default_value_t = 0.5, value_parser = finite)]
        period: f64,
    },
}

#[derive(Debug, Args)]
pub struct SpectrogramArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub window: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub hop: u64,
    /// Keep every this-many-th frame.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimate: u64,
    #[arg(long, required_unless_present = "json")]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub window: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub hop: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimate: u64,
    #[arg(long)]
    pub csv: PathBuf,
}

/// A validated, strictly increasing list of window sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Windows(pub Vec<usize>);

fn finite(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err("value must be finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Parses `--windows`: `LIST` (e.g. `64,256,1024`) or `pow2:MIN:MAX`.
pub fn parse_windows(s: &str) -> std::result::Result<Windows, String> {
    let sizes: Vec<usize> = if let Some(range) = s.strip_prefix("pow2:") {
        let (lo, hi) = range.split_once(':').ok_or("expected pow2:MIN:MAX")?;
        let lo: usize = lo.trim().parse().map_err(|e| format!("MIN: {e}"))?;
        let hi: usize = hi.trim().parse().map_err(|e| format!("MAX: {e}"))?;
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return Err("pow2 bounds must be powers of two with MIN <= MAX".into());
        }
        let (lo, hi) = (lo.trailing_zeros(), hi.trailing_zeros());
        (lo..=hi).map(|e| 1usize << e).collect()
    } else {
        s.split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|e| format!("'{w}': {e}")))
            .collect::<std::result::Result<_, _>>()?
    };
    if sizes.is_empty() {
        return Err("no window sizes given".into());
    }
    if let Some(&w) = sizes.iter().find(|&&w| w < 2) {
        return Err(format!("window size {w} is below the minimum of 2"));
    }
    if sizes.windows(2).any(|p| p[0] >= p[1]) {
        return Err("window sizes must be strictly increasing".into());
    }
    Ok(Windows(sizes))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { crate::error::EXIT_USAGE } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("binmask: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = Context { verbose: cli.verbose, seed: cli.seed, threads: cli.threads.map(usize::from) };
    match &cli.command {
        Command::Separate(a) => ctx.separate(a),
        Command::Sweep(a) => ctx.sweep(a),
        Command::Eval(a) => ctx.eval(a),
        Command::Synth(a) => ctx.synth(a),
        Command::ExportSpectrogram(a) => ctx.export_spectrogram(a),
        Command::ExportMask(a) => ctx.export_mask(a),
    }
}

struct Context {
    verbose: bool,
    seed: u64,
    threads: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SeparationReport {
    params: StftParams,
    gains: (f64, f64),
    mask_density: f64,
    clipped_samples: ClipCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<PairMetrics>,
}

#[derive(Debug, Serialize)]
struct ClipCounts {
    est_a: usize,
    est_b: usize,
    mixture: usize,
}

#[derive(Debug, Serialize)]
struct PairMetrics {
    filter_length: usize,
    a: Metrics,
    b: Metrics,
}

fn read_pair(pair: &PairArgs) -> Result<(AudioSignal, AudioSignal)> {
    let a = read_wav(&pair.source_a)?;
    let b = read_wav(&pair.source_b)?;
    a.require_nonempty()?;
    a.require_aligned(&b)?;
    Ok((a, b))
}

fn file_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

impl Context {
    fn log(&self, msg: impl FnOnce() -> String) {
        if self.verbose {
            eprintln!("{}", msg());
        }
    }

    fn separate(&self, args: &SeparateArgs) -> Result<()> {
        let window = args.window as usize;
        let params = args.hop.params(window)?;
        let eval = EvalConfig::with_filter_length(args.filter_len as usize);
        let (a, b) = read_pair(&args.pair)?;
        let gains = (args.pair.gain_a, args.pair.gain_b);
        let sep = if args.materialized {
            separate_pair_materialized(&a, &b, gains, params)?
        } else {
            separate_pair(&a, &b, gains, params)?
        };
        let mixture = mix(&a, &b, gains.0, gains.1)?;
        let metrics = if args.eval {
            Some(PairMetrics {
                filter_length: eval.filter_length,
                a: evaluate(&sep.estimate_a, &[&a, &b], 0, &eval)?,
                b: evaluate(&sep.estimate_b, &[&a, &b], 1, &eval)?,
            })
        } else {
            None
        };

        std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
        let dir = &args.out_dir;
        let clipped_samples = ClipCounts {
            est_a: write_wav(dir.join("est_a.wav"), &sep.estimate_a, args.bit_depth)?.clipped,
            est_b: write_wav(dir.join("est_b.wav"), &sep.estimate_b, args.bit_depth)?.clipped,
            mixture: write_wav(dir.join("mixture.wav"), &mixture, args.bit_depth)?.clipped,
        };
        let report = SeparationReport { params, gains, mask_density: sep.mask_density, clipped_samples, metrics };
        let json = serde_json::to_string_pretty(&report).expect("finite values") + "\n";
        write_string(&dir.join("report.json"), &json)?;
        self.log(|| {
            let mut s = format!(
                "window {} hop {}: mask density {:.4}",
                params.window_size(),
                params.hop(),
                report.mask_density
            );
            if let Some(m) = &report.metrics {
                s += &format!(
                    "\n  a: SDR {:.2} SIR {:.2} SAR {:.2} dB\n  b: SDR {:.2} SIR {:.2} SAR {:.2} dB",
                    m.a.sdr_db, m.a.sir_db, m.a.sar_db, m.b.sdr_db, m.b.sir_db, m.b.sar_db
                );
            }
            s
        });
        Ok(())
    }

    fn sweep(&self, args: &SweepArgs) -> Result<()> {
        let (a, b) = read_pair(&args.pair)?;
        let mut cfg = SweepConfig::new(args.hop_policy.into());
        cfg.window_sizes = args.windows.0.clone();
        cfg.gains = (args.pair.gain_a, args.pair.gain_b);
        cfg.eval = EvalConfig::with_filter_length(args.filter_len as usize);
        cfg.labels = (
            args.label_a.clone().unwrap_or_else(|| file_label(&args.pair.source_a)),
            args.label_b.clone().unwrap_or_else(|| file_label(&args.pair.source_b)),
        );
        let threads = self.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let report = run_sweep(&a, &b, cfg, RunOptions { threads, timings: args.timings })?;

        if args.csv.is_none() && args.json.is_none() {
            print!("{}", export::sweep_csv(&report));
        }
        if let Some(path) = &args.csv {
            export::write_sweep_csv(&report, path)?;
        }
        if let Some(path) = &args.json {
            export::write_sweep_json(&report, path)?;
        }
        self.log(|| {
            let mut s = String::new();
            for row in &report.rows {
                s += &format!(
                    "N={:>6} H={:>5}  a: SDR {:7.2}  b: SDR {:7.2} dB\n",
                    row.window_size, row.hop, row.metrics_a.sdr_db, row.metrics_b.sdr_db
                );
            }
            for (name, source) in [("a", Source::A), ("b", Source::B)] {
                let best = optimal_window(&report, source, Metric::Sdr).expect("report is nonempty");
                s += &format!("SDR-optimal window for {name}: {best}\n");
            }
            s.trim_end().to_string()
        });
        Ok(())
    }

    fn eval(&self, args: &EvalArgs) -> Result<()> {
        let cfg = EvalConfig::with_filter_length(args.filter_len as usize);
        if args.target_index >= args.sources.len() {
            return Err(Error::Usage(format!(
                "--target-index {} is out of range for {} sources",
                args.target_index,
                args.sources.len()
            )));
        }
        let estimate = read_wav(&args.estimate)?;
        let sources = args.sources.iter().map(read_wav).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&AudioSignal> = sources.iter().collect();
        let metrics = evaluate(&estimate, &refs, args.target_index, &cfg)?;
        println!("{}", serde_json::to_string_pretty(&metrics).expect("finite values"));
        self.log(|| format!("SDR {:.2} SIR {:.2} SAR {:.2} dB", metrics.sdr_db, metrics.sir_db, metrics.sar_db));
        Ok(())
    }

    fn synth(&self, args: &SynthArgs) -> Result<()> {
        let (common, kind) = match args {
            SynthArgs::Sine { common, freq, phase } => (common, SynthKind::Sine { freq_hz: *freq, phase: *phase }),
            SynthArgs::HarmonicTone { common, f0, harmonics, decay, note_period } => (
                common,
                SynthKind::HarmonicTone(HarmonicTone {
                    fundamental_hz: *f0,
                    harmonics: *harmonics,
                    decay_rate: *decay,
                    note_period: (*note_period > 0.0).then_some(*note_period),
                }),
            ),
            SynthArgs::WhiteNoise { common } => (common, SynthKind::WhiteNoise),
            SynthArgs::NoiseBursts { common, burst_len, period } => {
                (common, SynthKind::NoiseBursts(NoiseBursts { burst_len: *burst_len, period: *period }))
            }
        };
        let spec = SynthSpec {
            kind,
            duration_seconds: common.duration,
            sample_rate: common.rate,
            amplitude: common.amplitude,
            seed: self.seed,
        };
        let signal = spec.generate()?;
        let written = write_wav(&common.out, &signal, common.bit_depth)?;
        self.log(|| {
            format!(
                "wrote {} samples at {} Hz to {} ({} clipped)",
                signal.len(),
                signal.sample_rate(),
                common.out.display(),
                written.clipped
            )
        });
        Ok(())
    }

    fn export_spectrogram(&self, args: &SpectrogramArgs) -> Result<()> {
        let params =
            StftParams::new(args.window as usize, args.hop as usize).map_err(|e| Error::Usage(e.to_string()))?;
        let signal = read_wav(&args.input)?;
        let decimation = args.decimate as usize;
        if let Some(path) = &args.csv {
            export::write_spectrogram_csv(&signal, params, decimation, path)?;
        }
        if let Some(path) = &args.json {
            export::write_spectrogram_json(&signal, params, decimation, path)?;
        }
        self.log(|| format!("{} frames x {} bins", params.frame_count(signal.len()), params.bins()));
        Ok(())
    }

    fn export_mask(&self, args: &MaskArgs) -> Result<()> {
        let params =
            StftParams::new(args.window as usize, args.hop as usize).map_err(|e| Error::Usage(e.to_string()))?;
        let (a, b) = read_pair(&args.pair)?;
        let gains = (args.pair.gain_a, args.pair.gain_b);
        export::write_mask_csv(&a, &b, gains, params, args.decimate as usize, &args.csv)?;
        self.log(|| format!("{} frames x {} bins", params.frame_count(a.len()), params.bins()));
        Ok(())
    }
}
