//! Separation quality as a function of STFT window size.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bss_eval::{EvalConfig, Evaluator, Metrics};
use crate::error::{Error, Result};
use crate::mask::separate_pair;
use crate::signal::AudioSignal;
use crate::stft::StftParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HopPolicy {
    /// Hop of one sample (maximum overlap).
    One,
    /// `max(1, N / 4)`.
    Quarter,
}

impl HopPolicy {
    pub fn hop_for(self, window_size: usize) -> usize {
        match self {
            HopPolicy::One => 1,
            HopPolicy::Quarter => (window_size / 4).max(1),
        }
    }
}

/// Powers of two `2^lo ..= 2^hi`.
pub fn pow2_windows(lo_exp: u32, hi_exp: u32) -> Vec<usize> {
    (lo_exp..=hi_exp).map(|e| 1usize << e).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    pub window_sizes: Vec<usize>,
    pub hop_policy: HopPolicy,
    pub gains: (f64, f64),
    pub eval: EvalConfig,
    pub labels: (String, String),
}

impl SweepConfig {
    /// Window sizes 2, 4, ..., 16384 with the given hop policy.
    pub fn new(hop_policy: HopPolicy) -> Self {
        Self {
            window_sizes: pow2_windows(1, 14),
            hop_policy,
            gains: (1.0, 1.0),
            eval: EvalConfig::default(),
            labels: (String::from("a"), String::from("b")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_sizes.is_empty() {
            return Err(Error::invalid("at least one window size is required"));
        }
        if self.window_sizes.iter().any(|&n| n < 2) {
            return Err(Error::invalid("window sizes must be at least 2"));
        }
        if self.window_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("window sizes must be strictly increasing"));
        }
        if !(self.gains.0.is_finite() && self.gains.1.is_finite()) {
            return Err(Error::invalid("gains must be finite"));
        }
        self.eval.validate()
    }

    pub fn params_for(&self, window_size: usize) -> Result<StftParams> {
        StftParams::new(window_size, self.hop_policy.hop_for(window_size))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub window_size: usize,
    pub hop: usize,
    pub metrics_a: Metrics,
    pub metrics_b: Metrics,
    pub mask_density: f64,
    /// Filled in by timed runners; `None` when timing was not recorded.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub wall_time_seconds: Option<f64>,
}

impl SweepRow {
    pub fn metrics(&self, source: Source) -> &Metrics {
        match source {
            Source::A => &self.metrics_a,
            Source::B => &self.metrics_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    Sdr,
    Sir,
    Sar,
}

impl Metric {
    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Metric::Sdr => m.sdr_db,
            Metric::Sir => m.sir_db,
            Metric::Sar => m.sar_db,
        }
    }
}

/// Best window per source and metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceOptima {
    pub sdr: usize,
    pub sir: usize,
    pub sar: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Optima {
    pub a: SourceOptima,
    pub b: SourceOptima,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub label_a: String,
    pub label_b: String,
    pub sample_rate: u32,
    pub length_samples: usize,
    pub gains: (f64, f64),
    pub hop_policy: HopPolicy,
    pub filter_length: usize,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub optima: Optima,
    pub provenance: Provenance,
}

impl SweepReport {
    pub fn from_rows(rows: Vec<SweepRow>, provenance: Provenance) -> Result<Self> {
        let scan = |source, metric| optimal_window_in(&rows, source, metric);
        let optima = Optima {
            a: SourceOptima {
                sdr: scan(Source::A, Metric::Sdr)?,
                sir: scan(Source::A, Metric::Sir)?,
                sar: scan(Source::A, Metric::Sar)?,
            },
            b: SourceOptima {
                sdr: scan(Source::B, Metric::Sdr)?,
                sir: scan(Source::B, Metric::Sir)?,
                sar: scan(Source::B, Metric::Sar)?,
            },
        };
        Ok(Self { rows, optima, provenance })
    }
}

fn optimal_window_in(rows: &[SweepRow], source: Source, metric: Metric) -> Result<usize> {
    let mut best: Option<(&SweepRow, f64)> = None;
    for row in rows {
        let v = metric.of(row.metrics(source));
        match best {
            // Strict comparison keeps the earliest row on ties; ties between
            // different windows resolve to the smaller one.
            Some((b, bv)) if v < bv || (v == bv && row.window_size >= b.window_size) => {}
            _ => best = Some((row, v)),
        }
    }
    best.map(|(r, _)| r.window_size).ok_or(Error::EmptyReport)
}

/// Window size maximizing `metric` for `source`; the smallest window wins ties.
pub fn optimal_window(report: &SweepReport, source: Source, metric: Metric) -> Result<usize> {
    optimal_window_in(&report.rows, source, metric)
}

/// Validated sweep inputs with the source projections factored once.
///
/// Rows are independent: [`run_row`](Self::run_row) takes `&self`, so callers
/// may evaluate them in any order or concurrently.
#[derive(Debug)]
pub struct Sweep<'a> {
    source_a: &'a AudioSignal,
    source_b: &'a AudioSignal,
    cfg: SweepConfig,
    evaluator: Evaluator,
}

impl<'a> Sweep<'a> {
    pub fn prepare(source_a: &'a AudioSignal, source_b: &'a AudioSignal, cfg: SweepConfig) -> Result<Self> {
        cfg.validate()?;
        source_a.require_nonempty()?;
        source_a.require_aligned(source_b)?;
        for &n in &cfg.window_sizes {
            // Padded length is len + 2(N - 1).
            if n >= source_a.len() + 2 * (n - 1) {
                return Err(Error::Window {
                    window_size: n,
                    source: Box::new(Error::invalid("window does not fit the padded signal")),
                });
            }
        }
        let evaluator = Evaluator::new(&[source_a, source_b], cfg.eval)?;
        Ok(Self { source_a, source_b, cfg, evaluator })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.cfg.window_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cfg.window_sizes.is_empty()
    }

    /// Separates and scores the `index`-th configured window size.
    pub fn run_row(&self, index: usize) -> Result<SweepRow> {
        let window_size = self.cfg.window_sizes[index];
        let wrap = |e: Error| Error::Window { window_size, source: Box::new(e) };
        let params = self.cfg.params_for(window_size).map_err(wrap)?;
        let sep = separate_pair(self.source_a, self.source_b, self.cfg.gains, params).map_err(wrap)?;
        let metrics_a = self.evaluator.evaluate(&sep.estimate_a, 0).map_err(wrap)?;
        let metrics_b = self.evaluator.evaluate(&sep.estimate_b, 1).map_err(wrap)?;
        Ok(SweepRow {
            window_size,
            hop: params.hop(),
            metrics_a,
            metrics_b,
            mask_density: sep.mask_density,
            wall_time_seconds: None,
        })
    }

    pub fn provenance(&self, tool_version: &str) -> Provenance {
        Provenance {
            label_a: self.cfg.labels.0.clone(),
            label_b: self.cfg.labels.1.clone(),
            sample_rate: self.source_a.sample_rate(),
            length_samples: self.source_a.len(),
            gains: self.cfg.gains,
            hop_policy: self.cfg.hop_policy,
            filter_length: self.cfg.eval.filter_length,
            tool_version: String::from(tool_version),
        }
    }

    pub fn finish(&self, rows: Vec<SweepRow>, tool_version: &str) -> Result<SweepReport> {
        SweepReport::from_rows(rows, self.provenance(tool_version))
    }
}

/// Sequential, untimed sweep. See the `binmask` crate for the threaded runner.
pub fn run_sweep(source_a: &AudioSignal, source_b: &AudioSignal, cfg: SweepConfig) -> Result<SweepReport> {
    let sweep = Sweep::prepare(source_a, source_b, cfg)?;
    let rows = (0..sweep.len()).map(|i| sweep.run_row(i)).collect::<Result<Vec<_>>>()?;
    sweep.finish(rows, env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::white_noise;
    use alloc::vec;

    fn row(window_size: usize, sdr_a: f64) -> SweepRow {
        let m = Metrics {
            sdr_db: sdr_a,
            sir_db: 0.0,
            sar_db: 0.0,
            sdr_capped: false,
            sir_capped: false,
            sar_capped: false,
        };
        SweepRow { window_size, hop: 1, metrics_a: m, metrics_b: m, mask_density: 0.5, wall_time_seconds: None }
    }

    fn report(rows: Vec<SweepRow>) -> SweepReport {
        let provenance = Provenance {
            label_a: "a".into(),
            label_b: "b".into(),
            sample_rate: 8000,
            length_samples: 1,
            gains: (1.0, 1.0),
            hop_policy: HopPolicy::Quarter,
            filter_length: 1,
            tool_version: "test".into(),
        };
        SweepReport::from_rows(rows, provenance).unwrap()
    }

    #[test]
    fn optimal_window_rules() {
        let r = report(vec![row(64, 3.0)]);
        assert_eq!(optimal_window(&r, Source::A, Metric::Sdr), Ok(64));
        let r = report(vec![row(2, 1.0), row(4, 2.0), row(8, 3.0)]);
        assert_eq!(optimal_window(&r, Source::A, Metric::Sdr), Ok(8));
        // All equal: every metric ties, smallest window wins.
        assert_eq!(optimal_window(&r, Source::A, Metric::Sir), Ok(2));
        let r = report(vec![row(2, 5.0), row(4, 7.0), row(8, 7.0)]);
        assert_eq!(r.optima.a.sdr, 4);
        let empty = SweepReport { rows: vec![], ..r };
        assert_eq!(optimal_window(&empty, Source::B, Metric::Sar), Err(Error::EmptyReport));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::new(HopPolicy::Quarter);
        assert_eq!(cfg.window_sizes.len(), 14);
        assert!(cfg.validate().is_ok());
        cfg.window_sizes = vec![100, 200, 100];
        assert!(cfg.validate().is_err());
        cfg.window_sizes = vec![1, 2];
        assert!(cfg.validate().is_err());
        assert_eq!(HopPolicy::Quarter.hop_for(2), 1);
        assert_eq!(HopPolicy::Quarter.hop_for(1024), 256);
    }

    #[test]
    fn silent_b_single_row_recovers_a() {
        let a = white_noise(0.5, 8000, 0.8, 4).unwrap();
        let b = AudioSignal::silence(a.len(), 8000).unwrap();
        let mut cfg = SweepConfig::new(HopPolicy::Quarter);
        cfg.window_sizes = vec![512];
        cfg.eval = EvalConfig::with_filter_length(32);
        let r = run_sweep(&a, &b, cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].hop, 128);
        assert!(r.rows[0].metrics_a.all_capped(), "{:?}", r.rows[0].metrics_a);
    }

    #[test]
    fn failing_window_is_identified() {
        let a = white_noise(0.01, 8000, 0.8, 4).unwrap();
        let b = white_noise(0.01, 8000, 0.8, 5).unwrap();
        let mut cfg = SweepConfig::new(HopPolicy::Quarter);
        cfg.eval = EvalConfig::with_filter_length(8);
        cfg.window_sizes = vec![16, 32];
        cfg.gains = (f64::NAN, 1.0);
        assert!(run_sweep(&a, &b, cfg.clone()).is_err());
        cfg.gains = (1.0, 1.0);
        let sweep = Sweep::prepare(&a, &b, cfg).unwrap();
        assert_eq!(sweep.len(), 2);
        assert!(sweep.run_row(1).is_ok());
    }
}
