//! SDR / SIR / SAR by projection onto delayed true sources.
//!
//! For an estimate `y` and sources `s_1..s_S`, the subspace for source `i` is
//! spanned by `s_i` delayed by `0..L` samples (shifted right, truncated to the
//! signal length). Then
//!
//! - `s_target` = projection of `y` onto the target's subspace,
//! - `e_interf` = projection onto the span of all sources, minus `s_target`,
//! - `e_artif`  = `y` minus the projection onto all sources,
//!
//! and
//!
//! ```text
//! SDR = 10 log10(|s_target|^2 / |e_interf + e_artif|^2)
//! SIR = 10 log10(|s_target|^2 / |e_interf|^2)
//! SAR = 10 log10(|s_target + e_interf|^2 / |e_artif|^2)
//! ```
//!
//! Projections solve the normal equations with the Gram matrix of delayed
//! sources, factored once per source set by [`Evaluator`] and reused for
//! every estimate.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::signal::AudioSignal;

/// Regularization is multiplied by this factor on each failed factorization.
const REGULARIZATION_GROWTH: f64 = 10.0;
const REGULARIZATION_RETRIES: usize = 6;
const REFINEMENT_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalConfig {
    /// Delays per source spanning the allowed-distortion subspace.
    pub filter_length: usize,
    /// Added to the Gram diagonal, relative to the mean diagonal entry.
    pub regularization: f64,
    /// Magnitude of the sentinel reported for infinite ratios.
    pub infinity_cap_db: f64,
    /// Component energies this far (in dB) below the estimate's energy are
    /// treated as exactly zero. Projections onto the delayed spans of strongly
    /// tonal sources are only accurate to roughly -200 dB, so the default of
    /// 150 dB keeps exact reconstructions reliably at the cap.
    pub resolution_db: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { filter_length: 512, regularization: 1e-12, infinity_cap_db: 300.0, resolution_db: 150.0 }
    }
}

impl EvalConfig {
    pub fn with_filter_length(filter_length: usize) -> Self {
        Self { filter_length, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter_length == 0 {
            return Err(Error::invalid("filter length must be at least 1"));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::invalid("regularization must be finite and non-negative"));
        }
        if !(self.infinity_cap_db > 0.0 && self.infinity_cap_db.is_finite()) {
            return Err(Error::invalid("infinity cap must be positive"));
        }
        if self.resolution_db.is_nan() || self.resolution_db <= 0.0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        Ok(())
    }
}

/// SDR, SIR and SAR in dB. A `*_capped` flag marks a ratio that was infinite
/// (or beyond the cap) and is reported as `+-infinity_cap_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
    pub sdr_capped: bool,
    pub sir_capped: bool,
    pub sar_capped: bool,
}

impl Metrics {
    pub fn all_capped(&self) -> bool {
        self.sdr_capped && self.sir_capped && self.sar_capped
    }
}

/// `estimate = s_target + e_interf + e_artif`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub s_target: Vec<f64>,
    pub e_interf: Vec<f64>,
    pub e_artif: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn energy(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `G(t1, t2) = sum_n x[n - t1] y[n - t2]` for `t1, t2 < l`, written into
/// `out[t1 * stride + t2]`.
///
/// The first row and column are plain lagged dot products; along each
/// diagonal `G(t1 + 1, t2 + 1) = G(t1, t2) - x[len-1-t1] y[len-1-t2]`, since
/// one more sample falls off the end.
fn delayed_gram_block(x: &[f64], y: &[f64], l: usize, out: &mut [f64], stride: usize) {
    let len = x.len();
    for t in 0..l {
        out[t] = dot(&x[t..], &y[..len - t]);
        out[t * stride] = dot(&x[..len - t], &y[t..]);
    }
    for t1 in 0..l - 1 {
        for t2 in 0..l - 1 {
            out[(t1 + 1) * stride + t2 + 1] = out[t1 * stride + t2] - x[len - 1 - t1] * y[len - 1 - t2];
        }
    }
}

/// A Gram matrix with the Cholesky factor of its regularized form. Solves are
/// refined against the unregularized matrix, which removes the bias of the
/// diagonal term in every direction it does not dominate.
#[derive(Debug, Clone)]
struct GramSolver {
    n: usize,
    gram: Vec<f64>,
    chol: Cholesky,
}

impl GramSolver {
    fn new(gram: Vec<f64>, n: usize, regularization: f64) -> Result<Self> {
        let chol = factor_regularized(gram.clone(), n, regularization)?;
        Ok(Self { n, gram, chol })
    }

    fn residual(&self, rhs: &[f64], x: &[f64]) -> Vec<f64> {
        rhs.iter().zip(self.gram.chunks_exact(self.n)).map(|(b, row)| b - dot(row, x)).collect()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.chol.solve(rhs);
        let mut r = self.residual(rhs, &x);
        let mut r_energy = energy(&r);
        for _ in 0..REFINEMENT_STEPS {
            if r_energy == 0.0 {
                break;
            }
            let dx = self.chol.solve(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let next = self.residual(rhs, &candidate);
            let next_energy = energy(&next);
            // Stop once rounding, not regularization, limits the residual.
            if next_energy.is_nan() || next_energy >= 0.5 * r_energy {
                break;
            }
            x = candidate;
            r = next;
            r_energy = next_energy;
        }
        x
    }
}

fn factor_regularized(mut gram: Vec<f64>, n: usize, regularization: f64) -> Result<Cholesky> {
    let trace: f64 = (0..n).map(|i| gram[i * n + i]).sum();
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::SingularGram);
    }
    let mut lambda = regularization * trace / n as f64;
    for i in 0..n {
        gram[i * n + i] += lambda;
    }
    for _ in 0..=REGULARIZATION_RETRIES {
        if let Some(c) = Cholesky::factor(gram.clone(), n) {
            return Ok(c);
        }
        let bumped = (lambda * REGULARIZATION_GROWTH).max(f64::EPSILON * trace / n as f64);
        for i in 0..n {
            gram[i * n + i] += bumped - lambda;
        }
        lambda = bumped;
    }
    Err(Error::SingularGram)
}

/// Projection machinery for a fixed set of true sources.
#[derive(Debug, Clone)]
pub struct Evaluator {
    cfg: EvalConfig,
    sample_rate: u32,
    sources: Vec<Vec<f64>>,
    all: GramSolver,
    // None for a silent source: its subspace is {0}.
    each: Vec<Option<GramSolver>>,
}

impl Evaluator {
    pub fn new(sources: &[&AudioSignal], cfg: EvalConfig) -> Result<Self> {
        cfg.validate()?;
        let first = sources.first().ok_or_else(|| Error::invalid("at least one source is required"))?;
        for s in &sources[1..] {
            first.require_aligned(s)?;
        }
        let len = first.len();
        let l = cfg.filter_length;
        if len <= l {
            return Err(Error::SignalTooShort { len, filter_length: l });
        }
        let count = sources.len();
        let n = count * l;
        let mut gram = vec![0.0; n * n];
        let mut block = vec![0.0; l * l];
        for i in 0..count {
            for j in i..count {
                delayed_gram_block(sources[i].samples(), sources[j].samples(), l, &mut block, l);
                for t1 in 0..l {
                    for t2 in 0..l {
                        let v = block[t1 * l + t2];
                        gram[(i * l + t1) * n + j * l + t2] = v;
                        gram[(j * l + t2) * n + i * l + t1] = v;
                    }
                }
            }
        }
        let each = (0..count)
            .map(|i| {
                let mut sub = vec![0.0; l * l];
                for t1 in 0..l {
                    sub[t1 * l..(t1 + 1) * l]
                        .copy_from_slice(&gram[(i * l + t1) * n + i * l..(i * l + t1) * n + (i + 1) * l]);
                }
                if sources[i].samples().iter().all(|&v| v == 0.0) {
                    Ok(None)
                } else {
                    GramSolver::new(sub, l, cfg.regularization).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let all = GramSolver::new(gram, n, cfg.regularization)?;
        Ok(Self {
            cfg,
            sample_rate: first.sample_rate(),
            sources: sources.iter().map(|s| s.samples().to_vec()).collect(),
            all,
            each,
        })
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    pub fn signal_len(&self) -> usize {
        self.sources[0].len()
    }

    fn check_estimate(&self, estimate: &AudioSignal, target: usize) -> Result<()> {
        if target >= self.sources.len() {
            return Err(Error::InvalidTargetIndex { index: target, count: self.sources.len() });
        }
        if estimate.sample_rate() != self.sample_rate {
            return Err(Error::RateMismatch { left: estimate.sample_rate(), right: self.sample_rate });
        }
        if estimate.len() != self.signal_len() {
            return Err(Error::LengthMismatch { left: estimate.len(), right: self.signal_len() });
        }
        Ok(())
    }

    /// `<y, s_i delayed by t>` for `t < L`.
    fn correlations(&self, y: &[f64], source: usize) -> Vec<f64> {
        let s = &self.sources[source];
        let len = y.len();
        (0..self.cfg.filter_length).map(|t| dot(&y[t..], &s[..len - t])).collect()
    }

    /// Adds `sum_t coeffs[t] * (s_i delayed by t)` into `out`.
    fn accumulate_filtered(&self, coeffs: &[f64], source: usize, out: &mut [f64]) {
        let s = &self.sources[source];
        let len = out.len();
        for (t, &c) in coeffs.iter().enumerate() {
            for (o, v) in out[t..].iter_mut().zip(&s[..len - t]) {
                *o += c * v;
            }
        }
    }

    pub fn decompose(&self, estimate: &AudioSignal, target: usize) -> Result<Decomposition> {
        self.check_estimate(estimate, target)?;
        let y = estimate.samples();
        let len = y.len();
        let l = self.cfg.filter_length;

        let rhs: Vec<f64> = (0..self.sources.len()).flat_map(|i| self.correlations(y, i)).collect();

        let mut s_target = vec![0.0; len];
        if let Some(chol) = &self.each[target] {
            let coeffs = chol.solve(&rhs[target * l..(target + 1) * l]);
            self.accumulate_filtered(&coeffs, target, &mut s_target);
        }

        let coeffs = self.all.solve(&rhs);
        let mut p_all = vec![0.0; len];
        for i in 0..self.sources.len() {
            self.accumulate_filtered(&coeffs[i * l..(i + 1) * l], i, &mut p_all);
        }

        let e_interf: Vec<f64> = p_all.iter().zip(&s_target).map(|(p, s)| p - s).collect();
        let e_artif: Vec<f64> = y.iter().zip(&p_all).map(|(y, p)| y - p).collect();
        let d = Decomposition { s_target, e_interf, e_artif };

        #[cfg(debug_assertions)]
        {
            let err = d.reconstruction_error(y);
            debug_assert!(err <= 1e-10, "decomposition does not add up: relative error {err}");
            let leak = self.artifact_leakage(estimate, &d);
            debug_assert!(leak <= 1e-8, "artifact not orthogonal to the sources: {leak}");
        }
        Ok(d)
    }

    pub fn evaluate(&self, estimate: &AudioSignal, target: usize) -> Result<Metrics> {
        let d = self.decompose(estimate, target)?;
        Ok(metrics_from(&d, energy(estimate.samples()), &self.cfg))
    }

    /// Largest `|<e_artif, s_i delayed by t>| / (|y| |s_i delayed by t|)`.
    pub fn artifact_leakage(&self, estimate: &AudioSignal, d: &Decomposition) -> f64 {
        let y_norm = libm::sqrt(energy(estimate.samples()));
        if y_norm == 0.0 {
            return 0.0;
        }
        let len = d.e_artif.len();
        let mut worst = 0.0f64;
        for (i, s) in self.sources.iter().enumerate() {
            let c = self.correlations(&d.e_artif, i);
            for (t, v) in c.iter().enumerate() {
                let s_norm = libm::sqrt(energy(&s[..len - t]));
                if s_norm > 0.0 {
                    worst = worst.max(v.abs() / (y_norm * s_norm));
                }
            }
        }
        worst
    }
}

impl Decomposition {
    /// Relative L2 error of `s_target + e_interf + e_artif` against `estimate`.
    pub fn reconstruction_error(&self, estimate: &[f64]) -> f64 {
        let mut num = 0.0;
        for (i, &y) in estimate.iter().enumerate() {
            let r = self.s_target[i] + self.e_interf[i] + self.e_artif[i] - y;
            num += r * r;
        }
        let den = energy(estimate);
        if den == 0.0 {
            libm::sqrt(num)
        } else {
            libm::sqrt(num / den)
        }
    }
}

fn capped_ratio_db(num: f64, den: f64, floor: f64, cap: f64) -> (f64, bool) {
    if num <= floor {
        return (-cap, true);
    }
    if den <= floor {
        return (cap, true);
    }
    let v = 10.0 * libm::log10(num / den);
    if v >= cap {
        (cap, true)
    } else if v <= -cap {
        (-cap, true)
    } else {
        (v, false)
    }
}

/// Metrics from a decomposition of an estimate with energy `estimate_energy`.
pub fn metrics_from(d: &Decomposition, estimate_energy: f64, cfg: &EvalConfig) -> Metrics {
    let target = energy(&d.s_target);
    let interf = energy(&d.e_interf);
    let artif = energy(&d.e_artif);
    let mut distortion = 0.0;
    let mut signal = 0.0;
    for i in 0..d.s_target.len() {
        let e = d.e_interf[i] + d.e_artif[i];
        distortion += e * e;
        let s = d.s_target[i] + d.e_interf[i];
        signal += s * s;
    }
    let floor = estimate_energy * libm::pow(10.0, -cfg.resolution_db / 10.0);
    let cap = cfg.infinity_cap_db;
    let (sdr_db, sdr_capped) = capped_ratio_db(target, distortion, floor, cap);
    let (sir_db, sir_capped) = capped_ratio_db(target, interf, floor, cap);
    let (sar_db, sar_capped) = capped_ratio_db(signal, artif, floor, cap);
    Metrics { sdr_db, sir_db, sar_db, sdr_capped, sir_capped, sar_capped }
}

pub fn decompose(
    estimate: &AudioSignal,
    sources: &[&AudioSignal],
    target_index: usize,
    cfg: &EvalConfig,
) -> Result<Decomposition> {
    Evaluator::new(sources, *cfg)?.decompose(estimate, target_index)
}

pub fn evaluate(
    estimate: &AudioSignal,
    sources: &[&AudioSignal],
    target_index: usize,
    cfg: &EvalConfig,
) -> Result<Metrics> {
    Evaluator::new(sources, *cfg)?.evaluate(estimate, target_index)
}

/// Scores both estimates of a two-source separation against `(src_a, src_b)`.
pub fn evaluate_pair(
    est_a: &AudioSignal,
    est_b: &AudioSignal,
    src_a: &AudioSignal,
    src_b: &AudioSignal,
    cfg: &EvalConfig,
) -> Result<(Metrics, Metrics)> {
    let ev = Evaluator::new(&[src_a, src_b], *cfg)?;
    Ok((ev.evaluate(est_a, 0)?, ev.evaluate(est_b, 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::white_noise;

    fn noise(len: usize, seed: u64) -> AudioSignal {
        AudioSignal::new(crate::synth::uniform_stream(seed).take(len).collect(), 8000).unwrap()
    }

    fn brute_gram(x: &[f64], y: &[f64], l: usize) -> Vec<f64> {
        let len = x.len();
        let mut g = vec![0.0; l * l];
        for t1 in 0..l {
            for t2 in 0..l {
                g[t1 * l + t2] = (t1.max(t2)..len).map(|n| x[n - t1] * y[n - t2]).sum();
            }
        }
        g
    }

    #[test]
    fn gram_recursion_matches_direct_sums() {
        let (x, y) = (noise(40, 1), noise(40, 2));
        let l = 7;
        let mut fast = vec![0.0; l * l];
        delayed_gram_block(x.samples(), y.samples(), l, &mut fast, l);
        for (a, b) in fast.iter().zip(brute_gram(x.samples(), y.samples(), l)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_estimate_is_fully_capped() {
        let (a, b) = (noise(2048, 3), noise(2048, 4));
        let ev = Evaluator::new(&[&a, &b], EvalConfig::with_filter_length(16)).unwrap();
        let m = ev.evaluate(&a, 0).unwrap();
        assert!(m.all_capped(), "{m:?}");
        assert_eq!((m.sdr_db, m.sir_db, m.sar_db), (300.0, 300.0, 300.0));
        let scaled = AudioSignal::new(a.samples().iter().map(|v| 3.7 * v).collect(), 8000).unwrap();
        assert_eq!(ev.evaluate(&scaled, 0).unwrap(), m);
    }

    #[test]
    fn orthogonal_estimate_is_all_artifact() {
        // With L = 1 only lag 0 matters: Gram-Schmidt a noise vector against both sources.
        let (a, b, mut y) = (noise(1024, 5), noise(1024, 6), noise(1024, 7).into_samples());
        let (ua, mut ub) = (a.samples().to_vec(), b.samples().to_vec());
        let p = dot(&ub, &ua) / energy(&ua);
        ub.iter_mut().zip(&ua).for_each(|(v, u)| *v -= p * u);
        for basis in [&ua, &ub] {
            let p = dot(&y, basis) / energy(basis);
            y.iter_mut().zip(basis.iter()).for_each(|(v, u)| *v -= p * u);
        }
        let y = AudioSignal::new(y, 8000).unwrap();
        let d = decompose(&y, &[&a, &b], 0, &EvalConfig::with_filter_length(1)).unwrap();
        let ey = energy(y.samples());
        assert!(energy(&d.s_target) < 1e-24 * ey);
        assert!(energy(&d.e_interf) < 1e-24 * ey);
        let diff: f64 = d.e_artif.iter().zip(y.samples()).map(|(u, v)| (u - v).powi(2)).sum();
        assert!(diff < 1e-24 * ey);
    }

    #[test]
    fn silent_target_caps_low() {
        let a = noise(600, 1);
        let z = AudioSignal::silence(600, 8000).unwrap();
        let m = evaluate(&a, &[&a, &z], 1, &EvalConfig::with_filter_length(4)).unwrap();
        assert_eq!((m.sdr_db, m.sir_db), (-300.0, -300.0));
        assert!(m.sdr_capped && m.sir_capped);
    }

    #[test]
    fn input_errors() {
        let a = noise(64, 1);
        let cfg = EvalConfig::with_filter_length(64);
        assert!(matches!(evaluate(&a, &[&a], 0, &cfg), Err(Error::SignalTooShort { .. })));
        let cfg = EvalConfig::with_filter_length(0);
        assert!(matches!(evaluate(&a, &[&a], 0, &cfg), Err(Error::InvalidParameter(_))));
        let cfg = EvalConfig::with_filter_length(4);
        assert!(matches!(evaluate(&a, &[&a], 1, &cfg), Err(Error::InvalidTargetIndex { .. })));
        assert!(matches!(evaluate(&noise(63, 1), &[&a], 0, &cfg), Err(Error::LengthMismatch { .. })));
        let z = AudioSignal::silence(64, 8000).unwrap();
        assert_eq!(evaluate(&a, &[&z, &z], 0, &cfg), Err(Error::SingularGram));
    }

    #[test]
    fn artifact_is_orthogonal_to_delayed_sources() {
        let a = white_noise(0.2, 8000, 1.0, 1).unwrap();
        let b = white_noise(0.2, 8000, 1.0, 2).unwrap();
        let y = white_noise(0.2, 8000, 1.0, 3).unwrap();
        let ev = Evaluator::new(&[&a, &b], EvalConfig::with_filter_length(32)).unwrap();
        let d = ev.decompose(&y, 1).unwrap();
        assert!(ev.artifact_leakage(&y, &d) <= 1e-8);
        assert!(d.reconstruction_error(y.samples()) <= 1e-10);
    }
}
