//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.

use std::alloc::{GlobalAlloc, Layout, System};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use binmask::core::bss_eval::{decompose, evaluate, evaluate_pair, EvalConfig};
use binmask::core::mask::{apply, complement, ideal_binary_mask, mask_by_magnitude, separate_pair};
use binmask::core::signal::mix;
use binmask::core::stft::{analyze, round_trip, synthesize};
use binmask::core::sweep::{optimal_window, pow2_windows, Metric, Source};
use binmask::core::synth::{counter_uniform, harmonic_tone, noise_bursts, sine, split_seed, white_noise};
use binmask::core::synth::{HarmonicTone, NoiseBursts};
use binmask::core::{AudioSignal, HopPolicy, StftParams, SweepConfig};
use binmask::{run_sweep, write_wav, BitDepth, RunOptions};
use nalgebra::{DMatrix, DVector};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

fn grow(bytes: usize) {
    let now = CURRENT.fetch_add(bytes, Ordering::Relaxed) + bytes;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
            grow(new_size);
        }
        p
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

const RATE: u32 = 44100;
const MB: f64 = 1024.0 * 1024.0;

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

type Check = fn() -> Outcome;

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn noise(seconds: f64, seed: u64) -> AudioSignal {
    white_noise(seconds, RATE, 1.0, seed).unwrap()
}

fn round_trip_all_windows() -> Outcome {
    let start = Instant::now();
    let x = noise(1.0, 1);
    let mut cases: Vec<(usize, usize)> = pow2_windows(1, 14).into_iter().map(|n| (n, (n / 4).max(1))).collect();
    cases.extend([(256, 1), (4096, 1)]);
    let mut worst = (0.0f64, 0, 0);
    for (n, h) in cases {
        let y = round_trip(&x, StftParams::new(n, h).unwrap()).unwrap();
        let err = rel_l2(y.samples(), x.samples());
        if err > worst.0 || err.is_nan() {
            worst = (err, n, h);
        }
    }
    let elapsed = start.elapsed();
    let ok = worst.0 <= 1e-9 && elapsed <= Duration::from_secs(300);
    (ok, format!("worst relative error {:.2e} at N={} H={}, {:.1} s", worst.0, worst.1, worst.2, elapsed.as_secs_f64()))
}

fn mixture_partition() -> Outcome {
    let mut worst = 0.0f64;
    for pair in 0..10u64 {
        let a = noise(1.0, split_seed(100, 2 * pair));
        let b = noise(1.0, split_seed(100, 2 * pair + 1));
        let gains = (0.5 + counter_uniform(7, pair).abs(), 0.5 + counter_uniform(8, pair).abs());
        for n in [256, 1024, 4096] {
            let params = StftParams::new(n, n / 4).unwrap();
            let sep = separate_pair(&a, &b, gains, params).unwrap();
            let sum = mix(&sep.estimate_a, &sep.estimate_b, 1.0, 1.0).unwrap();
            let reference = round_trip(&mix(&a, &b, gains.0, gains.1).unwrap(), params).unwrap();
            worst = worst.max(rel_l2(sum.samples(), reference.samples()));
        }
    }
    (worst <= 1e-9, format!("worst relative error {worst:.2e} over 10 pairs x 3 windows"))
}

fn mask_properties() -> Outcome {
    let mut failures = Vec::new();
    let mut cells = 0usize;
    for seed in 0..5u64 {
        let a = noise(0.25, split_seed(200, 2 * seed));
        let b = noise(0.25, split_seed(200, 2 * seed + 1));
        for n in [64, 512, 2048] {
            let params = StftParams::new(n, n / 4).unwrap();
            let (sa, sb) = (analyze(&a, params).unwrap(), analyze(&b, params).unwrap());
            let m = ideal_binary_mask(&sa, &sb).unwrap();
            cells += m.cells().len();
            if complement(&complement(&m)) != m {
                failures.push(format!("involution N={n}"));
            }
            let sm = analyze(&mix(&a, &b, 1.0, 1.0).unwrap(), params).unwrap();
            let (pa, pb) = (apply(&m, &sm).unwrap(), apply(&complement(&m), &sm).unwrap());
            let partitioned = pa
                .data()
                .iter()
                .zip(pb.data())
                .zip(sm.data())
                .all(|((x, y), z)| x + y == *z && ((x == z && y.norm() == 0.0) || (y == z && x.norm() == 0.0)));
            if !partitioned {
                failures.push(format!("partition N={n}"));
            }
            if mask_by_magnitude(&sa, &sb, |z| z.norm_sqr()).unwrap() != m {
                failures.push(format!("magnitude vs power N={n}"));
            }
            let tie = separate_pair(&a, &a, (1.0, 1.0), params).unwrap();
            if tie.estimate_a.samples().iter().any(|&v| v != 0.0) || tie.mask_density != 0.0 {
                failures.push(format!("tie rule N={n}"));
            }
            let ties_to_b =
                synthesize(&apply(&complement(&ideal_binary_mask(&sa, &sa).unwrap()), &sa).unwrap()).unwrap();
            if ties_to_b != round_trip(&a, params).unwrap() {
                failures.push(format!("tie estimate N={n}"));
            }
        }
    }
    if failures.is_empty() {
        (true, format!("all four properties hold on {cells} cells"))
    } else {
        (false, format!("violated: {}", failures.join(", ")))
    }
}

/// Columns are `sources[i]` delayed by `t` (shifted right, truncated).
fn design(sources: &[&[f64]], l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(sources[0].len(), sources.len() * l, |n, c| {
        let (i, t) = (c / l, c % l);
        if n >= t {
            sources[i][n - t]
        } else {
            0.0
        }
    })
}

fn project(a: DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    // Standard pseudo-inverse cutoff; delayed copies of a sinusoid are nearly rank-deficient.
    let svd = a.clone().svd(true, true);
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * svd.singular_values.max();
    let coeffs = svd.solve(y, tol).unwrap();
    a * coeffs
}

/// Dense least-squares decomposition into target, interference and artifacts.
fn oracle(estimate: &[f64], sources: &[&[f64]], target: usize, l: usize) -> [Vec<f64>; 3] {
    let y = DVector::from_column_slice(estimate);
    let s_target = project(design(&sources[target..=target], l), &y);
    let p_all = project(design(sources, l), &y);
    let e_interf = &p_all - &s_target;
    let e_artif = &y - &p_all;
    [s_target, e_interf, e_artif].map(|v| v.as_slice().to_vec())
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// SDR, SIR and SAR of an oracle decomposition.
fn oracle_metrics([s, i, a]: &[Vec<f64>; 3]) -> [f64; 3] {
    let db = |num: f64, den: f64| 10.0 * (num / den).log10();
    [db(energy(s), energy(&add(i, a))), db(energy(s), energy(i)), db(energy(&add(s, i)), energy(a))]
}

fn bss_oracle() -> Outcome {
    let (mut comp, mut metric) = (0.0f64, 0.0f64);
    for l in [1, 2, 8] {
        for trial in 0..20u64 {
            let seed = split_seed(300, trial * 16 + l as u64);
            let draw = |k| -> Vec<f64> { (0..512).map(|n| counter_uniform(split_seed(seed, k), n)).collect() };
            let sources = [draw(1), draw(2)];
            let extra = draw(3);
            let target = (trial % 2) as usize;
            let (g0, g1) = (counter_uniform(seed, 0), counter_uniform(seed, 1));
            let y: Vec<f64> = (0..512)
                .map(|n| {
                    let delayed = if n >= 1 { sources[target][n - 1] } else { 0.0 };
                    sources[target][n] + 0.4 * g0 * delayed + 0.3 * g1 * sources[1 - target][n] + 0.2 * extra[n]
                })
                .collect();
            let refs: Vec<&[f64]> = sources.iter().map(Vec::as_slice).collect();
            let want = oracle(&y, &refs, target, l);

            let sigs: Vec<AudioSignal> = sources.iter().map(|s| AudioSignal::new(s.clone(), RATE).unwrap()).collect();
            let sig_refs: Vec<&AudioSignal> = sigs.iter().collect();
            let est = AudioSignal::new(y, RATE).unwrap();
            let cfg = EvalConfig::with_filter_length(l);
            let got = decompose(&est, &sig_refs, target, &cfg).unwrap();
            for (g, w) in [&got.s_target, &got.e_interf, &got.e_artif].into_iter().zip(&want) {
                comp = comp.max(rel_l2(g, w));
            }
            let m = evaluate(&est, &sig_refs, target, &cfg).unwrap();
            for (g, w) in [m.sdr_db, m.sir_db, m.sar_db].into_iter().zip(oracle_metrics(&want)) {
                metric = metric.max((g - w).abs());
            }
        }
    }
    let ok = comp <= 1e-8 && metric <= 1e-6;
    (ok, format!("60 trials: components within {comp:.2e}, metrics within {metric:.2e} dB"))
}

fn analytic_twenty_db() -> Outcome {
    // Equal-norm, orthogonal pair: one sequence on disjoint halves of the support.
    let len = 4096;
    let base: Vec<f64> = (0..len as u64 / 2).map(|n| counter_uniform(400, n)).collect();
    let (mut s1, mut s2) = (vec![0.0; len], vec![0.0; len]);
    s1[..len / 2].copy_from_slice(&base);
    s2[len / 2..].copy_from_slice(&base);
    let y: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a + 0.1 * b).collect();
    let sig = |x: Vec<f64>| AudioSignal::new(x, RATE).unwrap();
    let m = evaluate(&sig(y), &[&sig(s1), &sig(s2)], 0, &EvalConfig::with_filter_length(1)).unwrap();
    let ok = (m.sir_db - 20.0).abs() <= 0.01 && (m.sdr_db - 20.0).abs() <= 0.01 && m.sar_capped;
    (ok, format!("SIR {:.4} dB, SDR {:.4} dB, SAR {} dB (capped: {})", m.sir_db, m.sdr_db, m.sar_db, m.sar_capped))
}

fn disjoint_sines() -> Outcome {
    let n = 4096;
    let params = StftParams::new(n, n / 4).unwrap();
    let bin_hz = f64::from(RATE) / n as f64;
    let a = sine(10.0 * bin_hz, 1.0, RATE, 0.5, 0.0).unwrap();
    let b = sine(20.0 * bin_hz, 1.0, RATE, 0.5, 0.0).unwrap();
    let sep = separate_pair(&a, &b, (1.0, 1.0), params).unwrap();
    let (ma, mb) = evaluate_pair(&sep.estimate_a, &sep.estimate_b, &a, &b, &EvalConfig::default()).unwrap();

    // Cross-check the pipeline's metrics against the dense oracle at a short filter.
    let l = 8;
    let refs = [a.samples(), b.samples()];
    let mut drift = 0.0f64;
    for (est, target) in [(&sep.estimate_a, 0), (&sep.estimate_b, 1)] {
        let m = evaluate(est, &[&a, &b], target, &EvalConfig::with_filter_length(l)).unwrap();
        let [sdr, sir, sar] = oracle_metrics(&oracle(est.samples(), &refs, target, l));
        for (got, want, capped) in
            [(m.sdr_db, sdr, m.sdr_capped), (m.sir_db, sir, m.sir_capped), (m.sar_db, sar, m.sar_capped)]
        {
            if !capped {
                drift = drift.max((got - want).abs());
            }
        }
    }
    let ok = ma.sir_db >= 40.0 && mb.sir_db >= 40.0 && drift <= 1e-6;
    (ok, format!("SIR a {:.1} dB, b {:.1} dB; oracle agreement {drift:.1e} dB", ma.sir_db, mb.sir_db))
}

fn window_trend() -> Outcome {
    let start = Instant::now();
    let tone = harmonic_tone(&HarmonicTone::piano_like(), 4.0, RATE, 0.5).unwrap();
    let bursts = noise_bursts(&NoiseBursts::snare_like(), 4.0, RATE, 0.5, 500).unwrap();
    let mut cfg = SweepConfig::new(HopPolicy::Quarter);
    cfg.window_sizes = pow2_windows(6, 13);
    cfg.labels = ("tone".into(), "bursts".into());
    let report = run_sweep(&tone, &bursts, cfg, RunOptions::default()).unwrap();
    let sdr = |i: usize| report.rows[i].metrics_a.sdr_db;
    let gain = sdr(report.rows.len() - 1) - sdr(0);
    let index = |source| {
        let n = optimal_window(&report, source, Metric::Sdr).unwrap();
        report.rows.iter().position(|r| r.window_size == n).unwrap()
    };
    let (tonal, noisy) = (index(Source::A), index(Source::B));
    let elapsed = start.elapsed();
    let ok = gain >= 5.0 && tonal >= noisy && elapsed <= Duration::from_secs(600);
    let curve: Vec<String> =
        report.rows.iter().map(|r| format!("{:.1}/{:.1}", r.metrics_a.sdr_db, r.metrics_b.sdr_db)).collect();
    (
        ok,
        format!(
            "tonal SDR gain {gain:.2} dB, optimal windows tonal 2^{} noise 2^{}, {:.1} s; SDR tone/bursts by window: {}",
            tonal + 6,
            noisy + 6,
            elapsed.as_secs_f64(),
            curve.join(" ")
        ),
    )
}

fn hop_one_streaming() -> Outcome {
    let a = harmonic_tone(&HarmonicTone::piano_like(), 4.0, RATE, 0.5).unwrap();
    let b = noise_bursts(&NoiseBursts::snare_like(), 4.0, RATE, 0.5, 600).unwrap();
    let params = StftParams::new(1 << 14, 1).unwrap();
    let before = CURRENT.load(Ordering::Relaxed);
    PEAK.store(before, Ordering::Relaxed);
    let start = Instant::now();
    let sep = separate_pair(&a, &b, (1.0, 1.0), params).unwrap();
    let elapsed = start.elapsed();
    let peak = PEAK.load(Ordering::Relaxed);
    let frames = params.frame_count(a.len());
    let pipeline = (peak - before) as f64 / MB;
    let total = peak as f64 / MB;
    let ok = total <= 256.0 && elapsed <= Duration::from_secs(1800) && sep.estimate_a.len() == a.len();
    (
        ok,
        format!(
            "{frames} frames, peak heap {total:.1} MB ({pipeline:.1} MB in separation), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("tone.wav"), dir.path().join("bursts.wav"));
    write_wav(&a, &harmonic_tone(&HarmonicTone::piano_like(), 2.0, RATE, 0.5).unwrap(), BitDepth::Float32).unwrap();
    write_wav(&b, &noise_bursts(&NoiseBursts::snare_like(), 2.0, RATE, 0.5, 700).unwrap(), BitDepth::Float32).unwrap();
    let run = |threads: &str| {
        let csv = dir.path().join(format!("sweep_{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_binmask"))
            .args(["--threads", threads, "sweep", "--windows", "pow2:64:8192", "--hop-policy", "quarter"])
            .arg("--source-a")
            .arg(&a)
            .arg("--source-b")
            .arg(&b)
            .arg("--csv")
            .arg(&csv)
            .status()
            .unwrap();
        assert!(status.success(), "sweep with {threads} threads failed");
        std::fs::read(csv).unwrap()
    };
    let (one, eight) = (run("1"), run("8"));
    let ok = one == eight;
    (ok, format!("{} vs {} bytes, identical: {ok}", one.len(), eight.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("STFT round trip", round_trip_all_windows),
        ("mixture partition", mixture_partition),
        ("mask properties", mask_properties),
        ("BSS-EVAL oracle equivalence", bss_oracle),
        ("analytic metric check", analytic_twenty_db),
        ("disjoint-support separation", disjoint_sines),
        ("window-size trend", window_trend),
        ("hop-1 streaming at N=16384", hop_one_streaming),
        ("sweep determinism across threads", sweep_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(outcome) => outcome,
            Err(e) => {
                let msg =
                    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        println!("{} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
