//! Discrete Fourier transforms for the STFT.
//!
//! Power-of-two lengths use an iterative radix-2 kernel with per-stage twiddle
//! tables. Any other length goes through Bluestein's chirp-z algorithm on a
//! power-of-two kernel, so every window size is supported. Real input of even
//! length is packed into a half-length complex transform.
//!
//! Conventions: the forward transform is unnormalized,
//! `X[k] = sum_n x[n] e^{-2 pi i k n / N}`, and the inverse carries the `1/N`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

fn unit(angle: f64) -> Complex64 {
    let (s, c) = libm::sincos(angle);
    Complex64::new(c, s)
}

/// Forward complex DFT of a fixed length.
#[derive(Debug, Clone)]
pub struct ComplexFft {
    len: usize,
    algo: Algo,
}

#[derive(Debug, Clone)]
enum Algo {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

impl ComplexFft {
    pub fn new(len: usize) -> Self {
        let algo = if len <= 1 {
            Algo::Trivial
        } else if len.is_power_of_two() {
            Algo::Radix2(Radix2::new(len))
        } else {
            Algo::Bluestein(Bluestein::new(len))
        };
        Self { len, algo }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform. `buf.len()` must equal [`len`](Self::len).
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &mut self.algo {
            Algo::Trivial => {}
            Algo::Radix2(r) => r.run(buf),
            Algo::Bluestein(b) => b.run(buf),
        }
    }

    /// Forward transform of data held as separate real and imaginary parts.
    pub fn forward_split(&mut self, re: &mut [f64], im: &mut [f64]) {
        assert!(re.len() == self.len && im.len() == self.len, "buffer length does not match plan");
        match &mut self.algo {
            Algo::Trivial => {}
            Algo::Radix2(r) => r.run_split(re, im),
            Algo::Bluestein(b) => {
                let mut buf: Vec<Complex64> = re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect();
                b.run(&mut buf);
                for ((r, i), z) in re.iter_mut().zip(im.iter_mut()).zip(&buf) {
                    *r = z.re;
                    *i = z.im;
                }
            }
        }
    }

    /// In-place inverse transform, including the `1/N` scale.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.len as f64;
        for z in buf.iter_mut() {
            *z = z.conj() * scale;
        }
    }
}

/// Radix-2 decimation-in-time kernel on split real/imaginary arrays, which
/// lets the butterfly loops vectorize.
#[derive(Debug, Clone)]
struct Radix2 {
    // Stage with half-size h keeps its h twiddles at [h - 1, 2h - 1).
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
    bitrev: Vec<u32>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        let bits = len.trailing_zeros();
        let bitrev = (0..len as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        let mut tw_re = Vec::with_capacity(len - 1);
        let mut tw_im = Vec::with_capacity(len - 1);
        let mut half = 1;
        while half < len {
            for j in 0..half {
                let w = unit(-PI * j as f64 / half as f64);
                tw_re.push(w.re);
                tw_im.push(w.im);
            }
            half *= 2;
        }
        Self { tw_re, tw_im, bitrev, re: vec![0.0; len], im: vec![0.0; len] }
    }

    fn run(&mut self, buf: &mut [Complex64]) {
        let (mut re, mut im) = (core::mem::take(&mut self.re), core::mem::take(&mut self.im));
        for ((r, i), z) in re.iter_mut().zip(im.iter_mut()).zip(buf.iter()) {
            *r = z.re;
            *i = z.im;
        }
        self.run_split(&mut re, &mut im);
        for ((r, i), z) in re.iter().zip(im.iter()).zip(buf.iter_mut()) {
            *z = Complex64::new(*r, *i);
        }
        self.re = re;
        self.im = im;
    }

    fn run_split(&self, re: &mut [f64], im: &mut [f64]) {
        let n = re.len();
        for (i, &r) in self.bitrev.iter().enumerate() {
            let r = r as usize;
            if i < r {
                re.swap(i, r);
                im.swap(i, r);
            }
        }
        let mut half = if n >= 4 {
            // Stages with half-size 1 and 2 fused: twiddles are 1 and -i.
            for (r, i) in re.chunks_exact_mut(4).zip(im.chunks_exact_mut(4)) {
                let (a0r, a0i) = (r[0] + r[1], i[0] + i[1]);
                let (a1r, a1i) = (r[0] - r[1], i[0] - i[1]);
                let (b0r, b0i) = (r[2] + r[3], i[2] + i[3]);
                let (b1r, b1i) = (r[2] - r[3], i[2] - i[3]);
                r[0] = a0r + b0r;
                i[0] = a0i + b0i;
                r[2] = a0r - b0r;
                i[2] = a0i - b0i;
                // b1 * (-i) = (b1i, -b1r)
                r[1] = a1r + b1i;
                i[1] = a1i - b1r;
                r[3] = a1r - b1i;
                i[3] = a1i + b1r;
            }
            4
        } else {
            for (r, i) in re.chunks_exact_mut(2).zip(im.chunks_exact_mut(2)) {
                let (ar, ai, br, bi) = (r[0], i[0], r[1], i[1]);
                r[0] = ar + br;
                i[0] = ai + bi;
                r[1] = ar - br;
                i[1] = ai - bi;
            }
            2
        };
        while half < n {
            let wr = &self.tw_re[half - 1..2 * half - 1];
            let wi = &self.tw_im[half - 1..2 * half - 1];
            for (block_re, block_im) in re.chunks_exact_mut(2 * half).zip(im.chunks_exact_mut(2 * half)) {
                let (lo_re, hi_re) = block_re.split_at_mut(half);
                let (lo_im, hi_im) = block_im.split_at_mut(half);
                let lanes = lo_re.iter_mut().zip(lo_im.iter_mut()).zip(hi_re.iter_mut().zip(hi_im.iter_mut()));
                for (((ar, ai), (br, bi)), (&c, &s)) in lanes.zip(wr.iter().zip(wi)) {
                    let tr = *br * c - *bi * s;
                    let ti = *br * s + *bi * c;
                    let (xr, xi) = (*ar, *ai);
                    *ar = xr + tr;
                    *ai = xi + ti;
                    *br = xr - tr;
                    *bi = xi - ti;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
    inner: Radix2,
    work: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let m = (2 * len - 1).next_power_of_two();
        let period = 2 * len as u64;
        // e^{-i pi k^2 / n}, with k^2 reduced mod 2n so the angle stays small.
        let chirp: Vec<Complex64> =
            (0..len as u64).map(|k| unit(-PI * ((k * k) % period) as f64 / len as f64)).collect();
        let mut inner = Radix2::new(m);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.run(&mut kernel);
        let scale = 1.0 / m as f64;
        for z in &mut kernel {
            *z *= scale;
        }
        Self { len, chirp, kernel_spectrum: kernel, inner, work: vec![Complex64::new(0.0, 0.0); m] }
    }

    fn run(&mut self, buf: &mut [Complex64]) {
        let work = &mut self.work;
        work.fill(Complex64::new(0.0, 0.0));
        for ((w, x), c) in work.iter_mut().zip(buf.iter()).zip(&self.chirp) {
            *w = *x * *c;
        }
        self.inner.run(work);
        // Inverse of the convolution via conjugation; the 1/m is folded into the kernel.
        for (w, k) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w = (*w * *k).conj();
        }
        self.inner.run(work);
        for ((x, w), c) in buf.iter_mut().zip(work.iter()).zip(&self.chirp) {
            *x = w.conj() * *c;
        }
        debug_assert_eq!(buf.len(), self.len);
    }
}

/// Real-input DFT of length `N` producing the `N/2 + 1` non-redundant bins.
#[derive(Debug, Clone)]
pub struct RealFft {
    len: usize,
    kind: RealKind,
}

#[derive(Debug, Clone)]
enum RealKind {
    // N = 2M: even samples in the real part, odd samples in the imaginary
    // part of an M-point complex transform.
    Even { half: ComplexFft, tw_re: Vec<f64>, tw_im: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
    Odd { full: ComplexFft, work: Vec<Complex64> },
}

impl RealFft {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let kind = if len % 2 == 0 {
            let m = len / 2;
            let (tw_re, tw_im) = (0..=m).map(|k| unit(-2.0 * PI * k as f64 / len as f64)).map(|w| (w.re, w.im)).unzip();
            RealKind::Even { half: ComplexFft::new(m), tw_re, tw_im, re: vec![0.0; m], im: vec![0.0; m] }
        } else {
            RealKind::Odd { full: ComplexFft::new(len), work: vec![Complex64::new(0.0, 0.0); len] }
        };
        Self { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bins(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn forward(&mut self, input: &[f64], output: &mut [Complex64]) {
        assert_eq!(input.len(), self.len);
        assert_eq!(output.len(), self.bins());
        match &mut self.kind {
            RealKind::Even { half, tw_re, tw_im, re, im } => {
                let m = re.len();
                for ((r, i), pair) in re.iter_mut().zip(im.iter_mut()).zip(input.chunks_exact(2)) {
                    *r = pair[0];
                    *i = pair[1];
                }
                half.forward_split(re, im);
                output[0] = Complex64::new(re[0] + im[0], 0.0);
                output[m] = Complex64::new(re[0] - im[0], 0.0);
                for k in 1..m {
                    // Z[k] and conj(Z[m - k]) separate into the even/odd spectra.
                    let (zr, zi) = (re[k], im[k]);
                    let (cr, ci) = (re[m - k], -im[m - k]);
                    let (er, ei) = (0.5 * (zr + cr), 0.5 * (zi + ci));
                    let (or, oi) = (0.5 * (zi - ci), -0.5 * (zr - cr));
                    let (wr, wi) = (tw_re[k], tw_im[k]);
                    output[k] = Complex64::new(er + wr * or - wi * oi, ei + wr * oi + wi * or);
                }
            }
            RealKind::Odd { full, work } => {
                for (z, &x) in work.iter_mut().zip(input) {
                    *z = Complex64::new(x, 0.0);
                }
                full.forward(work);
                output.copy_from_slice(&work[..output.len()]);
            }
        }
    }

    /// Inverse of [`forward`](Self::forward). The spectrum is treated as
    /// Hermitian, so the imaginary parts of the DC (and Nyquist) bins are ignored.
    pub fn inverse(&mut self, input: &[Complex64], output: &mut [f64]) {
        assert_eq!(input.len(), self.bins());
        assert_eq!(output.len(), self.len);
        match &mut self.kind {
            RealKind::Even { half, tw_re, tw_im, re, im } => {
                let m = re.len();
                // Conjugated so the forward kernel computes the inverse.
                let (x0, xm) = (input[0].re, input[m].re);
                re[0] = 0.5 * (x0 + xm);
                im[0] = -0.5 * (x0 - xm);
                for k in 1..m {
                    let (xr, xi) = (input[k].re, input[k].im);
                    let (cr, ci) = (input[m - k].re, -input[m - k].im);
                    let (er, ei) = (0.5 * (xr + cr), 0.5 * (xi + ci));
                    let (dr, di) = (0.5 * (xr - cr), 0.5 * (xi - ci));
                    // odd = d * conj(w)
                    let (wr, wi) = (tw_re[k], -tw_im[k]);
                    let (or, oi) = (dr * wr - di * wi, dr * wi + di * wr);
                    // z = even + i * odd, stored conjugated
                    re[k] = er - oi;
                    im[k] = -(ei + or);
                }
                half.forward_split(re, im);
                let scale = 1.0 / m as f64;
                for ((pair, r), i) in output.chunks_exact_mut(2).zip(re.iter()).zip(im.iter()) {
                    pair[0] = r * scale;
                    pair[1] = -i * scale;
                }
            }
            RealKind::Odd { full, work } => {
                let n = self.len;
                work[0] = Complex64::new(input[0].re, 0.0);
                for k in 1..input.len() {
                    work[k] = input[k];
                    work[n - k] = input[k].conj();
                }
                full.inverse(work);
                for (x, z) in output.iter_mut().zip(work.iter()) {
                    *x = z.re;
                }
            }
        }
    }
}
