use alloc::vec::Vec;

/// Lower-triangular Cholesky factor of a dense symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    // Row-major lower triangle; the upper part is unused.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `matrix` (row-major, `n x n`, only the lower triangle is read).
    /// Returns `None` when a pivot is not strictly positive.
    pub(crate) fn factor(mut matrix: Vec<f64>, n: usize) -> Option<Self> {
        debug_assert_eq!(matrix.len(), n * n);
        for j in 0..n {
            let (upper, lower) = matrix.split_at_mut((j + 1) * n);
            let row_j = &mut upper[j * n..(j + 1) * n];
            let d = row_j[j] - row_j[..j].iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            let d = libm::sqrt(d);
            row_j[j] = d;
            let row_j = &row_j[..j];
            for row_i in lower.chunks_exact_mut(n) {
                let dot: f64 = row_i[..j].iter().zip(row_j).map(|(a, b)| a * b).sum();
                row_i[j] = (row_i[j] - dot) / d;
            }
        }
        Some(Self { n, l: matrix })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.l;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }
}
