//! Type-I discrete sine transform on the rows of a row-major array.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// DST-I of length `n` computed through an FFT of length `2(n + 1)` on the
/// odd extension. Unnormalized: applying it twice scales by `(n + 1) / 2`.
pub struct RowDst {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl RowDst {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        RowDst {
            n,
            fft,
            buffer: Vec::new(),
            scratch,
        }
    }

    /// Transforms each length-`n` row of `data` in place:
    /// `S_k = Σ_m x_m sin(π k m / (n + 1))`, `k, m = 1..n`.
    pub fn forward_rows(&mut self, data: &mut [f64]) {
        let n = self.n;
        let len = 2 * (n + 1);
        let rows = data.len() / n;
        self.buffer.clear();
        self.buffer.resize(rows * len, Complex64::default());
        for (row, chunk) in data.chunks_exact(n).zip(self.buffer.chunks_exact_mut(len)) {
            for (m, &x) in row.iter().enumerate() {
                chunk[m + 1] = Complex64::new(x, 0.0);
                chunk[len - 1 - m] = Complex64::new(-x, 0.0);
            }
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (row, chunk) in data.chunks_exact_mut(n).zip(self.buffer.chunks_exact(len)) {
            for (k, out) in row.iter_mut().enumerate() {
                *out = -0.5 * chunk[k + 1].im;
            }
        }
    }

    /// Inverse of [`forward_rows`](Self::forward_rows).
    pub fn inverse_rows(&mut self, data: &mut [f64]) {
        self.forward_rows(data);
        let scale = 2.0 / (self.n + 1) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_sum() {
        let n = 7;
        let x: Vec<f64> = (0..2 * n).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let mut y = x.clone();
        let mut dst = RowDst::new(n);
        dst.forward_rows(&mut y);
        for r in 0..2 {
            for k in 0..n {
                let direct: f64 = (0..n)
                    .map(|m| x[r * n + m] * (PI * ((k + 1) * (m + 1)) as f64 / (n + 1) as f64).sin())
                    .sum();
                assert!((y[r * n + k] - direct).abs() < 1e-12);
            }
        }
        dst.inverse_rows(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
