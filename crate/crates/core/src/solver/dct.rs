//! Cosine transforms through a complex FFT of twice the length.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// DCT-II and its inverse for one length, with cached plans.
pub struct Dct {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    twiddle: Vec<Complex64>,
}

impl Dct {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let twiddle = (0..n)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64)))
            .collect();
        Self {
            n,
            forward: planner.plan_fft_forward(2 * n),
            inverse: planner.plan_fft_inverse(2 * n),
            twiddle,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// `X_k = sum_j x_j cos(pi (j + 1/2) k / n)`.
    pub fn forward(&self, x: &[f64], out: &mut [f64], buf: &mut Vec<Complex64>) {
        let n = self.n;
        buf.clear();
        buf.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
        buf.resize(2 * n, Complex64::new(0.0, 0.0));
        self.forward.process(buf);
        for k in 0..n {
            out[k] = (self.twiddle[k] * buf[k]).re;
        }
    }

    /// Inverse of [`Dct::forward`].
    pub fn inverse(&self, xk: &[f64], out: &mut [f64], buf: &mut Vec<Complex64>) {
        let n = self.n;
        buf.clear();
        for k in 0..n {
            let c = if k == 0 { 0.5 } else { 1.0 };
            buf.push(c * xk[k] * self.twiddle[k].conj());
        }
        buf.resize(2 * n, Complex64::new(0.0, 0.0));
        self.inverse.process(buf);
        let s = 2.0 / n as f64;
        for j in 0..n {
            out[j] = s * buf[j].re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_and_inverts() {
        for &n in &[1usize, 2, 7, 16, 33] {
            let x: Vec<f64> = (0..n).map(|j| ((j * 37 % 11) as f64 - 5.0) * 0.3).collect();
            let d = Dct::new(n);
            let mut buf = Vec::new();
            let mut xk = vec![0.0; n];
            d.forward(&x, &mut xk, &mut buf);
            for (a, b) in xk.iter().zip(direct(&x)) {
                assert!((a - b).abs() < 1e-12, "n={n}");
            }
            let mut back = vec![0.0; n];
            d.inverse(&xk, &mut back, &mut buf);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12, "n={n}");
            }
        }
    }
}
