//! Square 2D FFTs and circular convolution on periodic grids.

use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    fn run(&self, f: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.n;
        f.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = buf[i * n + j];
            }
        }
        f.process(&mut t);
        for i in 0..n {
            for j in 0..n {
                buf[j * n + i] = t[i * n + j];
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(&self.fwd, buf);
    }

    /// Unnormalized inverse.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&self.inv, buf);
    }

    pub fn forward_real(&self, a: &[f64]) -> Vec<Complex64> {
        let mut b: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut b);
        b
    }

    /// (a ⊛ k)(x) = Σ_y a(y) k(x − y) on the torus, given the transforms.
    pub fn convolve(&self, a_hat: &[Complex64], k_hat: &[Complex64]) -> Vec<f64> {
        let nn = (self.n * self.n) as f64;
        let mut b: Vec<Complex64> = a_hat.iter().zip(k_hat).map(|(p, q)| p * q).collect();
        self.inverse(&mut b);
        b.iter().map(|c| c.re / nn).collect()
    }
}

/// Offset of lattice index `i` folded into [−n/2, n/2).
pub fn signed_offset(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i < n / 2 { i } else { i - n }
}

/// Kernel array k(d) over lattice offsets d = (i, j)·h, folded onto the torus.
pub fn offset_kernel<F: Fn(f64, f64) -> f64>(n: usize, h: f64, f: F) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        let dx = signed_offset(i, n) as f64 * h;
        for j in 0..n {
            let dy = signed_offset(j, n) as f64 * h;
            k[i * n + j] = f(dx, dy);
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolution_matches_direct_sum() {
        let n = 8;
        let a: Vec<f64> = (0..n * n).map(|i| ((i * 7 + 3) % 11) as f64).collect();
        let k = offset_kernel(n, 1.0, |x, y| if x * x + y * y <= 2.0 { 1.0 } else { 0.0 });
        let f = Fft2::new(n);
        let c = f.convolve(&f.forward_real(&a), &f.forward_real(&k));
        for (x, y) in [(0usize, 0usize), (3, 5), (7, 7)] {
            let mut s = 0.0;
            for u in 0..n {
                for v in 0..n {
                    s += a[u * n + v] * k[((x + n - u) % n) * n + (y + n - v) % n];
                }
            }
            assert!((c[x * n + y] - s).abs() < 1e-9);
        }
    }
}
