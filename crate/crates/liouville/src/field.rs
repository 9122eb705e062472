//! Realizations of mollified log-correlated fields on planar grids.

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::kernel::{log_plus_fourier, Domain, LogKernelSpec, MollifierSpec, Point};
use crate::rng::{fill_normal, stream, Rng};
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Largest exact-mode grid side (64² points).
pub const EXACT_MAX_SIDE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per side.
    pub n: usize,
    /// Side length of the square [0, side]².
    pub side: f64,
}

impl GridSpec {
    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        let h = self.h();
        [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]
    }

    pub fn points(&self) -> Vec<Point> {
        let mut v = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                v.push(self.point(i, j));
            }
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Row-major n×n grid of cell centers; `periodic` for torus synthesis.
    Grid { spec: GridSpec, periodic: bool },
    /// Irregular points on the sphere (stereographic coordinates).
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub task: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub layout: Layout,
    pub points: Vec<Point>,
    /// Base quadrature weight per point (h² on planar grids).
    pub cell: Vec<f64>,
    pub values: Vec<f64>,
    /// Exact E[X_ε(x)²] at each point.
    pub variance: Vec<f64>,
    pub eps: f64,
    pub seed: SeedRecord,
}

impl FieldSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> Option<GridSpec> {
        match &self.layout {
            Layout::Grid { spec, .. } => Some(*spec),
            Layout::Sphere => None,
        }
    }

    /// Little-endian bytes of values and variances, for reproducibility checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(16 * self.len());
        for v in self.values.iter().chain(&self.variance) {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }
}

fn check_resolution(grid: &GridSpec, eps: f64) -> Result<()> {
    if eps < 2.0 * grid.h() * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("eps = {eps} below twice the grid spacing {}", grid.h())));
    }
    Ok(())
}

/// Cholesky with diagonal jitter escalating 1e−12 → `jitter_max`.
pub fn factorize(cov: &DMatrix<f64>, jitter_max: f64) -> Result<DMatrix<f64>> {
    if let Some(c) = Cholesky::new(cov.clone()) {
        return Ok(c.l());
    }
    let n = cov.nrows();
    let mut d = 1e-12;
    while d <= jitter_max * (1.0 + 1e-9) {
        let m = cov + DMatrix::<f64>::identity(n, n) * d;
        if let Some(c) = Cholesky::new(m) {
            return Ok(c.l());
        }
        d *= 10.0;
    }
    let ev = SymmetricEigen::new(cov.clone()).eigenvalues;
    Err(Error::NotPsd { jitter: jitter_max, min_eigenvalue: ev.min() })
}

/// Exact-mode sampler: Cholesky factor of the grid covariance, reused across draws.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    pub grid: GridSpec,
    pub eps: f64,
    pub chol: DMatrix<f64>,
    pub variance: Vec<f64>,
    pub cov: DMatrix<f64>,
}

/// Covariance matrix of X_a at `xs` against X_b at `ys`.
pub fn covariance_matrix(model: &CovarianceModel, xs: &[Point], ys: &[Point], h: f64) -> DMatrix<f64> {
    let sa: Vec<f64> = xs.iter().map(|x| model.site(&model.a, *x)).collect();
    let sb: Vec<f64> = ys.iter().map(|y| model.site(&model.b, *y)).collect();
    // grid distances repeat; key on the integer offset when points sit on a lattice
    let mut cache: HashMap<(i64, i64), f64> = HashMap::new();
    DMatrix::from_fn(xs.len(), ys.len(), |i, j| {
        let dx = xs[i][0] - ys[j][0];
        let dy = xs[i][1] - ys[j][1];
        let (kx, ky) = ((dx / h).round(), (dy / h).round());
        let radial = if (dx - kx * h).abs() < 1e-9 * h && (dy - ky * h).abs() < 1e-9 * h {
            let key = ((kx as i64).abs().min((ky as i64).abs()), (kx as i64).abs().max((ky as i64).abs()));
            *cache.entry(key).or_insert_with(|| model.radial((dx * dx + dy * dy).sqrt()))
        } else {
            model.radial((dx * dx + dy * dy).sqrt())
        };
        radial + sa[i] + sb[j]
    })
}

impl ExactSampler {
    pub fn new(kernel: &LogKernelSpec, moll: &MollifierSpec, grid: GridSpec, eps: f64, quad_tol: f64, jitter_max: f64) -> Result<Self> {
        kernel.validate()?;
        check_resolution(&grid, eps)?;
        if grid.n > EXACT_MAX_SIDE {
            return Err(Error::Precondition(format!("exact mode needs at most {EXACT_MAX_SIDE}² points")));
        }
        if let Domain::Box { side } = kernel.domain {
            if grid.side > side[0].min(side[1]) * (1.0 + 1e-12) {
                return Err(Error::Domain("grid extends past the kernel domain".into()));
            }
        }
        let m = moll.with_eps(eps);
        let model = CovarianceModel::new(kernel, m, m, quad_tol)?;
        let pts = grid.points();
        let cov = covariance_matrix(&model, &pts, &pts, grid.h());
        let chol = factorize(&cov, jitter_max)?;
        let variance = (0..pts.len()).map(|i| cov[(i, i)]).collect();
        Ok(ExactSampler { grid, eps, chol, variance, cov })
    }

    /// `k` independent realizations as the columns of a matrix.
    pub fn draw_batch(&self, rng: &mut Rng, k: usize) -> DMatrix<f64> {
        let n = self.chol.nrows();
        let mut z = DMatrix::<f64>::zeros(n, k);
        fill_normal(rng, z.as_mut_slice());
        &self.chol * z
    }

    pub fn sample(&self, seed: u64, task: u64) -> FieldSample {
        let mut rng = stream(seed, task);
        let v = self.draw_batch(&mut rng, 1);
        FieldSample {
            layout: Layout::Grid { spec: self.grid, periodic: false },
            points: self.grid.points(),
            cell: vec![self.grid.h().powi(2); self.variance.len()],
            values: v.as_slice().to_vec(),
            variance: self.variance.clone(),
            eps: self.eps,
            seed: SeedRecord { seed, task },
        }
    }
}

/// Stationary periodic synthesis on the torus [0, side)² with n² points.
///
/// The covariance is Σ_k K̂(k) θ̂_a(k) θ̂_b(k) e^{ik·(x−y)} / side² over the
/// grid's Fourier modes: the periodized kernel truncated at the Nyquist
/// frequency. Aliasing is the only departure from the continuum kernel and is
/// small once ε spans several cells.
pub struct SpectralSampler {
    pub grid: GridSpec,
    pub mollifiers: Vec<MollifierSpec>,
    amp: Vec<Vec<f64>>,
    kernel_hat: Vec<f64>,
    pub variance: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

fn freq(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) { m as i64 } else { m as i64 - n as i64 }
}

impl SpectralSampler {
    /// One amplitude filter per mollifier; draws are coupled through shared noise.
    pub fn new(kernel: &LogKernelSpec, grid: GridSpec, mollifiers: &[MollifierSpec]) -> Result<Self> {
        kernel.validate()?;
        for m in mollifiers {
            check_resolution(&grid, m.eps)?;
        }
        if kernel.correction != crate::kernel::Correction::Zero {
            return Err(Error::Precondition("spectral mode is stationary; use the zero correction".into()));
        }
        let n = grid.n;
        let l = grid.side;
        let maxq = 2 * (n / 2 + 1) * (n / 2 + 1);
        let mut khat = vec![f64::NAN; maxq];
        let mut that: Vec<Vec<f64>> = vec![vec![f64::NAN; maxq]; mollifiers.len()];
        let mut amp = vec![vec![0.0; n * n]; mollifiers.len()];
        let mut kernel_hat = vec![0.0; n * n];
        for i in 0..n {
            let fi = freq(i, n);
            for j in 0..n {
                let fj = freq(j, n);
                let q = (fi * fi + fj * fj) as usize;
                let kappa = TAU * (q as f64).sqrt() / l;
                if khat[q].is_nan() {
                    khat[q] = kernel.scale * log_plus_fourier(kappa) / (l * l);
                    for (t, m) in that.iter_mut().zip(mollifiers) {
                        t[q] = m.fourier(kappa);
                    }
                }
                kernel_hat[i * n + j] = khat[q];
                for (a, t) in amp.iter_mut().zip(&that) {
                    a[i * n + j] = khat[q].sqrt() * t[q];
                }
            }
        }
        let variance = amp.iter().map(|a| a.iter().map(|v| v * v).sum()).collect();
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(SpectralSampler { grid, mollifiers: mollifiers.to_vec(), amp, kernel_hat, variance, fft })
    }

    /// Exact covariance of fields `a` and `b` of this sampler at offset `d`.
    pub fn covariance(&self, a: usize, b: usize, d: Point) -> f64 {
        let n = self.grid.n;
        let l = self.grid.side;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = [TAU * freq(i, n) as f64 / l, TAU * freq(j, n) as f64 / l];
                s += self.amp[a][i * n + j] * self.amp[b][i * n + j] * (k[0] * d[0] + k[1] * d[1]).cos();
            }
        }
        s
    }

    /// Covariance of fields `a` and `b` at every lattice offset (i·h, j·h),
    /// row-major, by one inverse FFT of the cross spectrum.
    pub fn lattice_covariance(&self, a: usize, b: usize) -> Vec<f64> {
        let nn = self.grid.n * self.grid.n;
        let mut buf: Vec<Complex64> = (0..nn).map(|k| Complex64::new(self.amp[a][k] * self.amp[b][k], 0.0)).collect();
        self.ifft2(&mut buf, &mut Vec::new(), &mut Vec::new());
        buf.iter().map(|c| c.re).collect()
    }

    /// Calls `f` once per realization with the coupled values of every filter.
    /// Realizations 2k and 2k+1 come from stream (seed, k).
    pub fn realizations<F: FnMut(usize, &[&[f64]])>(&self, n: usize, seed: u64, mut f: F) {
        for k in 0..n.div_ceil(2) {
            let mut rng = stream(seed, k as u64);
            let d = self.draw_pair(&mut rng);
            for part in 0..2 {
                let idx = 2 * k + part;
                if idx >= n {
                    break;
                }
                let views: Vec<&[f64]> = d.iter().map(|p| p[part].as_slice()).collect();
                f(idx, &views);
            }
        }
    }

    pub fn kernel_spectrum(&self) -> &[f64] {
        &self.kernel_hat
    }

    fn ifft2(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>, tmp: &mut Vec<Complex64>) {
        let n = self.grid.n;
        scratch.resize(self.fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        self.fft.process_with_scratch(buf, scratch);
        tmp.resize(n * n, Complex64::new(0.0, 0.0));
        transpose(buf, tmp, n);
        self.fft.process_with_scratch(tmp, scratch);
        transpose(tmp, buf, n);
    }

    /// Two independent coupled draws (real and imaginary parts of one complex
    /// synthesis). `out[f]` holds the pair for mollifier `f`.
    pub fn draw_pair(&self, rng: &mut Rng) -> Vec<[Vec<f64>; 2]> {
        let n = self.grid.n;
        let mut noise = vec![0.0; 2 * n * n];
        fill_normal(rng, &mut noise);
        let mut scratch = Vec::new();
        let mut tmp = Vec::new();
        self.amp
            .iter()
            .map(|a| {
                let mut buf: Vec<Complex64> = (0..n * n).map(|k| Complex64::new(a[k] * noise[2 * k], a[k] * noise[2 * k + 1])).collect();
                self.ifft2(&mut buf, &mut scratch, &mut tmp);
                [buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect()]
            })
            .collect()
    }

    pub fn to_sample(&self, f: usize, values: Vec<f64>, seed: SeedRecord) -> FieldSample {
        let nn = self.grid.n * self.grid.n;
        FieldSample {
            layout: Layout::Grid { spec: self.grid, periodic: true },
            points: self.grid.points(),
            cell: vec![self.grid.h().powi(2); nn],
            values,
            variance: vec![self.variance[f]; nn],
            eps: self.mollifiers[f].eps,
            seed,
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FieldOptions {
    pub mode: Option<Mode>,
    pub quad_tol: f64,
    pub jitter_max: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions { mode: None, quad_tol: 1e-10, jitter_max: 1e-8 }
    }
}

/// One realization of X_ε on `grid`. Exact mode at or below 64², spectral above.
pub fn sample_log_field(kernel: &LogKernelSpec, moll: &MollifierSpec, grid: GridSpec, eps: f64, seed: u64, opts: FieldOptions) -> Result<FieldSample> {
    let mode = opts.mode.unwrap_or(if grid.n <= EXACT_MAX_SIDE { Mode::Exact } else { Mode::Spectral });
    match mode {
        Mode::Exact => Ok(ExactSampler::new(kernel, moll, grid, eps, opts.quad_tol, opts.jitter_max)?.sample(seed, 0)),
        Mode::Spectral => {
            let s = SpectralSampler::new(kernel, grid, &[moll.with_eps(eps)])?;
            let mut rng = stream(seed, 0);
            let mut d = s.draw_pair(&mut rng);
            let [re, _] = std::mem::take(&mut d[0]);
            Ok(s.to_sample(0, re, SeedRecord { seed, task: 0 }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_error() {
        let k = LogKernelSpec::planar(1.0);
        let g = GridSpec { n: 16, side: 1.0 };
        let e = sample_log_field(&k, &MollifierSpec::bump(1.0), g, 0.1, 1, FieldOptions::default());
        assert!(matches!(e, Err(Error::Resolution(_))));
    }

    #[test]
    fn single_point_has_prescribed_variance() {
        let k = LogKernelSpec::planar(0.25);
        let g = GridSpec { n: 1, side: 0.25 };
        let s = ExactSampler::new(&k, &MollifierSpec::bump(1.0), g, 0.5, 1e-10, 1e-8).unwrap();
        let v = s.variance[0];
        assert!(v > 0.0);
        let mut rng = stream(3, 0);
        let x = s.draw_batch(&mut rng, 20000);
        let e = crate::stats::variance_stderr(x.as_slice());
        assert!((e.value - v).abs() < 4.0 * e.stderr);
        assert!(x.as_slice().iter().sum::<f64>().abs() / 20000.0 < 4.0 * (v / 20000.0).sqrt());
    }

    #[test]
    fn spectral_variance_is_sum_of_spectrum() {
        let k = LogKernelSpec::planar(1.0);
        let g = GridSpec { n: 32, side: 1.0 };
        let s = SpectralSampler::new(&k, g, &[MollifierSpec::bump(1.0 / 16.0)]).unwrap();
        assert!((s.covariance(0, 0, [0.0, 0.0]) - s.variance[0]).abs() < 1e-12);
    }

    #[test]
    fn lattice_covariance_matches_direct_sum() {
        let k = LogKernelSpec::planar(1.0);
        let g = GridSpec { n: 32, side: 1.0 };
        let m = [MollifierSpec::bump(1.0 / 8.0), MollifierSpec::bump(1.0 / 16.0)];
        let s = SpectralSampler::new(&k, g, &m).unwrap();
        let c = s.lattice_covariance(0, 1);
        for (i, j) in [(0, 0), (3, 1), (31, 5), (16, 16)] {
            let d = [i as f64 * g.h(), j as f64 * g.h()];
            assert!((c[i * 32 + j] - s.covariance(0, 1, d)).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_matches_quadrature_at_short_range() {
        let k = LogKernelSpec::planar(2.0);
        let g = GridSpec { n: 256, side: 2.0 };
        let m = MollifierSpec::bump(1.0 / 16.0);
        let s = SpectralSampler::new(&k, g, &[m]).unwrap();
        let c = s.lattice_covariance(0, 0);
        let model = CovarianceModel::new(&k, m, m, 1e-10).unwrap();
        for i in [0usize, 4, 16, 64] {
            let d = i as f64 * g.h();
            assert!((c[i * 256] - model.radial(d)).abs() < 1e-3, "{i} {} {}", c[i * 256], model.radial(d));
        }
    }

    #[test]
    fn identical_seed_identical_bytes() {
        let k = LogKernelSpec::planar(1.0);
        let g = GridSpec { n: 128, side: 1.0 };
        let o = FieldOptions::default();
        let a = sample_log_field(&k, &MollifierSpec::bump(1.0), g, 1.0 / 64.0, 9, o).unwrap();
        let b = sample_log_field(&k, &MollifierSpec::bump(1.0), g, 1.0 / 64.0, 9, o).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }
}
