//! Numerical harnesses for the Gaussian change-of-measure identity and the
//! convex comparison inequality between two Gaussian fields.

use crate::error::{Error, Result};
use crate::field::{ExactSampler, GridSpec};
use crate::gmc::{wick, BaseDensity};
use crate::kernel::{LogKernelSpec, MollifierSpec};
use crate::quad::gauss_hermite_normal;
use crate::rng::{fill_normal, stream};
use crate::stats::{Estimate, Running};
pub use nalgebra::DMatrix;
use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Test functionals of a Gaussian vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorFunctional {
    Coordinate(usize),
    /// exp(a·x)
    ExpLinear(Vec<f64>),
    /// cos(a·x)
    CosLinear(Vec<f64>),
    /// |x|²
    SquaredNorm,
    /// x_i x_j
    Product(usize, usize),
}

impl VectorFunctional {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        match self {
            VectorFunctional::Coordinate(i) => x[*i],
            VectorFunctional::ExpLinear(a) => dot(a).exp(),
            VectorFunctional::CosLinear(a) => dot(a).cos(),
            VectorFunctional::SquaredNorm => x.iter().map(|v| v * v).sum(),
            VectorFunctional::Product(i, j) => x[*i] * x[*j],
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let ok = match self {
            VectorFunctional::Coordinate(i) => *i < dim,
            VectorFunctional::ExpLinear(a) | VectorFunctional::CosLinear(a) => a.len() == dim,
            VectorFunctional::SquaredNorm => true,
            VectorFunctional::Product(i, j) => *i < dim && *j < dim,
        };
        if ok { Ok(()) } else { Err(Error::Precondition("functional does not match the vector dimension".into())) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SidePair {
    pub lhs: Estimate,
    pub rhs: Estimate,
}

/// Square root of a PSD matrix through its eigendecomposition, so rank
/// deficient covariances are handled exactly.
pub fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::Precondition("covariance must be square".into()));
    }
    let asym = (cov - cov.transpose()).abs().max();
    let scale = cov.abs().max().max(1e-300);
    if asym > 1e-12 * scale {
        return Err(Error::Precondition("covariance is not symmetric".into()));
    }
    let e = SymmetricEigen::new(cov.clone());
    let min = e.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { jitter: 0.0, min_eigenvalue: min });
    }
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    Ok(&e.eigenvectors * d)
}

/// Nodes per axis for a tensor rule in `dim` dimensions.
fn nodes_per_axis(dim: usize) -> usize {
    match dim {
        0..=2 => 60,
        3 => 40,
        4 => 24,
        5 => 14,
        6 => 10,
        7 => 8,
        _ => 7,
    }
}

/// lhs = E[e^{Y − E[Y²]/2} F(X)] with Y = λX_j; rhs = E[F(X + λΣe_j)].
pub fn girsanov_check(cov: &DMatrix<f64>, shift: usize, lambda: f64, f: &VectorFunctional, mode: CheckMode, n: usize, seed: u64) -> Result<SidePair> {
    let d = cov.nrows();
    if shift >= d {
        return Err(Error::Precondition("shift index out of range".into()));
    }
    f.check(d)?;
    let l = psd_sqrt(cov)?;
    let col: Vec<f64> = (0..d).map(|i| lambda * cov[(i, shift)]).collect();
    let vy = lambda * lambda * cov[(shift, shift)];
    let eval = |z: &DVector<f64>| -> (f64, f64) {
        let x = &l * z;
        let xs: Vec<f64> = x.iter().copied().collect();
        let shifted: Vec<f64> = xs.iter().zip(&col).map(|(a, b)| a + b).collect();
        ((lambda * xs[shift] - 0.5 * vy).exp() * f.eval(&xs), f.eval(&shifted))
    };
    match mode {
        CheckMode::Quadrature => {
            if d > 8 {
                return Err(Error::Precondition("quadrature mode supports dimension ≤ 8".into()));
            }
            let m = nodes_per_axis(d);
            let (x, w) = gauss_hermite_normal(m);
            let total = m.pow(d as u32);
            let (mut a, mut b) = (0.0, 0.0);
            let mut z = DVector::<f64>::zeros(d);
            for idx in 0..total {
                let mut r = idx;
                let mut wt = 1.0;
                for k in 0..d {
                    z[k] = x[r % m];
                    wt *= w[r % m];
                    r /= m;
                }
                let (p, q) = eval(&z);
                a += wt * p;
                b += wt * q;
            }
            Ok(SidePair { lhs: Estimate::exact(a), rhs: Estimate::exact(b) })
        }
        CheckMode::MonteCarlo => {
            let mut rng = stream(seed, 0);
            let (mut a, mut b) = (Running::default(), Running::default());
            let mut buf = vec![0.0; d];
            for _ in 0..n {
                fill_normal(&mut rng, &mut buf);
                let (p, q) = eval(&DVector::from_column_slice(&buf));
                a.push(p);
                b.push(q);
            }
            Ok(SidePair { lhs: a.estimate(), rhs: b.estimate() })
        }
    }
}

/// Scalar functionals applied to a chaos mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassFunctional {
    Square,
    Sqrt,
    Power(f64),
}

impl MassFunctional {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MassFunctional::Square => x * x,
            MassFunctional::Sqrt => x.sqrt(),
            MassFunctional::Power(p) => x.powf(p),
        }
    }

    /// true for convex, false for concave on (0, ∞).
    pub fn convex(&self) -> bool {
        match *self {
            MassFunctional::Square => true,
            MassFunctional::Sqrt => false,
            MassFunctional::Power(p) => !(0.0..1.0).contains(&p) || p == 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub stderr: f64,
    pub convex: bool,
    /// lhs ≤ rhs + 3·stderr for convex F, lhs ≥ rhs − 3·stderr for concave.
    pub verdict: bool,
}

/// Setting for the comparison inequality: both fields are sampled exactly on
/// a small grid at mollification scale `eps`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonSetup {
    pub grid: GridSpec,
    pub eps: f64,
    pub moll: MollifierSpec,
    pub base: BaseDensity,
}

/// Compares E[F(∫e^{Y−E[Y²]/2}σ)] with E[F(∫e^{Z−E[Z²]/2}σ)] for cov Y ≤ cov Z.
pub fn kahane_compare(ky: &LogKernelSpec, kz: &LogKernelSpec, f: MassFunctional, setup: &ComparisonSetup, n: usize, seed: u64) -> Result<ComparisonReport> {
    let sy = ExactSampler::new(ky, &setup.moll, setup.grid, setup.eps, 1e-10, 1e-8)?;
    let sz = ExactSampler::new(kz, &setup.moll, setup.grid, setup.eps, 1e-10, 1e-8)?;
    let pts = setup.grid.points();
    let np = pts.len();
    for i in 0..np {
        for j in 0..=i {
            if sy.cov[(i, j)] > sz.cov[(i, j)] + 1e-12 {
                return Err(Error::Precondition(format!(
                    "covariance domination fails at points {:?} and {:?}: {} > {}",
                    pts[i], pts[j], sy.cov[(i, j)], sz.cov[(i, j)]
                )));
            }
        }
    }
    let sigma: Vec<f64> = pts.iter().map(|p| setup.base.at(*p) * setup.grid.h().powi(2)).collect();
    let side = |s: &ExactSampler, task: u64| -> Estimate {
        let mut rng = stream(seed, task);
        let mut r = Running::default();
        let batch = 256;
        let mut left = n;
        while left > 0 {
            let k = left.min(batch);
            let x = s.draw_batch(&mut rng, k);
            for c in x.column_iter() {
                let m: f64 = (0..np).map(|i| wick(1.0, c[i], s.variance[i]) * sigma[i]).sum();
                r.push(f.eval(m));
            }
            left -= k;
        }
        r.estimate()
    };
    let lhs = side(&sy, 0);
    let rhs = side(&sz, 1);
    let se = (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt();
    let convex = f.convex();
    let verdict = if convex { lhs.value <= rhs.value + 3.0 * se } else { lhs.value >= rhs.value - 3.0 * se };
    Ok(ComparisonReport { lhs, rhs, stderr: se, convex, verdict })
}
