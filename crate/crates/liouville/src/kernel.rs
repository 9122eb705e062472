//! Log-type covariance kernels and mollifiers.

use crate::error::{Error, Result};
use crate::quad::{bessel_j0, Legendre};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::OnceLock;

pub type Point = [f64; 2];

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Bounded part added to ln₊(1/|x−y|).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    Zero,
    /// Makes the kernel the sphere Green function in stereographic coordinates:
    /// −ln|x−y| + ½ln(1+|x|²) + ½ln(1+|y|²).
    SphereGreen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// Axis-aligned box [0, side₀] × [0, side₁].
    Box { side: [f64; 2] },
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogKernelSpec {
    pub dim: usize,
    pub correction: Correction,
    pub domain: Domain,
    /// Overall multiplier on the covariance (1 for the plain kernel).
    pub scale: f64,
}

impl LogKernelSpec {
    pub fn planar(side: f64) -> Self {
        LogKernelSpec { dim: 2, correction: Correction::Zero, domain: Domain::Box { side: [side, side] }, scale: 1.0 }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn correction_at(&self, x: Point, y: Point) -> f64 {
        match self.correction {
            Correction::Zero => 0.0,
            Correction::SphereGreen => {
                let r = dist(x, y);
                half_log1p_sq(x) + half_log1p_sq(y) - if r > 1.0 { r.ln() } else { 0.0 }
            }
        }
    }

    /// K(x, y); infinite on the diagonal.
    pub fn value(&self, x: Point, y: Point) -> f64 {
        let r = dist(x, y);
        let lp = if r < 1.0 { -r.ln() } else { 0.0 };
        self.scale * (lp + self.correction_at(x, y))
    }

    pub fn contains(&self, x: Point) -> bool {
        match &self.domain {
            Domain::Box { side } => (0.0..=side[0]).contains(&x[0]) && (0.0..=side[1]).contains(&x[1]),
            Domain::Sphere => x[0].is_finite() && x[1].is_finite(),
        }
    }

    /// Grid scan of sup |g| over domain × domain (sphere mode scans the disk |z| ≤ 4).
    pub fn correction_sup(&self, n: usize) -> f64 {
        let pts: Vec<Point> = match &self.domain {
            Domain::Box { side } => grid_points(n, *side),
            Domain::Sphere => grid_points(n, [8.0, 8.0]).into_iter().map(|p| [p[0] - 4.0, p[1] - 4.0]).collect(),
        };
        let mut m: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                m = m.max(self.correction_at(*a, *b).abs());
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::Precondition(format!("field synthesis supports d = 2 only, got {}", self.dim)));
        }
        if !(self.scale > 0.0) {
            return Err(Error::Precondition("kernel scale must be positive".into()));
        }
        let s = self.correction_sup(12);
        if !s.is_finite() {
            return Err(Error::Precondition("correction is unbounded on the domain".into()));
        }
        Ok(())
    }
}

fn grid_points(n: usize, side: [f64; 2]) -> Vec<Point> {
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push([side[0] * (i as f64 + 0.5) / n as f64, side[1] * (j as f64 + 0.5) / n as f64]);
        }
    }
    v
}

pub fn half_log1p_sq(x: Point) -> f64 {
    0.5 * (x[0] * x[0] + x[1] * x[1]).ln_1p()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// exp(−1/(1−r²)) on the unit disk.
    Bump,
    /// (1−r²)·exp(−1/(4(1−r²))): a broad tent-like profile with a smooth edge.
    TentSmoothed,
}

impl Shape {
    fn raw(self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - r * r;
        match self {
            Shape::Bump => (-1.0 / u).exp(),
            Shape::TentSmoothed => u * (-0.25 / u).exp(),
        }
    }

    fn norm(self) -> f64 {
        static B: OnceLock<f64> = OnceLock::new();
        static T: OnceLock<f64> = OnceLock::new();
        let cell = match self {
            Shape::Bump => &B,
            Shape::TentSmoothed => &T,
        };
        *cell.get_or_init(|| {
            let q = Legendre::new(64);
            let mut s = 0.0;
            for k in 0..8 {
                let (a, b) = (k as f64 / 8.0, (k + 1) as f64 / 8.0);
                s += q.integrate(a, b, |r| TAU * r * self.raw(r));
            }
            1.0 / s
        })
    }

    /// Normalized radial profile on the unit disk (integral over R² is 1).
    pub fn profile(self, r: f64) -> f64 {
        self.norm() * self.raw(r)
    }

    /// Radial Fourier transform 2π∫₀¹ r p(r) J₀(κr) dr.
    pub fn fourier(self, kappa: f64) -> f64 {
        let q = Legendre::new(48);
        let mut s = 0.0;
        for k in 0..4 {
            let (a, b) = (k as f64 / 4.0, (k + 1) as f64 / 4.0);
            s += q.integrate(a, b, |r| TAU * r * self.profile(r) * bessel_j0(kappa * r));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub shape: Shape,
    pub eps: f64,
}

impl MollifierSpec {
    pub fn bump(eps: f64) -> Self {
        MollifierSpec { shape: Shape::Bump, eps }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        MollifierSpec { eps, ..self }
    }

    /// θ_ε at distance r from the center.
    pub fn density(&self, r: f64) -> f64 {
        self.shape.profile(r / self.eps) / (self.eps * self.eps)
    }

    pub fn fourier(&self, kappa: f64) -> f64 {
        self.shape.fourier(kappa * self.eps)
    }
}

/// 2D Fourier transform of ln₊(1/|x|): 2π(1 − J₀(κ))/κ².
pub fn log_plus_fourier(kappa: f64) -> f64 {
    if kappa < 2.0 {
        // series 1 − J₀(κ) = Σ_{m≥1} (−1)^{m+1} (κ²/4)^m / (m!)², divided by κ²
        let u = kappa * kappa / 4.0;
        let (mut term, mut s) = (0.25, 0.25);
        for m in 2..20 {
            term *= -u / (m * m) as f64;
            s += term;
        }
        TAU * s
    } else {
        TAU * (1.0 - bessel_j0(kappa)) / (kappa * kappa)
    }
}
