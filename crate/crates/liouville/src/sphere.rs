//! The Riemann sphere in stereographic coordinates: round metric, Green
//! function, Möbius maps, an equal-area grid and the vanishing-mean GFF.

use crate::error::{Error, Result};
use crate::field::{factorize, FieldSample, Layout, SeedRecord};
use crate::rng::{fill_normal, stream, Rng};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, TAU};

pub type C = Complex64;

/// E[−ln|U − V|] for U, V uniform on a unit square.
pub const SQUARE_LOG_MEAN: f64 = 0.805_086_721_950_087_2;

/// Round metric density g(z) = 4/(1+|z|²)².
pub fn round_density(z: C) -> f64 {
    4.0 / (1.0 + z.norm_sqr()).powi(2)
}

/// Point of the unit sphere for z (z = 0 is the south pole, ∞ the north pole).
pub fn to_unit(z: C) -> [f64; 3] {
    homogeneous_unit(z, C::new(1.0, 0.0))
}

fn homogeneous_unit(p: C, q: C) -> [f64; 3] {
    let s = p.norm_sqr() + q.norm_sqr();
    let pq = p * q.conj();
    [2.0 * pq.re / s, 2.0 * pq.im / s, (p.norm_sqr() - q.norm_sqr()) / s]
}

pub fn from_unit(u: [f64; 3]) -> Option<C> {
    if u[2] >= 1.0 {
        return None;
    }
    Some(C::new(u[0], u[1]) / (1.0 - u[2]))
}

pub fn chord(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt()
}

/// G_g(z, z′) = ln[(1+|z|²)^{1/2}(1+|z′|²)^{1/2}/|z − z′|].
pub fn green_sphere(z: C, w: C) -> Result<f64> {
    if !(z.re.is_finite() && z.im.is_finite() && w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::Domain("Green function needs finite points".into()));
    }
    let d = (z - w).norm();
    if d == 0.0 {
        return Err(Error::Domain("Green function is singular at coincident points".into()));
    }
    Ok(0.5 * z.norm_sqr().ln_1p() + 0.5 * w.norm_sqr().ln_1p() - d.ln())
}

/// The same kernel on unit vectors: ln 2 − ln|u − v|.
pub fn green_unit(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    LN_2 - chord(u, v).ln()
}

/// Mean over the sphere of G_g(z, ·) against g(z′)dz′/4π. The displayed closed
/// form integrates to 2π, not 0; the vanishing-mean Green function is G_g − ½.
pub const GREEN_MEAN: f64 = 0.5;

pub fn green_sphere_mean_zero(z: C, w: C) -> Result<f64> {
    Ok(green_sphere(z, w)? - GREEN_MEAN)
}

/// z ↦ (az + b)/(cz + d), stored with ad − bc = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl Mobius {
    pub fn new(a: C, b: C, c: C, d: C) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(Error::Domain("degenerate Möbius map".into()));
        }
        let s = det.sqrt();
        Ok(Mobius { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn identity() -> Self {
        let (o, z) = (C::new(1.0, 0.0), C::new(0.0, 0.0));
        Mobius { a: o, b: z, c: z, d: o }
    }

    /// z ↦ e^{iθ} z.
    pub fn rotation(theta: f64) -> Self {
        let h = C::from_polar(1.0, theta / 2.0);
        Mobius { a: h, b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: h.conj() }
    }

    /// z ↦ z/λ.
    pub fn scaling(lambda: f64) -> Self {
        let s = lambda.sqrt();
        Mobius { a: C::new(1.0 / s, 0.0), b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: C::new(s, 0.0) }
    }

    pub fn apply(&self, z: C) -> Option<C> {
        let q = self.c * z + self.d;
        if q.norm() == 0.0 {
            None
        } else {
            Some((self.a * z + self.b) / q)
        }
    }

    pub fn deriv(&self, z: C) -> C {
        let q = self.c * z + self.d;
        C::new(1.0, 0.0) / (q * q)
    }

    /// Image of z as a unit vector; well defined when ψ(z) = ∞.
    pub fn apply_unit(&self, z: C) -> [f64; 3] {
        homogeneous_unit(self.a * z + self.b, self.c * z + self.d)
    }

    /// Image of a unit vector.
    pub fn apply_on_unit(&self, u: &[f64; 3]) -> [f64; 3] {
        match from_unit(*u) {
            Some(z) => self.apply_unit(z),
            None => homogeneous_unit(self.a, self.c),
        }
    }

    /// Chordal stretch |ψ′(z)| (1+|z|²)/(1+|ψ(z)|²); its square is e^φ with
    /// e^φ = |ψ′|² g∘ψ / g.
    pub fn stretch(&self, z: C) -> f64 {
        (1.0 + z.norm_sqr()) / ((self.a * z + self.b).norm_sqr() + (self.c * z + self.d).norm_sqr())
    }

    pub fn stretch_unit(&self, u: &[f64; 3]) -> f64 {
        match from_unit(*u) {
            Some(z) => self.stretch(z),
            None => 1.0 / (self.a.norm_sqr() + self.c.norm_sqr()),
        }
    }

    /// self ∘ other.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }
}

/// Reference-frame cell: a box in (cos t, φ), where t is the angle from z = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub c_lo: f64,
    pub c_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl Cell {
    fn unit(&self, fc: f64, fp: f64) -> [f64; 3] {
        let c = self.c_lo + fc * (self.c_hi - self.c_lo);
        let p = self.phi_lo + fp * (self.phi_hi - self.phi_lo);
        let s = (1.0 - c * c).max(0.0).sqrt();
        [s * p.cos(), s * p.sin(), -c]
    }
}

/// Equal-area ring grid on the sphere. Points are stored as unit vectors and
/// as stereographic coordinates; `weights` are round-metric cell areas (the
/// quadrature weight for g(z)dz). A grid may be carried to another frame by a
/// Möbius map, which moves the points and rescales each weight by e^φ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub unit: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub cells: Vec<Cell>,
    pub frame: Mobius,
}

pub const DEFAULT_CELLS: usize = 2048;

impl SphereGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::Precondition("sphere grid needs at least 8 cells".into()));
        }
        let area = 4.0 * PI / n as f64;
        let rings = ((PI / area.sqrt()).round() as usize).max(2);
        let bounds: Vec<f64> = (0..=rings).map(|j| (j as f64 * PI / rings as f64).cos()).collect();
        let ideal: Vec<f64> = (0..rings).map(|j| (bounds[j] - bounds[j + 1]) * TAU / area).collect();
        let mut m: Vec<usize> = ideal.iter().map(|v| (v.round() as usize).max(1)).collect();
        loop {
            let s: usize = m.iter().sum();
            if s == n {
                break;
            }
            // adjust the ring whose rounding is furthest off in the needed direction
            let idx = if s > n {
                (0..rings).filter(|&j| m[j] > 1).max_by(|&a, &b| (m[a] as f64 - ideal[a]).partial_cmp(&(m[b] as f64 - ideal[b])).unwrap())
            } else {
                (0..rings).min_by(|&a, &b| (m[a] as f64 - ideal[a]).partial_cmp(&(m[b] as f64 - ideal[b])).unwrap())
            }
            .unwrap();
            if s > n { m[idx] -= 1 } else { m[idx] += 1 }
        }
        let mut cells = Vec::with_capacity(n);
        let mut c_hi = 1.0;
        for (j, &mj) in m.iter().enumerate() {
            let c_lo = if j + 1 == rings { -1.0 } else { c_hi - mj as f64 * area / TAU };
            let width = TAU / mj as f64;
            let offset = if j % 2 == 1 { 0.5 * width } else { 0.0 };
            for k in 0..mj {
                let phi_lo = offset + k as f64 * width;
                cells.push(Cell { c_lo, c_hi, phi_lo, phi_hi: phi_lo + width });
            }
            c_hi = c_lo;
        }
        let unit = cells.iter().map(|c| c.unit(0.5, 0.5)).collect();
        let weights = cells.iter().map(|c| (c.c_hi - c.c_lo) * (c.phi_hi - c.phi_lo)).collect();
        Ok(SphereGrid { unit, weights, cells, frame: Mobius::identity() })
    }

    pub fn len(&self) -> usize {
        self.unit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Stereographic coordinates (infinite components for a point at ∞).
    pub fn points(&self) -> Vec<C> {
        self.unit.iter().map(|u| from_unit(*u).unwrap_or(C::new(f64::INFINITY, f64::INFINITY))).collect()
    }

    /// Typical spacing in the round metric.
    pub fn spacing(&self) -> f64 {
        (4.0 * PI / self.len() as f64).sqrt()
    }

    /// The same grid carried by ψ: points ψ(p), weights A·e^{φ(p)}.
    pub fn transport(&self, psi: &Mobius) -> SphereGrid {
        let unit = self.unit.iter().map(|u| psi.apply_on_unit(u)).collect();
        let weights = self.unit.iter().zip(&self.weights).map(|(u, w)| w * psi.stretch_unit(u).powi(2)).collect();
        SphereGrid { unit, weights, cells: self.cells.clone(), frame: psi.compose(&self.frame) }
    }

    /// Discrete variance of a cell value: the cell self-average of G_g − ½,
    /// with the cell treated as a square of its own round area.
    pub fn self_variance(&self, i: usize) -> f64 {
        LN_2 - 0.5 * self.weights[i].ln() + SQUARE_LOG_MEAN - GREEN_MEAN
    }

    /// Discrete G_g before centering. Centering by ½ only moves the field by a
    /// constant, which the mean projection removes, while the uncentered matrix
    /// stays safely positive definite.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.self_variance(i) + GREEN_MEAN;
            for j in 0..i {
                let v = green_unit(&self.unit[i], &self.unit[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Σ w_c f(u_c) with cells near `near` subdivided `sub`×`sub` times
    /// (reference frame only), for integrands singular at `near`.
    pub fn integrate_refined<F: Fn(&[f64; 3]) -> f64>(&self, f: F, near: &[f64; 3], sub: usize) -> f64 {
        let r = 3.0 * self.spacing();
        let mut s = 0.0;
        for (i, c) in self.cells.iter().enumerate() {
            if self.frame != Mobius::identity() {
                s += self.weights[i] * f(&self.unit[i]);
                continue;
            }
            let sub = if chord(&self.unit[i], near) > r { 4 } else { sub };
            let w = self.weights[i] / (sub * sub) as f64;
            for a in 0..sub {
                for b in 0..sub {
                    s += w * f(&c.unit((a as f64 + 0.5) / sub as f64, (b as f64 + 0.5) / sub as f64));
                }
            }
        }
        s
    }
}

/// Exact sampler for the vanishing-mean GFF on a sphere grid.
#[derive(Clone, Debug)]
pub struct SphereSampler {
    pub grid: SphereGrid,
    chol: DMatrix<f64>,
    /// Per-cell Wick variance (the deterministic discrete Green diagonal).
    pub variance: Vec<f64>,
    pi: Vec<f64>,
}

pub const SPHERE_MAX_POINTS: usize = 4096;

impl SphereSampler {
    pub fn new(grid: SphereGrid, jitter_max: f64) -> Result<Self> {
        if grid.len() > SPHERE_MAX_POINTS {
            return Err(Error::Precondition(format!("sphere factorization limited to {SPHERE_MAX_POINTS} points")));
        }
        let cov = grid.covariance();
        let chol = factorize(&cov, jitter_max)?;
        let variance = (0..grid.len()).map(|i| grid.self_variance(i)).collect();
        let tot = grid.total_weight();
        let pi = grid.weights.iter().map(|w| w / tot).collect();
        Ok(SphereSampler { grid, chol, variance, pi })
    }

    /// `k` projected realizations as matrix columns; each has Σ π_c X_c = 0.
    pub fn draw_batch(&self, rng: &mut Rng, k: usize) -> DMatrix<f64> {
        let n = self.chol.nrows();
        let mut z = DMatrix::<f64>::zeros(n, k);
        fill_normal(rng, z.as_mut_slice());
        let mut x = &self.chol * z;
        for mut col in x.column_iter_mut() {
            let m: f64 = col.iter().zip(&self.pi).map(|(a, b)| a * b).sum();
            col.iter_mut().for_each(|v| *v -= m);
        }
        x
    }

    pub fn to_sample(&self, values: Vec<f64>, seed: SeedRecord) -> FieldSample {
        FieldSample {
            layout: Layout::Sphere,
            points: self.grid.points().iter().map(|z| [z.re, z.im]).collect(),
            cell: self.grid.weights.clone(),
            values,
            variance: self.variance.clone(),
            eps: self.grid.spacing(),
            seed,
        }
    }
}

/// One realization of the vanishing-mean sphere GFF.
pub fn sample_sphere_gff(cells: usize, seed: u64) -> Result<FieldSample> {
    let s = SphereSampler::new(SphereGrid::new(cells)?, 1e-8)?;
    let mut rng = stream(seed, 0);
    let x = s.draw_batch(&mut rng, 1);
    Ok(s.to_sample(x.as_slice().to_vec(), SeedRecord { seed, task: 0 }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallMetric {
    /// Euclidean distance in the plane (or chart) coordinates.
    Euclidean,
    /// Geodesic distance of the round metric.
    Round,
}

/// Mean of field values at points within distance r of x.
pub fn ball_average(field: &FieldSample, x: [f64; 2], r: f64, metric: BallMetric) -> Result<f64> {
    let h = match (&field.layout, metric) {
        (Layout::Grid { spec, .. }, _) => spec.h(),
        (Layout::Sphere, BallMetric::Round) => (field.cell.iter().sum::<f64>() / field.len() as f64).sqrt(),
        (Layout::Sphere, BallMetric::Euclidean) => {
            (field.cell.iter().sum::<f64>() / field.len() as f64).sqrt() / round_density(C::new(x[0], x[1])).sqrt()
        }
    };
    if r < 2.0 * h * (1.0 - 1e-9) {
        return Err(Error::Resolution(format!("radius {r} below twice the local spacing {h}")));
    }
    let ux = to_unit(C::new(x[0], x[1]));
    let (mut s, mut n) = (0.0, 0usize);
    for (p, v) in field.points.iter().zip(&field.values) {
        let d = match metric {
            BallMetric::Euclidean => ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt(),
            BallMetric::Round => {
                let c = chord(&ux, &to_unit(C::new(p[0], p[1])));
                2.0 * (0.5 * c).min(1.0).asin()
            }
        };
        if d <= r {
            s += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Resolution("ball contains no grid point".into()));
    }
    Ok(s / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_values() {
        let g = green_sphere(C::new(0.0, 0.0), C::new(1.0, 0.0)).unwrap();
        assert!((g - 0.5 * LN_2).abs() < 1e-15);
        let (a, b) = (C::new(0.3, -1.2), C::new(2.0, 0.7));
        assert_eq!(green_sphere(a, b).unwrap(), green_sphere(b, a).unwrap());
        assert!(green_sphere(a, a).is_err());
        assert!((green_unit(&to_unit(a), &to_unit(b)) - green_sphere(a, b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn grid_volume_and_green_mean() {
        let g = SphereGrid::new(DEFAULT_CELLS).unwrap();
        assert_eq!(g.len(), DEFAULT_CELLS);
        assert!((g.total_weight() / (4.0 * PI) - 1.0).abs() < 1e-12);
        let o = to_unit(C::new(0.0, 0.0));
        let raw = g.integrate_refined(|u| green_unit(&o, u), &o, 16);
        assert!((raw - TAU).abs() < 1e-3, "{raw}");
    }

    #[test]
    fn mobius_transformation_rule() {
        // G(ψa, ψb) = G(a, b) − ½ln s(a) − ½ln s(b), s the chordal stretch
        let psi = Mobius::new(C::new(1.0, 2.0), C::new(-0.5, 0.1), C::new(0.3, -0.7), C::new(2.0, 0.5)).unwrap();
        let (a, b) = (C::new(0.2, 0.9), C::new(-1.5, 0.4));
        let lhs = green_sphere(psi.apply(a).unwrap(), psi.apply(b).unwrap()).unwrap();
        let rhs = green_sphere(a, b).unwrap() - 0.5 * psi.stretch(a).ln() - 0.5 * psi.stretch(b).ln();
        assert!((lhs - rhs).abs() < 1e-12);
        let z = C::new(0.4, -0.3);
        let e_phi = psi.deriv(z).norm_sqr() * round_density(psi.apply(z).unwrap()) / round_density(z);
        assert!((e_phi - psi.stretch(z).powi(2)).abs() < 1e-12);
        let id = psi.compose(&psi.inverse());
        assert!((id.apply(z).unwrap() - z).norm() < 1e-13);
    }

    #[test]
    fn projected_draws_have_zero_mean() {
        let s = SphereSampler::new(SphereGrid::new(256).unwrap(), 1e-8).unwrap();
        let mut rng = stream(1, 0);
        let x = s.draw_batch(&mut rng, 20);
        for col in x.column_iter() {
            let m: f64 = col.iter().zip(&s.grid.weights).map(|(a, b)| a * b).sum();
            assert!(m.abs() < 1e-10);
        }
    }
}
