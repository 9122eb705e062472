//! Gauss rules.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed Gauss–Legendre rule mapped to an interval.
#[derive(Clone, Debug)]
pub struct Legendre {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Legendre {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Legendre { x, w }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (xi, wi) in self.x.iter().zip(&self.w) {
            s += wi * f(c + h * xi);
        }
        s * h
    }

    pub fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.x.iter().zip(&self.w).map(move |(x, w)| (c + h * x, w * h))
    }
}

/// Gauss–Hermite rule for the standard normal weight (probabilists'),
/// via Golub–Welsch. Weights sum to one.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1 / total).collect())
}

/// Trapezoid rule on a full period; spectrally accurate for smooth periodic integrands.
pub fn periodic_mean<F: FnMut(f64) -> f64>(m: usize, mut f: F) -> f64 {
    let step = std::f64::consts::TAU / m as f64;
    (0..m).map(|k| f((k as f64 + 0.5) * step)).sum::<f64>() / m as f64
}

/// Bessel J0 from its integral representation (1/π)∫₀^π cos(x sin t) dt.
pub fn bessel_j0(x: f64) -> f64 {
    let m = 24 + (x.abs() * 0.75) as usize;
    periodic_mean(2 * m, |t| (x * t.sin()).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let q = Legendre::new(8);
        let v = q.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite_normal(12);
        let m = |p: i32| x.iter().zip(&w).map(|(a, b)| a.powi(p) * b).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn j0_reference_values() {
        // tabulated values
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(2.404_825_557_695_773).abs()) < 1e-13);
        assert!((bessel_j0(30.0) - (-0.086_367_983_581_040_2)).abs() < 1e-13);
    }
}
