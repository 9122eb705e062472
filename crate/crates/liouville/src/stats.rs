//! Small statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// |a - b| in units of the combined standard error.
    pub fn z_vs(&self, other: &Estimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        if s == 0.0 {
            if self.value == other.value { 0.0 } else { f64::INFINITY }
        } else {
            (self.value - other.value).abs() / s
        }
    }
}

/// Running mean and variance (Welford).
#[derive(Clone, Debug, Default)]
pub struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 { 0.0 } else { self.m2 / (self.n - 1) as f64 }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean, stderr: (self.variance() / self.n.max(1) as f64).sqrt() }
    }
}

pub fn mean_stderr(xs: &[f64]) -> Estimate {
    let mut r = Running::default();
    xs.iter().for_each(|&x| r.push(x));
    r.estimate()
}

/// Sample variance with a delta-method standard error.
pub fn variance_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    Estimate { value: var, stderr: ((m4 - m2 * m2) / n).max(0.0).sqrt() }
}

/// Self-normalized importance-weighted mean Σwᵢfᵢ/Σwᵢ with delta-method stderr.
pub fn weighted_mean(w: &[f64], f: &[f64]) -> Estimate {
    let sw: f64 = w.iter().sum();
    let mu = w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / sw;
    let v = w.iter().zip(f).map(|(a, b)| (a * (b - mu)).powi(2)).sum::<f64>() / (sw * sw);
    Estimate { value: mu, stderr: v.sqrt() }
}

/// Kish effective sample size (Σw)²/Σw².
pub fn ess(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    s * s / s2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub ci95: (f64, f64),
}

/// Weighted least squares y = a + b x with weights 1/σ². When `sigma` is `None`
/// the residual variance sets the scale; otherwise the scale is the larger of
/// the two so a poor fit widens the interval.
pub fn fit_line(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> LineFit {
    let n = x.len();
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / (v * v).max(1e-300)).collect(),
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(a, b)| a * (b - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let dof = (n as f64 - 2.0).max(1.0);
    let scale = match sigma {
        Some(_) => (chi2 / dof).max(1.0),
        None => chi2 / dof,
    };
    let se = (scale / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(1.96);
    LineFit { slope, intercept, slope_stderr: se, ci95: (slope - t * se, slope + t * se) }
}
