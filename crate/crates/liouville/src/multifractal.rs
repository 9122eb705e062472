//! Multifractal statistics of chaos measures: moment scaling of ball masses,
//! thick points, level-set box counting and power-singularity integrals.

use crate::error::{Error, Result};
use crate::fft2::{offset_kernel, Fft2};
use crate::field::{GridSpec, Layout, SpectralSampler};
use crate::gmc::{check_gamma, wick, GmcMeasure};
use crate::kernel::{LogKernelSpec, MollifierSpec, Point};
use crate::stats::{fit_line, Estimate, LineFit, Running};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// ζ(q) = (d + γ²/2)q − γ²q²/2.
pub fn structure_function(d: usize, gamma: f64, q: f64) -> f64 {
    let g2 = gamma * gamma;
    (d as f64 + 0.5 * g2) * q - 0.5 * g2 * q * q
}

/// Moments of M exist for q < 2d/γ².
pub fn moment_threshold(d: usize, gamma: f64) -> f64 {
    2.0 * d as f64 / (gamma * gamma)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingFit {
    pub q: f64,
    /// Nominal radii, strictly decreasing.
    pub radii: Vec<f64>,
    /// √(area/π) of the discrete disk actually summed; the fit uses these.
    pub effective_radii: Vec<f64>,
    /// log E[M(B(x, r))^q] with stderr.
    pub log_moments: Vec<Estimate>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub fit: LineFit,
}

impl ScalingFit {
    /// The 95% interval meets [lo·target, hi·target].
    pub fn ci_meets(&self, target: f64, rel: f64) -> bool {
        let (a, b) = (target * (1.0 - rel), target * (1.0 + rel));
        self.slope_ci.0 <= b && self.slope_ci.1 >= a
    }
}

fn check_radii(radii: &[f64], eps: f64, side: f64) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::Precondition("scaling fit needs at least 3 radii".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("radii must be strictly decreasing".into()));
    }
    if radii.iter().any(|&r| r < 4.0 * eps * (1.0 - 1e-9) || r > side / 4.0 * (1.0 + 1e-9)) {
        return Err(Error::Resolution(format!("radii must lie in [4ε, side/4] = [{}, {}]", 4.0 * eps, side / 4.0)));
    }
    Ok(())
}

fn disk_kernel(grid: &GridSpec, r: f64) -> Vec<f64> {
    offset_kernel(grid.n, grid.h(), |x, y| if x * x + y * y <= r * r { 1.0 } else { 0.0 })
}

/// Moment scaling E[M(B(x, r))^q] ~ r^{ζ(q)} on the torus. The field is
/// stationary, so every grid point serves as a center x; each realization
/// contributes the center average, and errors come from the spread across
/// realizations.
#[allow(clippy::too_many_arguments)]
pub fn estimate_zeta(kernel: &LogKernelSpec, gamma: f64, qs: &[f64], radii: &[f64], grid: GridSpec, eps: f64, n: usize, seed: u64) -> Result<Vec<ScalingFit>> {
    check_gamma(gamma, 2)?;
    for &q in qs {
        if q >= moment_threshold(2, gamma) {
            return Err(Error::Precondition(format!("q = {q} at or above the moment threshold {}", moment_threshold(2, gamma))));
        }
    }
    check_radii(radii, eps, grid.side)?;
    let sampler = SpectralSampler::new(kernel, grid, &[MollifierSpec::bump(eps)])?;
    let fft = Fft2::new(grid.n);
    let disks: Vec<Vec<f64>> = radii.iter().map(|&r| disk_kernel(&grid, r)).collect();
    let eff: Vec<f64> = disks.iter().map(|d| (d.iter().sum::<f64>() * grid.h().powi(2) / PI).sqrt()).collect();
    let disk_hat: Vec<Vec<Complex64>> = disks.iter().map(|d| fft.forward_real(d)).collect();
    let h2 = grid.h().powi(2);
    let var = sampler.variance[0];
    let mut acc = vec![vec![Running::default(); radii.len()]; qs.len()];
    sampler.realizations(n, seed, |_, x| {
        let w: Vec<f64> = x[0].iter().map(|&v| wick(gamma, v, var) * h2).collect();
        let wh = fft.forward_real(&w);
        for (ri, dh) in disk_hat.iter().enumerate() {
            let m = fft.convolve(&wh, dh);
            for (qi, &q) in qs.iter().enumerate() {
                let avg = m.iter().map(|v| v.max(0.0).powf(q)).sum::<f64>() / m.len() as f64;
                acc[qi][ri].push(avg);
            }
        }
    });
    Ok(qs
        .iter()
        .zip(acc)
        .map(|(&q, runs)| {
            let log_moments: Vec<Estimate> = runs
                .iter()
                .map(|r| {
                    let e = r.estimate();
                    Estimate { value: e.value.ln(), stderr: e.stderr / e.value }
                })
                .collect();
            let lx: Vec<f64> = eff.iter().map(|r| r.ln()).collect();
            let ly: Vec<f64> = log_moments.iter().map(|e| e.value).collect();
            let sig: Vec<f64> = log_moments.iter().map(|e| e.stderr).collect();
            let fit = fit_line(&lx, &ly, Some(&sig));
            ScalingFit { q, radii: radii.to_vec(), effective_radii: eff.clone(), log_moments, slope: fit.slope, slope_ci: fit.ci95, fit }
        })
        .collect())
}

/// Ladder of coupled fields X_{2^{-k}}, k = 1..=levels, on one torus grid.
fn dyadic_sampler(kernel: &LogKernelSpec, grid: GridSpec, levels: usize) -> Result<SpectralSampler> {
    let moll: Vec<MollifierSpec> = (1..=levels).map(|k| MollifierSpec::bump(2f64.powi(-(k as i32)))).collect();
    SpectralSampler::new(kernel, grid, &moll)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThickHistogram {
    pub gamma: f64,
    pub eta: f64,
    pub levels: Vec<usize>,
    /// Bin edges for the finest-level ratio.
    pub edges: Vec<f64>,
    /// Expected M-probability per bin.
    pub density: Vec<f64>,
    /// M-average of X_{2^{-k}}(x)/(k ln 2) per level.
    pub mean: Vec<Estimate>,
    /// M-probability of |ratio − γ| > η per level.
    pub tail_mass: Vec<Estimate>,
    /// Fit of ln(tail mass) against the level.
    pub tail_slope: LineFit,
    /// −η²(ln 2)²/2
    pub tail_rate_bound: f64,
}

impl ThickHistogram {
    pub fn finest_mean(&self) -> Estimate {
        *self.mean.last().unwrap()
    }
}

/// Distribution of the dyadic field ratio X_{2^{-k}}(x)/(k ln 2) when x is
/// drawn from the normalized measure built at the finest level. Each
/// realization enters with its exact M-weights (the conditional expectation of
/// measure-weighted site selection), so no extra sampling noise is added.
pub fn thick_point_histogram(kernel: &LogKernelSpec, gamma: f64, levels: usize, grid: GridSpec, eta: f64, n: usize, seed: u64) -> Result<ThickHistogram> {
    check_gamma(gamma, 2)?;
    if levels < 3 {
        return Err(Error::Precondition("thick-point scan needs at least 3 levels".into()));
    }
    let sampler = dyadic_sampler(kernel, grid, levels)?;
    let nb = 80;
    let (lo, hi) = (-1.0, 3.0);
    let edges: Vec<f64> = (0..=nb).map(|b| lo + (hi - lo) * b as f64 / nb as f64).collect();
    let mut dens = vec![0.0; nb];
    let mut mean = vec![Running::default(); levels];
    let mut tail = vec![Running::default(); levels];
    let vf = sampler.variance[levels - 1];
    sampler.realizations(n, seed, |_, x| {
        let w: Vec<f64> = x[levels - 1].iter().map(|&v| wick(gamma, v, vf)).collect();
        let tot: f64 = w.iter().sum();
        for k in 0..levels {
            let norm = (k + 1) as f64 * LN_2;
            let (mut m, mut t) = (0.0, 0.0);
            for (wi, xi) in w.iter().zip(x[k]) {
                let r = xi / norm;
                m += wi * r;
                if (r - gamma).abs() > eta {
                    t += wi;
                }
                if k == levels - 1 {
                    let b = ((r - lo) / (hi - lo) * nb as f64).floor();
                    if b >= 0.0 && (b as usize) < nb {
                        dens[b as usize] += wi / tot;
                    }
                }
            }
            mean[k].push(m / tot);
            tail[k].push(t / tot);
        }
    });
    let tail_mass: Vec<Estimate> = tail.iter().map(|r| r.estimate()).collect();
    let lv: Vec<f64> = (1..=levels).map(|k| k as f64).collect();
    let ly: Vec<f64> = tail_mass.iter().map(|e| e.value.max(1e-300).ln()).collect();
    let sig: Vec<f64> = tail_mass.iter().map(|e| (e.stderr / e.value).max(1e-12)).collect();
    Ok(ThickHistogram {
        gamma,
        eta,
        levels: (1..=levels).collect(),
        edges,
        density: dens.iter().map(|d| d / n as f64).collect(),
        mean: mean.iter().map(|r| r.estimate()).collect(),
        tail_mass,
        tail_slope: fit_line(&lv, &ly, Some(&sig)),
        tail_rate_bound: -0.5 * eta * eta * LN_2 * LN_2,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionFit {
    pub levels: Vec<usize>,
    pub counts: Vec<usize>,
    /// Slope of log₂ max(count, 1) per level, per unit area.
    pub dimension: f64,
    pub fit: LineFit,
    /// γq ≥ √(2d): the level set is expected to be empty.
    pub empty_regime: bool,
}

/// Box-counting exponent of {x : X_{2^{-k}}(x)/(k ln 2) ∈ [γq − δ, γq + δ]}.
/// At level k the torus is cut into boxes of side 2^{-k}; a box counts when
/// any grid point inside it has its level-k ratio in the band.
pub fn thick_level_dimension(kernel: &LogKernelSpec, gamma: f64, q: f64, levels: &[usize], grid: GridSpec, delta: f64, seed: u64) -> Result<DimensionFit> {
    if levels.len() < 3 {
        return Err(Error::Precondition("box counting needs at least 3 resolutions".into()));
    }
    let kmax = *levels.iter().max().unwrap();
    let sampler = dyadic_sampler(kernel, grid, kmax)?;
    let mut counts = Vec::new();
    sampler.realizations(1, seed, |_, x| {
        let n = grid.n;
        let h = grid.h();
        for &k in levels {
            let side = 2f64.powi(-(k as i32));
            let nbx = (grid.side / side).round() as usize;
            let mut hit = vec![false; nbx * nbx];
            let norm = k as f64 * LN_2;
            for i in 0..n {
                for j in 0..n {
                    let r = x[k - 1][i * n + j] / norm;
                    if (r - gamma * q).abs() <= delta {
                        let bi = (((i as f64 + 0.5) * h / side) as usize).min(nbx - 1);
                        let bj = (((j as f64 + 0.5) * h / side) as usize).min(nbx - 1);
                        hit[bi * nbx + bj] = true;
                    }
                }
            }
            counts.push(hit.iter().filter(|b| **b).count());
        }
    });
    let area = grid.side * grid.side;
    let lx: Vec<f64> = levels.iter().map(|&k| k as f64).collect();
    let ly: Vec<f64> = counts.iter().map(|&c| ((c.max(1)) as f64 / area).log2()).collect();
    let fit = fit_line(&lx, &ly, None);
    Ok(DimensionFit { levels: levels.to_vec(), counts, dimension: fit.slope, fit, empty_regime: gamma * q >= 2f64.sqrt() * 2f64.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Geometric-ratio verdict from a fitted slope of ln(contribution) per level,
/// with a ±10% dead band around ratio 1.
pub fn ratio_verdict(slope: f64) -> Verdict {
    let r = slope.exp();
    if r < 0.9 {
        Verdict::Convergent
    } else if r > 1.1 {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Shell {
    pub level: usize,
    pub inner: f64,
    pub outer: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularIntegral {
    pub alpha: f64,
    pub shells: Vec<Shell>,
    /// Contribution of |y − x| < 2^{-levels}.
    pub core: f64,
    pub value: f64,
    /// Shells with inner radius at least twice the resolution scale.
    pub resolved_levels: usize,
    /// Some requested shells lie below the resolution scale.
    pub truncated: bool,
    pub ratio: f64,
    pub verdict: Verdict,
}

fn separation(layout: &Layout, a: Point, b: Point) -> f64 {
    let (mut dx, mut dy) = (a[0] - b[0], a[1] - b[1]);
    if let Layout::Grid { spec, periodic: true } = layout {
        let l = spec.side;
        dx -= l * (dx / l).round();
        dy -= l * (dy / l).round();
    }
    (dx * dx + dy * dy).sqrt()
}

/// ∫_{B(x,1)} |y − x|^{−αγ} M(dy) split into dyadic shells 2^{-n} ≤ |y − x| < 2^{-n+1}.
/// A cell whose center coincides with x is evaluated at half a cell.
pub fn singular_integral(m: &GmcMeasure, x: Point, alpha: f64, levels: usize) -> Result<SingularIntegral> {
    let spacing = match &m.layout {
        Layout::Grid { spec, periodic } => {
            let fits = if *periodic { spec.side >= 2.0 } else { x[0] >= 1.0 && x[1] >= 1.0 && x[0] + 1.0 <= spec.side && x[1] + 1.0 <= spec.side };
            if !fits {
                return Err(Error::Domain("unit ball around x leaves the domain".into()));
            }
            spec.h()
        }
        Layout::Sphere => return Err(Error::Domain("singular integral is defined on planar grids".into())),
    };
    let p = alpha * m.gamma;
    let mut shells: Vec<Shell> = (1..=levels)
        .map(|n| Shell { level: n, inner: 2f64.powi(-(n as i32)), outer: 2f64.powi(1 - n as i32), value: 0.0 })
        .collect();
    let mut core = 0.0;
    let rmin = 2f64.powi(-(levels as i32));
    for (y, w) in m.points.iter().zip(&m.weights) {
        let r = separation(&m.layout, *y, x);
        if r >= 1.0 {
            continue;
        }
        let v = w * r.max(0.5 * spacing).powf(-p);
        if r < rmin {
            core += v;
        } else {
            let n = (-(r.log2())).floor() as usize + 1;
            shells[n.min(levels) - 1].value += v;
        }
    }
    let scale = 2.0 * m.eps.max(spacing);
    let resolved = shells.iter().filter(|s| s.inner >= scale * (1.0 - 1e-12)).count();
    let value = shells.iter().map(|s| s.value).sum::<f64>() + core;
    let (ratio, verdict) = if resolved >= 3 {
        let lx: Vec<f64> = (1..=resolved).map(|n| n as f64).collect();
        let ly: Vec<f64> = shells[..resolved].iter().map(|s| s.value.max(1e-300).ln()).collect();
        let f = fit_line(&lx, &ly, None);
        (f.slope.exp(), ratio_verdict(f.slope))
    } else {
        (f64::NAN, Verdict::Inconclusive)
    };
    Ok(SingularIntegral { alpha, shells, core, value, resolved_levels: resolved, truncated: resolved < levels, ratio, verdict })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeibergScan {
    pub alpha: f64,
    /// Per realization: center average of ln(shell contribution) per level.
    pub profiles: Vec<Vec<f64>>,
    pub slopes: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    /// Predicted slope ln 2·(αγ − d − γ²/2) per level at a typical point.
    pub predicted_slope: f64,
}

/// Pooled version of `singular_integral`: for every grid point as center the
/// shell contributions are circular convolutions of the chaos weights with
/// |y|^{−αγ} restricted to a shell. Each realization yields one verdict from
/// the slope of the center-averaged log contributions.
#[allow(clippy::too_many_arguments)]
pub fn seiberg_scan(kernel: &LogKernelSpec, gamma: f64, alphas: &[f64], grid: GridSpec, eps: f64, levels: usize, n: usize, seed: u64) -> Result<Vec<SeibergScan>> {
    check_gamma(gamma, 2)?;
    if grid.side < 2.0 {
        return Err(Error::Domain("seiberg scan needs a torus of side at least 2".into()));
    }
    if 2f64.powi(-(levels as i32)) < 2.0 * eps.max(grid.h()) * (1.0 - 1e-12) {
        return Err(Error::Resolution("innermost shell below twice the mollification scale".into()));
    }
    let sampler = SpectralSampler::new(kernel, grid, &[MollifierSpec::bump(eps)])?;
    let fft = Fft2::new(grid.n);
    let mut kern: Vec<Vec<Vec<Complex64>>> = Vec::new();
    for &a in alphas {
        let p = a * gamma;
        kern.push(
            (1..=levels)
                .map(|l| {
                    let (lo, hi) = (2f64.powi(-(l as i32)), 2f64.powi(1 - l as i32));
                    fft.forward_real(&offset_kernel(grid.n, grid.h(), |x, y| {
                        let r = (x * x + y * y).sqrt();
                        if r >= lo && r < hi { r.powf(-p) } else { 0.0 }
                    }))
                })
                .collect(),
        );
    }
    let var = sampler.variance[0];
    let h2 = grid.h().powi(2);
    let mut out: Vec<SeibergScan> = alphas
        .iter()
        .map(|&a| SeibergScan { alpha: a, profiles: vec![], slopes: vec![], verdicts: vec![], predicted_slope: LN_2 * (a * gamma - 2.0 - 0.5 * gamma * gamma) })
        .collect();
    let lx: Vec<f64> = (1..=levels).map(|l| l as f64).collect();
    sampler.realizations(n, seed, |_, x| {
        let w: Vec<f64> = x[0].iter().map(|&v| wick(gamma, v, var) * h2).collect();
        let wh = fft.forward_real(&w);
        for (o, ks) in out.iter_mut().zip(&kern) {
            let prof: Vec<f64> = ks
                .iter()
                .map(|k| {
                    let c = fft.convolve(&wh, k);
                    c.iter().map(|v| v.max(1e-300).ln()).sum::<f64>() / c.len() as f64
                })
                .collect();
            let f = fit_line(&lx, &prof, None);
            o.slopes.push(f.slope);
            o.verdicts.push(ratio_verdict(f.slope));
            o.profiles.push(prof);
        }
    });
    Ok(out)
}

/// Mean of M(B(x, r)) / (r^d e^{γX_r(x) − γ²E[X_r²]/2}) over centers and
/// realizations, per radius; the field X_r is the bump average at scale r.
pub fn approxball_ratio(kernel: &LogKernelSpec, gamma: f64, radii: &[f64], grid: GridSpec, eps: f64, n: usize, seed: u64) -> Result<Vec<Estimate>> {
    check_gamma(gamma, 2)?;
    let mut moll = vec![MollifierSpec::bump(eps)];
    moll.extend(radii.iter().map(|&r| MollifierSpec::bump(r)));
    let sampler = SpectralSampler::new(kernel, grid, &moll)?;
    let fft = Fft2::new(grid.n);
    let disk_hat: Vec<Vec<Complex64>> = radii.iter().map(|&r| fft.forward_real(&disk_kernel(&grid, r))).collect();
    let h2 = grid.h().powi(2);
    let mut acc = vec![Running::default(); radii.len()];
    sampler.realizations(n, seed, |_, x| {
        let w: Vec<f64> = x[0].iter().map(|&v| wick(gamma, v, sampler.variance[0]) * h2).collect();
        let wh = fft.forward_real(&w);
        for (k, &r) in radii.iter().enumerate() {
            let m = fft.convolve(&wh, &disk_hat[k]);
            let vr = sampler.variance[k + 1];
            let s: f64 = m.iter().zip(x[k + 1]).map(|(mi, xi)| mi / (r * r * wick(gamma, *xi, vr))).sum();
            acc[k].push(s / m.len() as f64);
        }
    });
    Ok(acc.iter().map(|r| r.estimate()).collect())
}
