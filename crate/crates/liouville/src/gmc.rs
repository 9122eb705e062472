//! Approximating chaos measures e^{γX_ε − γ²E[X_ε²]/2} σ(dx) and the
//! Monte Carlo diagnostics that track their convergence.

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::field::{FieldSample, GridSpec, Layout, SpectralSampler};
use crate::kernel::{LogKernelSpec, MollifierSpec, Point};
use crate::quad::Legendre;
use crate::stats::{mean_stderr, variance_stderr, Estimate, Running};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Base density f of σ = f·(grid measure). On planar grids the grid measure is
/// Lebesgue; on sphere grids it is already the round volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseDensity {
    Uniform,
    Constant(f64),
    /// Gaussian bump exp(−|x − c|²/(2s²)), handy for non-flat tests.
    Gaussian { center: Point, width: f64 },
}

impl BaseDensity {
    pub fn at(&self, x: Point) -> f64 {
        match *self {
            BaseDensity::Uniform => 1.0,
            BaseDensity::Constant(c) => c,
            BaseDensity::Gaussian { center, width } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                (-r2 / (2.0 * width * width)).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BaseDensity::Constant(c) if !(c >= 0.0 && c.is_finite()) => Err(Error::Precondition("base density must be nonnegative and bounded".into())),
            BaseDensity::Gaussian { width, .. } if !(width > 0.0) => Err(Error::Precondition("base density width must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmcMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub gamma: f64,
    pub eps: f64,
    pub dim: usize,
    pub base: BaseDensity,
    pub total_mass: f64,
    pub layout: Layout,
}

pub fn critical_gamma(dim: usize) -> f64 {
    (2.0 * dim as f64).sqrt()
}

pub fn check_gamma(gamma: f64, dim: usize) -> Result<()> {
    let t = critical_gamma(dim);
    if !(gamma > 0.0 && gamma < t) {
        return Err(Error::Supercritical { gamma, threshold: t });
    }
    Ok(())
}

/// e^{γx − γ²v/2}.
#[inline]
pub fn wick(gamma: f64, x: f64, var: f64) -> f64 {
    (gamma * x - 0.5 * gamma * gamma * var).exp()
}

pub fn build_gmc(field: &FieldSample, gamma: f64, base: BaseDensity) -> Result<GmcMeasure> {
    check_gamma(gamma, 2)?;
    base.validate()?;
    if field.variance.len() != field.len() {
        return Err(Error::Precondition("field variance is not populated".into()));
    }
    let weights: Vec<f64> = (0..field.len())
        .map(|i| wick(gamma, field.values[i], field.variance[i]) * base.at(field.points[i]) * field.cell[i])
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("chaos weight overflowed".into()));
    }
    Ok(GmcMeasure {
        points: field.points.clone(),
        total_mass: weights.iter().sum(),
        weights,
        gamma,
        eps: field.eps,
        dim: 2,
        base,
        layout: field.layout.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    All,
    /// Half-open box [lo, hi).
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    /// inner ≤ |x − center| < outer.
    Annulus { center: Point, inner: f64, outer: f64 },
    /// |x − center| ≥ radius.
    Outside { center: Point, radius: f64 },
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        let d = |c: Point| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        match *self {
            Region::All => true,
            Region::Box { lo, hi } => p[0] >= lo[0] && p[0] < hi[0] && p[1] >= lo[1] && p[1] < hi[1],
            Region::Ball { center, radius } => d(center) <= radius,
            Region::Annulus { center, inner, outer } => {
                let r = d(center);
                r >= inner && r < outer
            }
            Region::Outside { center, radius } => d(center) >= radius,
        }
    }

    pub fn mask(&self, points: &[Point]) -> Vec<usize> {
        (0..points.len()).filter(|&i| self.contains(points[i])).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub value: f64,
    /// No cell center fell in the region.
    pub empty: bool,
}

impl GmcMeasure {
    pub fn mass(&self, region: &Region) -> MassReport {
        if matches!(region, Region::All) {
            return MassReport { value: self.total_mass, empty: self.weights.is_empty() };
        }
        let mut s = 0.0;
        let mut hit = false;
        for (p, w) in self.points.iter().zip(&self.weights) {
            if region.contains(*p) {
                s += w;
                hit = true;
            }
        }
        MassReport { value: s, empty: !hit }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Reweights each cell by `factor(i)`; the total is recomputed.
    pub fn reweighted<F: Fn(usize) -> f64>(&self, factor: F) -> GmcMeasure {
        let weights: Vec<f64> = self.weights.iter().enumerate().map(|(i, w)| w * factor(i)).collect();
        GmcMeasure { total_mass: weights.iter().sum(), weights, ..self.clone() }
    }
}

/// Masses of `mask` for every realization and every γ in `gammas` (outer
/// index γ). Realizations come from the first filter of `sampler`.
pub fn mass_samples(sampler: &SpectralSampler, gammas: &[f64], mask: &[usize], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    for &g in gammas {
        check_gamma(g, 2)?;
    }
    let h2 = sampler.grid.h().powi(2);
    let v = sampler.variance[0];
    let mut out = vec![Vec::with_capacity(n); gammas.len()];
    sampler.realizations(n, seed, |_, x| {
        for (o, &g) in out.iter_mut().zip(gammas) {
            o.push(mask.iter().map(|&i| wick(g, x[0][i], v)).sum::<f64>() * h2);
        }
    });
    Ok(out)
}

/// Density of the distance between two uniform points of the unit square.
pub fn square_pair_density(t: f64) -> f64 {
    if t <= 0.0 || t >= 2f64.sqrt() {
        0.0
    } else if t <= 1.0 {
        2.0 * t * (PI - 4.0 * t + t * t)
    } else {
        2.0 * t * (4.0 * (t * t - 1.0).sqrt() - (t * t + 2.0 - PI) - 4.0 * (1.0 / t).acos())
    }
}

/// Var[M_ε(A)] for a square A of side `side`: ∫_A∫_A (e^{γ²C_ε(x,y)} − 1) dx dy,
/// reduced to one radial integral against the pair-distance density.
pub fn second_moment_oracle(model: &CovarianceModel, gamma: f64, side: f64) -> f64 {
    let q = Legendre::new(20);
    let g2 = gamma * gamma;
    let f = |t: f64| square_pair_density(t) * (g2 * model.radial(side * t)).exp_m1();
    // fine panels where the mollified covariance bends, coarser beyond
    let knee = (4.0 * model.profile.support / side).min(1.0);
    let mut s = 0.0;
    let mut panels = |a: f64, b: f64, m: usize| {
        for k in 0..m {
            let (u, v) = (a + (b - a) * k as f64 / m as f64, a + (b - a) * (k + 1) as f64 / m as f64);
            s += q.integrate(u, v, f);
        }
    };
    panels(0.0, knee, 64);
    panels(knee, 1.0, 128);
    // √(t²−1) in the density: t = 1 + (√2−1)s² makes the integrand smooth
    let r2 = 2f64.sqrt();
    let mut tail = 0.0;
    for k in 0..64 {
        let (u, v) = (k as f64 / 64.0, (k + 1) as f64 / 64.0);
        tail += q.integrate(u, v, |s| 2.0 * (r2 - 1.0) * s * f(1.0 + (r2 - 1.0) * s * s));
    }
    side.powi(4) * (s + tail)
}

/// E[(M_a(A) − M_b(A))²] for filters `a`, `b` of a spectral sampler, exact for
/// the simulated field: lattice sum of e^{γ²c_aa} + e^{γ²c_bb} − 2e^{γ²c_ab}
/// over the cell pairs of the box of cells `[i0, i0+m) × [j0, j0+m)`.
pub fn l2_distance_oracle(sampler: &SpectralSampler, a: usize, b: usize, gamma: f64, m: usize) -> f64 {
    let n = sampler.grid.n;
    let g2 = gamma * gamma;
    let caa = sampler.lattice_covariance(a, a);
    let cbb = sampler.lattice_covariance(b, b);
    let cab = sampler.lattice_covariance(a, b);
    let mut s = 0.0;
    for di in -(m as i64 - 1)..m as i64 {
        let wi = (m as i64 - di.abs()) as f64;
        let ii = di.rem_euclid(n as i64) as usize;
        for dj in -(m as i64 - 1)..m as i64 {
            let wj = (m as i64 - dj.abs()) as f64;
            let k = ii * n + dj.rem_euclid(n as i64) as usize;
            s += wi * wj * ((g2 * caa[k]).exp() + (g2 * cbb[k]).exp() - 2.0 * (g2 * cab[k]).exp());
        }
    }
    s * sampler.grid.h().powi(4)
}

fn check_l2_regime(gamma: f64, dim: usize) -> Result<()> {
    if !(gamma > 0.0 && gamma * gamma < dim as f64) {
        return Err(Error::Precondition(format!("L² diagnostics need γ² < d; got γ = {gamma}")));
    }
    Ok(())
}

/// Coupled estimates of E[(M_a(A) − M_b(A))²] for each filter pair, all from
/// one white-noise draw per realization. `mask` selects the cells of A.
pub fn coupled_l2(sampler: &SpectralSampler, pairs: &[(usize, usize)], gamma: f64, mask: &[usize], n: usize, seed: u64) -> Vec<Estimate> {
    let h2 = sampler.grid.h().powi(2);
    let mut acc = vec![Running::default(); pairs.len()];
    sampler.realizations(n, seed, |_, x| {
        let masses: Vec<f64> = x
            .iter()
            .zip(&sampler.variance)
            .map(|(v, &var)| mask.iter().map(|&i| wick(gamma, v[i], var)).sum::<f64>() * h2)
            .collect();
        for (r, &(a, b)) in acc.iter_mut().zip(pairs) {
            r.push((masses[a] - masses[b]).powi(2));
        }
    });
    acc.iter().map(|r| r.estimate()).collect()
}

/// Torus setup shared by the convergence diagnostics: the square A is the cell
/// box `[0, m)²` of an `n`-point periodic grid of side `side`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusBox {
    pub grid: GridSpec,
    /// Cells per side of A.
    pub cells: usize,
}

impl TorusBox {
    pub fn mask(&self) -> Vec<usize> {
        let n = self.grid.n;
        (0..self.cells).flat_map(|i| (0..self.cells).map(move |j| i * n + j)).collect()
    }

    pub fn area(&self) -> f64 {
        (self.cells as f64 * self.grid.h()).powi(2)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderStep {
    pub eps: f64,
    pub eps_prime: f64,
    pub estimate: Estimate,
    pub oracle: f64,
}

/// Strict decrease with each drop larger than `k` combined standard errors.
pub fn strictly_decreasing(steps: &[Estimate], k: f64) -> bool {
    steps.windows(2).all(|w| w[0].value - w[1].value > k * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt())
}

/// E[(M_ε(A) − M_ε′(A))²] along a ladder of (ε, ε′) pairs.
pub fn cauchy_diagnostic(kernel: &LogKernelSpec, gamma: f64, region: TorusBox, ladder: &[(f64, f64)], n: usize, seed: u64) -> Result<Vec<LadderStep>> {
    check_l2_regime(gamma, 2)?;
    let mut scales: Vec<f64> = Vec::new();
    for &(a, b) in ladder {
        for e in [a, b] {
            if !scales.contains(&e) {
                scales.push(e);
            }
        }
    }
    let moll: Vec<MollifierSpec> = scales.iter().map(|&e| MollifierSpec::bump(e)).collect();
    let sampler = SpectralSampler::new(kernel, region.grid, &moll)?;
    let idx = |e: f64| scales.iter().position(|s| *s == e).unwrap();
    let pairs: Vec<(usize, usize)> = ladder.iter().map(|&(a, b)| (idx(a), idx(b))).collect();
    let est = if pairs.iter().all(|(a, b)| a == b) {
        vec![Estimate::exact(0.0); pairs.len()]
    } else {
        coupled_l2(&sampler, &pairs, gamma, &region.mask(), n, seed)
    };
    Ok(ladder
        .iter()
        .zip(&pairs)
        .zip(est)
        .map(|((&(e, ep), &(a, b)), estimate)| LadderStep {
            eps: e,
            eps_prime: ep,
            estimate: if a == b { Estimate::exact(0.0) } else { estimate },
            oracle: l2_distance_oracle(&sampler, a, b, gamma, region.cells),
        })
        .collect())
}

/// E[(M^{(1)}_ε(A) − M^{(2)}_ε(A))²] between two mollifier shapes, per ε.
pub fn mollifier_invariance(
    kernel: &LogKernelSpec,
    gamma: f64,
    region: TorusBox,
    moll1: MollifierSpec,
    moll2: MollifierSpec,
    ladder: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<LadderStep>> {
    check_l2_regime(gamma, 2)?;
    let same = moll1.shape == moll2.shape;
    let mut moll = Vec::new();
    for &e in ladder {
        moll.push(moll1.with_eps(e));
        if !same {
            moll.push(moll2.with_eps(e));
        }
    }
    let sampler = SpectralSampler::new(kernel, region.grid, &moll)?;
    let stride = if same { 1 } else { 2 };
    let pairs: Vec<(usize, usize)> = (0..ladder.len()).map(|k| (stride * k, stride * k + stride - 1)).collect();
    let est = if same { vec![Estimate::exact(0.0); pairs.len()] } else { coupled_l2(&sampler, &pairs, gamma, &region.mask(), n, seed) };
    Ok(ladder
        .iter()
        .zip(&pairs)
        .zip(est)
        .map(|((&e, &(a, b)), estimate)| LadderStep { eps: e, eps_prime: e, estimate, oracle: l2_distance_oracle(&sampler, a, b, gamma, region.cells) })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentReport {
    pub q: f64,
    pub estimate: Estimate,
    /// Largest single-sample share of Σ M_i^q.
    pub max_share: f64,
    /// Median over blocks of `DOMINANCE_BLOCK` samples of the per-block largest share.
    pub block_share: f64,
    /// Hill estimate of the tail index of M(O) (top √n order statistics).
    pub tail_index: f64,
    pub divergent: bool,
}

pub const DEFAULT_SHARE_THRESHOLD: f64 = 0.2;
pub const DOMINANCE_BLOCK: usize = 10_000;

/// Hill tail-index estimate from the k largest values.
pub fn hill_tail_index(xs: &[f64], k: usize) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| *x > 0.0).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = k.min(v.len().saturating_sub(1)).max(1);
    let s: f64 = v[..k].iter().map(|x| (x / v[k]).ln()).sum();
    k as f64 / s
}

fn largest_share(p: &[f64]) -> f64 {
    p.iter().cloned().fold(0.0, f64::max) / p.iter().sum::<f64>()
}

/// Moments E[M(O)^q] with a dominance verdict. With an infinite moment one
/// sample keeps an O(1) share of the sum in every block; with a finite one
/// the share shrinks, though single blocks can still be hit by a large
/// draw, hence the median over blocks.
pub fn moment_report(masses: &[f64], q: f64, share_threshold: f64) -> MomentReport {
    let p: Vec<f64> = masses.iter().map(|m| m.powf(q)).collect();
    let nb = (p.len() / DOMINANCE_BLOCK).max(1);
    let per = p.len() / nb;
    let mut shares: Vec<f64> = p.chunks(per).take(nb).map(largest_share).collect();
    shares.sort_by(f64::total_cmp);
    let block_share = if nb % 2 == 1 { shares[nb / 2] } else { 0.5 * (shares[nb / 2 - 1] + shares[nb / 2]) };
    MomentReport {
        q,
        estimate: mean_stderr(&p),
        max_share: largest_share(&p),
        block_share,
        tail_index: hill_tail_index(masses, (masses.len() as f64).sqrt() as usize),
        divergent: block_share > share_threshold,
    }
}

pub struct MomentScan {
    pub reports: Vec<MomentReport>,
    /// Lebesgue area of the cells making up O.
    pub area: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn moment_scan(kernel: &LogKernelSpec, gamma: f64, ball: Region, qs: &[f64], grid: GridSpec, eps: f64, n: usize, seed: u64, share_threshold: f64) -> Result<MomentScan> {
    if qs.contains(&0.0) {
        return Err(Error::Precondition("moment order q must be nonzero".into()));
    }
    let sampler = SpectralSampler::new(kernel, grid, &[MollifierSpec::bump(eps)])?;
    let mask = ball.mask(&grid.points());
    if mask.is_empty() {
        return Err(Error::Resolution("ball contains no grid cell".into()));
    }
    let masses = mass_samples(&sampler, &[gamma], &mask, n, seed)?.remove(0);
    Ok(MomentScan { reports: qs.iter().map(|&q| moment_report(&masses, q, share_threshold)).collect(), area: mask.len() as f64 * grid.h().powi(2) })
}

/// Mean and variance of M(A) for the torus box, with stderr.
pub fn mass_mean_and_variance(masses: &[f64]) -> (Estimate, Estimate) {
    (mean_stderr(masses), variance_stderr(masses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_log_field;
    use crate::field::FieldOptions;

    fn small_field() -> FieldSample {
        let k = LogKernelSpec::planar(1.0);
        sample_log_field(&k, &MollifierSpec::bump(1.0), GridSpec { n: 16, side: 1.0 }, 0.125, 4, FieldOptions::default()).unwrap()
    }

    #[test]
    fn tiny_gamma_gives_base_measure() {
        let f = small_field();
        let m = build_gmc(&f, 1e-8, BaseDensity::Uniform).unwrap();
        for w in &m.weights {
            assert!((w / f.cell[0] - 1.0).abs() < 1e-6);
        }
        assert!((m.total_mass - m.weights.iter().sum::<f64>()).abs() <= 1e-12 * m.total_mass);
    }

    #[test]
    fn supercritical_is_refused() {
        let f = small_field();
        assert!(matches!(build_gmc(&f, 2.0, BaseDensity::Uniform), Err(Error::Supercritical { .. })));
        assert!(build_gmc(&f, 0.0, BaseDensity::Uniform).is_err());
    }

    #[test]
    fn mass_is_additive() {
        let m = build_gmc(&small_field(), 1.0, BaseDensity::Uniform).unwrap();
        let a = Region::Box { lo: [0.0, 0.0], hi: [0.5, 1.0] };
        let b = Region::Box { lo: [0.5, 0.0], hi: [1.0, 1.0] };
        let ab = Region::Box { lo: [0.0, 0.0], hi: [1.0, 1.0] };
        let s = m.mass(&a).value + m.mass(&b).value;
        assert!((m.mass(&ab).value - s).abs() < 1e-12 * s);
        assert!((m.mass(&Region::All).value - m.total_mass).abs() < 1e-12 * s);
        let e = m.mass(&Region::Ball { center: [5.0, 5.0], radius: 0.1 });
        assert!(e.empty && e.value == 0.0);
    }

    #[test]
    fn pair_density_moments() {
        // ∫p = 1 and the mean distance (2 + √2 + 5 asinh 1)/15
        let q = Legendre::new(40);
        let r2 = 2f64.sqrt();
        let mass = q.integrate(0.0, 1.0, square_pair_density) + q.integrate(0.0, 1.0, |s| 2.0 * (r2 - 1.0) * s * square_pair_density(1.0 + (r2 - 1.0) * s * s));
        let mean = q.integrate(0.0, 1.0, |t| t * square_pair_density(t))
            + q.integrate(0.0, 1.0, |s| {
                let t = 1.0 + (r2 - 1.0) * s * s;
                2.0 * (r2 - 1.0) * s * t * square_pair_density(t)
            });
        assert!((mass - 1.0).abs() < 1e-9);
        assert!((mean - (2.0 + r2 + 5.0 * 1f64.asinh()) / 15.0).abs() < 1e-9);
    }

    #[test]
    fn second_moment_oracle_against_brute_force() {
        // independent 4D midpoint sum over a coarse cell grid, small γ
        let k = LogKernelSpec::planar(1.0);
        let m = MollifierSpec::bump(0.25);
        let model = CovarianceModel::new(&k, m, m, 1e-10).unwrap();
        let v = second_moment_oracle(&model, 0.5, 1.0);
        let n = 40;
        let h = 1.0 / n as f64;
        let radial: Vec<f64> = (0..n * n).map(|k| model.radial(h * (((k / n) as f64).hypot((k % n) as f64)))).collect();
        let mut s = 0.0;
        for di in 0..n {
            for dj in 0..n {
                let w = (if di == 0 { 1.0 } else { 2.0 }) * (n - di) as f64 * (if dj == 0 { 1.0 } else { 2.0 }) * (n - dj) as f64;
                s += w * (0.25 * radial[di * n + dj]).exp_m1();
            }
        }
        let brute = s * h.powi(4);
        assert!((v - brute).abs() < 2e-3 * v, "{v} {brute}");
    }

    #[test]
    fn identical_scales_give_zero_distance() {
        let k = LogKernelSpec::planar(1.0);
        let r = TorusBox { grid: GridSpec { n: 32, side: 1.0 }, cells: 16 };
        let s = cauchy_diagnostic(&k, 0.8, r, &[(0.125, 0.125)], 10, 1).unwrap();
        assert_eq!(s[0].estimate.value, 0.0);
        assert!(s[0].oracle.abs() < 1e-12);
        let t = mollifier_invariance(&k, 1e-8, r, MollifierSpec::bump(1.0), MollifierSpec { shape: crate::kernel::Shape::TentSmoothed, eps: 1.0 }, &[0.125], 10, 1).unwrap();
        assert!(t[0].estimate.value < 1e-10);
    }

    #[test]
    fn block_dominance_separates_tails() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, 0);
        // Pareto(2): M has a finite mean, M^2 sits at the edge, M^4 is infinite
        let xs: Vec<f64> = (0..100_000).map(|_| (1.0 - rng.gen::<f64>()).powf(-0.5)).collect();
        let r = moment_report(&xs, 1.0, DEFAULT_SHARE_THRESHOLD);
        assert!(!r.divergent && r.block_share < 0.05, "{r:?}");
        let r = moment_report(&xs, 4.0, DEFAULT_SHARE_THRESHOLD);
        assert!(r.divergent, "{r:?}");
        assert!(r.max_share >= r.block_share / 10.0);
    }

    #[test]
    fn hill_recovers_pareto_index() {
        // inverse-CDF Pareto(α = 3) on a deterministic uniform grid
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| (1.0 - (i as f64 + 0.5) / n as f64).powf(-1.0 / 3.0)).collect();
        let a = hill_tail_index(&xs, 316);
        assert!((a - 3.0).abs() < 0.1, "{a}");
    }
}
