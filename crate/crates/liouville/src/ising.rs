//! Critical Ising spins: the exact continuum correlation sum, its Möbius
//! covariance, and a lattice sampler with plus boundary.

use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::sphere::{Mobius, C};
use crate::stats::Estimate;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub const MAX_EXACT_POINTS: usize = 20;

/// ½ ln(1 + √2).
pub fn critical_beta() -> f64 {
    0.5 * (1.0 + 2f64.sqrt()).ln()
}

fn check_points(pts: &[C]) -> Result<()> {
    if pts.len() % 2 == 1 {
        return Err(Error::Domain(format!("spin correlation needs an even number of points, got {}", pts.len())));
    }
    if pts.len() > MAX_EXACT_POINTS {
        return Err(Error::Precondition(format!("{} points exceed the limit of {MAX_EXACT_POINTS}", pts.len())));
    }
    for (i, p) in pts.iter().enumerate() {
        if !(p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::Domain(format!("point {i} is not finite")));
        }
        if pts[..i].contains(p) {
            return Err(Error::Domain(format!("point {i} coincides with an earlier one")));
        }
    }
    Ok(())
}

/// (2^{−n/2} Σ_{μ balanced} Π_{i<j} |z_i − z_j|^{μ_i μ_j / 2})^{1/2}.
pub fn spin_correlation_exact(pts: &[C]) -> Result<f64> {
    check_points(pts)?;
    let n = pts.len();
    if n == 0 {
        return Ok(1.0);
    }
    // canonical order: the value must not depend on how points are listed
    let mut p = pts.to_vec();
    p.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut ld = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (p[i] - p[j]).norm().ln();
            ld[i * n + j] = v;
            ld[j * n + i] = v;
        }
    }
    // enumerate the n/2-subsets carrying μ = +1
    let half = n / 2;
    let mut terms = Vec::new();
    let mut idx: Vec<usize> = (0..half).collect();
    let mut mu = vec![-1i8; n];
    loop {
        mu.iter_mut().for_each(|m| *m = -1);
        idx.iter().for_each(|&i| mu[i] = 1);
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..i {
                e += (mu[i] * mu[j]) as f64 * ld[i * n + j];
            }
        }
        terms.push(e);
        // next combination in lexicographic order
        let mut k = half;
        loop {
            if k == 0 {
                let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = terms.iter().map(|t| (t - top).exp()).sum();
                let log = 0.5 * (top + s.ln() - half as f64 * std::f64::consts::LN_2);
                return Ok(log.exp());
            }
            k -= 1;
            if idx[k] < n - half + k {
                idx[k] += 1;
                for m in k + 1..half {
                    idx[m] = idx[m - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Correlation at ψ(z_i) over Π|ψ′(z_i)|^{−1/8} times the correlation at z_i.
pub fn spin_mobius_check(pts: &[C], psi: &Mobius) -> Result<f64> {
    check_points(pts)?;
    let mut img = Vec::with_capacity(pts.len());
    let mut lw = 0.0;
    for (i, &z) in pts.iter().enumerate() {
        match psi.apply(z) {
            Some(w) if w.re.is_finite() && w.im.is_finite() => img.push(w),
            _ => return Err(Error::Domain(format!("map sends point {i} to infinity"))),
        }
        lw += -0.125 * psi.deriv(z).norm().ln();
    }
    Ok(spin_correlation_exact(&img)? / (lw.exp() * spin_correlation_exact(pts)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Swendsen–Wang clusters; the plus boundary is one frozen cluster.
    Cluster,
    /// Heat-bath updates in lexicographic sweeps.
    SingleSite,
}

/// Spins on [−N, N]² with the outer frame fixed to +1. Each nearest-neighbour
/// bond is counted once in the energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    pub half_width: usize,
    pub beta: f64,
    /// Row-major over x, y ∈ [−N, N].
    pub spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn index(&self, x: i64, y: i64) -> Option<usize> {
        let n = self.half_width as i64;
        (x.abs() <= n && y.abs() <= n).then(|| ((x + n) as usize) * self.side() + (y + n) as usize)
    }

    /// Spin at a site; +1 outside the box.
    pub fn at(&self, x: i64, y: i64) -> i8 {
        self.index(x, y).map_or(1, |i| self.spins[i])
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }

    pub fn energy(&self) -> f64 {
        let n = self.half_width as i64;
        let mut e = 0.0;
        for x in -n..=n {
            for y in -n..=n {
                let s = self.at(x, y) as f64;
                e -= s * (self.at(x + 1, y) + self.at(x, y + 1)) as f64;
                if x == -n {
                    e -= s;
                }
                if y == -n {
                    e -= s;
                }
            }
        }
        e
    }
}

pub const MAX_HALF_WIDTH: usize = 256;

/// Markov chain for the plus-boundary Gibbs measure.
pub struct IsingChain {
    pub state: SpinConfiguration,
    pub algorithm: Algorithm,
    rng: Rng,
    parent: Vec<u32>,
}

fn find(p: &mut [u32], mut i: u32) -> u32 {
    while p[i as usize] != i {
        p[i as usize] = p[p[i as usize] as usize];
        i = p[i as usize];
    }
    i
}

fn union(p: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(p, a), find(p, b));
    // the boundary node has the largest index and stays a root
    if ra != rb {
        if ra < rb { p[ra as usize] = rb } else { p[rb as usize] = ra }
    }
}

impl IsingChain {
    /// Starts from a uniformly random configuration.
    pub fn new(half_width: usize, beta: f64, algorithm: Algorithm, seed: u64) -> Result<Self> {
        if half_width > MAX_HALF_WIDTH {
            return Err(Error::Precondition(format!("half width {half_width} above {MAX_HALF_WIDTH}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Precondition(format!("beta = {beta} must be finite and nonnegative")));
        }
        let mut rng = stream(seed, 0);
        let side = 2 * half_width + 1;
        let spins = (0..side * side).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        Ok(IsingChain {
            state: SpinConfiguration { half_width, beta, spins },
            algorithm,
            rng,
            parent: vec![0; side * side + 1],
        })
    }

    pub fn sweep(&mut self) {
        match self.algorithm {
            Algorithm::Cluster => self.cluster_sweep(),
            Algorithm::SingleSite => self.heat_bath_sweep(),
        }
    }

    fn heat_bath_sweep(&mut self) {
        let n = self.state.half_width as i64;
        let b = self.state.beta;
        for x in -n..=n {
            for y in -n..=n {
                let h = (self.state.at(x + 1, y) + self.state.at(x - 1, y) + self.state.at(x, y + 1) + self.state.at(x, y - 1)) as f64;
                let p = 1.0 / (1.0 + (-2.0 * b * h).exp());
                let i = self.state.index(x, y).unwrap();
                self.state.spins[i] = if self.rng.gen::<f64>() < p { 1 } else { -1 };
            }
        }
    }

    fn cluster_sweep(&mut self) {
        let side = self.state.side();
        let sites = side * side;
        let ghost = sites as u32;
        let p_bond = 1.0 - (-2.0 * self.state.beta).exp();
        for (i, v) in self.parent.iter_mut().enumerate() {
            *v = i as u32;
        }
        let s = &self.state.spins;
        for x in 0..side {
            for y in 0..side {
                let i = x * side + y;
                let si = s[i];
                let bond = |j: u32, sj: i8, rng: &mut Rng, parent: &mut [u32]| {
                    if si == sj && rng.gen::<f64>() < p_bond {
                        union(parent, i as u32, j);
                    }
                };
                if x + 1 < side {
                    bond((i + side) as u32, s[i + side], &mut self.rng, &mut self.parent);
                } else {
                    bond(ghost, 1, &mut self.rng, &mut self.parent);
                }
                if y + 1 < side {
                    bond((i + 1) as u32, s[i + 1], &mut self.rng, &mut self.parent);
                } else {
                    bond(ghost, 1, &mut self.rng, &mut self.parent);
                }
                if x == 0 {
                    bond(ghost, 1, &mut self.rng, &mut self.parent);
                }
                if y == 0 {
                    bond(ghost, 1, &mut self.rng, &mut self.parent);
                }
            }
        }
        // 0: undecided, 1: keep, 2: flip
        let mut fate = vec![0u8; sites + 1];
        fate[sites] = 1;
        for i in 0..sites {
            let r = find(&mut self.parent, i as u32) as usize;
            if fate[r] == 0 {
                fate[r] = if self.rng.gen::<bool>() { 2 } else { 1 };
            }
            if fate[r] == 2 {
                self.state.spins[i] = -self.state.spins[i];
            }
        }
    }
}

/// Configurations after each of `n_sweeps` sweeps.
pub fn sample_ising(half_width: usize, beta: f64, n_sweeps: usize, algorithm: Algorithm, seed: u64) -> Result<impl Iterator<Item = SpinConfiguration>> {
    let mut chain = IsingChain::new(half_width, beta, algorithm, seed)?;
    Ok((0..n_sweeps).map(move |_| {
        chain.sweep();
        chain.state.clone()
    }))
}

/// Exact Gibbs expectation of `f` by enumeration (at most 20 free spins).
pub fn exact_expectation<F: Fn(&SpinConfiguration) -> f64>(half_width: usize, beta: f64, f: F) -> Result<f64> {
    let side = 2 * half_width + 1;
    let m = side * side;
    if m > 20 {
        return Err(Error::Precondition(format!("{m} spins are too many to enumerate")));
    }
    let mut cfg = SpinConfiguration { half_width, beta, spins: vec![1; m] };
    let mut energies = Vec::with_capacity(1 << m);
    let mut values = Vec::with_capacity(1 << m);
    for bits in 0u32..(1 << m) {
        for (k, s) in cfg.spins.iter_mut().enumerate() {
            *s = if bits >> k & 1 == 1 { -1 } else { 1 };
        }
        energies.push(cfg.energy());
        values.push(f(&cfg));
    }
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut z, mut s) = (0.0, 0.0);
    for (e, v) in energies.iter().zip(&values) {
        let w = (-beta * (e - e0)).exp();
        z += w;
        s += w * v;
    }
    Ok(s / z)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRatio {
    pub sites: Vec<[i64; 2]>,
    pub lattice: Estimate,
    pub continuum: f64,
    /// ⟨σ₁σ₂⟩, ⟨σ₃σ₄⟩ and ⟨σ₁σ₂σ₃σ₄⟩ on the lattice.
    pub pair12: Estimate,
    pub pair34: Estimate,
    pub four: Estimate,
}

impl ScalingRatio {
    pub fn relative_gap(&self) -> f64 {
        (self.lattice.value / self.continuum - 1.0).abs()
    }
}

pub const MIN_SEPARATION: i64 = 8;

/// Lattice site ⌊z/ε⌋ of a continuum point.
pub fn lattice_site(z: C, eps: f64) -> [i64; 2] {
    [(z.re / eps).floor() as i64, (z.im / eps).floor() as i64]
}

/// R = ⟨σ₁σ₂σ₃σ₄⟩ / (⟨σ₁σ₂⟩⟨σ₃σ₄⟩) at β_c against the continuum value of the
/// same ratio, where the lattice constant cancels. Errors come from a
/// jackknife over 50 batches of sweeps.
pub fn scaling_ratio_check(pts: &[C; 4], half_width: usize, eps: f64, n_sweeps: usize, seed: u64) -> Result<ScalingRatio> {
    let sites: Vec<[i64; 2]> = pts.iter().map(|&z| lattice_site(z, eps)).collect();
    let n = half_width as i64;
    for (i, s) in sites.iter().enumerate() {
        let gap = n + 1 - s[0].abs().max(s[1].abs());
        if gap < MIN_SEPARATION {
            return Err(Error::Precondition(format!("point {i} at site {s:?} is {gap} sites from the boundary")));
        }
        for (j, t) in sites[..i].iter().enumerate() {
            let d = (s[0] - t[0]).abs().max((s[1] - t[1]).abs());
            if d < MIN_SEPARATION {
                return Err(Error::Precondition(format!("points {j} and {i} are {d} sites apart")));
            }
        }
    }
    let continuum = spin_correlation_exact(pts)? / (spin_correlation_exact(&pts[..2])? * spin_correlation_exact(&pts[2..])?);
    let mut chain = IsingChain::new(half_width, critical_beta(), Algorithm::Cluster, seed)?;
    let burn = (n_sweeps / 10).max(100);
    for _ in 0..burn {
        chain.sweep();
    }
    let batches = 50;
    let per = (n_sweeps / batches).max(1);
    let idx: Vec<usize> = sites.iter().map(|s| chain.state.index(s[0], s[1]).unwrap()).collect();
    let mut sums = vec![[0.0f64; 3]; batches];
    for b in 0..batches {
        for _ in 0..per {
            chain.sweep();
            let s: Vec<f64> = idx.iter().map(|&i| chain.state.spins[i] as f64).collect();
            sums[b][0] += s[0] * s[1];
            sums[b][1] += s[2] * s[3];
            sums[b][2] += s[0] * s[1] * s[2] * s[3];
        }
    }
    let tot = sums.iter().fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let cnt = (batches * per) as f64;
    let ratio = |t: [f64; 3], c: f64| (t[2] / c) / ((t[0] / c) * (t[1] / c));
    let full = ratio(tot, cnt);
    let jack: Vec<f64> = sums.iter().map(|b| ratio([tot[0] - b[0], tot[1] - b[1], tot[2] - b[2]], cnt - per as f64)).collect();
    let jm = jack.iter().sum::<f64>() / batches as f64;
    let jse = ((batches as f64 - 1.0) / batches as f64 * jack.iter().map(|j| (j - jm).powi(2)).sum::<f64>()).sqrt();
    let comp = |k: usize| {
        let m: Vec<f64> = sums.iter().map(|b| b[k] / per as f64).collect();
        crate::stats::mean_stderr(&m)
    };
    Ok(ScalingRatio {
        sites,
        lattice: Estimate { value: full, stderr: jse },
        continuum,
        pair12: comp(0),
        pair34: comp(1),
        four: comp(2),
    })
}
