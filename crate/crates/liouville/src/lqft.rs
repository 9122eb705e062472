//! Liouville field theory on the sphere: constants, Seiberg gates, the
//! GMC form of the correlation functions, unit-volume measures, KPZ
//! covariance and rerooting.

use crate::error::{Error, Result};
use crate::field::{FieldSample, Layout};
use crate::gmc::{build_gmc, wick, BaseDensity, GmcMeasure};
use crate::rng::{derive, stream};
use crate::sphere::{chord, round_density, to_unit, Mobius, SphereGrid, SphereSampler, C, GREEN_MEAN};
use crate::stats::{ess, mean_stderr, weighted_mean, Estimate};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

fn check_lqft_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::Supercritical { gamma, threshold: 2.0 });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqftParams {
    pub gamma: f64,
    /// Cosmological constant.
    pub mu: f64,
}

impl LqftParams {
    pub fn new(gamma: f64, mu: f64) -> Result<Self> {
        check_lqft_gamma(gamma)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Precondition(format!("mu = {mu} must be positive")));
        }
        Ok(LqftParams { gamma, mu })
    }

    pub fn q(&self) -> f64 {
        self.gamma / 2.0 + 2.0 / self.gamma
    }

    pub fn central_charge(&self) -> f64 {
        1.0 + 6.0 * self.q().powi(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqftConstants {
    pub gamma: f64,
    pub q: f64,
    pub central_charge: f64,
}

impl LqftConstants {
    /// Conformal weight α/2 (Q − α/2) of the vertex operator V_α.
    pub fn weight(&self, alpha: f64) -> f64 {
        alpha / 2.0 * (self.q - alpha / 2.0)
    }
}

pub fn lqft_constants(gamma: f64) -> Result<LqftConstants> {
    check_lqft_gamma(gamma)?;
    let q = gamma / 2.0 + 2.0 / gamma;
    Ok(LqftConstants { gamma, q, central_charge: 1.0 + 6.0 * q * q })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexInsertion {
    pub z: C,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertionSet {
    pub points: Vec<VertexInsertion>,
}

impl InsertionSet {
    pub fn new(points: Vec<VertexInsertion>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.z.re.is_finite() && p.z.im.is_finite() && p.alpha.is_finite()) {
                return Err(Error::Domain(format!("insertion {i} is not finite")));
            }
            if points[..i].iter().any(|o| o.z == p.z) {
                return Err(Error::Domain(format!("insertion {i} coincides with an earlier one")));
            }
        }
        Ok(InsertionSet { points })
    }

    /// All weights equal to `alpha`.
    pub fn uniform(zs: &[C], alpha: f64) -> Result<Self> {
        Self::new(zs.iter().map(|&z| VertexInsertion { z, alpha }).collect())
    }

    pub fn empty() -> Self {
        InsertionSet { points: vec![] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn alpha_sum(&self) -> f64 {
        self.points.iter().map(|p| p.alpha).sum()
    }

    /// (Σα − 2Q)/γ.
    pub fn s(&self, gamma: f64) -> f64 {
        (self.alpha_sum() - 2.0 * (gamma / 2.0 + 2.0 / gamma)) / gamma
    }

    /// Image under ψ; every image must be finite.
    pub fn mapped(&self, psi: &Mobius) -> Result<Self> {
        let mut pts = Vec::with_capacity(self.len());
        for (i, p) in self.points.iter().enumerate() {
            match psi.apply(p.z) {
                Some(w) if w.re.is_finite() && w.im.is_finite() => pts.push(VertexInsertion { z: w, alpha: p.alpha }),
                _ => return Err(Error::Precondition(format!("map sends insertion {i} to infinity; pick another representative"))),
            }
        }
        Self::new(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SeibergVerdict {
    StrictPass,
    /// The soft bounds hold; `reasons` lists the strict ones that do not.
    SoftPassOnly { reasons: Vec<String> },
    Fail { reasons: Vec<String> },
}

impl SeibergVerdict {
    pub fn strict(&self) -> bool {
        matches!(self, SeibergVerdict::StrictPass)
    }

    pub fn soft(&self) -> bool {
        !matches!(self, SeibergVerdict::Fail { .. })
    }
}

pub fn seiberg_check(ins: &InsertionSet, gamma: f64) -> SeibergVerdict {
    let q = gamma / 2.0 + 2.0 / gamma;
    let n = ins.len();
    let mut below_q = Vec::new();
    for (i, p) in ins.points.iter().enumerate() {
        if !(p.alpha < q) {
            below_q.push(format!("alpha[{i}] = {} is not below Q = {q}", p.alpha));
        }
    }
    let sum = ins.alpha_sum();
    let mut strict = below_q.clone();
    if n < 3 {
        strict.push(format!("n = {n} insertions; at least 3 are needed"));
    }
    if !(sum > 2.0 * q) {
        strict.push(format!("sum of alpha = {sum} is not above 2Q = {}", 2.0 * q));
    }
    let mut soft = below_q;
    if n == 0 {
        soft.push("no insertions".into());
    } else {
        let (k, gap) = ins
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, q - p.alpha))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let bound = gap.min(2.0 / gamma);
        let lhs = q - sum / 2.0;
        if !(lhs < bound) {
            let which = if gap < 2.0 / gamma { format!("Q - alpha[{k}]") } else { "2/gamma".into() };
            soft.push(format!("Q - sum/2 = {lhs} is not below min(2/gamma, Q - alpha_i) = {bound} ({which})"));
        }
    }
    if strict.is_empty() {
        SeibergVerdict::StrictPass
    } else if soft.is_empty() {
        SeibergVerdict::SoftPassOnly { reasons: strict }
    } else {
        SeibergVerdict::Fail { reasons: soft }
    }
}

fn require_strict(ins: &InsertionSet, gamma: f64) -> Result<()> {
    match seiberg_check(ins, gamma) {
        SeibergVerdict::StrictPass => Ok(()),
        SeibergVerdict::SoftPassOnly { reasons } | SeibergVerdict::Fail { reasons } => Err(Error::Seiberg(reasons.join("; "))),
    }
}

fn require_soft(ins: &InsertionSet, gamma: f64) -> Result<()> {
    match seiberg_check(ins, gamma) {
        SeibergVerdict::Fail { reasons } => Err(Error::Seiberg(reasons.join("; "))),
        _ => Ok(()),
    }
}

/// ∫₀^∞ u^{s−1} e^{−μu} du = μ^{−s} Γ(s).
pub fn gamma_factor(s: f64, mu: f64) -> f64 {
    (-s * mu.ln() + statrs::function::gamma::ln_gamma(s)).exp()
}

/// ln of exp(½ Σ_{i≠j} α_i α_j G(z_i, z_j)) · Π g(z_i)^{α_i Q/2 − α_i²/4}.
pub fn log_prefactor(ins: &InsertionSet, gamma: f64) -> Result<f64> {
    let q = gamma / 2.0 + 2.0 / gamma;
    // canonical order so the value does not depend on how insertions are listed
    let mut pts = ins.points.clone();
    pts.sort_by(|a, b| (a.z.re, a.z.im, a.alpha).partial_cmp(&(b.z.re, b.z.im, b.alpha)).unwrap());
    let mut s = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[..i] {
            s += a.alpha * b.alpha * crate::sphere::green_sphere(a.z, b.z)?;
        }
        s += (a.alpha * q / 2.0 - a.alpha * a.alpha / 4.0) * round_density(a.z).ln();
    }
    Ok(s)
}

/// Chaos measure e^{γX − γ²Var/2} g dz of a sphere field.
pub fn gmc_sphere(field: &FieldSample, gamma: f64) -> Result<GmcMeasure> {
    if field.layout != Layout::Sphere {
        return Err(Error::Precondition("expected a sphere field".into()));
    }
    check_lqft_gamma(gamma)?;
    build_gmc(field, gamma, BaseDensity::Uniform)
}

/// The same measure built from the shifted field X + (Q/2) ln g with the
/// flat normalization ε^{γ²/2}, where ε is each cell's flat size
/// (round area / g)^{1/2}. Differs from `gmc_sphere` by one global factor.
pub fn gmc_sphere_shifted(field: &FieldSample, gamma: f64) -> Result<GmcMeasure> {
    let direct = gmc_sphere(field, gamma)?;
    let q = gamma / 2.0 + 2.0 / gamma;
    let weights: Vec<f64> = (0..field.len())
        .map(|i| {
            let g = round_density(C::new(field.points[i][0], field.points[i][1]));
            let flat = field.cell[i] / g;
            (gamma * (field.values[i] + q / 2.0 * g.ln()) + gamma * gamma / 4.0 * flat.ln()).exp() * flat
        })
        .collect();
    Ok(GmcMeasure { total_mass: weights.iter().sum(), weights, ..direct })
}

/// γ Σ α_i G_g(z_i, ·) at the grid nodes. A node sitting on an insertion uses
/// the Green value half a cell away.
pub fn insertion_exponent(unit: &[[f64; 3]], ins: &InsertionSet, gamma: f64) -> Vec<f64> {
    let half = 0.5 * (4.0 * PI / unit.len().max(1) as f64).sqrt();
    let iu: Vec<([f64; 3], f64)> = ins.points.iter().map(|p| (to_unit(p.z), p.alpha)).collect();
    unit.iter()
        .map(|u| {
            gamma
                * iu.iter()
                    .map(|(v, a)| {
                        let d = chord(u, v);
                        a * (LN_2 - if d < 1e-9 { half } else { d }.ln())
                    })
                    .sum::<f64>()
        })
        .collect()
}

/// Z(dz) = e^{γ Σ α_i G_g(z_i, z)} M_γ(dz).
pub fn z_measure(m: &GmcMeasure, ins: &InsertionSet) -> Result<GmcMeasure> {
    if m.layout != Layout::Sphere {
        return Err(Error::Precondition("expected a sphere measure".into()));
    }
    if ins.is_empty() {
        return Ok(m.clone());
    }
    let unit: Vec<[f64; 3]> = m.points.iter().map(|p| to_unit(C::new(p[0], p[1]))).collect();
    let e = insertion_exponent(&unit, ins, m.gamma);
    let out = m.reweighted(|i| e[i].exp());
    if !out.total_mass.is_finite() {
        return Err(Error::Numeric("insertion weights overflowed".into()));
    }
    Ok(out)
}

/// Mean of Z(S) over the field for a single sphere grid: Σ_c A_c e^{γ Σ α G}.
pub fn expected_z_mass(grid: &SphereGrid, ins: &InsertionSet, gamma: f64) -> f64 {
    let e = insertion_exponent(&grid.unit, ins, gamma);
    grid.weights.iter().zip(&e).map(|(w, x)| w * x.exp()).sum()
}

pub const BATCH: usize = 128;

/// A factored sphere grid reused across experiments.
pub struct Lqft {
    pub sampler: SphereSampler,
}

/// One frame of evaluation: a grid (possibly carried by a Möbius map) with
/// the insertion exponent precomputed.
struct Frame {
    weights: Vec<f64>,
    variance: Vec<f64>,
    pi: Vec<f64>,
    exponent: Vec<f64>,
    /// The field is re-centered against `pi` (only for a moved grid).
    recenter: bool,
}

impl Frame {
    fn new(grid: &SphereGrid, ins: &InsertionSet, gamma: f64, recenter: bool) -> Frame {
        let tot = grid.total_weight();
        Frame {
            weights: grid.weights.clone(),
            variance: (0..grid.len()).map(|i| grid.self_variance(i)).collect(),
            pi: grid.weights.iter().map(|w| w / tot).collect(),
            exponent: insertion_exponent(&grid.unit, ins, gamma),
            recenter,
        }
    }

    /// Cell masses of Z(dz) for one field realization.
    fn masses(&self, x: &[f64], gamma: f64, out: &mut Vec<f64>) {
        let m = if self.recenter { x.iter().zip(&self.pi).map(|(a, b)| a * b).sum() } else { 0.0 };
        out.clear();
        out.extend((0..x.len()).map(|i| self.weights[i] * wick(gamma, x[i] - m, self.variance[i]) * self.exponent[i].exp()));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    /// Correlation up to the global constant.
    pub value: f64,
    pub stderr: f64,
    pub log_prefactor: f64,
    pub gamma_factor: f64,
    /// Ê[Z(S)^{−s}].
    pub negative_moment: Estimate,
    pub s: f64,
    pub ess: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpzReport {
    pub ratio: f64,
    pub stderr: f64,
    /// The same ratio with both sides on the unmoved grid; carries the
    /// discretization bias of moving insertions relative to the cells.
    pub fixed_grid_ratio: f64,
    pub fixed_grid_stderr: f64,
    /// Π|ψ′(z_i)|^{−2Δ_i}.
    pub weight_factor: f64,
}

impl KpzReport {
    pub fn z_score(&self) -> f64 {
        (self.ratio - 1.0).abs() / self.stderr
    }
}

/// Ratio ā/b̄ of paired samples with a delta-method stderr. A floor at the
/// rounding level keeps a pathwise-exact ratio from reporting zero error.
fn paired_ratio(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let r = ma / mb;
    let v = a.iter().zip(b).map(|(x, y)| (x - r * y).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (v / n).sqrt() / mb;
    (r, se.hypot(1e-12 * r.abs()))
}

impl Lqft {
    pub fn new(cells: usize) -> Result<Self> {
        Ok(Lqft { sampler: SphereSampler::new(SphereGrid::new(cells)?, 1e-8)? })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.sampler.grid
    }

    /// Realizations in batches; realization k comes from stream(seed, k / BATCH).
    pub fn for_each_field<F: FnMut(usize, &[f64])>(&self, n: usize, seed: u64, mut f: F) {
        let mut k = 0;
        let mut b = 0u64;
        while k < n {
            let m = BATCH.min(n - k);
            let mut rng = stream(seed, b);
            let x = self.sampler.draw_batch(&mut rng, m);
            for (j, col) in x.column_iter().enumerate() {
                f(k + j, col.as_slice());
            }
            k += m;
            b += 1;
        }
    }

    /// Samples of Z(S) for the insertion set on the grid carried by ψ.
    fn z_totals(&self, frames: &[Frame], gamma: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(n); frames.len()];
        let mut buf = Vec::new();
        self.for_each_field(n, seed, |_, x| {
            for (o, fr) in out.iter_mut().zip(frames) {
                fr.masses(x, gamma, &mut buf);
                o.push(buf.iter().sum());
            }
        });
        out
    }

    fn frame(&self, ins: &InsertionSet, gamma: f64, psi: Option<&Mobius>) -> Result<(InsertionSet, Frame)> {
        match psi {
            None => Ok((ins.clone(), Frame::new(self.grid(), ins, gamma, false))),
            Some(p) => {
                let moved = ins.mapped(p)?;
                let g = self.grid().transport(p);
                let f = Frame::new(&g, &moved, gamma, true);
                Ok((moved, f))
            }
        }
    }

    pub fn correlation(&self, ins: &InsertionSet, params: &LqftParams, n: usize, seed: u64) -> Result<CorrelationEstimate> {
        require_strict(ins, params.gamma)?;
        let fr = Frame::new(self.grid(), ins, params.gamma, false);
        let z = self.z_totals(&[fr], params.gamma, n, seed).pop().unwrap();
        correlation_from_totals(ins, params, &z)
    }

    /// Both sides of the KPZ rule from the same field draws. The ψ side is
    /// evaluated on the grid carried by ψ, where the field is the reference
    /// field re-centered against the moved cell weights.
    pub fn kpz(&self, ins: &InsertionSet, psi: &Mobius, params: &LqftParams, n: usize, seed: u64) -> Result<KpzReport> {
        require_strict(ins, params.gamma)?;
        let gamma = params.gamma;
        let moved = ins.mapped(psi)?;
        let identity = *psi == Mobius::identity();
        let frames = if identity {
            vec![Frame::new(self.grid(), ins, gamma, false)]
        } else {
            vec![
                Frame::new(self.grid(), ins, gamma, false),
                self.frame(ins, gamma, Some(psi))?.1,
                Frame::new(self.grid(), &moved, gamma, false),
            ]
        };
        let z = self.z_totals(&frames, gamma, n, seed);
        let s = ins.s(gamma);
        let k = lqft_constants(gamma)?;
        let lw: f64 = ins.points.iter().map(|p| -2.0 * k.weight(p.alpha) * psi.deriv(p.z).norm().ln()).sum();
        let scale = (log_prefactor(&moved, gamma)? - log_prefactor(ins, gamma)? - lw).exp();
        let neg = |v: &[f64]| v.iter().map(|t| t.powf(-s)).collect::<Vec<f64>>();
        let base = neg(&z[0]);
        if identity {
            return Ok(KpzReport { ratio: 1.0, stderr: 1e-12, fixed_grid_ratio: 1.0, fixed_grid_stderr: 1e-12, weight_factor: 1.0 });
        }
        let (r, se) = paired_ratio(&neg(&z[1]), &base);
        let (rf, sef) = paired_ratio(&neg(&z[2]), &base);
        Ok(KpzReport { ratio: r * scale, stderr: se * scale, fixed_grid_ratio: rf * scale, fixed_grid_stderr: sef * scale, weight_factor: lw.exp() })
    }

    /// Streams unit-volume members: `f(k, normalized cell masses, Z(S)^{−s})`.
    pub fn for_each_unit_volume<F: FnMut(usize, &[f64], f64)>(&self, ins: &InsertionSet, gamma: f64, n: usize, seed: u64, mut f: F) -> Result<()> {
        check_lqft_gamma(gamma)?;
        require_soft(ins, gamma)?;
        let s = ins.s(gamma);
        let fr = Frame::new(self.grid(), ins, gamma, false);
        let mut buf = Vec::new();
        let mut err = None;
        self.for_each_field(n, seed, |k, x| {
            fr.masses(x, gamma, &mut buf);
            let tot: f64 = buf.iter().sum();
            let w = tot.powf(-s);
            if !(w.is_finite() && w > 0.0) {
                err.get_or_insert(Error::Numeric(format!("importance weight {w} for realization {k}")));
                return;
            }
            buf.iter_mut().for_each(|v| *v /= tot);
            f(k, &buf, w);
        });
        err.map_or(Ok(()), Err)
    }

    pub fn unit_volume(&self, ins: &InsertionSet, gamma: f64, n: usize, seed: u64) -> Result<WeightedMeasureEnsemble> {
        let mut members = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        self.for_each_unit_volume(ins, gamma, n, seed, |_, m, w| {
            members.push(m.to_vec());
            weights.push(w);
        })?;
        let e = ess(&weights);
        Ok(WeightedMeasureEnsemble {
            points: self.grid().points().iter().map(|z| [z.re, z.im]).collect(),
            members,
            warning: (e < UNIT_VOLUME_MIN_ESS).then(|| format!("effective sample size {e:.1} below {UNIT_VOLUME_MIN_ESS}")),
            weights,
            ess: e,
        })
    }

    pub fn reroot(&self, gamma: f64, functionals: &[RerootFunctional], n: usize, seed: u64) -> Result<RerootReport> {
        check_lqft_gamma(gamma)?;
        let ins = InsertionSet::uniform(&[REROOT_CHART.apply(C::new(0.0, 0.0)).unwrap(), REROOT_CHART.apply(C::new(1.0, 0.0)).unwrap(), REROOT_ANCHOR], gamma)?;
        // moduli of cell centers in the original coordinate, sorted
        let inv = REROOT_CHART.inverse();
        let radius: Vec<f64> = self
            .grid()
            .unit
            .iter()
            .map(|u| {
                let v = inv.apply_on_unit(u);
                crate::sphere::from_unit(v).map_or(f64::INFINITY, |z| z.norm())
            })
            .collect();
        let mut order: Vec<usize> = (0..radius.len()).collect();
        order.sort_by(|&a, &b| radius[a].total_cmp(&radius[b]));
        let sorted_r: Vec<f64> = order.iter().map(|&i| radius[i]).collect();
        let nf = functionals.len();
        let mut lhs = vec![Vec::with_capacity(n); nf];
        let mut rhs = vec![Vec::with_capacity(n); nf];
        let mut w_l = Vec::with_capacity(n);
        let mut w_r = Vec::with_capacity(n);
        let mut cdf = vec![0.0; order.len() + 1];
        // cap mass ν(|z| < t) from the cumulative sum
        let cap = |cdf: &[f64], t: f64| cdf[sorted_r.partition_point(|&r| r < t)];
        for side in 0..2 {
            self.for_each_unit_volume(&ins, gamma, n, derive(seed, side as u64 + 1), |_, m, w| {
                for (j, &i) in order.iter().enumerate() {
                    cdf[j + 1] = cdf[j] + m[i];
                }
                for (fi, f) in functionals.iter().enumerate() {
                    let v = if side == 0 {
                        // Σ_x ν(x) F(ν ∘ ψ_x⁻¹), ψ_x(z) = z/x
                        order.iter().map(|&i| m[i] * f.eval(|r| cap(&cdf, r * radius[i]))).sum()
                    } else {
                        f.eval(|r| cap(&cdf, r))
                    };
                    if side == 0 { lhs[fi].push(v) } else { rhs[fi].push(v) }
                }
                if side == 0 { w_l.push(w) } else { w_r.push(w) }
            })?;
        }
        let lines = functionals
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let l = weighted_mean(&w_l, &lhs[i]);
                let r = weighted_mean(&w_r, &rhs[i]);
                // both sides of a mass-normalized functional can agree to rounding
                let se = (l.stderr.powi(2) + r.stderr.powi(2)).sqrt().max(1e-12 * l.value.abs().max(r.value.abs()));
                let z = (l.value - r.value).abs() / se;
                RerootLine { functional: *f, lhs: l, rhs: r, z, rejected: z > 3.0 }
            })
            .collect();
        Ok(RerootReport { gamma, n, lines, ess: (ess(&w_l), ess(&w_r)) })
    }
}

pub fn correlation_from_totals(ins: &InsertionSet, params: &LqftParams, z: &[f64]) -> Result<CorrelationEstimate> {
    let s = ins.s(params.gamma);
    let w: Vec<f64> = z.iter().map(|t| t.powf(-s)).collect();
    let e = ess(&w);
    let m = mean_stderr(&w);
    let lp = log_prefactor(ins, params.gamma)?;
    let gf = gamma_factor(s, params.mu);
    let c = lp.exp() * gf;
    if !(c * m.value).is_finite() {
        return Err(Error::Numeric("correlation overflowed".into()));
    }
    Ok(CorrelationEstimate {
        value: c * m.value,
        stderr: c * m.stderr,
        log_prefactor: lp,
        gamma_factor: gf,
        negative_moment: m,
        s,
        ess: e,
        warning: (e < CORRELATION_MIN_ESS).then(|| format!("effective sample size {e:.1} below {CORRELATION_MIN_ESS}")),
    })
}

pub const CORRELATION_MIN_ESS: f64 = 100.0;
pub const UNIT_VOLUME_MIN_ESS: f64 = 50.0;

/// Correlation of vertex operators up to the global constant.
pub fn correlation_mc(ins: &InsertionSet, params: &LqftParams, cells: usize, n: usize, seed: u64) -> Result<CorrelationEstimate> {
    require_strict(ins, params.gamma)?;
    Lqft::new(cells)?.correlation(ins, params, n, seed)
}

pub fn kpz_covariance_check(ins: &InsertionSet, psi: &Mobius, params: &LqftParams, cells: usize, n: usize, seed: u64) -> Result<KpzReport> {
    require_strict(ins, params.gamma)?;
    ins.mapped(psi)?;
    Lqft::new(cells)?.kpz(ins, psi, params, n, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasureEnsemble {
    pub points: Vec<[f64; 2]>,
    /// Normalized cell masses, one vector per realization.
    pub members: Vec<Vec<f64>>,
    /// Z(S)^{−s}.
    pub weights: Vec<f64>,
    pub ess: f64,
    pub warning: Option<String>,
}

impl WeightedMeasureEnsemble {
    pub fn weighted_mean<F: Fn(&[f64]) -> f64>(&self, f: F) -> Estimate {
        let v: Vec<f64> = self.members.iter().map(|m| f(m)).collect();
        weighted_mean(&self.weights, &v)
    }

    /// Same functional with all weights equal.
    pub fn plain_mean<F: Fn(&[f64]) -> f64>(&self, f: F) -> Estimate {
        let v: Vec<f64> = self.members.iter().map(|m| f(m)).collect();
        mean_stderr(&v)
    }
}

/// The cosmological constant is accepted for interface symmetry but does not
/// enter the unit-volume law.
pub fn unit_volume_sample(ins: &InsertionSet, params: &LqftParams, cells: usize, n: usize, seed: u64) -> Result<WeightedMeasureEnsemble> {
    Lqft::new(cells)?.unit_volume(ins, params.gamma, n, seed)
}

/// Chart T(z) = z/(1+z) used for the rerooting configuration: it sends the
/// insertions 0, 1, ∞ to 0, ½, 1.
pub const REROOT_CHART: Mobius = Mobius { a: C::new(1.0, 0.0), b: C::new(0.0, 0.0), c: C::new(1.0, 0.0), d: C::new(1.0, 0.0) };
const REROOT_ANCHOR: C = C::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RerootFunctional {
    TotalMass,
    /// ν(|z| < radius) in the coordinate where the insertions are 0, 1, ∞.
    CapMass { radius: f64 },
    CapMassSquared { radius: f64 },
}

impl RerootFunctional {
    fn eval<M: Fn(f64) -> f64>(&self, cap: M) -> f64 {
        match *self {
            RerootFunctional::TotalMass => cap(f64::INFINITY),
            RerootFunctional::CapMass { radius } => cap(radius),
            RerootFunctional::CapMassSquared { radius } => cap(radius).powi(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerootLine {
    pub functional: RerootFunctional,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub z: f64,
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerootReport {
    pub gamma: f64,
    pub n: usize,
    pub lines: Vec<RerootLine>,
    pub ess: (f64, f64),
}

/// Both sides of the rerooting identity for the three-γ measure, each side
/// from its own independent realizations. The point x is integrated against
/// the measure exactly instead of being sampled.
pub fn rerooting_check(gamma: f64, functionals: &[RerootFunctional], cells: usize, n: usize, seed: u64) -> Result<RerootReport> {
    Lqft::new(cells)?.reroot(gamma, functionals, n, seed)
}

/// Vanishing-mean check of the centered Green function, used by tests.
pub fn green_mean_zero_error(grid: &SphereGrid, z: C) -> f64 {
    let u = to_unit(z);
    grid.integrate_refined(|v| crate::sphere::green_unit(&u, v) - GREEN_MEAN, &u, 8) / (4.0 * PI)
}
