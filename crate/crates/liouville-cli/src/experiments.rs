//! Registered experiments: parameter schema plus a runner per name.

use crate::config::{CliError, CliResult, Config, Kind};
use liouville::field::{sample_log_field, FieldOptions, GridSpec};
use liouville::gmc::{build_gmc, cauchy_diagnostic, moment_scan, strictly_decreasing, BaseDensity, Region, TorusBox, DEFAULT_SHARE_THRESHOLD};
use liouville::io::{field_table, histogram_table, measure_table, scaling_table, Table};
use liouville::ising::{critical_beta, scaling_ratio_check, spin_correlation_exact, Algorithm, IsingChain};
use liouville::kernel::{LogKernelSpec, MollifierSpec};
use liouville::lqft::{InsertionSet, LqftParams, Lqft, RerootFunctional, VertexInsertion};
use liouville::multifractal::{estimate_zeta, seiberg_scan, structure_function, thick_level_dimension, thick_point_histogram};
use liouville::rng::derive;
use liouville::sphere::{Mobius, SphereGrid, SphereSampler, C};
use liouville::stats::{mean_stderr, Estimate};
use liouville::theorems::{girsanov_check, DMatrix, kahane_compare, CheckMode, ComparisonSetup, MassFunctional, VectorFunctional};
use serde::Serialize;
use serde_json::{json, Value as Json};
use std::collections::BTreeMap;
use toml::Value;

#[derive(Clone, Debug, Serialize)]
pub struct Est {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub exact: bool,
}

impl Est {
    pub fn mc(e: Estimate) -> Self {
        Est { value: e.value, stderr: Some(e.stderr), exact: false }
    }

    pub fn exact(v: f64) -> Self {
        Est { value: v, stderr: None, exact: true }
    }
}

#[derive(Default)]
pub struct Outcome {
    pub estimates: BTreeMap<String, Est>,
    pub verdicts: BTreeMap<String, String>,
    pub table: Option<Table>,
    pub extra: Json,
    pub lineage: Vec<(String, u64)>,
}

impl Outcome {
    fn est(&mut self, k: impl Into<String>, e: Est) {
        self.estimates.insert(k.into(), e);
    }

    fn verdict(&mut self, k: impl Into<String>, v: impl Into<String>) {
        self.verdicts.insert(k.into(), v.into());
    }
}

type Schema = Vec<(&'static str, Kind, Value)>;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub schema: fn() -> Schema,
    pub run: fn(&Config) -> CliResult<Outcome>,
}

fn i(v: i64) -> Value {
    Value::Integer(v)
}
fn f(v: f64) -> Value {
    Value::Float(v)
}
fn s(v: &str) -> Value {
    Value::String(v.into())
}
fn fl(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| f(*x)).collect())
}
fn il(v: &[i64]) -> Value {
    Value::Array(v.iter().map(|x| i(*x)).collect())
}
fn rows(v: &[&[f64]]) -> Value {
    Value::Array(v.iter().map(|r| fl(r)).collect())
}

fn with_seed(mut v: Schema) -> Schema {
    v.push(("seed", Kind::Int, i(1)));
    v
}

fn planar(c: &Config) -> (LogKernelSpec, GridSpec) {
    let side = c.f("side");
    (LogKernelSpec::planar(side), GridSpec { n: c.u("grid"), side })
}

fn field_sample(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let eps = c.f("eps");
    let opts = FieldOptions { quad_tol: c.f("field.quad_tol"), jitter_max: c.f("field.psd_jitter_max"), ..Default::default() };
    let x = sample_log_field(&k, &MollifierSpec::bump(eps), g, eps, c.u64("seed"), opts)?;
    let mut o = Outcome::default();
    o.est("mean", Est::mc(mean_stderr(&x.values)));
    o.est("variance", Est::exact(x.variance[0]));
    o.table = Some(field_table(&x));
    Ok(o)
}

fn sphere_gff(c: &Config) -> CliResult<Outcome> {
    let x = liouville::sphere::sample_sphere_gff(c.u("lqft.grid_resolution"), c.u64("seed"))?;
    let mut o = Outcome::default();
    let tot: f64 = x.cell.iter().sum();
    o.est("weighted_mean", Est::exact(x.values.iter().zip(&x.cell).map(|(v, w)| v * w).sum::<f64>() / tot));
    o.table = Some(field_table(&x));
    Ok(o)
}

fn gmc_build(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let eps = c.f("eps");
    let x = sample_log_field(&k, &MollifierSpec::bump(eps), g, eps, c.u64("seed"), FieldOptions::default())?;
    let m = build_gmc(&x, c.f("gamma"), BaseDensity::Uniform)?;
    let mut o = Outcome::default();
    o.est("total_mass", Est::exact(m.total_mass));
    o.table = Some(measure_table(&m));
    Ok(o)
}

fn gmc_moments(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let side = g.side;
    let ball = Region::Ball { center: [side / 2.0, side / 2.0], radius: c.f("radius") };
    let r = moment_scan(&k, c.f("gamma"), ball, &c.fl("q"), g, c.f("eps"), c.u("samples"), c.u64("seed"), c.f("share_threshold"))?;
    let mut o = Outcome::default();
    let mut t = Table::new(json!({"kind": "gmc-moments", "area": r.area}), &["q", "moment", "stderr", "max_share", "block_share", "tail_index"]);
    for m in &r.reports {
        o.est(format!("moment_q{}", m.q), Est::mc(m.estimate));
        o.verdict(format!("q{}", m.q), if m.divergent { "divergent" } else { "stable" });
        t.push(vec![m.q, m.estimate.value, m.estimate.stderr, m.max_share, m.block_share, m.tail_index]);
    }
    o.table = Some(t);
    Ok(o)
}

fn gmc_cauchy(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let ladder: Vec<(f64, f64)> = c.fl("eps_ladder").iter().map(|&e| (e, e / 2.0)).collect();
    let steps = cauchy_diagnostic(&k, c.f("gamma"), TorusBox { grid: g, cells: c.u("box_cells") }, &ladder, c.u("samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    let mut t = Table::new(json!({"kind": "gmc-cauchy"}), &["eps", "eps_prime", "l2", "stderr", "oracle"]);
    for st in &steps {
        o.est(format!("l2_eps{}", st.eps), Est::mc(st.estimate));
        t.push(vec![st.eps, st.eps_prime, st.estimate.value, st.estimate.stderr, st.oracle]);
    }
    let e: Vec<Estimate> = steps.iter().map(|s| s.estimate).collect();
    o.verdict("strictly_decreasing", strictly_decreasing(&e, 2.0).to_string());
    o.table = Some(t);
    Ok(o)
}

fn girsanov(c: &Config) -> CliResult<Outcome> {
    let rows = c.rows("cov");
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Usage("key \"cov\" must be a square matrix".into()));
    }
    let cov = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    let shift = c.u("shift");
    let mode = match c.s("mode") {
        "quadrature" => CheckMode::Quadrature,
        "monte-carlo" => CheckMode::MonteCarlo,
        m => return Err(CliError::Usage(format!("key \"mode\": unknown mode {m:?}"))),
    };
    let r = girsanov_check(&cov, shift, c.f("lambda"), &VectorFunctional::SquaredNorm, mode, c.u("samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    let tag = |e: Estimate| if e.stderr == 0.0 { Est::exact(e.value) } else { Est::mc(e) };
    o.est("lhs", tag(r.lhs));
    o.est("rhs", tag(r.rhs));
    Ok(o)
}

fn kahane(c: &Config) -> CliResult<Outcome> {
    let side = c.f("side");
    let ky = LogKernelSpec::planar(side);
    let kz = LogKernelSpec::planar(side).scaled(c.f("dominating_scale"));
    let setup = ComparisonSetup { grid: GridSpec { n: c.u("grid"), side }, eps: c.f("eps"), moll: MollifierSpec::bump(1.0), base: BaseDensity::Uniform };
    let func = match c.s("functional") {
        "square" => MassFunctional::Square,
        "sqrt" => MassFunctional::Sqrt,
        m => return Err(CliError::Usage(format!("key \"functional\": unknown functional {m:?}"))),
    };
    let r = kahane_compare(&ky, &kz, func, &setup, c.u("samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    o.est("lhs", Est::mc(r.lhs));
    o.est("rhs", Est::mc(r.rhs));
    o.verdict("inequality_holds", r.verdict.to_string());
    o.verdict("functional", if r.convex { "convex" } else { "concave" });
    Ok(o)
}

fn zeta_fit(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let gamma = c.f("gamma");
    let fits = estimate_zeta(&k, gamma, &c.fl("q"), &c.fl("radii"), g, c.f("eps"), c.u("samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    for fit in &fits {
        let target = structure_function(2, gamma, fit.q);
        o.est(format!("slope_q{}", fit.q), Est::mc(Estimate { value: fit.slope, stderr: fit.fit.slope_stderr }));
        o.est(format!("zeta_q{}", fit.q), Est::exact(target));
        o.verdict(format!("q{}", fit.q), if fit.ci_meets(target, 0.1) { "consistent" } else { "inconsistent" });
    }
    o.table = Some(scaling_table(gamma, &fits));
    Ok(o)
}

fn thick_points(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let h = thick_point_histogram(&k, c.f("gamma"), c.u("levels"), g, c.f("eta"), c.u("samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    o.est("mean_finest", Est::mc(h.finest_mean()));
    o.est("tail_slope", Est::mc(Estimate { value: h.tail_slope.slope, stderr: h.tail_slope.slope_stderr }));
    o.est("tail_rate_bound", Est::exact(h.tail_rate_bound));
    o.table = Some(histogram_table(&h));
    Ok(o)
}

fn level_dimension(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let d = thick_level_dimension(&k, c.f("gamma"), c.f("q"), &c.ul("levels"), g, c.f("delta"), c.u64("seed"))?;
    let mut o = Outcome::default();
    o.est("dimension", Est::mc(Estimate { value: d.dimension, stderr: d.fit.slope_stderr }));
    let mut t = Table::new(json!({"kind": "level-dimension", "empty_regime": d.empty_regime}), &["level", "count"]);
    for (l, n) in d.levels.iter().zip(&d.counts) {
        t.push(vec![*l as f64, *n as f64]);
    }
    o.table = Some(t);
    Ok(o)
}

fn seiberg(c: &Config) -> CliResult<Outcome> {
    let (k, g) = planar(c);
    let scans = seiberg_scan(&k, c.f("gamma"), &c.fl("alpha"), g, c.f("eps"), c.u("levels"), c.u("samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    let mut t = Table::new(json!({"kind": "seiberg-scan"}), &["alpha", "realization", "slope"]);
    for sc in &scans {
        o.est(format!("slope_alpha{}", sc.alpha), Est::mc(mean_stderr(&sc.slopes)));
        o.est(format!("predicted_alpha{}", sc.alpha), Est::exact(sc.predicted_slope));
        let conv = sc.verdicts.iter().filter(|v| **v == liouville::multifractal::Verdict::Convergent).count();
        let div = sc.verdicts.iter().filter(|v| **v == liouville::multifractal::Verdict::Divergent).count();
        o.verdict(format!("alpha{}", sc.alpha), format!("{conv} convergent, {div} divergent of {}", sc.verdicts.len()));
        for (r, sl) in sc.slopes.iter().enumerate() {
            t.push(vec![sc.alpha, r as f64, *sl]);
        }
    }
    o.table = Some(t);
    Ok(o)
}

fn insertions(c: &Config, gamma: f64) -> CliResult<InsertionSet> {
    let rows = c.rows("insertions");
    let mut pts = Vec::new();
    for r in rows {
        match r.len() {
            2 => pts.push(VertexInsertion { z: C::new(r[0], r[1]), alpha: gamma }),
            3 => pts.push(VertexInsertion { z: C::new(r[0], r[1]), alpha: r[2] }),
            _ => return Err(CliError::Usage("key \"insertions\": each entry is [re, im] or [re, im, alpha]".into())),
        }
    }
    Ok(InsertionSet::new(pts)?)
}

fn lqft_schema(mut v: Schema) -> Schema {
    v.extend([
        ("gamma", Kind::Float, f((8.0f64 / 3.0).sqrt())),
        ("mu", Kind::Float, f(1.0)),
        ("insertions", Kind::Rows, rows(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]])),
        ("lqft.grid_resolution", Kind::Int, i(512)),
        ("lqft.mc_samples", Kind::Int, i(1000)),
    ]);
    with_seed(v)
}

fn lqft_common(c: &Config) -> CliResult<(LqftParams, InsertionSet, Lqft)> {
    let p = LqftParams::new(c.f("gamma"), c.f("mu"))?;
    let ins = insertions(c, p.gamma)?;
    let lq = Lqft::new(c.u("lqft.grid_resolution"))?;
    Ok((p, ins, lq))
}

fn lqft_header(c: &Config, ins: &InsertionSet) -> Json {
    json!({
        "insertions": ins.points.iter().map(|p| [p.z.re, p.z.im, p.alpha]).collect::<Vec<_>>(),
        "gamma": c.f("gamma"),
        "mu": c.f("mu"),
        "seed": c.u64("seed"),
    })
}

fn lqft_corr(c: &Config) -> CliResult<Outcome> {
    let (p, ins, lq) = lqft_common(c)?;
    let r = lq.correlation(&ins, &p, c.u("lqft.mc_samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    o.est("estimate", Est::mc(Estimate { value: r.value, stderr: r.stderr }));
    o.est("ess", Est::exact(r.ess));
    o.est("s", Est::exact(r.s));
    if let Some(w) = &r.warning {
        o.verdict("precision", w.clone());
    }
    let mut h = lqft_header(c, &ins);
    h["estimate"] = json!(r.value);
    h["stderr"] = json!(r.stderr);
    h["ess"] = json!(r.ess);
    o.extra = h;
    Ok(o)
}

fn mobius(c: &Config) -> CliResult<Mobius> {
    Ok(match c.s("map") {
        "identity" => Mobius::identity(),
        "rotation" => Mobius::rotation(c.f("theta")),
        "scaling" => Mobius::scaling(c.f("lambda")),
        "general" => {
            let m = c.fl("coefficients");
            if m.len() != 8 {
                return Err(CliError::Usage("key \"coefficients\": expected [a_re, a_im, b_re, b_im, c_re, c_im, d_re, d_im]".into()));
            }
            Mobius::new(C::new(m[0], m[1]), C::new(m[2], m[3]), C::new(m[4], m[5]), C::new(m[6], m[7]))?
        }
        m => return Err(CliError::Usage(format!("key \"map\": unknown map {m:?}"))),
    })
}

fn lqft_kpz(c: &Config) -> CliResult<Outcome> {
    let psi = mobius(c)?;
    let (p, ins, lq) = lqft_common(c)?;
    let r = lq.kpz(&ins, &psi, &p, c.u("lqft.mc_samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    o.est("ratio", Est::mc(Estimate { value: r.ratio, stderr: r.stderr }));
    o.est("fixed_grid_ratio", Est::mc(Estimate { value: r.fixed_grid_ratio, stderr: r.fixed_grid_stderr }));
    o.est("weight_factor", Est::exact(r.weight_factor));
    o.verdict("ratio_within_4_stderr", (r.z_score() < 4.0).to_string());
    o.extra = lqft_header(c, &ins);
    Ok(o)
}

fn lqft_measure(c: &Config) -> CliResult<Outcome> {
    let (p, ins, lq) = lqft_common(c)?;
    let n = c.u("lqft.mc_samples");
    let grid: &SphereGrid = lq.grid();
    let upper: Vec<bool> = grid.unit.iter().map(|u| u[2] > 0.0).collect();
    let mut mean_cells = vec![0.0; grid.len()];
    let (mut fv, mut ws) = (Vec::with_capacity(n), Vec::with_capacity(n));
    lq.for_each_unit_volume(&ins, p.gamma, n, c.u64("seed"), |_, m, w| {
        fv.push(m.iter().zip(&upper).filter(|(_, u)| **u).map(|(v, _)| v).sum::<f64>());
        ws.push(w);
        mean_cells.iter_mut().zip(m).for_each(|(a, b)| *a += w * b);
    })?;
    let tot: f64 = ws.iter().sum();
    let mut o = Outcome::default();
    o.est("upper_hemisphere_mass", Est::mc(liouville::stats::weighted_mean(&ws, &fv)));
    let e = liouville::stats::ess(&ws);
    o.est("ess", Est::exact(e));
    if e < liouville::lqft::UNIT_VOLUME_MIN_ESS {
        o.verdict("precision", format!("effective sample size {e:.1} below {}", liouville::lqft::UNIT_VOLUME_MIN_ESS));
    }
    let pts = grid.points();
    let mut t = Table::new(json!({"kind": "unit-volume-mean", "gamma": p.gamma, "s": ins.s(p.gamma)}), &["x", "y", "mean_mass"]);
    for (z, m) in pts.iter().zip(&mean_cells) {
        t.push(vec![z.re, z.im, m / tot]);
    }
    o.table = Some(t);
    Ok(o)
}

fn reroot(c: &Config) -> CliResult<Outcome> {
    let gamma = c.f("gamma");
    let lq = Lqft::new(c.u("lqft.grid_resolution"))?;
    let r = c.f("cap_radius");
    let funcs = [RerootFunctional::TotalMass, RerootFunctional::CapMass { radius: r }, RerootFunctional::CapMassSquared { radius: r }];
    let rep = lq.reroot(gamma, &funcs, c.u("lqft.mc_samples"), c.u64("seed"))?;
    let mut o = Outcome::default();
    for (name, l) in ["total_mass", "cap_mass", "cap_mass_squared"].iter().zip(&rep.lines) {
        o.est(format!("{name}_lhs"), Est::mc(l.lhs));
        o.est(format!("{name}_rhs"), Est::mc(l.rhs));
        o.verdict(*name, if l.rejected { "rejected at 3 sigma" } else { "not rejected" });
    }
    o.lineage = vec![("lhs".into(), derive(c.u64("seed"), 1)), ("rhs".into(), derive(c.u64("seed"), 2))];
    Ok(o)
}

fn points(c: &Config) -> CliResult<Vec<C>> {
    c.rows("points")
        .iter()
        .map(|r| if r.len() == 2 { Ok(C::new(r[0], r[1])) } else { Err(CliError::Usage("key \"points\": each entry is [x, y]".into())) })
        .collect()
}

fn ising_exact(c: &Config) -> CliResult<Outcome> {
    let pts = points(c)?;
    let v = spin_correlation_exact(&pts)?;
    let mut o = Outcome::default();
    o.est("correlation", Est::exact(v));
    let mut t = Table::new(json!({"kind": "ising-exact", "points": pts.len()}), &["n", "correlation"]);
    t.push(vec![pts.len() as f64, v]);
    o.table = Some(t);
    Ok(o)
}

fn ising_mc(c: &Config) -> CliResult<Outcome> {
    let algo = match c.s("algorithm") {
        "cluster" => Algorithm::Cluster,
        "single-site" => Algorithm::SingleSite,
        a => return Err(CliError::Usage(format!("key \"algorithm\": unknown algorithm {a:?}"))),
    };
    let beta = if c.s("beta_mode") == "critical" { critical_beta() } else { c.f("beta") };
    let n = c.u("half_width");
    let mut ch = IsingChain::new(n, beta, algo, c.u64("seed"))?;
    let sweeps = c.u("sweeps");
    for _ in 0..sweeps / 10 {
        ch.sweep();
    }
    let maxd = n as i64;
    let mut mag = Vec::with_capacity(sweeps);
    let mut corr = vec![0.0; maxd as usize + 1];
    for _ in 0..sweeps {
        ch.sweep();
        mag.push(ch.state.magnetization());
        let s0 = ch.state.at(0, 0) as f64;
        for (d, cc) in corr.iter_mut().enumerate() {
            *cc += s0 * ch.state.at(d as i64, 0) as f64;
        }
    }
    let mut o = Outcome::default();
    o.est("magnetization", Est::mc(batch_means(&mag, 20)));
    let mut t = Table::new(json!({"kind": "ising-mc", "beta": beta, "half_width": n}), &["distance", "correlation"]);
    for (d, cc) in corr.iter().enumerate() {
        t.push(vec![d as f64, cc / sweeps as f64]);
    }
    o.table = Some(t);
    Ok(o)
}

/// Mean with a stderr from `b` batch means, which absorbs autocorrelation.
fn batch_means(x: &[f64], b: usize) -> Estimate {
    let per = (x.len() / b).max(1);
    let means: Vec<f64> = x.chunks(per).filter(|ch| ch.len() == per).map(|ch| ch.iter().sum::<f64>() / per as f64).collect();
    let m = mean_stderr(&means);
    Estimate { value: x.iter().sum::<f64>() / x.len() as f64, stderr: m.stderr }
}

fn ising_scaling(c: &Config) -> CliResult<Outcome> {
    let p = points(c)?;
    if p.len() != 4 {
        return Err(CliError::Usage("key \"points\": exactly four points".into()));
    }
    let r = scaling_ratio_check(&[p[0], p[1], p[2], p[3]], c.u("half_width"), c.f("lattice_eps"), c.u("sweeps"), c.u64("seed"))?;
    let mut o = Outcome::default();
    o.est("lattice_ratio", Est::mc(r.lattice));
    o.est("continuum_ratio", Est::exact(r.continuum));
    o.verdict("within_10_percent", (r.relative_gap() < 0.1).to_string());
    Ok(o)
}

pub fn registry() -> Vec<Experiment> {
    let mut v = vec![
        Experiment {
            name: "field-sample",
            summary: "one realization of the mollified log-correlated field on a square grid",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(64)),
                    ("side", Kind::Float, f(1.0)),
                    ("eps", Kind::Float, f(1.0 / 16.0)),
                    ("field.quad_tol", Kind::Float, f(1e-10)),
                    ("field.psd_jitter_max", Kind::Float, f(1e-8)),
                ])
            },
            run: field_sample,
        },
        Experiment {
            name: "sphere-gff",
            summary: "one realization of the vanishing-mean GFF on the sphere grid",
            schema: || with_seed(vec![("lqft.grid_resolution", Kind::Int, i(512))]),
            run: sphere_gff,
        },
        Experiment {
            name: "gmc-build",
            summary: "chaos measure e^{gamma X - gamma^2 Var/2} dx for one field realization",
            schema: || with_seed(vec![("grid", Kind::Int, i(64)), ("side", Kind::Float, f(1.0)), ("eps", Kind::Float, f(1.0 / 16.0)), ("gamma", Kind::Float, f(1.0))]),
            run: gmc_build,
        },
        Experiment {
            name: "gmc-moments",
            summary: "moments of the mass of a ball with the dominant-realization divergence flag",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(64)),
                    ("side", Kind::Float, f(1.0)),
                    ("eps", Kind::Float, f(1.0 / 32.0)),
                    ("gamma", Kind::Float, f(1.0)),
                    ("radius", Kind::Float, f(0.25)),
                    ("q", Kind::FloatList, fl(&[2.0, 5.0])),
                    ("samples", Kind::Int, i(10000)),
                    ("share_threshold", Kind::Float, f(DEFAULT_SHARE_THRESHOLD)),
                ])
            },
            run: gmc_moments,
        },
        Experiment {
            name: "gmc-cauchy",
            summary: "L2 distance between chaos masses at scales eps and eps/2 on a torus box",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(128)),
                    ("side", Kind::Float, f(1.0)),
                    ("box_cells", Kind::Int, i(128)),
                    ("gamma", Kind::Float, f(0.8)),
                    ("eps_ladder", Kind::FloatList, fl(&[0.125, 0.0625, 0.03125])),
                    ("samples", Kind::Int, i(500)),
                ])
            },
            run: gmc_cauchy,
        },
        Experiment {
            name: "girsanov",
            summary: "both sides of the Gaussian change-of-measure identity for |x|^2",
            schema: || {
                with_seed(vec![
                    ("cov", Kind::Rows, rows(&[&[1.0, 0.3], &[0.3, 2.0]])),
                    ("shift", Kind::Int, i(0)),
                    ("lambda", Kind::Float, f(0.7)),
                    ("mode", Kind::Str, s("quadrature")),
                    ("samples", Kind::Int, i(10000)),
                ])
            },
            run: girsanov,
        },
        Experiment {
            name: "kahane",
            summary: "convex/concave comparison of chaos masses for dominated covariances",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(8)),
                    ("side", Kind::Float, f(1.0)),
                    ("eps", Kind::Float, f(0.25)),
                    ("dominating_scale", Kind::Float, f(1.5)),
                    ("functional", Kind::Str, s("square")),
                    ("samples", Kind::Int, i(4000)),
                ])
            },
            run: kahane,
        },
        Experiment {
            name: "zeta-fit",
            summary: "log-log fit of ball-mass moments against the multifractal structure function",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(256)),
                    ("side", Kind::Float, f(2.0)),
                    ("eps", Kind::Float, f(1.0 / 64.0)),
                    ("gamma", Kind::Float, f(0.5)),
                    ("q", Kind::FloatList, fl(&[2.0])),
                    ("radii", Kind::FloatList, fl(&[0.25, 0.125, 0.0625])),
                    ("samples", Kind::Int, i(50)),
                ])
            },
            run: zeta_fit,
        },
        Experiment {
            name: "thick-points",
            summary: "dyadic field ratio X/(n ln 2) under the chaos measure",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(256)),
                    ("side", Kind::Float, f(2.0)),
                    ("gamma", Kind::Float, f(1.0)),
                    ("levels", Kind::Int, i(6)),
                    ("eta", Kind::Float, f(0.5)),
                    ("samples", Kind::Int, i(20)),
                ])
            },
            run: thick_points,
        },
        Experiment {
            name: "level-dimension",
            summary: "box-counting exponent of a thick-point level set",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(256)),
                    ("side", Kind::Float, f(2.0)),
                    ("gamma", Kind::Float, f(1.0)),
                    ("q", Kind::Float, f(1.0)),
                    ("levels", Kind::IntList, il(&[3, 4, 5, 6])),
                    ("delta", Kind::Float, f(0.1)),
                ])
            },
            run: level_dimension,
        },
        Experiment {
            name: "seiberg-scan",
            summary: "shell growth of the integral of |x - y|^{-alpha gamma} against the chaos measure",
            schema: || {
                with_seed(vec![
                    ("grid", Kind::Int, i(256)),
                    ("side", Kind::Float, f(2.0)),
                    ("eps", Kind::Float, f(1.0 / 64.0)),
                    ("gamma", Kind::Float, f(1.0)),
                    ("alpha", Kind::FloatList, fl(&[1.0, 3.0])),
                    ("levels", Kind::Int, i(5)),
                    ("samples", Kind::Int, i(4)),
                ])
            },
            run: seiberg,
        },
        Experiment { name: "lqft-corr", summary: "vertex correlation on the sphere up to the global constant", schema: || lqft_schema(vec![]), run: lqft_corr },
        Experiment {
            name: "lqft-kpz",
            summary: "ratio test of the Mobius covariance rule of vertex correlations",
            schema: || {
                lqft_schema(vec![
                    ("map", Kind::Str, s("scaling")),
                    ("theta", Kind::Float, f(0.7)),
                    ("lambda", Kind::Float, f(2.0)),
                    ("coefficients", Kind::FloatList, fl(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0])),
                ])
            },
            run: lqft_kpz,
        },
        Experiment { name: "lqft-measure", summary: "unit-volume Liouville measure by weighted realizations", schema: || lqft_schema(vec![]), run: lqft_measure },
        Experiment {
            name: "reroot-test",
            summary: "both sides of the rerooting identity for the three-gamma measure",
            schema: || {
                with_seed(vec![
                    ("gamma", Kind::Float, f((8.0f64 / 3.0).sqrt())),
                    ("cap_radius", Kind::Float, f(0.5)),
                    ("lqft.grid_resolution", Kind::Int, i(512)),
                    ("lqft.mc_samples", Kind::Int, i(1000)),
                ])
            },
            run: reroot,
        },
        Experiment {
            name: "ising-exact",
            summary: "continuum critical Ising spin correlation from the balanced-sign sum",
            schema: || with_seed(vec![("points", Kind::Rows, rows(&[&[0.0, 0.0], &[1.0, 0.0]]))]),
            run: ising_exact,
        },
        Experiment {
            name: "ising-mc",
            summary: "plus-boundary lattice Ising chain: magnetization and axis correlations",
            schema: || {
                with_seed(vec![
                    ("half_width", Kind::Int, i(16)),
                    ("beta_mode", Kind::Str, s("critical")),
                    ("beta", Kind::Float, f(critical_beta())),
                    ("algorithm", Kind::Str, s("cluster")),
                    ("sweeps", Kind::Int, i(2000)),
                ])
            },
            run: ising_mc,
        },
        Experiment {
            name: "ising-scaling",
            summary: "lattice four-point ratio at the critical point against the continuum ratio",
            schema: || {
                with_seed(vec![
                    ("points", Kind::Rows, rows(&[&[-0.5, -0.5], &[0.5, -0.5], &[0.5, 0.5], &[-0.5, 0.5]])),
                    ("half_width", Kind::Int, i(64)),
                    ("lattice_eps", Kind::Float, f(1.0 / 16.0)),
                    ("sweeps", Kind::Int, i(2000)),
                ])
            },
            run: ising_scaling,
        },
    ];
    v.sort_by_key(|e| e.name);
    v
}

pub fn find(name: &str) -> Option<Experiment> {
    registry().into_iter().find(|e| e.name == name)
}

// keep the sphere sampler type reachable for callers building their own runs
#[allow(dead_code)]
fn _types(_: &SphereSampler) {}
