use liouville::ising::{critical_beta, exact_expectation, sample_ising, Algorithm, IsingChain};
use liouville::lqft::{gmc_sphere, InsertionSet, Lqft, LqftParams, VertexInsertion};
use liouville::sphere::{sample_sphere_gff, Mobius, C};
use liouville::stats::mean_stderr;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn pure_gravity() -> (f64, InsertionSet) {
    let g = (8.0f64 / 3.0).sqrt();
    (g, InsertionSet::uniform(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)], g).unwrap())
}

#[test]
fn enumeration_matches_both_chains_at_n1() {
    let beta = critical_beta();
    let corner = |s: &liouville::ising::SpinConfiguration| s.at(-1, -1) as f64 * s.at(1, 1) as f64;
    let exact_m = exact_expectation(1, beta, |s| s.magnetization()).unwrap();
    let exact_c = exact_expectation(1, beta, corner).unwrap();
    for algo in [Algorithm::SingleSite, Algorithm::Cluster] {
        let conf: Vec<_> = sample_ising(1, beta, 20_000, algo, 3).unwrap().step_by(4).collect();
        let m = mean_stderr(&conf.iter().map(|s| s.magnetization()).collect::<Vec<_>>());
        let k = mean_stderr(&conf.iter().map(corner).collect::<Vec<_>>());
        assert!((m.value - exact_m).abs() < 4.0 * m.stderr, "{algo:?} {m:?} {exact_m}");
        assert!((k.value - exact_c).abs() < 4.0 * k.stderr, "{algo:?} {k:?} {exact_c}");
    }
}

#[test]
fn infinite_temperature_ignores_the_boundary() {
    let m: Vec<f64> = sample_ising(6, 0.0, 4000, Algorithm::SingleSite, 8).unwrap().map(|s| s.magnetization()).collect();
    let e = mean_stderr(&m);
    assert!(e.value.abs() < 4.0 * e.stderr, "{e:?}");
}

#[test]
fn plus_boundary_magnetizes_the_critical_box() {
    let mut ch = IsingChain::new(32, critical_beta(), Algorithm::Cluster, 12).unwrap();
    for _ in 0..200 {
        ch.sweep();
    }
    // batch means absorb the autocorrelation of the chain
    let batches: Vec<f64> = (0..40)
        .map(|_| {
            (0..25)
                .map(|_| {
                    ch.sweep();
                    ch.state.magnetization()
                })
                .sum::<f64>()
                / 25.0
        })
        .collect();
    let e = mean_stderr(&batches);
    assert!(e.value > 3.0 * e.stderr, "{e:?}");
}

#[test]
fn correlation_scales_as_a_power_of_mu() {
    let (g, ins) = pure_gravity();
    let lq = Lqft::new(256).unwrap();
    let a = lq.correlation(&ins, &LqftParams::new(g, 1.0).unwrap(), 300, 5).unwrap();
    let b = lq.correlation(&ins, &LqftParams::new(g, 4.0).unwrap(), 300, 5).unwrap();
    // same realizations, so the ratio is exactly μ^{-s}
    assert!((b.value / a.value - 4f64.powf(-a.s)).abs() < 1e-12 * 4f64.powf(-a.s));
}

#[test]
fn identity_map_gives_ratio_one() {
    let (g, ins) = pure_gravity();
    let r = Lqft::new(256).unwrap().kpz(&ins, &Mobius::identity(), &LqftParams::new(g, 1.0).unwrap(), 50, 2).unwrap();
    assert_eq!(r.ratio, 1.0);
}

#[test]
fn sphere_chaos_has_mean_volume_four_pi() {
    let totals: Vec<f64> = (0..400).map(|s| gmc_sphere(&sample_sphere_gff(256, s).unwrap(), 0.5).unwrap().total_mass).collect();
    let e = mean_stderr(&totals);
    assert!((e.value - 4.0 * PI).abs() < 4.0 * e.stderr, "{e:?}");
}

#[test]
fn unit_volume_weights_flatten_as_s_vanishes() {
    // α summing to just above 2Q makes s small, so Z^{-s} is nearly constant
    let g = 1.0;
    let q = g / 2.0 + 2.0 / g;
    let a = (2.0 * q + 0.015) / 3.0;
    let ins = InsertionSet::new([c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)].iter().map(|&z| VertexInsertion { z, alpha: a }).collect()).unwrap();
    assert!(ins.s(g) < 0.02);
    let e = Lqft::new(256).unwrap().unit_volume(&ins, g, 200, 6).unwrap();
    assert!(e.ess > 180.0, "ess {}", e.ess);
}
