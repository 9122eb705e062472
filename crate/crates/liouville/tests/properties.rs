use liouville::field::{sample_log_field, FieldOptions, GridSpec};
use liouville::gmc::{build_gmc, BaseDensity};
use liouville::ising::{spin_correlation_exact, spin_mobius_check};
use liouville::kernel::{LogKernelSpec, MollifierSpec};
use liouville::lqft::{gamma_factor, log_prefactor, lqft_constants, seiberg_check, InsertionSet, VertexInsertion};
use liouville::sphere::{sample_sphere_gff, Mobius, C};
use liouville::theorems::{girsanov_check, CheckMode, DMatrix, VectorFunctional};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = C> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| C::new(x, y))
}

/// Points pairwise at least 0.05 apart, so the formulas stay well conditioned.
fn separated(n: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec(point(), n).prop_filter("separated", |p| {
        (0..p.len()).all(|i| (0..i).all(|j| (p[i] - p[j]).norm() > 0.05))
    })
}

fn mobius() -> impl Strategy<Value = Mobius> {
    (point(), point(), point(), point())
        .prop_filter("invertible", |(a, b, c, d)| (a * d - b * c).norm() > 0.1)
        .prop_map(|(a, b, c, d)| Mobius::new(a, b, c, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn strict_gate_implies_soft_gate(gamma in 0.1..1.99f64, alphas in prop::collection::vec(0.0..4.5f64, 1..6)) {
        let pts: Vec<VertexInsertion> = alphas.iter().enumerate().map(|(i, &a)| VertexInsertion { z: C::new(i as f64, 0.5 * i as f64), alpha: a }).collect();
        let ins = InsertionSet::new(pts).unwrap();
        let v = seiberg_check(&ins, gamma);
        prop_assert!(!v.strict() || v.soft());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gamma_prefactor_times_mu_power_is_constant(s in 0.05..3.0f64, mu in 0.01..50.0f64) {
        let r = gamma_factor(s, mu) * mu.powf(s) / gamma_factor(s, 1.0);
        prop_assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volume_vertex_has_weight_one(gamma in 0.01..1.999f64) {
        let k = lqft_constants(gamma).unwrap();
        prop_assert!((k.weight(gamma) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn prefactor_ignores_insertion_order(pts in separated(4), alphas in prop::collection::vec(0.1..1.5f64, 4), rot in 0usize..4) {
        let ins: Vec<VertexInsertion> = pts.iter().zip(&alphas).map(|(&z, &alpha)| VertexInsertion { z, alpha }).collect();
        let mut other = ins.clone();
        other.rotate_left(rot);
        other.swap(0, 3);
        let a = log_prefactor(&InsertionSet::new(ins).unwrap(), 1.2).unwrap();
        let b = log_prefactor(&InsertionSet::new(other).unwrap(), 1.2).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spin_correlation_is_positive_and_symmetric(pts in separated(6), rot in 1usize..6) {
        let a = spin_correlation_exact(&pts).unwrap();
        let mut q = pts.clone();
        q.rotate_left(rot);
        q.swap(0, 1);
        prop_assert!(a > 0.0);
        prop_assert_eq!(a, spin_correlation_exact(&q).unwrap());
    }

    #[test]
    fn two_point_closed_form(p in separated(2)) {
        let v = spin_correlation_exact(&p).unwrap();
        prop_assert!((v / (p[0] - p[1]).norm().powf(-0.25) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mobius_covariance_of_spins(pts in separated(4), psi in mobius()) {
        // keep images away from infinity and from each other
        let imgs: Vec<Option<C>> = pts.iter().map(|&z| psi.apply(z)).collect();
        prop_assume!(imgs.iter().all(|w| w.is_some_and(|w| w.norm() < 1e3)));
        let w: Vec<C> = imgs.into_iter().map(Option::unwrap).collect();
        prop_assume!((0..4).all(|i| (0..i).all(|j| (w[i] - w[j]).norm() > 1e-3)));
        let r = spin_mobius_check(&pts, &psi).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-10, "ratio {}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn girsanov_quadrature_is_exact(
        d in 1usize..4,
        entries in prop::collection::vec(-1.0..1.0f64, 9),
        lambda in -1.5..1.5f64,
        w in prop::collection::vec(-0.7..0.7f64, 3),
        which in 0usize..5,
    ) {
        let a = DMatrix::from_fn(d, d, |i, j| entries[i * 3 + j]);
        let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.05;
        let w = w[..d].to_vec();
        let f = match which {
            0 => VectorFunctional::SquaredNorm,
            1 => VectorFunctional::ExpLinear(w),
            2 => VectorFunctional::CosLinear(w),
            3 => VectorFunctional::Product(0, d - 1),
            _ => VectorFunctional::Coordinate(0),
        };
        let r = girsanov_check(&cov, d - 1, lambda, &f, CheckMode::Quadrature, 0, 0).unwrap();
        prop_assert!((r.lhs.value - r.rhs.value).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn sphere_field_has_zero_weighted_mean(seed in 0u64..1_000_000) {
        let f = sample_sphere_gff(128, seed).unwrap();
        let tot: f64 = f.cell.iter().sum();
        let m: f64 = f.values.iter().zip(&f.cell).map(|(v, w)| v * w).sum::<f64>() / tot;
        prop_assert!(m.abs() < 1e-10);
    }

    #[test]
    fn same_seed_same_field_and_measure(seed in 0u64..1_000_000, gamma in 0.2..1.9f64) {
        let k = LogKernelSpec::planar(1.0);
        let g = GridSpec { n: 16, side: 1.0 };
        let a = sample_log_field(&k, &MollifierSpec::bump(1.0), g, 0.125, seed, FieldOptions::default()).unwrap();
        let b = sample_log_field(&k, &MollifierSpec::bump(1.0), g, 0.125, seed, FieldOptions::default()).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        let ma = build_gmc(&a, gamma, BaseDensity::Uniform).unwrap();
        let mb = build_gmc(&b, gamma, BaseDensity::Uniform).unwrap();
        prop_assert_eq!(ma.weights, mb.weights);
    }
}
