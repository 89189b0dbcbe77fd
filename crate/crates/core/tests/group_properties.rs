//! Group law, gauge and left-invariant field properties on random inputs.

use amv_core::carnot::{AnalyticField, CarnotStep2, GPoint, Gauge};
use amv_core::{Exact, ExactGroup, ExactGroupPoint};
use num_bigint::BigInt;
use proptest::prelude::*;

fn groups() -> Vec<CarnotStep2<f64>> {
    vec![
        CarnotStep2::heisenberg(1).unwrap(),
        CarnotStep2::heisenberg(2).unwrap(),
        // Free step-2 group on three generators.
        CarnotStep2::from_triples(3, 3, &[(0, 0, 1, 1.0), (1, 0, 2, 1.0), (2, 1, 2, 1.0)]).unwrap(),
        // A non-integer bracket.
        CarnotStep2::from_triples(2, 2, &[(0, 0, 1, 0.75), (1, 0, 1, -2.5)]).unwrap(),
    ]
}

fn point(g: &CarnotStep2<f64>, c: &[f64]) -> GPoint<f64> {
    GPoint::from_coords(g.v1(), &c[..g.dim()])
}

fn gauges() -> [Gauge<f64>; 3] {
    [Gauge::Koranyi, Gauge::folland(), Gauge::scaled(0.3).unwrap()]
}

fn diff(a: &GPoint<f64>, b: &GPoint<f64>) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn group_axioms(gi in 0usize..4, a in coords(), b in coords(), c in coords()) {
        let g = &groups()[gi];
        let (x, y, z) = (point(g, &a), point(g, &b), point(g, &c));
        let lhs = g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap();
        let rhs = g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap();
        prop_assert!(diff(&lhs, &rhs) <= 1e-12);
        let e = g.identity();
        prop_assert_eq!(g.multiply(&x, &e).unwrap(), x.clone());
        prop_assert_eq!(g.multiply(&e, &x).unwrap(), x.clone());
        let inv = g.inverse(&x);
        prop_assert!(diff(&g.multiply(&x, &inv).unwrap(), &e) <= 1e-12);
        prop_assert!(diff(&g.multiply(&inv, &x).unwrap(), &e) <= 1e-12);
    }

    #[test]
    fn gauges_are_pseudonorms(gi in 0usize..4, a in coords(), t in 0.05f64..5.0) {
        let g = &groups()[gi];
        let x = point(g, &a);
        for gauge in gauges() {
            let rho = gauge.value(&x);
            prop_assert!(rho > 0.0);
            let scaled = gauge.value(&g.dilate(&t, &x).unwrap());
            prop_assert!((scaled - t * rho).abs() <= 1e-12 * t * rho);
            prop_assert_eq!(gauge.value(&g.inverse(&x)), rho);
            prop_assert_eq!(gauge.value(&g.identity()), 0.0);
        }
    }

    #[test]
    fn distance_is_left_invariant(gi in 0usize..4, a in coords(), b in coords(), c in coords()) {
        let g = &groups()[gi];
        let (x, y, p) = (point(g, &a), point(g, &b), point(g, &c));
        for gauge in gauges() {
            let d = g.distance(&gauge, &x, &y).unwrap();
            let moved = g.distance(&gauge, &g.multiply(&p, &x).unwrap(), &g.multiply(&p, &y).unwrap()).unwrap();
            prop_assert!((d - moved).abs() <= 1e-12 * d.max(1.0), "{d} vs {moved}");
            prop_assert!((d - g.distance(&gauge, &y, &x).unwrap()).abs() <= 1e-12 * d.max(1.0));
        }
    }

    /// `X_j` differentiates along `s -> x exp(s e_j)`, and commutes with left
    /// translation: `X_j (u o L_p)(x) = (X_j u)(p x)`.
    #[test]
    fn left_fields_by_finite_differences(gi in 0usize..4, a in coords(), c in coords(), k in 0usize..3) {
        let g = &groups()[gi];
        let (x, p) = (point(g, &a), point(g, &c));
        let mut powers = vec![0; g.dim()];
        powers[0] = 2;
        powers[g.dim() - 1] += 1;
        let u = match k {
            0 => AnalyticField::horizontal_norm_sq(g.v1(), g.v2()),
            1 => AnalyticField::monomial(0.7, powers),
            _ => AnalyticField::gauge_power(g.v1(), 16.0, 2.0),
        };
        let h = 1e-5;
        let px = g.multiply(&p, &x).unwrap();
        for j in 0..g.v1() {
            let mut step = vec![0.0; g.dim()];
            step[j] = h;
            let fwd = point(g, &step);
            step[j] = -h;
            let back = point(g, &step);
            let along = |f: &dyn Fn(&GPoint<f64>) -> f64| {
                (f(&g.multiply(&x, &fwd).unwrap()) - f(&g.multiply(&x, &back).unwrap())) / (2.0 * h)
            };
            let exact = g.left_field(j, &u, &x).unwrap();
            let fd = along(&|q| u.value(&q.coords()));
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "X_{j}: {fd} vs {exact}");
            let moved = along(&|q| u.value(&g.multiply(&p, q).unwrap().coords()));
            let at_px = g.left_field(j, &u, &px).unwrap();
            prop_assert!((moved - at_px).abs() <= 1e-5 * (1.0 + at_px.abs()), "moved X_{j}: {moved} vs {at_px}");
        }
    }

    #[test]
    fn exact_dilations_and_law(
        a in prop::collection::vec(-20i64..20, 3),
        b in prop::collection::vec(-20i64..20, 3),
        c in prop::collection::vec(-20i64..20, 3),
        t in 1i64..9,
    ) {
        let g = ExactGroup::heisenberg(1).unwrap();
        let q = |n: i64| Exact::new(BigInt::from(n), BigInt::from(4));
        let pt = |v: &[i64]| ExactGroupPoint::new(vec![q(v[0]), q(v[1])], vec![q(v[2])]);
        let (x, y, z) = (pt(&a), pt(&b), pt(&c));
        prop_assert_eq!(
            g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap(),
            g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap()
        );
        // Dilations are automorphisms.
        let s = Exact::new(BigInt::from(t), BigInt::from(3));
        prop_assert_eq!(
            g.dilate(&s, &g.multiply(&x, &y).unwrap()).unwrap(),
            g.multiply(&g.dilate(&s, &x).unwrap(), &g.dilate(&s, &y).unwrap()).unwrap()
        );
        prop_assert_eq!(g.multiply(&x, &g.inverse(&x)).unwrap(), g.identity());
    }
}
