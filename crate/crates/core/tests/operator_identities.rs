//! Randomized checks of the exact operator identities on finite spaces.

use amv_core::mmspace::{check_identities, Averaging, FiniteMMSpace, MetricMeasure, Radius};
use amv_core::{Exact, MMSpace};
use num_bigint::BigInt;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    space: MMSpace,
    u: Vec<f64>,
    v: Vec<f64>,
    r: f64,
}

/// Random symmetric distances (no triangle inequality), masses in `[0.1, 10]`.
fn instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n * (n - 1) / 2),
            prop::collection::vec(0.1f64..10.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
            0.05f64..1.2,
        )
            .prop_map(move |(upper, mass, u, v, r)| {
                let mut dist = vec![0.0; n * n];
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        dist[i * n + j] = upper[k];
                        dist[j * n + i] = upper[k];
                        k += 1;
                    }
                }
                Instance { space: FiniteMMSpace::with_index_ids(dist, mass).unwrap(), u, v, r }
            })
    })
}

const TOL: f64 = 1e-12;

fn sum(space: &MMSpace, f: &[f64], g: &[f64]) -> (f64, f64) {
    let m = space.masses();
    let total = (0..f.len()).map(|i| f[i] * g[i] * m[i]).sum();
    let size = (0..f.len()).map(|i| (f[i] * g[i] * m[i]).abs()).sum();
    (total, size)
}

fn close(a: f64, b: f64, size: f64) -> bool {
    (a - b).abs() <= TOL * size.max(f64::MIN_POSITIVE)
}

fn sup(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, t| m.max(t.abs()))
}

impl Instance {
    /// Rounding scale of an integrated identity, from the inputs alone.
    fn global(&self) -> f64 {
        sup(&self.u) * sup(&self.v) * self.space.masses().iter().sum::<f64>() / (self.r * self.r)
    }

    fn local(&self) -> f64 {
        sup(&self.u) * sup(&self.v) / (self.r * self.r)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn green_identity(c in instance(40)) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let (l, ls) = sum(&c.space, &c.v, &a.laplacian(&c.u).unwrap());
        let (r, rs) = sum(&c.space, &c.u, &a.adjoint_laplacian(&c.v).unwrap());
        prop_assert!(close(l, r, (ls + rs).max(c.global())), "{l} vs {r}");
    }

    #[test]
    fn symmetrized_laplacian_splits(c in instance(40)) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let sym = a.sym_laplacian(&c.u).unwrap();
        let lap = a.laplacian(&c.u).unwrap();
        let adj = a.adjoint_laplacian(&c.u).unwrap();
        let adj1 = a.adjoint_laplacian(&vec![1.0; c.u.len()]).unwrap();
        let r2 = c.r * c.r;
        for x in 0..c.u.len() {
            let floor = sup(&c.u) * (2.0 + (adj1[x] * r2).abs()) / r2;
            let scale = (lap[x].abs() + adj[x].abs() + (c.u[x] * adj1[x]).abs()).max(floor);
            let rhs = 0.5 * (lap[x] + adj[x] - c.u[x] * adj1[x]);
            prop_assert!(close(sym[x], rhs, scale), "at {x}: {} vs {rhs}", sym[x]);
        }
    }

    #[test]
    fn product_rule(c in instance(40)) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let uv: Vec<f64> = c.u.iter().zip(&c.v).map(|(p, q)| p * q).collect();
        let lhs = a.laplacian(&uv).unwrap();
        let lu = a.laplacian(&c.u).unwrap();
        let lv = a.laplacian(&c.v).unwrap();
        let e = a.energy_density(&c.u, &c.v).unwrap();
        let scale = (0..uv.len())
            .map(|x| lhs[x].abs() + (c.u[x] * lv[x]).abs() + 2.0 * e[x].abs() + (c.v[x] * lu[x]).abs())
            .fold(c.local(), f64::max);
        for x in 0..uv.len() {
            let rhs = c.u[x] * lv[x] + 2.0 * e[x] + c.v[x] * lu[x];
            prop_assert!(close(lhs[x], rhs, scale), "at {x}");
        }
    }

    #[test]
    fn energy_pairing_and_self_adjointness(c in instance(40)) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let (vsu, vsu_size) = sum(&c.space, &c.v, &a.sym_laplacian(&c.u).unwrap());
        let (usv, usv_size) = sum(&c.space, &c.u, &a.sym_laplacian(&c.v).unwrap());
        let e = a.energy_density(&c.u, &c.v).unwrap();
        let (energy, e_size) = sum(&c.space, &e, &vec![1.0; e.len()]);
        let g = c.global();
        prop_assert!(close(vsu, -energy, (vsu_size + e_size).max(g)));
        prop_assert!(close(vsu, usv, (vsu_size + usv_size).max(g)));
        prop_assert!(close(energy, a.total_energy(&c.u, &c.v).unwrap(), e_size.max(g)));
    }

    #[test]
    fn deviation_through_delta(c in instance(40)) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let (plain, ps) = sum(&c.space, &c.v, &a.laplacian(&c.u).unwrap());
        let (sym, ss) = sum(&c.space, &c.v, &a.sym_laplacian(&c.u).unwrap());
        // Right-hand side written out from delta_r, independent of `deviation`.
        let n = c.u.len();
        let m = c.space.masses();
        let mu = a.ball_mass();
        let mut rhs = 0.0;
        for x in 0..n {
            let mean: f64 = (0..n)
                .filter(|&y| c.space.distance(x, y) < c.r)
                .map(|y| m[y] * (1.0 - mu[x] / mu[y]) / c.r * (c.u[y] - c.u[x]) / c.r)
                .sum::<f64>() / mu[x];
            rhs += 0.5 * c.v[x] * mean * m[x];
        }
        let scale = (ps + ss).max(c.global());
        prop_assert!(close(plain - sym, rhs, scale));
        prop_assert!(close(a.deviation_pairing(&c.v, &c.u).unwrap(), rhs, scale));
    }

    #[test]
    fn kernel_is_symmetric_and_local(c in instance(25)) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let n = c.u.len();
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(a.kernel(x, y), a.kernel(y, x));
                if c.space.distance(x, y) >= c.r {
                    prop_assert_eq!(a.kernel(x, y), 0.0);
                }
            }
        }
    }

    #[test]
    fn constants(c in instance(40), k in -5.0f64..5.0) {
        let a = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let n = c.u.len();
        let cs = vec![k; n];
        let scale = k.abs() / (c.r * c.r);
        prop_assert!(a.laplacian(&cs).unwrap().iter().all(|t| t.abs() <= TOL * scale));
        prop_assert!(a.sym_laplacian(&cs).unwrap().iter().all(|t| t.abs() <= TOL * scale));
        let adj = a.adjoint_laplacian(&cs).unwrap();
        let adj1 = a.adjoint_laplacian(&vec![1.0; n]).unwrap();
        for x in 0..n {
            let floor = k.abs() * (1.0 + (adj1[x] * c.r * c.r + 1.0).abs()) / (c.r * c.r);
            prop_assert!(close(adj[x], k * adj1[x], (adj[x].abs() + (k * adj1[x]).abs()).max(floor)));
        }
    }

    #[test]
    fn balls_grow_with_radius(c in instance(40), extra in 0.0f64..0.5) {
        let small = Averaging::new(&c.space, &Radius::new(c.r).unwrap());
        let large = Averaging::new(&c.space, &Radius::new(c.r + extra).unwrap());
        for (s, l) in small.ball_mass().iter().zip(large.ball_mass()) {
            prop_assert!(s <= l);
        }
    }

    #[test]
    fn checker_agrees(c in instance(40)) {
        let res = check_identities(&c.space, &c.u, &c.v, &Radius::new(c.r).unwrap()).unwrap();
        for r in res {
            prop_assert!(r.residual < TOL, "{:?}", r);
        }
    }
}

fn q(n: i64, d: i64) -> Exact {
    Exact::new(BigInt::from(n), BigInt::from(d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Rational spaces satisfy every identity with no error at all.
    #[test]
    fn exact_identities(
        coords in prop::collection::vec(0i64..12, 1..8),
        masses in prop::collection::vec(1i64..20, 8),
        fields in prop::collection::vec(-9i64..10, 16),
        r in 1i64..9,
    ) {
        let n = coords.len();
        let xs: Vec<Exact> = coords.iter().map(|c| q(*c, 2)).collect();
        let mass: Vec<Exact> = masses[..n].iter().map(|m| q(*m, 3)).collect();
        let space = FiniteMMSpace::from_line(&xs, mass).unwrap();
        let u: Vec<Exact> = fields[..n].iter().map(|f| q(*f, 1)).collect();
        let v: Vec<Exact> = fields[8..8 + n].iter().map(|f| q(*f, 5)).collect();
        // Half-integer radius over a grid of step 1/2 would tie; quarter steps avoid it.
        let radius = Radius::new(q(4 * r + 1, 4)).unwrap();
        for res in check_identities(&space, &u, &v, &radius).unwrap() {
            prop_assert_eq!(res.residual, 0.0, "{}", res.name);
        }
    }
}
