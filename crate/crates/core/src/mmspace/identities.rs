//! The exact identities between the averaging operators, as residuals.
//!
//! Each identity is evaluated on both sides independently and reported as
//! `|lhs - rhs|` over the size of the terms involved, so exact scalars give
//! exactly zero and floats give a few ulps. The size is floored by what the
//! inputs alone allow (`max|u|`, `max|v|`, total mass, `r^2`): when every term
//! cancels to rounding noise the terms themselves are no scale at all.

use serde::{Deserialize, Serialize};

use super::{integrate_product, Averaging, MetricMeasure, Radius};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub residual: f64,
}

pub const IDENTITY_NAMES: [&str; 8] = [
    "green",
    "symmetrization",
    "product_rule",
    "energy_pairing",
    "self_adjoint",
    "deviation",
    "kernel_symmetry",
    "constants",
];

fn larger<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

fn max_abs<T: Scalar>(f: &[T]) -> T {
    f.iter().fold(T::zero(), |m, t| larger(m, t.abs_value()))
}

fn ratio<T: Scalar>(diff: T, scale: T) -> f64 {
    let d = diff.abs_value().to_f64_lossy();
    if d == 0.0 {
        return 0.0;
    }
    d / scale.to_f64_lossy().max(f64::MIN_POSITIVE)
}

fn sum_abs<T: Scalar>(space: &(impl MetricMeasure<T> + ?Sized), f: &[T], g: &[T]) -> T {
    f.iter()
        .zip(g)
        .enumerate()
        .fold(T::zero(), |acc, (i, (a, b))| acc + (a.clone() * b.clone() * space.mass(i)).abs_value())
}

/// Largest pointwise `|lhs - rhs|` over the largest pointwise term size.
fn pointwise<T: Scalar>(lhs: &[T], rhs: &[T], size: impl Fn(usize) -> T) -> f64 {
    let mut diff = T::zero();
    let mut scale = T::zero();
    for x in 0..lhs.len() {
        let d = (lhs[x].clone() - rhs[x].clone()).abs_value();
        if d > diff {
            diff = d;
        }
        let s = size(x);
        if s > scale {
            scale = s;
        }
    }
    ratio(diff, scale)
}

/// All identities on one space. See [`check_identities_split`].
pub fn check_identities<T: Scalar, S: MetricMeasure<T> + ?Sized>(
    space: &S,
    u: &[T],
    v: &[T],
    r: &Radius<T>,
) -> Result<Vec<IdentityResidual>> {
    check_identities_split(space, space, u, v, r)
}

/// Residuals with every left-hand side evaluated on `left` and every
/// right-hand side on `right`. With two different spaces this is a fault
/// injection: the residuals must become visible.
pub fn check_identities_split<T: Scalar, S: MetricMeasure<T> + ?Sized>(
    left: &S,
    right: &S,
    u: &[T],
    v: &[T],
    r: &Radius<T>,
) -> Result<Vec<IdentityResidual>> {
    let (a, b) = (Averaging::new(left, r), Averaging::new(right, r));
    let n = left.len();
    let half = T::half();
    let two = T::two();
    let abs = |t: &T| t.abs_value();

    let lap_u = a.laplacian(u)?;
    let lap_v_b = b.laplacian(v)?;
    let lap_u_b = b.laplacian(u)?;
    let adj_v_b = b.adjoint_laplacian(v)?;
    let adj_u_b = b.adjoint_laplacian(u)?;
    let one = vec![T::one(); n];
    let adj_one_b = b.adjoint_laplacian(&one)?;
    let sym_u = a.sym_laplacian(u)?;
    let sym_v_b = b.sym_laplacian(v)?;
    let (su, sv) = (max_abs(u), max_abs(v));
    let total = (0..n).fold(T::zero(), |s, x| s + left.mass(x));
    // Floors for integrated and pointwise identities.
    let global = su.clone() * sv.clone() * total / r.squared();
    let local = su.clone() * sv.clone() / r.squared();
    let mut out = Vec::new();
    let mut push = |name: &str, residual: f64| out.push(IdentityResidual { name: name.into(), residual });

    // sum v Delta_r u = sum u Delta_r^* v
    let l = integrate_product(left, v, &lap_u);
    let rr = integrate_product(right, u, &adj_v_b);
    push("green", ratio(l - rr, larger(sum_abs(left, v, &lap_u) + sum_abs(right, u, &adj_v_b), global.clone())));

    // sym Delta_r u = (Delta_r u + Delta_r^* u - u Delta_r^* 1) / 2
    let rhs: Vec<T> = (0..n)
        .map(|x| half.clone() * (lap_u_b[x].clone() + adj_u_b[x].clone() - u[x].clone() * adj_one_b[x].clone()))
        .collect();
    push(
        "symmetrization",
        pointwise(&sym_u, &rhs, |x| {
            // A_r^* 1 can exceed one, and rounding in A_r^* u scales with it.
            let weight = T::one() + abs(&(adj_one_b[x].clone() * r.squared() + T::one()));
            let floor = su.clone() * weight / r.squared();
            larger(abs(&sym_u[x]) + abs(&lap_u_b[x]) + abs(&adj_u_b[x]) + abs(&(u[x].clone() * adj_one_b[x].clone())), floor)
        }),
    );

    // Delta_r (uv) = u Delta_r v + 2 e_r(u, v) + v Delta_r u
    let uv: Vec<T> = u.iter().zip(v).map(|(p, q)| p.clone() * q.clone()).collect();
    let lap_uv = a.laplacian(&uv)?;
    let e_b = b.energy_density(u, v)?;
    let terms = |x: usize| {
        [u[x].clone() * lap_v_b[x].clone(), two.clone() * e_b[x].clone(), v[x].clone() * lap_u_b[x].clone()]
    };
    let rhs: Vec<T> = (0..n).map(|x| terms(x).into_iter().fold(T::zero(), |s, t| s + t)).collect();
    push(
        "product_rule",
        pointwise(&lap_uv, &rhs, |x| larger(terms(x).iter().fold(abs(&lap_uv[x]), |s, t| s + abs(t)), local.clone())),
    );

    // sum v sym Delta_r u = -E_r(u, v)
    let l = integrate_product(left, v, &sym_u);
    let energy = b.total_energy(u, v)?;
    let e_size = e_b.iter().enumerate().fold(T::zero(), |s, (x, e)| s + abs(e) * right.mass(x));
    push("energy_pairing", ratio(l.clone() + energy, larger(sum_abs(left, v, &sym_u) + e_size, global.clone())));

    // sum v sym Delta_r u = sum u sym Delta_r v
    let rr = integrate_product(right, u, &sym_v_b);
    push(
        "self_adjoint",
        ratio(l.clone() - rr, larger(sum_abs(left, v, &sym_u) + sum_abs(right, u, &sym_v_b), global.clone())),
    );

    // sum v (Delta_r - sym Delta_r) u through delta_r
    let plain = integrate_product(left, v, &lap_u);
    let dev = b.deviation_pairing(v, u)?;
    push(
        "deviation",
        ratio(plain - l - dev, larger(sum_abs(left, v, &lap_u) + sum_abs(left, v, &sym_u), global)),
    );

    // k_r(x, y) = k_r(y, x), and k_r vanishes off the ball.
    let mut diff = T::zero();
    let mut scale = T::zero();
    let mut leaks = false;
    for x in 0..n {
        for y in 0..n {
            let k = a.kernel(x, y);
            let d = (k.clone() - b.kernel(y, x)).abs_value();
            if d > diff {
                diff = d;
            }
            if left.distance(x, y) >= *r.value() && !k.is_zero() {
                leaks = true;
            }
            if k > scale {
                scale = k;
            }
        }
    }
    push("kernel_symmetry", if leaks { f64::INFINITY } else { ratio(diff, scale) });

    // Delta_r c = sym Delta_r c = 0 and Delta_r^* c = c Delta_r^* 1.
    let c = T::from_f64(1.75).unwrap_or_else(T::one);
    let cs = vec![c.clone(); n];
    let mut worst = T::zero();
    for f in [a.laplacian(&cs)?, a.sym_laplacian(&cs)?] {
        for t in f.iter() {
            if abs(t) > worst {
                worst = abs(t);
            }
        }
    }
    let adj_c = a.adjoint_laplacian(&cs)?;
    let scaled: Vec<T> = adj_one_b.iter().map(|t| c.clone() * t.clone()).collect();
    let size = adj_c.iter().zip(&scaled).fold(c.clone() / r.squared(), |s, (p, q)| {
        let t = abs(p) + abs(q);
        if t > s {
            t
        } else {
            s
        }
    });
    let adj_diff = adj_c.iter().zip(&scaled).fold(T::zero(), |s, (p, q)| {
        let d = (p.clone() - q.clone()).abs_value();
        if d > s {
            d
        } else {
            s
        }
    });
    let diff = if adj_diff > worst { adj_diff } else { worst };
    push("constants", ratio(diff, size));
    Ok(out)
}
