//! Nested Gauss-Legendre rules over balls.
//!
//! A Euclidean `n`-ball of radius `R` is sliced along its first coordinate
//! with `t = R sin(psi)`, leaving an `(n-1)`-ball of radius `R cos(psi)`:
//!
//! ```text
//! int_{B_R} f = int_{-pi/2}^{pi/2} R cos(psi) int_{B_{R cos psi}} f(R sin psi, .) dpsi
//! ```
//!
//! The substitution removes the square-root edge behaviour of each slice, so
//! polynomial and smooth integrands converge spectrally in the node count.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{input, Result};
use crate::model_spaces::ModelSpace;
use crate::quadrature::GaussLegendre;

/// First-level nodes `(t, weight, inner radius)` of the slicing rule, with the
/// slicing coordinate restricted to `t >= lo` when given.
fn first_level(radius: f64, lo: Option<f64>, gl: &GaussLegendre) -> Vec<(f64, f64, f64)> {
    if radius <= 0.0 {
        return Vec::new();
    }
    let psi_lo = lo.map_or(-0.5 * PI, |t| (t / radius).clamp(-1.0, 1.0).asin());
    if psi_lo >= 0.5 * PI {
        return Vec::new();
    }
    gl.on(psi_lo, 0.5 * PI)
        .map(|(psi, w)| {
            let c = psi.cos().max(0.0);
            (radius * psi.sin(), w * radius * c, radius * c)
        })
        .collect()
}

/// Visits the nodes of the `n`-ball rule of the given radius: `visit(offset,
/// weight)`, where `offset` is the position relative to the centre.
pub fn ball_slices(n: usize, radius: f64, gl: &GaussLegendre, visit: &mut dyn FnMut(&[f64], f64)) {
    let mut buf = Vec::with_capacity(n);
    slices_rec(n, radius, 1.0, gl, &mut buf, visit);
}

fn slices_rec(
    left: usize,
    radius: f64,
    w: f64,
    gl: &GaussLegendre,
    buf: &mut Vec<f64>,
    visit: &mut dyn FnMut(&[f64], f64),
) {
    if left == 0 {
        visit(buf, w);
        return;
    }
    for (t, wt, inner) in first_level(radius, None, gl) {
        buf.push(t);
        slices_rec(left - 1, inner, w * wt, gl, buf, visit);
        buf.pop();
    }
}

/// `(int_{B_r(x)} f_j, vol)` under the nested rule with `res` nodes per level.
/// The numerical volume is returned so means of constants are exact up to
/// rounding.
pub fn grid_integrate(
    space: &ModelSpace,
    x: &[f64],
    r: f64,
    res: usize,
    k: usize,
    f: &(dyn Fn(&[f64], &mut [f64]) + Sync),
) -> Result<(Vec<f64>, f64)> {
    space.check_point(x)?;
    if res == 0 {
        return input("grid resolution must be positive");
    }
    let gl = GaussLegendre::new(res);
    // Each outer node produces (weighted sums, volume) for its slab; slabs are
    // then added in node order.
    let slabs: Vec<(Vec<f64>, f64)> = match space {
        ModelSpace::Euclidean { n } | ModelSpace::HalfSpace { n } => {
            let n = *n;
            let half = matches!(space, ModelSpace::HalfSpace { .. });
            // The half-space is sliced along its normal, the last coordinate.
            let lo = half.then(|| -x[n - 1]);
            first_level(r, lo, &gl)
                .into_par_iter()
                .map(|(t, wt, inner)| {
                    let mut acc = Acc::new(k);
                    let mut y = vec![0.0; n];
                    let mut vals = vec![0.0; k];
                    ball_slices(n - 1, inner, &gl, &mut |off, w| {
                        if half {
                            y[..n - 1].iter_mut().zip(&x[..n - 1]).zip(off).for_each(|((o, c), d)| *o = c + d);
                            y[n - 1] = x[n - 1] + t;
                        } else {
                            y[0] = x[0] + t;
                            y[1..].iter_mut().zip(&x[1..]).zip(off).for_each(|((o, c), d)| *o = c + d);
                        }
                        acc.add(&y, wt * w, f, &mut vals);
                    });
                    (acc.sums, acc.vol)
                })
                .collect()
        }
        ModelSpace::FlatCone { angle } => cone_slabs(*angle, x, r, &gl, k, f),
        ModelSpace::Carnot { group, gauge } => {
            let Some(beta) = gauge.beta() else {
                return input("grid quadrature needs a Koranyi-type gauge; use a Monte Carlo scheme");
            };
            let (v1, v2) = (group.v1(), group.v2());
            let r4 = r.powi(4);
            first_level(r, None, &gl)
                .into_par_iter()
                .map(|(t, wt, inner)| {
                    let mut acc = Acc::new(k);
                    let mut z = vec![0.0; v1 + v2];
                    let mut y = vec![0.0; v1 + v2];
                    let mut vals = vec![0.0; k];
                    z[0] = t;
                    ball_slices(v1 - 1, inner, &gl, &mut |off1, w1| {
                        z[1..v1].copy_from_slice(off1);
                        let s2: f64 = z[..v1].iter().map(|c| c * c).sum();
                        let ell = ((r4 - s2 * s2).max(0.0) / beta).sqrt();
                        ball_slices(v2, ell, &gl, &mut |off2, w2| {
                            z[v1..].copy_from_slice(off2);
                            group.mul_flat(x, &z, &mut y);
                            acc.add(&y, wt * w1 * w2, f, &mut vals);
                        });
                    });
                    (acc.sums, acc.vol)
                })
                .collect()
        }
    };
    let mut sums = vec![0.0; k];
    let mut vol = 0.0;
    for (s, v) in slabs {
        sums.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        vol += v;
    }
    Ok((sums, vol))
}

struct Acc {
    sums: Vec<f64>,
    vol: f64,
}

impl Acc {
    fn new(k: usize) -> Self {
        Self { sums: vec![0.0; k], vol: 0.0 }
    }

    fn add(&mut self, y: &[f64], w: f64, f: &(dyn Fn(&[f64], &mut [f64]) + Sync), vals: &mut [f64]) {
        f(y, vals);
        self.sums.iter_mut().zip(vals.iter()).for_each(|(s, v)| *s += w * v);
        self.vol += w;
    }
}

/// Cone balls in apex-polar coordinates relative to the centre's angle. Each
/// outer node is an angle with the radial segment of the ball along it.
fn cone_slabs(
    angle: f64,
    x: &[f64],
    r: f64,
    gl: &GaussLegendre,
    k: usize,
    f: &(dyn Fn(&[f64], &mut [f64]) + Sync),
) -> Vec<(Vec<f64>, f64)> {
    let (a, phi0) = (x[0], x[1]);
    let alpha = 0.5 * angle;
    // (relative angle, outer weight, rho_lo, rho_hi)
    let outer: Vec<(f64, f64, f64, f64)> = if a == 0.0 {
        gl.on(0.0, angle).map(|(p, w)| (p, w, 0.0, r)).collect()
    } else if a >= r {
        // sin(phi) = (r/a) sin(psi): the radial segment is a cos(phi) -+ r cos(psi).
        let psi_max = if alpha >= 0.5 * PI { 0.5 * PI } else { (a * alpha.sin() / r).min(1.0).asin() };
        gl.on(-psi_max, psi_max)
            .map(|(psi, w)| {
                let phi = (r / a * psi.sin()).asin();
                let jac = r / a * psi.cos() / phi.cos();
                let mid = a * phi.cos();
                let half = r * psi.cos();
                (phi, w * jac, mid - half, mid + half)
            })
            .collect()
    } else {
        let mut breaks = vec![-alpha, alpha];
        if alpha > 0.5 * PI {
            breaks.splice(1..1, [-0.5 * PI, 0.5 * PI]);
        }
        breaks
            .windows(2)
            .flat_map(|p| gl.on(p[0], p[1]).collect::<Vec<_>>())
            .map(|(phi, w)| {
                let hi = a * phi.cos() + (r * r - (a * phi.sin()).powi(2)).max(0.0).sqrt();
                (phi, w, 0.0, hi)
            })
            .collect()
    };
    outer
        .into_par_iter()
        .map(|(rel, w_out, lo, hi)| {
            let mut acc = Acc::new(k);
            let mut vals = vec![0.0; k];
            let mut phi = (phi0 + rel).rem_euclid(angle);
            if phi >= angle {
                phi = 0.0;
            }
            for (rho, w) in gl.on(lo.max(0.0), hi) {
                acc.add(&[rho, phi], w_out * w * rho, f, &mut vals);
            }
            (acc.sums, acc.vol)
        })
        .collect()
}
