//! The discrete Dirichlet problem for the r-energy.
//!
//! For `u = g` on the boundary, `E_r(u, u)` is a quadratic in the interior
//! values whose gradient at `x` is `-2 mass(x) r^2 sym Delta_r u(x)`. The
//! minimizer therefore solves the linear system
//!
//! ```text
//! sum_y w(x, y) (u(y) - u(x)) = 0,   w(x, y) = mass(x) mass(y) k_r(x, y),
//! ```
//!
//! for every interior `x`. The matrix is symmetric and weakly diagonally
//! dominant, and positive definite once every interior component reaches the
//! boundary through r-chains.

mod bpz;
mod linalg;

pub use bpz::{bpz_barrier, bpz_demo, BpzLevel, GaugeBallLattice};

use std::collections::VecDeque;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::mmspace::{MetricMeasure, Radius, ScalarField};
use crate::scalar::Scalar;

/// Largest interior handled by dense elimination.
pub const DIRECT_LIMIT: usize = 500;

/// Interior and boundary indices with the boundary data.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPartition<T> {
    n: usize,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Boundary value per point; `None` on the interior.
    data: Vec<Option<T>>,
}

impl<T: Scalar> BoundaryPartition<T> {
    /// `boundary` pairs point indices with their prescribed values; every
    /// other point of `0..n` is interior.
    pub fn new(n: usize, boundary: Vec<(usize, T)>) -> Result<Self> {
        let mut data: Vec<Option<T>> = vec![None; n];
        for (i, v) in boundary {
            if i >= n {
                return input(format!("boundary index {i} is out of range for {n} points"));
            }
            if !v.is_finite_value() {
                return input(format!("boundary value at {i} is not finite"));
            }
            if data[i].replace(v).is_some() {
                return input(format!("boundary index {i} is listed twice"));
            }
        }
        let interior = (0..n).filter(|&i| data[i].is_none()).collect();
        let boundary = (0..n).filter(|&i| data[i].is_some()).collect();
        Ok(Self { n, interior, boundary, data })
    }

    /// Boundary where `is_boundary` holds, with data `g` read from a full field.
    pub fn from_mask(g: &[T], is_boundary: impl Fn(usize) -> bool) -> Result<Self> {
        Self::new(g.len(), (0..g.len()).filter(|&i| is_boundary(i)).map(|i| (i, g[i].clone())).collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn value(&self, i: usize) -> Option<&T> {
        self.data[i].as_ref()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.data[i].is_some()
    }

    fn data_range(&self) -> Option<(T, T)> {
        let mut it = self.boundary.iter().map(|&i| self.data[i].clone().unwrap());
        let first = it.next()?;
        Some(it.fold((first.clone(), first), |(lo, hi), v| {
            let lo = if v < lo { v.clone() } else { lo };
            let hi = if v > hi { v } else { hi };
            (lo, hi)
        }))
    }
}

/// Parses a boundary mask: one line per point, `i` for interior or `b <value>`
/// for boundary. `#` starts a comment.
pub fn parse_mask<T: Scalar + FromStr>(text: &str) -> Result<BoundaryPartition<T>> {
    let mut boundary = Vec::new();
    let mut n = 0;
    for (line, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: line + 1, msg };
        let mut tokens = content.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some("i"), None, _) => {}
            (Some("b"), Some(v), None) => {
                let v = v.parse().map_err(|_| bad(format!("cannot parse {v:?} as a value")))?;
                boundary.push((n, v));
            }
            _ => return Err(bad(format!("expected `i` or `b <value>`, got {content:?}"))),
        }
        n += 1;
    }
    BoundaryPartition::new(n, boundary)
}

pub fn write_mask<T: Scalar>(part: &BoundaryPartition<T>) -> String {
    part.data
        .iter()
        .map(|d| match d {
            Some(v) => format!("b {v}\n"),
            None => "i\n".to_string(),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Constant boundary data, returned without a solve.
    Constant,
    Direct,
    ConjugateGradient { iterations: usize },
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub field: ScalarField<T>,
    /// `max |sym Delta_r u|` over the interior.
    pub residual: f64,
    /// `max |g| / r^2`, the natural size of `sym Delta_r u`.
    pub scale: f64,
    pub method: SolveMethod,
}

/// Residual report written next to a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub points: usize,
    pub interior: usize,
    pub radius: f64,
    pub method: SolveMethod,
    pub residual: f64,
    pub scale: f64,
    pub min_boundary: f64,
    pub max_boundary: f64,
    pub min_interior: Option<f64>,
    pub max_interior: Option<f64>,
}

impl<T: Scalar> Solution<T> {
    pub fn report(&self, part: &BoundaryPartition<T>, r: f64) -> SolveReport {
        let u = self.field.values();
        let lossy = |it: &mut dyn Iterator<Item = usize>, max: bool| {
            it.map(|i| u[i].to_f64_lossy()).fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| if max { a.max(v) } else { a.min(v) }))
            })
        };
        let (lo, hi) = part.data_range().map_or((f64::NAN, f64::NAN), |(a, b)| (a.to_f64_lossy(), b.to_f64_lossy()));
        SolveReport {
            points: part.len(),
            interior: part.interior().len(),
            radius: r,
            method: self.method,
            residual: self.residual,
            scale: self.scale,
            min_boundary: lo,
            max_boundary: hi,
            min_interior: lossy(&mut part.interior().iter().copied(), false),
            max_interior: lossy(&mut part.interior().iter().copied(), true),
        }
    }
}

/// Interior rows of the system: off-diagonal weights to interior columns
/// (by interior position), the diagonal, and the boundary contribution.
struct System<T> {
    cols: Vec<Vec<(usize, T)>>,
    diag: Vec<T>,
    rhs: Vec<T>,
    /// Whether the row has a neighbour on the boundary.
    touches_boundary: Vec<bool>,
}

/// `mu(B_r(x))` for the interior points and their neighbours; zero elsewhere,
/// where it is never read.
fn needed_ball_masses<T: Scalar, S: MetricMeasure<T> + ?Sized>(space: &S, part: &BoundaryPartition<T>, r: &T) -> Vec<T> {
    let mut needed = vec![false; part.len()];
    for &x in &part.interior {
        space.for_each_in_ball(x, r, &mut |y| needed[y] = true);
    }
    (0..part.len())
        .into_par_iter()
        .map(|x| {
            let mut total = T::zero();
            if needed[x] {
                space.for_each_in_ball(x, r, &mut |y| total = total.clone() + space.mass(y));
            }
            total
        })
        .collect()
}

fn assemble<T: Scalar, S: MetricMeasure<T> + ?Sized>(space: &S, part: &BoundaryPartition<T>, r: &T, mu: &[T]) -> System<T> {
    let mut position = vec![usize::MAX; part.len()];
    for (k, &x) in part.interior.iter().enumerate() {
        position[x] = k;
    }
    let half = T::half();
    let rows: Vec<_> = part
        .interior
        .par_iter()
        .map(|&x| {
            let inv_x = T::one() / mu[x].clone();
            let mx = space.mass(x);
            let (mut cols, mut diag, mut rhs, mut touches) = (Vec::new(), T::zero(), T::zero(), false);
            space.for_each_in_ball(x, r, &mut |y| {
                if y == x {
                    return;
                }
                let k = half.clone() * (inv_x.clone() + T::one() / mu[y].clone());
                let w = mx.clone() * space.mass(y) * k;
                diag = diag.clone() + w.clone();
                match &part.data[y] {
                    Some(g) => {
                        rhs = rhs.clone() + w * g.clone();
                        touches = true;
                    }
                    None => cols.push((position[y], w)),
                }
            });
            (cols, diag, rhs, touches)
        })
        .collect();
    let mut sys = System { cols: Vec::new(), diag: Vec::new(), rhs: Vec::new(), touches_boundary: Vec::new() };
    for (c, d, b, t) in rows {
        sys.cols.push(c);
        sys.diag.push(d);
        sys.rhs.push(b);
        sys.touches_boundary.push(t);
    }
    sys
}

/// The first interior component (by smallest member) that no r-chain links to
/// the boundary.
fn unreachable_component<T>(sys: &System<T>, interior: &[usize]) -> Option<Vec<usize>> {
    let m = interior.len();
    let mut seen = vec![false; m];
    let mut queue: VecDeque<usize> = (0..m).filter(|&k| sys.touches_boundary[k]).collect();
    for &k in &queue {
        seen[k] = true;
    }
    let spread = |queue: &mut VecDeque<usize>, seen: &mut Vec<bool>, out: &mut Vec<usize>| {
        while let Some(k) = queue.pop_front() {
            out.push(k);
            for &(j, _) in &sys.cols[k] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    };
    spread(&mut queue, &mut seen, &mut Vec::new());
    let start = seen.iter().position(|s| !s)?;
    seen[start] = true;
    let mut component = Vec::new();
    spread(&mut VecDeque::from([start]), &mut seen, &mut component);
    let mut component: Vec<usize> = component.into_iter().map(|k| interior[k]).collect();
    component.sort_unstable();
    Some(component)
}

/// Minimizes `E_r(u, u)` over fields equal to the boundary data.
///
/// The returned field has `max |sym Delta_r u| <= 1e-10 max|g| / r^2` on the
/// interior and interior values within `[min g, max g]`; either failing is a
/// numeric error.
pub fn solve<T: Scalar, S: MetricMeasure<T> + ?Sized>(
    space: &S,
    part: &BoundaryPartition<T>,
    r: &Radius<T>,
) -> Result<Solution<T>> {
    if part.len() != space.len() {
        return input(format!("partition covers {} points, the space has {}", part.len(), space.len()));
    }
    let r2 = r.squared().to_f64_lossy();
    let Some((lo, hi)) = part.data_range() else {
        return match part.interior.first() {
            Some(_) => Err(Error::Disconnected { component: part.interior.clone() }),
            None => input("the space is empty"),
        };
    };
    let gmax = lo.abs_value().to_f64_lossy().max(hi.abs_value().to_f64_lossy());
    let scale = gmax / r2;
    let mu = needed_ball_masses(space, part, r.value());
    let sys = assemble(space, part, r.value(), &mu);
    if let Some(component) = unreachable_component(&sys, &part.interior) {
        return Err(Error::Disconnected { component });
    }

    let (interior_values, method) = if lo == hi {
        (vec![lo.clone(); part.interior.len()], SolveMethod::Constant)
    } else if part.interior.len() <= DIRECT_LIMIT {
        (linalg::dense_solve(&sys.cols, &sys.diag, &sys.rhs)?, SolveMethod::Direct)
    } else {
        // Stop when every row residual, divided by the row mass, is 1e-12 of
        // the data size; that is 1e-12 scale in terms of sym Delta_r u.
        let masses: Vec<f64> = part.interior.iter().map(|&x| space.mass(x).to_f64_lossy()).collect();
        let (v, iterations) = linalg::conjugate_gradient(&sys.cols, &sys.diag, &sys.rhs, &masses, 1e-12 * gmax)?;
        (v, SolveMethod::ConjugateGradient { iterations })
    };

    let mut u: Vec<T> = (0..part.len()).map(|i| part.data[i].clone().unwrap_or_else(T::zero)).collect();
    let slack = 1e-12 * gmax;
    for (&x, v) in part.interior.iter().zip(interior_values) {
        // Rounding can step past the data range by a few ulps.
        let clamped = if v < lo {
            lo.clone()
        } else if v > hi {
            hi.clone()
        } else {
            v.clone()
        };
        let moved = (v - clamped.clone()).abs_value().to_f64_lossy();
        if !(moved <= slack) {
            return Err(Error::Numeric(format!(
                "interior value at {x} leaves the data range by {moved:e}; the maximum principle fails"
            )));
        }
        u[x] = clamped;
    }

    // Row x of the system is mass(x) r^2 sym Delta_r u(x).
    let residual = part
        .interior
        .par_iter()
        .enumerate()
        .map(|(k, &x)| {
            let row = sys.cols[k]
                .iter()
                .fold(sys.rhs[k].clone() - sys.diag[k].clone() * u[x].clone(), |s, (j, w)| {
                    s + w.clone() * u[part.interior[*j]].clone()
                });
            (row / (space.mass(x) * r.squared())).abs_value().to_f64_lossy()
        })
        .reduce(|| 0.0, f64::max);
    if !(residual <= 1e-10 * scale) {
        return Err(Error::Numeric(format!("residual {residual:e} exceeds 1e-10 of the scale {scale:e}")));
    }
    log::debug!("dirichlet: {} interior points, {method:?}, residual {residual:e}", part.interior.len());
    Ok(Solution { field: ScalarField::new(u)?, residual, scale, method })
}
