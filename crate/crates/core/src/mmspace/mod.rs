//! Averaging operators on finite metric measure spaces.
//!
//! Balls are open, `B_r(x) = {y : d(x, y) < r}`, and always contain their
//! centre. On a finite space the ball mass jumps at radii equal to a pairwise
//! distance; callers sweeping radii should stay clear of those values.
//!
//! Every operator is a pure function of its inputs. Per-point sums run in
//! ascending index order so results do not depend on the thread count.

mod identities;
mod io;
mod ops;

pub use identities::{check_identities, check_identities_split, IdentityResidual, IDENTITY_NAMES};
pub use io::{parse_field, parse_space, write_field, write_space};
pub use ops::Averaging;

use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{input, Result};
use crate::scalar::Scalar;

/// A strictly positive radius.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Radius<T>(T);

impl<T: Scalar> Radius<T> {
    pub fn new(r: T) -> Result<Self> {
        if !r.is_finite_value() || r <= T::zero() {
            return input(format!("radius must be positive and finite, got {r}"));
        }
        Ok(Self(r))
    }

    pub fn value(&self) -> &T {
        &self.0
    }

    pub fn squared(&self) -> T {
        self.0.clone() * self.0.clone()
    }
}

/// Function values indexed by point order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T>(Vec<T>);

impl<T: Scalar> ScalarField<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite_value()) {
            return input(format!("field entry {i} is not finite"));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self(vec![c; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> T) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    /// Pointwise product.
    pub fn product(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a.clone() * b.clone()).collect())
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Self(self.0.iter().map(f).collect())
    }
}

impl<T> Deref for ScalarField<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// What the operators need from a metric measure space: point masses,
/// distances and open-ball enumeration.
///
/// Implementors must report ball members in ascending index order.
pub trait MetricMeasure<T: Scalar>: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn mass(&self, i: usize) -> T;

    fn distance(&self, i: usize, j: usize) -> T;

    /// Calls `visit(y)` for every `y` with `d(x, y) < r`, ascending in `y`.
    fn for_each_in_ball(&self, x: usize, r: &T, visit: &mut dyn FnMut(usize));
}

/// A finite metric measure space with a dense distance matrix.
///
/// The triangle inequality is not required; none of the operators use it.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMMSpace<T> {
    ids: Vec<String>,
    dist: Vec<T>,
    mass: Vec<T>,
}

impl<T: Scalar> FiniteMMSpace<T> {
    /// Builds a space from a row-major `n x n` distance matrix.
    pub fn new(ids: Vec<String>, dist: Vec<T>, mass: Vec<T>) -> Result<Self> {
        let n = mass.len();
        if ids.len() != n {
            return input(format!("{} ids for {n} masses", ids.len()));
        }
        if dist.len() != n * n {
            return input(format!("distance matrix has {} entries, expected {}", dist.len(), n * n));
        }
        for (i, m) in mass.iter().enumerate() {
            if !m.is_finite_value() || *m <= T::zero() {
                return input(format!("mass of point {i} must be positive, got {m}"));
            }
        }
        for i in 0..n {
            if !dist[i * n + i].is_zero() {
                return input(format!("d({i},{i}) must be zero"));
            }
            for j in 0..i {
                let dij = &dist[i * n + j];
                if !dij.is_finite_value() || *dij < T::zero() {
                    return input(format!("d({i},{j}) must be finite and nonnegative"));
                }
                if *dij != dist[j * n + i] {
                    return input(format!("distance matrix is not symmetric at ({i},{j})"));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return input(format!("duplicate point id {dup:?}"));
        }
        Ok(Self { ids, dist, mass })
    }

    /// Points labelled `0..n`.
    pub fn with_index_ids(dist: Vec<T>, mass: Vec<T>) -> Result<Self> {
        let ids = (0..mass.len()).map(|i| i.to_string()).collect();
        Self::new(ids, dist, mass)
    }

    /// Builds the space from a lower-triangular list: row `i` holds
    /// `d(i, 0), ..., d(i, i-1)`.
    pub fn from_lower_triangle(lower: &[Vec<T>], mass: Vec<T>) -> Result<Self> {
        let n = mass.len();
        if lower.len() != n {
            return input(format!("{} rows for {n} points", lower.len()));
        }
        let mut dist = vec![T::zero(); n * n];
        for (i, row) in lower.iter().enumerate() {
            if row.len() != i {
                return input(format!("row {i} has {} entries, expected {i}", row.len()));
            }
            for (j, d) in row.iter().enumerate() {
                dist[i * n + j] = d.clone();
                dist[j * n + i] = d.clone();
            }
        }
        Self::with_index_ids(dist, mass)
    }

    /// Points on a line at the given coordinates.
    pub fn from_line(coords: &[T], mass: Vec<T>) -> Result<Self> {
        let n = coords.len();
        let mut dist = Vec::with_capacity(n * n);
        for a in coords {
            for b in coords {
                dist.push((a.clone() - b.clone()).abs_value());
            }
        }
        Self::with_index_ids(dist, mass)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| crate::Error::Input(format!("unknown point id {id:?}")))
    }

    /// Copy with one mass replaced.
    pub fn with_mass(&self, i: usize, m: T) -> Result<Self> {
        let mut mass = self.mass.clone();
        mass[i] = m;
        Self::new(self.ids.clone(), self.dist.clone(), mass)
    }

    fn check_point(&self, x: usize) -> Result<()> {
        if x >= self.mass.len() {
            return input(format!("point index {x} out of range for {} points", self.mass.len()));
        }
        Ok(())
    }

    /// Members of `B_r(x)` and their total mass.
    pub fn ball(&self, x: usize, r: &Radius<T>) -> Result<(Vec<usize>, T)> {
        self.check_point(x)?;
        let mut members = Vec::new();
        let mut total = T::zero();
        self.for_each_in_ball(x, r.value(), &mut |y| {
            members.push(y);
            total = total.clone() + self.mass[y].clone();
        });
        Ok((members, total))
    }

    pub fn ball_by_id(&self, id: &str, r: &Radius<T>) -> Result<(Vec<usize>, T)> {
        self.ball(self.index_of(id)?, r)
    }

    /// All pairwise distances, used to keep sweeps off jump radii.
    pub fn distinct_distances(&self) -> Vec<T> {
        let n = self.len();
        let mut out: Vec<T> = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| self.dist[i * n + j].clone())
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("distances are comparable"));
        out.dedup();
        out
    }

    pub fn averaging(&self, r: &Radius<T>) -> Averaging<'_, T, Self> {
        Averaging::new(self, r)
    }

    pub fn average(&self, u: &ScalarField<T>, r: &Radius<T>) -> Result<ScalarField<T>> {
        self.averaging(r).average(u)
    }

    pub fn adjoint_average(&self, u: &ScalarField<T>, r: &Radius<T>) -> Result<ScalarField<T>> {
        self.averaging(r).adjoint_average(u)
    }

    pub fn r_laplacian(&self, u: &ScalarField<T>, r: &Radius<T>) -> Result<ScalarField<T>> {
        self.averaging(r).laplacian(u)
    }

    pub fn adjoint_r_laplacian(&self, u: &ScalarField<T>, r: &Radius<T>) -> Result<ScalarField<T>> {
        self.averaging(r).adjoint_laplacian(u)
    }

    pub fn sym_r_laplacian(&self, u: &ScalarField<T>, r: &Radius<T>) -> Result<ScalarField<T>> {
        self.averaging(r).sym_laplacian(u)
    }

    pub fn delta_r(&self, x: usize, y: usize, r: &Radius<T>) -> Result<T> {
        self.check_point(x)?;
        self.check_point(y)?;
        let (_, mx) = self.ball(x, r)?;
        let (_, my) = self.ball(y, r)?;
        Ok(T::one() - mx / my)
    }

    pub fn energy_density(&self, u: &ScalarField<T>, v: &ScalarField<T>, r: &Radius<T>) -> Result<ScalarField<T>> {
        self.averaging(r).energy_density(u, v)
    }

    pub fn total_energy(&self, u: &ScalarField<T>, v: &ScalarField<T>, r: &Radius<T>) -> Result<T> {
        self.averaging(r).total_energy(u, v)
    }

    pub fn weak_pairing(&self, phi: &ScalarField<T>, u: &ScalarField<T>, r: &Radius<T>) -> Result<T> {
        self.averaging(r).weak_pairing(phi, u)
    }

    /// `sum_x f(x) g(x) mass(x)`.
    pub fn integrate_product(&self, f: &[T], g: &[T]) -> T {
        integrate_product(self, f, g)
    }
}

impl<T: Scalar> MetricMeasure<T> for FiniteMMSpace<T> {
    fn len(&self) -> usize {
        self.mass.len()
    }

    fn mass(&self, i: usize) -> T {
        self.mass[i].clone()
    }

    fn distance(&self, i: usize, j: usize) -> T {
        self.dist[i * self.mass.len() + j].clone()
    }

    fn for_each_in_ball(&self, x: usize, r: &T, visit: &mut dyn FnMut(usize)) {
        let n = self.mass.len();
        for (y, d) in self.dist[x * n..(x + 1) * n].iter().enumerate() {
            if d < r {
                visit(y);
            }
        }
    }
}

/// `sum_x f(x) g(x) mass(x)` in index order.
pub fn integrate_product<T: Scalar, S: MetricMeasure<T> + ?Sized>(space: &S, f: &[T], g: &[T]) -> T {
    f.iter()
        .zip(g)
        .enumerate()
        .fold(T::zero(), |acc, (i, (a, b))| acc + a.clone() * b.clone() * space.mass(i))
}

/// Ball masses `mu(B_r(x))` for every point.
pub fn ball_masses<T: Scalar, S: MetricMeasure<T> + ?Sized>(space: &S, r: &T) -> Vec<T> {
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            let mut total = T::zero();
            space.for_each_in_ball(x, r, &mut |y| total = total.clone() + space.mass(y));
            total
        })
        .collect()
}
