use rayon::prelude::*;

use super::{ball_masses, integrate_product, MetricMeasure, Radius, ScalarField};
use crate::error::{input, Result};
use crate::scalar::Scalar;

/// The averaging-operator family at one radius, with ball masses cached.
pub struct Averaging<'a, T, S: ?Sized> {
    space: &'a S,
    r: Radius<T>,
    r2: T,
    ball_mass: Vec<T>,
}

impl<'a, T: Scalar, S: MetricMeasure<T> + ?Sized> Averaging<'a, T, S> {
    pub fn new(space: &'a S, r: &Radius<T>) -> Self {
        let ball_mass = ball_masses(space, r.value());
        Self { space, r: r.clone(), r2: r.squared(), ball_mass }
    }

    pub fn radius(&self) -> &Radius<T> {
        &self.r
    }

    pub fn space(&self) -> &S {
        self.space
    }

    /// `mu(B_r(x))` per point.
    pub fn ball_mass(&self) -> &[T] {
        &self.ball_mass
    }

    fn check(&self, u: &[T]) -> Result<()> {
        if u.len() != self.space.len() {
            return input(format!("field has {} values for {} points", u.len(), self.space.len()));
        }
        Ok(())
    }

    fn per_point(&self, f: impl Fn(usize) -> T + Sync + Send) -> ScalarField<T> {
        ScalarField((0..self.space.len()).into_par_iter().map(f).collect())
    }

    fn ball_sum(&self, x: usize, mut term: impl FnMut(usize) -> T) -> T {
        let mut acc = T::zero();
        self.space.for_each_in_ball(x, self.r.value(), &mut |y| acc = acc.clone() + term(y));
        acc
    }

    /// `A_r u(x)`, the mean of `u` over `B_r(x)`.
    pub fn average(&self, u: &[T]) -> Result<ScalarField<T>> {
        self.check(u)?;
        Ok(self.per_point(|x| {
            self.ball_sum(x, |y| u[y].clone() * self.space.mass(y)) / self.ball_mass[x].clone()
        }))
    }

    /// `A_r^* u(x) = sum_{y in B_r(x)} u(y) mass(y) / mu(B_r(y))`.
    pub fn adjoint_average(&self, u: &[T]) -> Result<ScalarField<T>> {
        self.check(u)?;
        Ok(self.per_point(|x| {
            self.ball_sum(x, |y| u[y].clone() * self.space.mass(y) / self.ball_mass[y].clone())
        }))
    }

    /// `a_r = A_r^* 1`.
    pub fn adjoint_weight(&self) -> ScalarField<T> {
        self.per_point(|x| self.ball_sum(x, |y| self.space.mass(y) / self.ball_mass[y].clone()))
    }

    /// `(A_r u - u) / r^2`.
    pub fn laplacian(&self, u: &[T]) -> Result<ScalarField<T>> {
        let avg = self.average(u)?;
        Ok(ScalarField(
            avg.0.into_iter().zip(u).map(|(a, ux)| (a - ux.clone()) / self.r2.clone()).collect(),
        ))
    }

    /// `(A_r^* u - u) / r^2`.
    pub fn adjoint_laplacian(&self, u: &[T]) -> Result<ScalarField<T>> {
        let avg = self.adjoint_average(u)?;
        Ok(ScalarField(
            avg.0.into_iter().zip(u).map(|(a, ux)| (a - ux.clone()) / self.r2.clone()).collect(),
        ))
    }

    /// Symmetric mean value kernel `k_r(x, y)`; zero unless `d(x, y) < r`.
    pub fn kernel(&self, x: usize, y: usize) -> T {
        if self.space.distance(x, y) < *self.r.value() {
            T::half() * (T::one() / self.ball_mass[x].clone() + T::one() / self.ball_mass[y].clone())
        } else {
            T::zero()
        }
    }

    /// `sum_y k_r(x, y) (u(y) - u(x)) mass(y) / r^2`.
    pub fn sym_laplacian(&self, u: &[T]) -> Result<ScalarField<T>> {
        self.check(u)?;
        Ok(self.per_point(|x| {
            let inv_x = T::one() / self.ball_mass[x].clone();
            let sum = self.ball_sum(x, |y| {
                let k = inv_x.clone() + T::one() / self.ball_mass[y].clone();
                k * self.space.mass(y) * (u[y].clone() - u[x].clone())
            });
            T::half() * sum / self.r2.clone()
        }))
    }

    /// `delta_r(x, y) = 1 - mu(B_r(x)) / mu(B_r(y))`.
    pub fn delta(&self, x: usize, y: usize) -> T {
        T::one() - self.ball_mass[x].clone() / self.ball_mass[y].clone()
    }

    /// `e_r(u, v)(x) = 1/2 mean_{B_r(x)} (u(y) - u(x)) (v(y) - v(x)) / r^2`.
    pub fn energy_density(&self, u: &[T], v: &[T]) -> Result<ScalarField<T>> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.per_point(|x| {
            let sum = self.ball_sum(x, |y| {
                self.space.mass(y) * (u[y].clone() - u[x].clone()) * (v[y].clone() - v[x].clone())
            });
            T::half() * sum / (self.ball_mass[x].clone() * self.r2.clone())
        }))
    }

    /// `E_r(u, v) = sum_x e_r(u, v)(x) mass(x)`.
    pub fn total_energy(&self, u: &[T], v: &[T]) -> Result<T> {
        let density = self.energy_density(u, v)?;
        Ok(self.integrate(&density))
    }

    /// `sum_x phi(x) (Delta_r u)(x) mass(x)`.
    pub fn weak_pairing(&self, phi: &[T], u: &[T]) -> Result<T> {
        self.check(phi)?;
        let lap = self.laplacian(u)?;
        Ok(integrate_product(self.space, phi, &lap))
    }

    /// Pointwise `(Delta_r - sym Delta_r) u`, evaluated through `delta_r`:
    /// `1/2 mean_{B_r(x)} (delta_r(x, y) / r) ((u(y) - u(x)) / r)`.
    pub fn deviation(&self, u: &[T]) -> Result<ScalarField<T>> {
        self.check(u)?;
        Ok(self.per_point(|x| {
            let sum = self.ball_sum(x, |y| self.space.mass(y) * self.delta(x, y) * (u[y].clone() - u[x].clone()));
            T::half() * sum / (self.ball_mass[x].clone() * self.r2.clone())
        }))
    }

    /// `sum_x v(x) (Delta_r - sym Delta_r) u (x) mass(x)` via [`Self::deviation`].
    pub fn deviation_pairing(&self, v: &[T], u: &[T]) -> Result<T> {
        self.check(v)?;
        let dev = self.deviation(u)?;
        Ok(integrate_product(self.space, v, &dev))
    }

    /// `sum_x f(x) mass(x)`.
    pub fn integrate(&self, f: &[T]) -> T {
        f.iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, v)| acc + v.clone() * self.space.mass(i))
    }
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::super::FiniteMMSpace;
    use super::*;
    use crate::scalar::ratio;

    fn q(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    fn line3() -> FiniteMMSpace<BigRational> {
        FiniteMMSpace::from_line(&[q(0, 1), q(1, 1), q(2, 1)], vec![q(1, 1); 3]).unwrap()
    }

    fn pair() -> FiniteMMSpace<BigRational> {
        FiniteMMSpace::from_line(&[q(0, 1), q(1, 1)], vec![q(1, 1), q(2, 1)]).unwrap()
    }

    fn field(v: &[i64]) -> ScalarField<BigRational> {
        ScalarField::new(v.iter().map(|&a| q(a, 1)).collect()).unwrap()
    }

    fn r(n: i64, d: i64) -> Radius<BigRational> {
        Radius::new(q(n, d)).unwrap()
    }

    #[test]
    fn ball_examples() {
        let s = line3();
        assert_eq!(s.ball(1, &r(3, 2)).unwrap(), (vec![0, 1, 2], q(3, 1)));
        assert_eq!(s.ball(0, &r(1, 2)).unwrap(), (vec![0], q(1, 1)));
        assert_eq!(pair().ball(0, &r(2, 1)).unwrap(), (vec![0, 1], q(3, 1)));
        assert!(s.ball(3, &r(1, 1)).is_err());
        assert!(s.ball_by_id("7", &r(1, 1)).is_err());
    }

    #[test]
    fn average_examples() {
        assert_eq!(pair().average(&field(&[0, 3]), &r(2, 1)).unwrap(), field(&[2, 2]));
        let a = line3().average(&field(&[1, 0, 0]), &r(3, 2)).unwrap();
        assert_eq!(a.values(), &[q(1, 2), q(1, 3), q(0, 1)]);
        let c = line3().average(&field(&[5, 5, 5]), &r(7, 3)).unwrap();
        assert_eq!(c, field(&[5, 5, 5]));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(pair().adjoint_average(&field(&[0, 3]), &r(2, 1)).unwrap(), field(&[2, 2]));
        let a = line3().averaging(&r(3, 2)).adjoint_weight();
        assert_eq!(a.values(), &[q(5, 6), q(4, 3), q(5, 6)]);
        let u = field(&[4, -1, 9]);
        assert_eq!(line3().adjoint_average(&u, &r(1, 2)).unwrap(), u);
    }

    #[test]
    fn laplacian_examples() {
        let l = pair().r_laplacian(&field(&[0, 3]), &r(2, 1)).unwrap();
        assert_eq!(l.values(), &[q(1, 2), q(-1, 4)]);
        let l = line3().r_laplacian(&field(&[1, 0, 0]), &r(3, 2)).unwrap();
        assert_eq!(l[0], q(-2, 9));
        let l = line3().r_laplacian(&field(&[2, 2, 2]), &r(3, 2)).unwrap();
        assert!(l.iter().all(|v| *v == q(0, 1)));
    }

    #[test]
    fn adjoint_laplacian_examples() {
        let l = pair().adjoint_r_laplacian(&field(&[0, 3]), &r(2, 1)).unwrap();
        assert_eq!(l.values(), &[q(1, 2), q(-1, 4)]);
        let l = line3().adjoint_r_laplacian(&field(&[1, 1, 1]), &r(3, 2)).unwrap();
        assert_eq!(l.values(), &[q(-2, 27), q(4, 27), q(-2, 27)]);
        let l = line3().adjoint_r_laplacian(&field(&[3, 1, 4]), &r(1, 2)).unwrap();
        assert!(l.iter().all(|v| *v == q(0, 1)));
    }

    #[test]
    fn sym_laplacian_examples() {
        let l = pair().sym_r_laplacian(&field(&[0, 3]), &r(2, 1)).unwrap();
        assert_eq!(l.values(), &[q(1, 2), q(-1, 4)]);
        // Left point: only the middle neighbour contributes,
        // 1/2 (1/2 + 1/3) (0 - 1) / (9/4) = -5/27.
        let l = line3().sym_r_laplacian(&field(&[1, 0, 0]), &r(3, 2)).unwrap();
        assert_eq!(l[0], q(-5, 27));
        let l = line3().sym_r_laplacian(&field(&[7, 7, 7]), &r(3, 2)).unwrap();
        assert!(l.iter().all(|v| *v == q(0, 1)));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(line3().delta_r(0, 1, &r(3, 2)).unwrap(), q(1, 3));
        assert_eq!(line3().delta_r(2, 2, &r(3, 2)).unwrap(), q(0, 1));
        assert_eq!(pair().delta_r(0, 1, &r(2, 1)).unwrap(), q(0, 1));
        assert_eq!(pair().delta_r(1, 0, &r(2, 1)).unwrap(), q(0, 1));
    }

    #[test]
    fn energy_examples() {
        let u = field(&[0, 3]);
        let e = pair().energy_density(&u, &u, &r(2, 1)).unwrap();
        assert_eq!(e.values(), &[q(3, 4), q(3, 8)]);
        let v = field(&[0, -1]);
        let e = pair().energy_density(&u, &v, &r(2, 1)).unwrap();
        assert_eq!(e.values(), &[q(-1, 4), q(-1, 8)]);
        assert_eq!(pair().total_energy(&u, &u, &r(2, 1)).unwrap(), q(3, 2));
        assert_eq!(pair().total_energy(&u, &field(&[4, 4]), &r(2, 1)).unwrap(), q(0, 1));
        let sym = pair().sym_r_laplacian(&u, &r(2, 1)).unwrap();
        assert_eq!(-pair().integrate_product(&u, &sym), q(3, 2));
    }

    #[test]
    fn weak_pairing_examples() {
        let u = field(&[0, 3]);
        assert_eq!(pair().weak_pairing(&field(&[1, 1]), &u, &r(2, 1)).unwrap(), q(0, 1));
        assert_eq!(pair().weak_pairing(&field(&[0, 0]), &u, &r(2, 1)).unwrap(), q(0, 1));
        assert_eq!(pair().weak_pairing(&field(&[1, 0]), &u, &r(2, 1)).unwrap(), q(1, 2));
    }

    #[test]
    fn kernel_vanishes_outside_radius() {
        let s = line3();
        let ops = s.averaging(&r(3, 2));
        assert_eq!(ops.kernel(0, 2), q(0, 1));
        assert_eq!(ops.kernel(0, 1), ops.kernel(1, 0));
        assert_eq!(ops.kernel(0, 1), q(5, 12));
    }

    #[test]
    fn mismatched_field_is_rejected() {
        assert!(line3().average(&field(&[1, 2]), &r(1, 1)).is_err());
        assert!(Radius::new(q(0, 1)).is_err());
        assert!(Radius::new(-1.0).is_err());
        assert!(ScalarField::new(vec![f64::NAN]).is_err());
    }
}
