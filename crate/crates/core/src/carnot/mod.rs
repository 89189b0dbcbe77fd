//! Step-2 Carnot groups in exponential coordinates.
//!
//! A point is `z = (z1, z2)` with `z1` in the horizontal layer `V1` and `z2`
//! in `V2`. The group law is the truncated Baker-Campbell-Hausdorff product
//!
//! ```text
//! (x . y)1   = x1 + y1
//! (x . y)2_k = x2_k + y2_k + 1/2 sum_ij b[k][i][j] x1_i y1_j
//! ```
//!
//! with antisymmetric structure constants `b`. The left-invariant field `X_j`
//! generates the curve `t -> x . (t e_j, 0)`, which gives
//! `X_j = d/dz1_j + 1/2 sum_k (sum_i b[k][i][j] x1_i) d/dz2_k`.

pub mod axioms;
mod field;
mod gauge;
mod io;

pub use field::AnalyticField;
pub use gauge::{Gauge, GaugeProfile};
pub use io::{parse_group, write_group};

use crate::error::{input, Result};
use crate::scalar::{Real, Scalar};

/// A point `(z1, z2)` of a step-2 group.
#[derive(Clone, Debug, PartialEq)]
pub struct GPoint<T> {
    pub z1: Vec<T>,
    pub z2: Vec<T>,
}

impl<T: Scalar> GPoint<T> {
    pub fn new(z1: Vec<T>, z2: Vec<T>) -> Self {
        Self { z1, z2 }
    }

    /// Splits a flat coordinate vector after the first `v1` entries.
    pub fn from_coords(v1: usize, coords: &[T]) -> Self {
        Self { z1: coords[..v1].to_vec(), z2: coords[v1..].to_vec() }
    }

    pub fn coords(&self) -> Vec<T> {
        self.z1.iter().chain(&self.z2).cloned().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.z1.iter().chain(&self.z2).all(Scalar::is_finite_value)
    }
}

/// Stratified algebra data `V1 + V2` with structure constants.
#[derive(Clone, Debug, PartialEq)]
pub struct CarnotStep2<T> {
    v1: usize,
    v2: usize,
    /// `b[k][i][j]` stored at `(k * v1 + i) * v1 + j`.
    bracket: Vec<T>,
}

impl<T: Scalar> CarnotStep2<T> {
    pub fn new(v1: usize, v2: usize, bracket: Vec<T>) -> Result<Self> {
        if v1 == 0 {
            return input("the horizontal layer must be nontrivial");
        }
        if bracket.len() != v2 * v1 * v1 {
            return input(format!("expected {} structure constants, got {}", v2 * v1 * v1, bracket.len()));
        }
        let g = Self { v1, v2, bracket };
        for k in 0..v2 {
            for i in 0..v1 {
                for j in 0..=i {
                    let bij = g.b(k, i, j);
                    if !bij.is_finite_value() || *bij != -g.b(k, j, i).clone() {
                        return input(format!("b[{k}][{i}][{j}] breaks antisymmetry"));
                    }
                }
            }
        }
        Ok(g)
    }

    /// Builds the constants from `(k, i, j, value)` triples with zero-based
    /// indices; the antisymmetric partner is filled in.
    pub fn from_triples(v1: usize, v2: usize, triples: &[(usize, usize, usize, T)]) -> Result<Self> {
        let mut bracket = vec![T::zero(); v2 * v1 * v1];
        for (k, i, j, val) in triples {
            let (k, i, j) = (*k, *i, *j);
            if k >= v2 || i >= v1 || j >= v1 {
                return input(format!("bracket index ({k},{i},{j}) out of range"));
            }
            if i == j {
                if !val.is_zero() {
                    return input(format!("b[{k}][{i}][{i}] must vanish"));
                }
                continue;
            }
            let at = (k * v1 + i) * v1 + j;
            let mirror = (k * v1 + j) * v1 + i;
            if (!bracket[at].is_zero() && bracket[at] != *val) || (!bracket[mirror].is_zero() && bracket[mirror] != -val.clone()) {
                return input(format!("conflicting values for b[{k}][{i}][{j}]"));
            }
            bracket[at] = val.clone();
            bracket[mirror] = -val.clone();
        }
        Self::new(v1, v2, bracket)
    }

    /// The Heisenberg group `H^n`: `v1 = 2n`, `v2 = 1`, `b[0][i][n+i] = 1`.
    pub fn heisenberg(n: usize) -> Result<Self> {
        if n == 0 {
            return input("heisenberg(n) needs n >= 1");
        }
        let triples: Vec<_> = (0..n).map(|i| (0, i, n + i, T::one())).collect();
        Self::from_triples(2 * n, 1, &triples)
    }

    /// Abelian group `R^n` (no second layer).
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(n, 0, Vec::new())
    }

    pub fn v1(&self) -> usize {
        self.v1
    }

    pub fn v2(&self) -> usize {
        self.v2
    }

    /// Topological dimension `v1 + v2`.
    pub fn dim(&self) -> usize {
        self.v1 + self.v2
    }

    /// Homogeneous dimension `Q = v1 + 2 v2`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.v1 + 2 * self.v2
    }

    pub fn b(&self, k: usize, i: usize, j: usize) -> &T {
        &self.bracket[(k * self.v1 + i) * self.v1 + j]
    }

    /// True when every structure constant is an integer, in which case the
    /// points `(h a, h^2/2 c)` with integer `a`, `c` form a subgroup.
    pub fn has_integer_bracket(&self) -> bool {
        self.bracket.iter().all(|b| {
            let f = b.to_f64_lossy();
            f.fract() == 0.0
        })
    }

    pub fn identity(&self) -> GPoint<T> {
        GPoint::new(vec![T::zero(); self.v1], vec![T::zero(); self.v2])
    }

    pub fn check_point(&self, x: &GPoint<T>) -> Result<()> {
        if x.z1.len() != self.v1 || x.z2.len() != self.v2 {
            return input(format!(
                "point has layers ({}, {}), group has ({}, {})",
                x.z1.len(),
                x.z2.len(),
                self.v1,
                self.v2
            ));
        }
        Ok(())
    }

    /// `1/2 sum_ij b[k][i][j] a_i c_j` for every `k`.
    fn half_bracket(&self, a: &[T], c: &[T]) -> Vec<T> {
        (0..self.v2)
            .map(|k| {
                let mut s = T::zero();
                for (i, ai) in a.iter().enumerate() {
                    if ai.is_zero() {
                        continue;
                    }
                    for (j, cj) in c.iter().enumerate() {
                        let bkij = self.b(k, i, j);
                        if !bkij.is_zero() {
                            s = s + bkij.clone() * ai.clone() * cj.clone();
                        }
                    }
                }
                T::half() * s
            })
            .collect()
    }

    pub fn multiply(&self, x: &GPoint<T>, y: &GPoint<T>) -> Result<GPoint<T>> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.mul_unchecked(x, y))
    }

    pub(crate) fn mul_unchecked(&self, x: &GPoint<T>, y: &GPoint<T>) -> GPoint<T> {
        let z1 = x.z1.iter().zip(&y.z1).map(|(a, b)| a.clone() + b.clone()).collect();
        let corr = self.half_bracket(&x.z1, &y.z1);
        let z2 = x
            .z2
            .iter()
            .zip(&y.z2)
            .zip(corr)
            .map(|((a, b), c)| a.clone() + b.clone() + c)
            .collect();
        GPoint { z1, z2 }
    }

    /// `x . z` on flattened coordinates, written into `out`.
    pub(crate) fn mul_flat(&self, x: &[T], z: &[T], out: &mut [T]) {
        let v1 = self.v1;
        for i in 0..self.dim() {
            out[i] = x[i].clone() + z[i].clone();
        }
        for (k, c) in self.half_bracket(&x[..v1], &z[..v1]).into_iter().enumerate() {
            out[v1 + k] = out[v1 + k].clone() + c;
        }
    }

    /// `x^{-1} = -x` in exponential coordinates.
    pub fn inverse(&self, x: &GPoint<T>) -> GPoint<T> {
        GPoint {
            z1: x.z1.iter().map(|v| -v.clone()).collect(),
            z2: x.z2.iter().map(|v| -v.clone()).collect(),
        }
    }

    /// `delta_t x = (t x1, t^2 x2)`.
    pub fn dilate(&self, t: &T, x: &GPoint<T>) -> Result<GPoint<T>> {
        if !t.is_finite_value() || *t <= T::zero() {
            return input(format!("dilation factor must be positive, got {t}"));
        }
        self.check_point(x)?;
        let t2 = t.clone() * t.clone();
        Ok(GPoint {
            z1: x.z1.iter().map(|v| v.clone() * t.clone()).collect(),
            z2: x.z2.iter().map(|v| v.clone() * t2.clone()).collect(),
        })
    }

    /// Coefficients of `X_j` at `x` in the coordinate frame.
    pub fn field_direction(&self, j: usize, x: &GPoint<T>) -> Result<Vec<T>> {
        if j >= self.v1 {
            return input(format!("horizontal index {j} out of range for v1 = {}", self.v1));
        }
        self.check_point(x)?;
        let mut c = vec![T::zero(); self.dim()];
        c[j] = T::one();
        let mut e = vec![T::zero(); self.v1];
        e[j] = T::one();
        for (k, beta) in self.half_bracket(&x.z1, &e).into_iter().enumerate() {
            c[self.v1 + k] = beta;
        }
        Ok(c)
    }

    /// Jacobian (row-major, `dim x dim`) and offset of `z -> p . z`.
    pub fn left_translation_affine(&self, p: &GPoint<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check_point(p)?;
        let m = self.dim();
        let mut a = vec![T::zero(); m * m];
        for i in 0..m {
            a[i * m + i] = T::one();
        }
        for k in 0..self.v2 {
            for j in 0..self.v1 {
                let mut s = T::zero();
                for i in 0..self.v1 {
                    s = s + self.b(k, i, j).clone() * p.z1[i].clone();
                }
                a[(self.v1 + k) * m + j] = T::half() * s;
            }
        }
        Ok((a, p.coords()))
    }
}

impl<T: Real> CarnotStep2<T> {
    pub fn gauge_value(&self, gauge: &Gauge<T>, x: &GPoint<T>) -> T {
        gauge.value(x)
    }

    /// `d(x, y) = |y^{-1} x|`.
    pub fn distance(&self, gauge: &Gauge<T>, x: &GPoint<T>, y: &GPoint<T>) -> Result<T> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(gauge.value(&self.mul_unchecked(&self.inverse(y), x)))
    }

    /// `X_j u (x)`.
    pub fn left_field(&self, j: usize, u: &AnalyticField<T>, x: &GPoint<T>) -> Result<T> {
        let c = self.field_direction(j, x)?;
        let grad = u.gradient(&x.coords());
        Ok(dot(&c, &grad))
    }

    /// `(X_1 u, ..., X_v1 u)` at `x`.
    pub fn horizontal_gradient(&self, u: &AnalyticField<T>, x: &GPoint<T>) -> Result<Vec<T>> {
        self.check_point(x)?;
        let grad = u.gradient(&x.coords());
        (0..self.v1).map(|j| Ok(dot(&self.field_direction(j, x)?, &grad))).collect()
    }

    /// `sum_j X_j^2 u (x)`. The first-order part of `X_j^2` is
    /// `1/2 sum_k b[k][j][j] d/dz2_k`, which vanishes, so only the Hessian enters.
    pub fn sub_laplacian(&self, u: &AnalyticField<T>, x: &GPoint<T>) -> Result<T> {
        self.check_point(x)?;
        let m = self.dim();
        let (_, _, hess) = u.jet(&x.coords());
        let mut total = T::zero();
        for j in 0..self.v1 {
            let c = self.field_direction(j, x)?;
            for a in 0..m {
                if c[a].is_zero() {
                    continue;
                }
                for b in 0..m {
                    total = total + c[a] * hess[a * m + b] * c[b];
                }
            }
        }
        Ok(total)
    }

    /// `Du_x(z) = <grad_H u(x), z1>`.
    pub fn pansu_differential(&self, u: &AnalyticField<T>, x: &GPoint<T>, z: &GPoint<T>) -> Result<T> {
        self.check_point(z)?;
        let grad_h = self.horizontal_gradient(u, x)?;
        Ok(dot(&grad_h, &z.z1))
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::scalar::ratio;

    fn h1q() -> CarnotStep2<BigRational> {
        CarnotStep2::heisenberg(1).unwrap()
    }

    fn pq(a: i64, b: i64, c: (i64, i64)) -> GPoint<BigRational> {
        GPoint::new(vec![ratio(a, 1), ratio(b, 1)], vec![ratio(c.0, c.1)])
    }

    #[test]
    fn heisenberg_product_examples() {
        let g = h1q();
        assert_eq!(g.multiply(&pq(1, 0, (0, 1)), &pq(0, 1, (0, 1))).unwrap(), pq(1, 1, (1, 2)));
        assert_eq!(g.multiply(&pq(1, 0, (0, 1)), &pq(1, 0, (0, 1))).unwrap(), pq(2, 0, (0, 1)));
        let x = pq(3, -2, (5, 7));
        assert_eq!(g.multiply(&x, &g.inverse(&x)).unwrap(), g.identity());
    }

    #[test]
    fn dilation_examples() {
        let g = h1q();
        assert_eq!(g.dilate(&ratio(2, 1), &pq(1, 0, (1, 1))).unwrap(), pq(2, 0, (4, 1)));
        assert!(g.dilate(&ratio(0, 1), &pq(1, 0, (1, 1))).is_err());
        let x = pq(3, -2, (5, 7));
        let t = ratio(7, 3);
        let back = g.dilate(&(ratio(1, 1) / t.clone()), &g.dilate(&t, &x).unwrap()).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(CarnotStep2::new(2, 1, vec![0.0, 1.0, 1.0, 0.0]).is_err());
        assert!(CarnotStep2::<f64>::new(2, 1, vec![0.0; 3]).is_err());
        assert!(CarnotStep2::from_triples(2, 1, &[(0, 0, 0, 1.0)]).is_err());
        let g = CarnotStep2::<f64>::heisenberg(1).unwrap();
        assert!(g.multiply(&GPoint::new(vec![0.0], vec![0.0]), &g.identity()).is_err());
        assert_eq!(g.homogeneous_dimension(), 4);
    }

    #[test]
    fn heisenberg_n_layout() {
        let g = CarnotStep2::<f64>::heisenberg(2).unwrap();
        assert_eq!((g.v1(), g.v2()), (4, 1));
        assert_eq!(*g.b(0, 0, 2), 1.0);
        assert_eq!(*g.b(0, 3, 1), -1.0);
        assert_eq!(*g.b(0, 0, 1), 0.0);
        assert!(g.has_integer_bracket());
    }

    #[test]
    fn gauge_and_distance_examples() {
        let g = CarnotStep2::<f64>::heisenberg(1).unwrap();
        let k = Gauge::Koranyi;
        assert_eq!(g.gauge_value(&k, &GPoint::new(vec![1.0, 0.0], vec![0.0])), 1.0);
        assert_eq!(g.gauge_value(&k, &GPoint::new(vec![0.0, 0.0], vec![1.0])), 1.0);
        let d = g
            .distance(&k, &GPoint::new(vec![1.0, 0.0], vec![0.0]), &GPoint::new(vec![0.0, 1.0], vec![0.0]))
            .unwrap();
        assert!((d - 4.25f64.powf(0.25)).abs() < 1e-15);
        let x = GPoint::new(vec![2.0, 0.0], vec![4.0]);
        let y = GPoint::new(vec![1.0, 0.0], vec![1.0]);
        assert!((g.gauge_value(&k, &x) - 2.0 * g.gauge_value(&k, &y)).abs() < 1e-14);
        assert!((g.gauge_value(&k, &x) - 32f64.powf(0.25)).abs() < 1e-14);
    }

    #[test]
    fn left_field_examples() {
        let g = CarnotStep2::<f64>::heisenberg(1).unwrap();
        let t = AnalyticField::coordinate(3, 2);
        let x = GPoint::new(vec![0.0, 3.0], vec![0.0]);
        assert_eq!(g.left_field(0, &t, &x).unwrap(), -1.5);
        let xc = AnalyticField::coordinate(3, 0);
        assert_eq!(g.left_field(0, &xc, &GPoint::new(vec![5.0, -2.0], vec![7.0])).unwrap(), 1.0);
        assert!(g.left_field(2, &xc, &x).is_err());
        let h = AnalyticField::monomial(1.0, vec![2, 1, 0]);
        let p = GPoint::new(vec![1.5, -0.5], vec![2.0]);
        assert_eq!(g.left_field(1, &h, &p).unwrap(), 1.5 * 1.5);
    }

    #[test]
    fn sub_laplacian_examples() {
        let g = CarnotStep2::<f64>::heisenberg(1).unwrap();
        let p = GPoint::new(vec![0.3, -1.2], vec![0.7]);
        let n2 = AnalyticField::horizontal_norm_sq(2, 1);
        assert!((g.sub_laplacian(&n2, &p).unwrap() - 4.0).abs() < 1e-14);
        let t = AnalyticField::coordinate(3, 2);
        assert_eq!(g.sub_laplacian(&t, &p).unwrap(), 0.0);
        let h2 = CarnotStep2::<f64>::heisenberg(2).unwrap();
        let n2 = AnalyticField::horizontal_norm_sq(4, 1);
        let q = GPoint::new(vec![0.1, 0.2, 0.3, 0.4], vec![0.5]);
        assert!((h2.sub_laplacian(&n2, &q).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn pansu_examples() {
        let g = CarnotStep2::<f64>::heisenberg(1).unwrap();
        let xc = AnalyticField::coordinate(3, 0);
        let x = GPoint::new(vec![0.4, 0.1], vec![-2.0]);
        let z = GPoint::new(vec![1.25, 3.0], vec![9.0]);
        assert_eq!(g.pansu_differential(&xc, &x, &z).unwrap(), 1.25);
        let z0 = GPoint::new(vec![0.0, 0.0], vec![9.0]);
        assert_eq!(g.pansu_differential(&xc, &x, &z0).unwrap(), 0.0);
        let n2 = AnalyticField::horizontal_norm_sq(2, 1);
        let x = GPoint::new(vec![1.0, 2.0], vec![0.0]);
        let z = GPoint::new(vec![1.0, 0.0], vec![0.0]);
        assert_eq!(g.pansu_differential(&n2, &x, &z).unwrap(), 2.0);
    }
}
