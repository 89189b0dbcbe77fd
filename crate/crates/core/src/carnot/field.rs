use super::{CarnotStep2, GPoint};
use crate::error::{input, Result};
use crate::scalar::Real;

/// Closed-form test functions on `R^m` (coordinates `(z1, z2)` flattened)
/// with exact value, gradient and Hessian.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticField<T> {
    /// `<coeffs, z> + constant`.
    Linear { coeffs: Vec<T>, constant: T },
    /// `coeff * prod z_i^powers[i]`.
    Monomial { coeff: T, powers: Vec<u32> },
    /// `|z1|^2` over the first `v1` coordinates.
    HorizontalNormSq { v1: usize },
    /// `(|z1|^4 + beta |z2|^2)^(exponent/4)`, singular at the origin when the
    /// exponent is negative.
    GaugePower { v1: usize, beta: T, exponent: T },
    /// `inner(A z + b)` with `A` row-major `m x m`.
    Affine { inner: Box<AnalyticField<T>>, matrix: Vec<T>, offset: Vec<T> },
    Scaled(T, Box<AnalyticField<T>>),
    Sum(Vec<AnalyticField<T>>),
}

impl<T: Real> AnalyticField<T> {
    pub fn constant(m: usize, c: T) -> Self {
        Self::Linear { coeffs: vec![T::zero(); m], constant: c }
    }

    pub fn coordinate(m: usize, i: usize) -> Self {
        let mut coeffs = vec![T::zero(); m];
        coeffs[i] = T::one();
        Self::Linear { coeffs, constant: T::zero() }
    }

    pub fn monomial(coeff: T, powers: Vec<u32>) -> Self {
        Self::Monomial { coeff, powers }
    }

    pub fn horizontal_norm_sq(v1: usize, _v2: usize) -> Self {
        Self::HorizontalNormSq { v1 }
    }

    /// `<a, z1> + c` on a group with the given second-layer dimension.
    pub fn horizontal_affine(a: &[T], c: T, v2: usize) -> Self {
        let mut coeffs = a.to_vec();
        coeffs.extend(std::iter::repeat(T::zero()).take(v2));
        Self::Linear { coeffs, constant: c }
    }

    pub fn gauge_power(v1: usize, beta: T, exponent: T) -> Self {
        Self::GaugePower { v1, beta, exponent }
    }

    /// `N^(2-Q)` for the Folland norm `N = (|z1|^4 + 16 |z2|^2)^(1/4)`; on
    /// `H^n` this is a fundamental solution of the sub-Laplacian up to a factor.
    pub fn folland_kernel(g: &CarnotStep2<T>) -> Self {
        let q = T::from_f64_lossy(g.homogeneous_dimension() as f64);
        Self::GaugePower { v1: g.v1(), beta: T::from_f64_lossy(16.0), exponent: T::two() - q }
    }

    /// `z -> self(p^{-1} . z)`: the field moved so that its origin sits at `p`.
    pub fn centred_at(self, g: &CarnotStep2<T>, p: &GPoint<T>) -> Result<Self> {
        let (matrix, offset) = g.left_translation_affine(&g.inverse(p))?;
        Ok(Self::Affine { inner: Box::new(self), matrix, offset })
    }

    pub fn scaled(self, c: T) -> Self {
        Self::Scaled(c, Box::new(self))
    }

    pub fn plus(self, other: Self) -> Self {
        match self {
            Self::Sum(mut terms) => {
                terms.push(other);
                Self::Sum(terms)
            }
            first => Self::Sum(vec![first, other]),
        }
    }

    /// Checks that the field can be evaluated on `R^m`.
    pub fn check_dim(&self, m: usize) -> Result<()> {
        let ok = match self {
            Self::Linear { coeffs, .. } => coeffs.len() == m,
            Self::Monomial { powers, .. } => powers.len() == m,
            Self::HorizontalNormSq { v1 } | Self::GaugePower { v1, .. } => *v1 <= m,
            Self::Affine { inner, matrix, offset } => {
                inner.check_dim(m)?;
                matrix.len() == m * m && offset.len() == m
            }
            Self::Scaled(_, f) => return f.check_dim(m),
            Self::Sum(fs) => return fs.iter().try_for_each(|f| f.check_dim(m)),
        };
        if !ok {
            return input(format!("field {} does not live in dimension {m}", self.describe()));
        }
        Ok(())
    }

    pub fn value(&self, z: &[T]) -> T {
        match self {
            Self::Linear { coeffs, constant } => coeffs.iter().zip(z).fold(*constant, |a, (c, x)| a + *c * *x),
            Self::Monomial { coeff, powers } => {
                powers.iter().zip(z).fold(*coeff, |a, (p, x)| a * x.powi(*p as i32))
            }
            Self::HorizontalNormSq { v1 } => z[..*v1].iter().fold(T::zero(), |a, x| a + *x * *x),
            Self::GaugePower { v1, beta, exponent } => {
                let (n1, n2) = layer_norms(z, *v1);
                (n1 * n1 + *beta * n2).powf(*exponent / T::from_f64_lossy(4.0))
            }
            Self::Affine { inner, matrix, offset } => inner.value(&apply_affine(matrix, offset, z)),
            Self::Scaled(c, f) => *c * f.value(z),
            Self::Sum(fs) => fs.iter().fold(T::zero(), |a, f| a + f.value(z)),
        }
    }

    pub fn gradient(&self, z: &[T]) -> Vec<T> {
        self.jet(z).1
    }

    pub fn hessian(&self, z: &[T]) -> Vec<T> {
        self.jet(z).2
    }

    /// Value, gradient and row-major Hessian at `z`.
    pub fn jet(&self, z: &[T]) -> (T, Vec<T>, Vec<T>) {
        let m = z.len();
        let zero = || vec![T::zero(); m];
        match self {
            Self::Linear { coeffs, .. } => (self.value(z), coeffs.clone(), vec![T::zero(); m * m]),
            Self::Monomial { coeff, powers } => {
                let mut grad = zero();
                let mut hess = vec![T::zero(); m * m];
                // d/dz_i and d2/dz_i dz_j by lowering the relevant exponents.
                let term = |lower: &[(usize, u32)]| -> T {
                    let mut c = *coeff;
                    let mut p = powers.clone();
                    for &(i, times) in lower {
                        for _ in 0..times {
                            if p[i] == 0 {
                                return T::zero();
                            }
                            c = c * T::from_f64_lossy(p[i] as f64);
                            p[i] -= 1;
                        }
                    }
                    p.iter().zip(z).fold(c, |a, (e, x)| a * x.powi(*e as i32))
                };
                for i in 0..m {
                    grad[i] = term(&[(i, 1)]);
                    hess[i * m + i] = term(&[(i, 2)]);
                    for j in 0..i {
                        let h = term(&[(i, 1), (j, 1)]);
                        hess[i * m + j] = h;
                        hess[j * m + i] = h;
                    }
                }
                (self.value(z), grad, hess)
            }
            Self::HorizontalNormSq { v1 } => {
                let mut grad = zero();
                let mut hess = vec![T::zero(); m * m];
                for i in 0..*v1 {
                    grad[i] = T::two() * z[i];
                    hess[i * m + i] = T::two();
                }
                (self.value(z), grad, hess)
            }
            Self::GaugePower { v1, beta, exponent } => {
                let v1 = *v1;
                let (n1, n2) = layer_norms(z, v1);
                let s = n1 * n1 + *beta * n2;
                let q = *exponent / T::from_f64_lossy(4.0);
                let four = T::from_f64_lossy(4.0);
                let mut ds = zero();
                let mut d2s = vec![T::zero(); m * m];
                for i in 0..m {
                    if i < v1 {
                        ds[i] = four * n1 * z[i];
                        for j in 0..v1 {
                            let delta = if i == j { n1 } else { T::zero() };
                            d2s[i * m + j] = four * (delta + T::two() * z[i] * z[j]);
                        }
                    } else {
                        ds[i] = T::two() * *beta * z[i];
                        d2s[i * m + i] = T::two() * *beta;
                    }
                }
                let f1 = q * s.powf(q - T::one());
                let f2 = q * (q - T::one()) * s.powf(q - T::two());
                let grad = ds.iter().map(|d| f1 * *d).collect();
                let hess = (0..m * m).map(|k| f2 * ds[k / m] * ds[k % m] + f1 * d2s[k]).collect();
                (s.powf(q), grad, hess)
            }
            Self::Affine { inner, matrix, offset } => {
                let y = apply_affine(matrix, offset, z);
                let (v, gy, hy) = inner.jet(&y);
                // grad = A^T gy, hess = A^T hy A.
                let grad = (0..m).map(|j| (0..m).fold(T::zero(), |a, i| a + matrix[i * m + j] * gy[i])).collect();
                let mut ha = vec![T::zero(); m * m];
                for i in 0..m {
                    for j in 0..m {
                        ha[i * m + j] = (0..m).fold(T::zero(), |a, k| a + hy[i * m + k] * matrix[k * m + j]);
                    }
                }
                let mut hess = vec![T::zero(); m * m];
                for i in 0..m {
                    for j in 0..m {
                        hess[i * m + j] = (0..m).fold(T::zero(), |a, k| a + matrix[k * m + i] * ha[k * m + j]);
                    }
                }
                (v, grad, hess)
            }
            Self::Scaled(c, f) => {
                let (v, g, h) = f.jet(z);
                (*c * v, g.into_iter().map(|x| *c * x).collect(), h.into_iter().map(|x| *c * x).collect())
            }
            Self::Sum(fs) => {
                let mut acc = (T::zero(), zero(), vec![T::zero(); m * m]);
                for f in fs {
                    let (v, g, h) = f.jet(z);
                    acc.0 = acc.0 + v;
                    acc.1.iter_mut().zip(g).for_each(|(a, b)| *a = *a + b);
                    acc.2.iter_mut().zip(h).for_each(|(a, b)| *a = *a + b);
                }
                acc
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Linear { coeffs, constant } => format!("linear({coeffs:?}; {constant})"),
            Self::Monomial { coeff, powers } => format!("{coeff}*z^{powers:?}"),
            Self::HorizontalNormSq { .. } => "|z1|^2".into(),
            Self::GaugePower { beta, exponent, .. } => format!("(|z1|^4+{beta}|z2|^2)^({exponent}/4)"),
            Self::Affine { inner, offset, .. } => format!("{} after affine map (offset {offset:?})", inner.describe()),
            Self::Scaled(c, f) => format!("{c}*[{}]", f.describe()),
            Self::Sum(fs) => fs.iter().map(Self::describe).collect::<Vec<_>>().join(" + "),
        }
    }
}

fn layer_norms<T: Real>(z: &[T], v1: usize) -> (T, T) {
    let sq = |s: &[T]| s.iter().fold(T::zero(), |a, x| a + *x * *x);
    (sq(&z[..v1]), sq(&z[v1..]))
}

fn apply_affine<T: Real>(matrix: &[T], offset: &[T], z: &[T]) -> Vec<T> {
    let m = z.len();
    (0..m)
        .map(|i| (0..m).fold(offset[i], |a, j| a + matrix[i * m + j] * z[j]))
        .collect()
}
