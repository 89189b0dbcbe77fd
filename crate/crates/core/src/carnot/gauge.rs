use std::fmt;
use std::sync::Arc;

use super::GPoint;
use crate::error::{input, Result};
use crate::scalar::Real;

/// A homogeneous gauge of the form `F(|z1|, z2)`.
///
/// Only the value is needed for distances. Sampling additionally needs a box
/// containing the unit ball, given as `(h, v)`: `|z1| <= h` and `|z2_k| <= v`.
pub trait GaugeProfile<T>: Send + Sync + fmt::Debug {
    fn eval(&self, horizontal_norm: T, z2: &[T]) -> T;

    fn unit_envelope(&self) -> Option<(T, T)> {
        None
    }
}

#[derive(Clone, Debug)]
pub enum Gauge<T> {
    /// `(|z1|^4 + |z2|^2)^(1/4)`.
    Koranyi,
    /// `(|z1|^4 + beta |z2|^2)^(1/4)`; `beta = 16` is the Folland norm on `H^n`.
    ScaledKoranyi { beta: T },
    /// User-supplied profile. Not certified as a pseudonorm.
    Profile(Arc<dyn GaugeProfile<T>>),
}

impl<T: Real> Gauge<T> {
    pub fn scaled(beta: T) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return input(format!("gauge scale must be positive, got {beta}"));
        }
        Ok(Self::ScaledKoranyi { beta })
    }

    pub fn folland() -> Self {
        Self::ScaledKoranyi { beta: T::from_f64_lossy(16.0) }
    }

    /// The weight on `|z2|^2`, when the gauge is of Koranyi type.
    pub fn beta(&self) -> Option<T> {
        match self {
            Self::Koranyi => Some(T::one()),
            Self::ScaledKoranyi { beta } => Some(*beta),
            Self::Profile(_) => None,
        }
    }

    pub fn value(&self, x: &GPoint<T>) -> T {
        self.value_split(&x.z1, &x.z2)
    }

    /// Gauge of the flattened point `(z[..v1], z[v1..])`.
    pub fn value_flat(&self, v1: usize, z: &[T]) -> T {
        self.value_split(&z[..v1], &z[v1..])
    }

    fn value_split(&self, z1: &[T], z2: &[T]) -> T {
        let n1 = z1.iter().fold(T::zero(), |a, v| a + *v * *v);
        match self {
            Self::Profile(p) => p.eval(n1.sqrt(), z2),
            _ => {
                let n2 = z2.iter().fold(T::zero(), |a, v| a + *v * *v);
                let beta = self.beta().unwrap_or_else(T::one);
                (n1 * n1 + beta * n2).sqrt().sqrt()
            }
        }
    }

    /// Box around the unit ball: `(horizontal radius, per-coordinate vertical bound)`.
    pub fn unit_envelope(&self) -> Option<(T, T)> {
        match self {
            Self::Profile(p) => p.unit_envelope(),
            _ => Some((T::one(), T::one() / self.beta()?.sqrt())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Koranyi => "koranyi".into(),
            Self::ScaledKoranyi { beta } => format!("scaled_koranyi:{beta}"),
            Self::Profile(p) => format!("profile:{p:?}"),
        }
    }
}
