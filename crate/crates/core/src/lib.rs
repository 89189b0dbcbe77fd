//! Asymptotic mean value calculus.
//!
//! * [`mmspace`]: the r-laplacian, its adjoint, the symmetrized r-laplacian and
//!   the approximate Korevaar-Schoen energies on finite metric measure spaces.
//! * [`carnot`]: step-2 Carnot groups, gauges, left-invariant fields and the
//!   sub-Laplacian on a closed-form field catalog.
//! * [`model_spaces`]: Euclidean space, half-space, flat cones and Carnot
//!   groups as continuum metric measure spaces.
//! * [`integration`]: quadrature and Monte Carlo over balls.
//! * [`experiments`]: r-sweeps with limit extrapolation and verdicts.
//! * [`dirichlet`]: the discrete Dirichlet problem for the r-energy and the
//!   barrier construction on gauge balls.
//!
//! The exact layers are generic over [`Scalar`]; the aliases below fix the
//! usual choices.

pub mod carnot;
pub mod cloud;
pub mod dirichlet;
mod error;
pub mod experiments;
pub mod integration;
pub mod mmspace;
pub mod model_spaces;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

use num_rational::BigRational;

/// Exact rational scalar.
pub type Exact = BigRational;

pub type MMSpace = mmspace::FiniteMMSpace<f64>;
pub type ExactMMSpace = mmspace::FiniteMMSpace<Exact>;
pub type Field = mmspace::ScalarField<f64>;
pub type ExactField = mmspace::ScalarField<Exact>;

pub type Group = carnot::CarnotStep2<f64>;
pub type ExactGroup = carnot::CarnotStep2<Exact>;
pub type GroupPoint = carnot::GPoint<f64>;
pub type ExactGroupPoint = carnot::GPoint<Exact>;
pub type CatalogField = carnot::AnalyticField<f64>;
