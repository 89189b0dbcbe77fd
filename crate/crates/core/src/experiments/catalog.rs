//! Named test functions for sweeps and the command line.

use std::sync::Arc;

use crate::carnot::AnalyticField;
use crate::error::{input, Result};
use crate::model_spaces::ModelSpace;

pub type Observable = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A field looked up by name, with its expected amv limit where one is known.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub eval: Observable,
    /// Exact value of `lim_{r -> 0} Delta_r u(x)` at every point, when the
    /// field makes it constant.
    pub amv_limit: Option<f64>,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry").field("name", &self.name).field("amv_limit", &self.amv_limit).finish()
    }
}

fn entry(name: &str, amv_limit: Option<f64>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> CatalogEntry {
    CatalogEntry { name: name.into(), eval: Arc::new(f), amv_limit }
}

fn from_analytic(name: &str, field: AnalyticField<f64>, amv_limit: Option<f64>) -> CatalogEntry {
    entry(name, amv_limit, move |z| field.value(z))
}

/// Looks up `name` for `space`. Coordinates are the space's native ones;
/// cone fields use the developed coordinates `rho e^{i 2 pi phi / angle}`.
///
/// | name      | field                                | spaces               |
/// |-----------|--------------------------------------|----------------------|
/// | `const`   | `1`                                  | all                  |
/// | `sq1`     | `y_1^2`                              | Euclidean, half      |
/// | `normsq`  | `\|y\|^2`                            | Euclidean, half      |
/// | `harm3`   | `Re (y_1 + i y_2)^3`                 | 2-D Euclidean, half  |
/// | `x1`      | `y_1`                                | Euclidean, half      |
/// | `height`  | distance to the boundary             | half                 |
/// | `cone-x`  | developed first coordinate           | cones                |
/// | `hnorm2`  | `\|z1\|^2`                           | Carnot               |
/// | `folland` | `N^{2-Q}` with `N` the Folland gauge | Heisenberg groups    |
/// | `affine`  | `z1_1 - 0.5 z1_2 + 0.25`             | Carnot               |
pub fn catalog_field(space: &ModelSpace, name: &str) -> Result<CatalogEntry> {
    let unknown = || input(format!("field {name:?} is not in the catalog for {}", space.name()));
    match (space, name) {
        (_, "const") => Ok(entry(name, Some(0.0), |_| 1.0)),
        (ModelSpace::Euclidean { n } | ModelSpace::HalfSpace { n }, _) => {
            let n = *n;
            let amv = |lap: f64| Some(lap / (2.0 * (n as f64 + 2.0)));
            match name {
                "sq1" => Ok(entry(name, amv(2.0), |y| y[0] * y[0])),
                "normsq" => Ok(entry(name, amv(2.0 * n as f64), |y| y.iter().map(|c| c * c).sum())),
                "x1" => Ok(entry(name, Some(0.0), |y| y[0])),
                "harm3" if n == 2 => Ok(entry(name, Some(0.0), |y| y[0].powi(3) - 3.0 * y[0] * y[1] * y[1])),
                "height" if matches!(space, ModelSpace::HalfSpace { .. }) => {
                    Ok(entry(name, None, move |y| y[n - 1]))
                }
                _ => unknown(),
            }
        }
        (ModelSpace::FlatCone { angle }, "cone-x") => {
            let c = 2.0 * std::f64::consts::PI / angle;
            Ok(entry(name, None, move |p| p[0] * (c * p[1]).cos()))
        }
        (ModelSpace::Carnot { group, .. }, _) => match name {
            "hnorm2" => {
                let f = AnalyticField::horizontal_norm_sq(group.v1(), group.v2());
                Ok(from_analytic(name, f, None))
            }
            "folland" => Ok(from_analytic(name, AnalyticField::folland_kernel(group), None)),
            "affine" => {
                let mut a = vec![0.0; group.v1()];
                a[0] = 1.0;
                if group.v1() > 1 {
                    a[1] = -0.5;
                }
                Ok(from_analytic(name, AnalyticField::horizontal_affine(&a, 0.25, group.v2()), Some(0.0)))
            }
            _ => unknown(),
        },
        _ => unknown(),
    }
}
