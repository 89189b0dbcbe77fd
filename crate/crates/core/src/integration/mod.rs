//! Means and moments over balls of the model spaces.
//!
//! Two schemes: Monte Carlo from counter-based streams (`mc:n:seed`) and a
//! nested Gauss-Legendre rule (`grid:res`). Monte Carlo work is cut into fixed
//! blocks, each with its own stream position, and block results are merged in
//! block order, so estimates do not depend on the thread count.

mod grid;
mod sampling;

pub use grid::{ball_slices, grid_integrate};
pub use sampling::{mc_integrate, sample_ball, BallSampler, BLOCK};

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::carnot::{CarnotStep2, Gauge};
use crate::error::{input, Error, Result};
use crate::model_spaces::ModelSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Grid,
    MonteCarlo,
    /// A deterministic operator on a finite discretization.
    Discrete,
}

/// A single value with its error bar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Zero exactly when the method is deterministic.
    pub std_error: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid_resolution: Option<usize>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, method: Method::Exact, samples: None, grid_resolution: None }
    }

    pub fn grid(value: f64, res: usize) -> Self {
        Self { value, std_error: 0.0, method: Method::Grid, samples: None, grid_resolution: Some(res) }
    }

    pub fn monte_carlo(value: f64, std_error: f64, n: u64) -> Self {
        Self { value, std_error, method: Method::MonteCarlo, samples: Some(n), grid_resolution: None }
    }

    pub fn discrete(value: f64) -> Self {
        Self { value, std_error: 0.0, method: Method::Discrete, samples: None, grid_resolution: None }
    }

    /// Affine change `a * value + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self { value: a * self.value + b, std_error: a.abs() * self.std_error, ..self.clone() }
    }
}

/// Master seed plus stream id. Streams are ChaCha stream numbers, so distinct
/// ids give disjoint keystreams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// A derived spec for sub-task `k` (for example the `k`-th radius).
    pub fn substream(&self, k: u64) -> Self {
        Self { master: self.master, stream: self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k + 1) }
    }

    /// Generator positioned at the start of block `block` of this stream.
    pub fn rng(&self, block: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        // 2^36 words per block is far more than any block consumes.
        rng.set_word_pos(u128::from(block) << 36);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    MonteCarlo { n: u64, seed: u64 },
    Grid { res: usize },
}

impl FromStr for Scheme {
    type Err = Error;

    /// `mc:n:seed` (n may be written `1e7`) or `grid:res`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Input(format!("cannot parse scheme {s:?}; expected mc:n:seed or grid:res"));
        let count = |t: &str| -> Result<u64> {
            if let Ok(n) = t.parse::<u64>() {
                return Ok(n);
            }
            let f: f64 = t.parse().map_err(|_| bad())?;
            if f >= 1.0 && f.fract() == 0.0 && f < 1e19 {
                Ok(f as u64)
            } else {
                Err(bad())
            }
        };
        match parts.as_slice() {
            ["mc", n, seed] => {
                let n = count(n)?;
                if n == 0 {
                    return input("Monte Carlo needs at least one sample");
                }
                Ok(Self::MonteCarlo { n, seed: seed.parse().map_err(|_| bad())? })
            }
            ["grid", res] => {
                let res = count(res)? as usize;
                if res == 0 {
                    return input("grid resolution must be positive");
                }
                Ok(Self::Grid { res })
            }
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MonteCarlo { n, seed } => write!(f, "mc:{n}:{seed}"),
            Self::Grid { res } => write!(f, "grid:{res}"),
        }
    }
}

/// Means of several integrands over `B_r(x)` under one scheme.
///
/// `f(y, out)` writes the integrand values at `y` into `out`. Monte Carlo runs
/// use `stream` as the stream id.
pub fn ball_means(
    space: &ModelSpace,
    x: &[f64],
    r: f64,
    scheme: Scheme,
    stream: u64,
    k: usize,
    f: &(dyn Fn(&[f64], &mut [f64]) + Sync),
) -> Result<Vec<Estimate>> {
    space.check_point(x)?;
    if !(r > 0.0) || !r.is_finite() {
        return input(format!("radius must be positive, got {r}"));
    }
    match scheme {
        Scheme::MonteCarlo { n, seed } => {
            let stats = mc_integrate(space, x, r, n, SeedSpec::new(seed, stream), k, f)?;
            Ok(stats.into_iter().map(|(m, se)| Estimate::monte_carlo(m, se, n)).collect())
        }
        Scheme::Grid { res } => {
            let (sums, vol) = grid_integrate(space, x, r, res, k, f)?;
            Ok(sums.into_iter().map(|s| Estimate::grid(s / vol, res)).collect())
        }
    }
}

/// `mean_{B_r(x)} u`.
pub fn mean_over_ball(
    space: &ModelSpace,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    r: f64,
    scheme: Scheme,
) -> Result<Estimate> {
    let mut out = ball_means(space, x, r, scheme, 0, 1, &|y, o| o[0] = u(y))?;
    Ok(out.remove(0))
}

/// Continuum r-laplacian `(mean_{B_r(x)} u - u(x)) / r^2`, averaging the
/// increments so the cancellation happens before the division.
pub fn r_laplacian(
    space: &ModelSpace,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    r: f64,
    scheme: Scheme,
    stream: u64,
) -> Result<Estimate> {
    let ux = u(x);
    let r2 = r * r;
    let mut out = ball_means(space, x, r, scheme, stream, 1, &|y, o| o[0] = (u(y) - ux) / r2)?;
    Ok(out.remove(0))
}

/// Monte Carlo volume of `B_r(x)`: envelope volume times acceptance rate over
/// `trials` proposals.
pub fn ball_volume_mc(space: &ModelSpace, x: &[f64], r: f64, trials: u64, seed: SeedSpec) -> Result<Estimate> {
    space.check_point(x)?;
    let sampler = BallSampler::new(space, x, r)?;
    let blocks = trials.div_ceil(BLOCK);
    use rayon::prelude::*;
    let hits: Vec<u64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.rng(b);
            let n = BLOCK.min(trials - b * BLOCK);
            (0..n).filter(|_| sampler.propose(&mut rng).is_some()).count() as u64
        })
        .collect();
    let hits: u64 = hits.iter().sum();
    let p = hits as f64 / trials as f64;
    let env = sampler.envelope_volume();
    Ok(Estimate::monte_carlo(env * p, env * (p * (1.0 - p) / trials as f64).sqrt(), trials))
}

fn carnot_space(g: &CarnotStep2<f64>, gauge: &Gauge<f64>) -> Result<ModelSpace> {
    ModelSpace::carnot(g.clone(), gauge.clone())
}

/// `C = (1 / (2 v1)) mean_{B_rho} |z1|^2` over the unit gauge ball.
pub fn carnot_constant(g: &CarnotStep2<f64>, gauge: &Gauge<f64>, scheme: Scheme) -> Result<Estimate> {
    carnot_constant_at_radius(g, gauge, 1.0, scheme)
}

/// The same constant computed on `B_r(0)` and rescaled by `r^-2`.
pub fn carnot_constant_at_radius(g: &CarnotStep2<f64>, gauge: &Gauge<f64>, r: f64, scheme: Scheme) -> Result<Estimate> {
    let space = carnot_space(g, gauge)?;
    let v1 = g.v1();
    let m = mean_over_ball(&space, &|z| z[..v1].iter().map(|a| a * a).sum(), &space.origin(), r, scheme)?;
    Ok(m.affine(1.0 / (2.0 * v1 as f64 * r * r), 0.0))
}

/// Computes the constant under two schemes and fails unless they agree within
/// `max(3 sigma, rel_tol * |value|)`.
pub fn carnot_constant_checked(
    g: &CarnotStep2<f64>,
    gauge: &Gauge<f64>,
    a: Scheme,
    b: Scheme,
    rel_tol: f64,
) -> Result<(Estimate, Estimate)> {
    let ea = carnot_constant(g, gauge, a)?;
    let eb = carnot_constant(g, gauge, b)?;
    let sigma = (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt();
    let allowed = (3.0 * sigma).max(rel_tol * eb.value.abs());
    if (ea.value - eb.value).abs() > allowed {
        return Err(Error::Numeric(format!(
            "schemes disagree on the Carnot constant: {a} gives {} +- {}, {b} gives {} +- {} (allowed {allowed:.3e})",
            ea.value, ea.std_error, eb.value, eb.std_error
        )));
    }
    Ok((ea, eb))
}

/// `mean_{B_rho} <a, z1>^2` for each horizontal unit direction `a`, all from
/// one set of samples or nodes.
pub fn isotropy_check(
    g: &CarnotStep2<f64>,
    gauge: &Gauge<f64>,
    directions: &[Vec<f64>],
    scheme: Scheme,
) -> Result<Vec<Estimate>> {
    let v1 = g.v1();
    for a in directions {
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if a.len() != v1 || (norm - 1.0).abs() > 1e-9 {
            return input(format!("direction {a:?} is not a unit vector in V1 (dimension {v1})"));
        }
    }
    let space = carnot_space(g, gauge)?;
    ball_means(&space, &space.origin(), 1.0, scheme, 0, directions.len(), &|z, out| {
        for (o, a) in out.iter_mut().zip(directions) {
            let s: f64 = a.iter().zip(z).map(|(p, q)| p * q).sum();
            *o = s * s;
        }
    })
}
