//! Continuum model spaces: `R^n`, the half-space `{y_n >= 0}`, flat cones and
//! step-2 Carnot groups with a gauge distance.
//!
//! Points are plain coordinate slices. Cone points are `[rho, phi]` with
//! `phi` in `[0, theta)`; Carnot points are `(z1, z2)` flattened.

use std::f64::consts::PI;

use serde::Serialize;

use crate::carnot::{parse_group, CarnotStep2, GPoint, Gauge};
use crate::error::{input, Error, Result};
use crate::quadrature::{adaptive, GaussLegendre};

#[derive(Clone, Debug)]
pub enum ModelSpace {
    Euclidean { n: usize },
    HalfSpace { n: usize },
    FlatCone { angle: f64 },
    Carnot { group: CarnotStep2<f64>, gauge: Gauge<f64> },
}

/// A point of a flat cone in polar coordinates about the apex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConePoint {
    pub rho: f64,
    pub phi: f64,
}

impl ConePoint {
    /// Normalizes `phi` into `[0, angle)`.
    pub fn new(rho: f64, phi: f64, angle: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() || !phi.is_finite() {
            return input(format!("invalid cone point ({rho}, {phi})"));
        }
        Ok(Self { rho, phi: phi.rem_euclid(angle) })
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.rho, self.phi]
    }
}

/// Distance on the flat cone of total angle `angle <= 2 pi`.
pub fn cone_distance(angle: f64, p: ConePoint, q: ConePoint) -> f64 {
    let gap = (p.phi - q.phi).abs();
    let gap = gap.min(angle - gap).max(0.0);
    if gap <= PI {
        (p.rho * p.rho + q.rho * q.rho - 2.0 * p.rho * q.rho * gap.cos()).max(0.0).sqrt()
    } else {
        p.rho + q.rho
    }
}

/// Volume of the unit ball in `R^n`, for real `n >= 0`.
pub fn omega(n: f64) -> f64 {
    PI.powf(0.5 * n) / libm::tgamma(0.5 * n + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Exact,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Volume {
    pub value: f64,
    pub method: VolumeMethod,
}

/// Bounded regions for mm-boundary integrals.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ModelSpace {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return input("euclidean dimension must be positive");
        }
        Ok(Self::Euclidean { n })
    }

    pub fn half_space(n: usize) -> Result<Self> {
        if n == 0 {
            return input("half-space dimension must be positive");
        }
        Ok(Self::HalfSpace { n })
    }

    pub fn flat_cone(angle: f64) -> Result<Self> {
        if !(angle > 0.0 && angle <= 2.0 * PI * (1.0 + 1e-15)) {
            return input(format!("cone angle must lie in (0, 2pi], got {angle}"));
        }
        Ok(Self::FlatCone { angle: angle.min(2.0 * PI) })
    }

    pub fn carnot(group: CarnotStep2<f64>, gauge: Gauge<f64>) -> Result<Self> {
        if let Gauge::ScaledKoranyi { beta } = gauge {
            Gauge::scaled(beta)?;
        }
        Ok(Self::Carnot { group, gauge })
    }

    /// Parses `euclidean:n`, `half:n`, `cone:angle` or
    /// `carnot:preset:gauge[:beta]`.
    ///
    /// Angles accept decimals or multiples of pi such as `pi`, `3pi/2`.
    /// Presets are `h<n>`/`heisenberg<n>` or `@path` to an algebra file;
    /// gauges are `koranyi`, `folland` or `scaled` followed by `beta`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let dim = |s: &str| s.parse::<usize>().map_err(|_| Error::Input(format!("bad dimension {s:?} in {spec:?}")));
        match parts.as_slice() {
            ["euclidean", n] => Self::euclidean(dim(n)?),
            ["half", n] => Self::half_space(dim(n)?),
            ["cone", a] => Self::flat_cone(parse_angle(a)?),
            ["carnot", preset, rest @ ..] => {
                let group = parse_preset(preset)?;
                let gauge = parse_gauge(rest)?;
                Self::carnot(group, gauge)
            }
            _ => input(format!("unrecognized space spec {spec:?}")),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Euclidean { n } => format!("euclidean:{n}"),
            Self::HalfSpace { n } => format!("half:{n}"),
            Self::FlatCone { angle } => format!("cone:{angle}"),
            Self::Carnot { group, gauge } => {
                format!("carnot:v1={},v2={}:{}", group.v1(), group.v2(), gauge.name())
            }
        }
    }

    /// Length of the coordinate slice of a point.
    pub fn point_dim(&self) -> usize {
        match self {
            Self::Euclidean { n } | Self::HalfSpace { n } => *n,
            Self::FlatCone { .. } => 2,
            Self::Carnot { group, .. } => group.dim(),
        }
    }

    /// Topological dimension, used to normalize densities.
    pub fn dimension(&self) -> usize {
        self.point_dim()
    }

    /// Scaling exponent of ball volumes.
    pub fn volume_exponent(&self) -> usize {
        match self {
            Self::Carnot { group, .. } => group.homogeneous_dimension(),
            _ => self.dimension(),
        }
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.point_dim()]
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.point_dim() {
            return input(format!("point {p:?} has {} coordinates, {} expects {}", p.len(), self.name(), self.point_dim()));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return input(format!("point {p:?} is not finite"));
        }
        match self {
            Self::HalfSpace { n } if p[n - 1] < 0.0 => input(format!("point {p:?} lies outside the half-space")),
            Self::FlatCone { angle } if p[0] < 0.0 || p[1] < 0.0 || p[1] >= *angle => {
                input(format!("cone point {p:?} needs rho >= 0 and phi in [0, {angle})"))
            }
            _ => Ok(()),
        }
    }

    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    pub(crate) fn distance_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Self::Euclidean { .. } | Self::HalfSpace { .. } => {
                p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
            Self::FlatCone { angle } => cone_distance(
                *angle,
                ConePoint { rho: p[0], phi: p[1] },
                ConePoint { rho: q[0], phi: q[1] },
            ),
            Self::Carnot { group, gauge } => {
                let v1 = group.v1();
                let (p, q) = (GPoint::from_coords(v1, p), GPoint::from_coords(v1, q));
                gauge.value(&group.mul_unchecked(&group.inverse(&q), &p))
            }
        }
    }

    pub fn ball_volume(&self, x: &[f64], r: f64) -> Result<Volume> {
        self.check_point(x)?;
        check_radius(r)?;
        let (value, method) = match self {
            Self::Euclidean { n } => (omega(*n as f64) * r.powi(*n as i32), VolumeMethod::Exact),
            Self::HalfSpace { n } => {
                let full = omega(*n as f64) * r.powi(*n as i32);
                let h = x[n - 1];
                if h >= r {
                    (full, VolumeMethod::Exact)
                } else {
                    (full * (1.0 - checked(|g| half_space_deficit(*n, h / r, g))?), VolumeMethod::Quadrature)
                }
            }
            Self::FlatCone { angle } => {
                if x[0] == 0.0 {
                    (0.5 * angle * r * r, VolumeMethod::Exact)
                } else {
                    (checked(|g| cone_ball_area(0.5 * angle, x[0], r, g))?, VolumeMethod::Quadrature)
                }
            }
            Self::Carnot { group, gauge } => {
                let q = group.homogeneous_dimension() as i32;
                (carnot_unit_volume(group, gauge)? * r.powi(q), VolumeMethod::Quadrature)
            }
        };
        Ok(Volume { value, method })
    }

    /// `theta_r(x) = vol(B_r(x)) / (omega_N r^N)` with `N` the topological
    /// dimension. Not offered on Carnot groups.
    pub fn theta_r(&self, x: &[f64], r: f64) -> Result<f64> {
        if let Self::Carnot { .. } = self {
            return input("theta_r is not defined on Carnot groups: the dimension normalization is ambiguous");
        }
        let n = self.dimension();
        Ok(self.ball_volume(x, r)?.value / (omega(n as f64) * r.powi(n as i32)))
    }

    /// `|mu_r|(U) = int_U |1 - theta_r| / r dvol`.
    pub fn mm_boundary_mass(&self, region: &Region, r: f64) -> Result<f64> {
        check_radius(r)?;
        self.check_region(region)?;
        let gl = GaussLegendre::new(48);
        match self {
            Self::Euclidean { .. } => Ok(0.0),
            Self::HalfSpace { n } => {
                let n = *n;
                // Only the slab 0 <= h < r contributes; theta depends on h alone.
                let mut breaks = vec![0.0, r];
                match region {
                    Region::Ball { center, radius } => {
                        breaks.extend([center[n - 1] - radius, center[n - 1] + radius]);
                    }
                    Region::Box { lo, hi } => breaks.extend([lo[n - 1], hi[n - 1]]),
                }
                let breaks = clip_breaks(breaks, 0.0, r);
                let inner = GaussLegendre::new(48);
                let value = gl.integrate_panels(&breaks, |h| {
                    half_space_deficit(n, h / r, &inner) / r * slice_measure(n, region, h)
                });
                Ok(value)
            }
            Self::FlatCone { angle } => {
                let Region::Ball { center, radius } = region else {
                    return input("cone regions must be balls");
                };
                let alpha = 0.5 * angle;
                let full = if alpha < 0.5 * PI { r / alpha.sin() } else { r };
                let c = ConePoint { rho: center[0], phi: center[1] };
                let mut breaks = vec![0.0, full, r, (c.rho - radius).abs(), c.rho + radius];
                breaks = clip_breaks(breaks, 0.0, full.min(c.rho + radius));
                let value = gl.integrate_panels(&breaks, |a| {
                    let theta = cone_ball_area(alpha, a, r, &gl) / (PI * r * r);
                    (1.0 - theta).abs() / r * a * angular_measure(*angle, a, c, *radius)
                });
                Ok(value)
            }
            Self::Carnot { .. } => input("mm-boundary measures need theta_r, which is not defined on Carnot groups"),
        }
    }

    /// Measure of `region` intersected with the boundary of the half-space.
    pub fn boundary_measure(&self, region: &Region) -> Result<f64> {
        match self {
            Self::HalfSpace { n } => {
                self.check_region(region)?;
                Ok(slice_measure(*n, region, 0.0))
            }
            _ => input(format!("{} has no boundary", self.name())),
        }
    }

    fn check_region(&self, region: &Region) -> Result<()> {
        let m = self.point_dim();
        match region {
            Region::Ball { center, radius } => {
                if center.len() != m || !(*radius > 0.0) || !radius.is_finite() {
                    return input(format!("region ball needs a {m}-coordinate centre and a positive radius"));
                }
                if let Self::FlatCone { .. } = self {
                    self.check_point(center)?;
                }
            }
            Region::Box { lo, hi } => {
                if lo.len() != m || hi.len() != m || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return input(format!("region box needs {m}-coordinate corners with lo < hi"));
                }
            }
        }
        Ok(())
    }

    /// `vol(B_r(x)) / v_{K,N}(r)` with `N` the topological dimension.
    pub fn bishop_gromov_ratio(&self, x: &[f64], r: f64, k: f64) -> Result<f64> {
        if let Self::Carnot { .. } = self {
            return input("Bishop-Gromov comparison is not offered on Carnot groups");
        }
        Ok(self.ball_volume(x, r)?.value / v_kn(k, self.dimension() as f64, r)?)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return input(format!("radius must be positive, got {r}"));
    }
    Ok(())
}

/// Evaluates a Gauss-Legendre computation at two orders and fails if they
/// disagree.
fn checked(f: impl Fn(&GaussLegendre) -> f64) -> Result<f64> {
    let coarse = f(&GaussLegendre::new(40));
    let fine = f(&GaussLegendre::new(64));
    let tol = 1e-10 * fine.abs().max(1e-300);
    if (coarse - fine).abs() > tol {
        return Err(Error::Numeric(format!(
            "ball quadrature unconverged: 40-point {coarse}, 64-point {fine}"
        )));
    }
    Ok(fine)
}

fn clip_breaks(mut b: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    b.retain(|v| v.is_finite());
    b.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    b.push(lo);
    b.push(hi);
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, c| (*a - *c).abs() <= 1e-15 * hi.abs().max(1.0));
    b
}

/// `1 - theta_r` for a half-space point at height `s r`, `0 <= s`:
/// the cut-off cap volume over `omega_n r^n`, via `t = r sin(psi)`.
pub fn half_space_deficit(n: usize, s: f64, gl: &GaussLegendre) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    let lo = s.max(0.0).asin();
    let ratio = omega((n - 1) as f64) / omega(n as f64);
    ratio * gl.integrate(lo, 0.5 * PI, |psi| psi.cos().powi(n as i32))
}

/// Area of the cone ball of radius `r` about a point at distance `a` from the
/// apex, for a cone of half-angle `alpha`.
///
/// Unfolding the cone with the centre on the axis turns the ball into the
/// Euclidean disk about `(a, 0)` cut to the sector `|phi| <= alpha`.
pub fn cone_ball_area(alpha: f64, a: f64, r: f64, gl: &GaussLegendre) -> f64 {
    if a == 0.0 {
        return alpha * r * r;
    }
    if a >= r {
        // With sin(phi) = (r/a) sin(psi) each half is r^2 (psi + sin psi cos psi).
        let s = (a * alpha.sin() / r).min(1.0);
        let psi = if alpha >= 0.5 * PI { 0.5 * PI } else { s.asin() };
        return 2.0 * r * r * (psi + psi.sin() * psi.cos());
    }
    // The apex is inside the disk: each ray meets it in [0, rho_hi(phi)).
    let rho_hi = |phi: f64| a * phi.cos() + (r * r - a * a * phi.sin().powi(2)).max(0.0).sqrt();
    let breaks = clip_breaks(vec![0.5 * PI], 0.0, alpha);
    2.0 * gl.integrate_panels(&breaks, |phi| 0.5 * rho_hi(phi).powi(2))
}

/// Measure of the circle `{rho = a}` inside the cone ball `B_R(c)`.
fn angular_measure(angle: f64, a: f64, c: ConePoint, radius: f64) -> f64 {
    if a == 0.0 || c.rho == 0.0 {
        return if a.max(c.rho) < radius { angle } else { 0.0 };
    }
    let q = (a * a + c.rho * c.rho - radius * radius) / (2.0 * a * c.rho);
    if q >= 1.0 {
        0.0
    } else if q <= -1.0 {
        angle
    } else {
        (2.0 * q.acos()).min(angle)
    }
}

/// `(n-1)`-measure of `region` on the hyperplane `y_n = h`.
fn slice_measure(n: usize, region: &Region, h: f64) -> f64 {
    match region {
        Region::Ball { center, radius } => {
            let d = h - center[n - 1];
            let rr = radius * radius - d * d;
            if rr <= 0.0 {
                0.0
            } else {
                omega((n - 1) as f64) * rr.powf(0.5 * (n - 1) as f64)
            }
        }
        Region::Box { lo, hi } => {
            if h < lo[n - 1] || h > hi[n - 1] {
                0.0
            } else {
                lo[..n - 1].iter().zip(&hi[..n - 1]).map(|(a, b)| b - a).product()
            }
        }
    }
}

/// `vol(B_1(0))` for a gauge of Koranyi type: slices `|z1| = s` carry a
/// second-layer ball of radius `sqrt((1 - s^4) / beta)`.
pub fn carnot_unit_volume(group: &CarnotStep2<f64>, gauge: &Gauge<f64>) -> Result<f64> {
    let Some(beta) = gauge.beta() else {
        return input("closed-form ball volumes need a Koranyi-type gauge; use a Monte Carlo volume");
    };
    let (v1, v2) = (group.v1() as f64, group.v2() as f64);
    let sphere = v1 * omega(v1);
    let f = |s: f64| sphere * s.powf(v1 - 1.0) * omega(v2) * ((1.0 - s.powi(4)).max(0.0) / beta).powf(0.5 * v2);
    adaptive(f, 0.0, 1.0, 1e-14)
}

/// `s_{K,N}(t)`.
pub fn s_kn(k: f64, n: f64, t: f64) -> f64 {
    if k == 0.0 || n == 1.0 {
        t
    } else if k > 0.0 {
        let c = (k / (n - 1.0)).sqrt();
        (c * t).sin() / c
    } else {
        let c = (-k / (n - 1.0)).sqrt();
        (c * t).sinh() / c
    }
}

/// `v_{K,N}(r) = N omega_N int_0^r s_{K,N}(t)^(N-1) dt`.
pub fn v_kn(k: f64, n: f64, r: f64) -> Result<f64> {
    if !(n >= 1.0) || !n.is_finite() || !k.is_finite() {
        return input(format!("v_KN needs finite K and N >= 1, got K={k}, N={n}"));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return input(format!("v_KN needs r >= 0, got {r}"));
    }
    if k > 0.0 {
        let bound = PI * ((n - 1.0) / k).sqrt();
        if r > 0.0 && r >= bound {
            return input(format!("v_KN with K > 0 needs r < pi sqrt((N-1)/K) = {bound}, got {r}"));
        }
    }
    let scale = n * omega(n);
    if k == 0.0 || n == 1.0 {
        return Ok(omega(n) * r.powf(n));
    }
    if n.fract() == 0.0 {
        let m = n as u32 - 1;
        let c = (k.abs() / (n - 1.0)).sqrt();
        let integral = if k > 0.0 { sin_power_integral(m, c, r) } else { sinh_power_integral(m, c, r) };
        return Ok(scale * integral / c.powi(m as i32));
    }
    let integral = adaptive(|t| s_kn(k, n, t).powf(n - 1.0), 0.0, r, 1e-15 * r.powf(n).max(1e-300))?;
    Ok(scale * integral)
}

/// `int_0^r sin(c t)^m dt` by the reduction formula.
fn sin_power_integral(m: u32, c: f64, r: f64) -> f64 {
    match m {
        0 => r,
        1 => (1.0 - (c * r).cos()) / c,
        _ => {
            let mf = m as f64;
            -(c * r).sin().powi(m as i32 - 1) * (c * r).cos() / (mf * c)
                + (mf - 1.0) / mf * sin_power_integral(m - 2, c, r)
        }
    }
}

/// `int_0^r sinh(c t)^m dt` by the reduction formula.
fn sinh_power_integral(m: u32, c: f64, r: f64) -> f64 {
    match m {
        0 => r,
        1 => ((c * r).cosh() - 1.0) / c,
        _ => {
            let mf = m as f64;
            (c * r).sinh().powi(m as i32 - 1) * (c * r).cosh() / (mf * c)
                - (mf - 1.0) / mf * sinh_power_integral(m - 2, c, r)
        }
    }
}

/// Parses `3.14`, `pi`, `2pi`, `3pi/2`, `pi/4`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let bad = || Error::Input(format!("cannot parse angle {s:?}"));
    if let Some((coef, rest)) = s.split_once("pi") {
        let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
        let den = match rest {
            "" => 1.0,
            r => r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        return Ok(coef * PI / den);
    }
    s.parse().map_err(|_| bad())
}

/// `h<n>`, `heisenberg<n>` or `@path` to an algebra file.
pub fn parse_preset(s: &str) -> Result<CarnotStep2<f64>> {
    if let Some(path) = s.strip_prefix('@') {
        return parse_group(&std::fs::read_to_string(path)?);
    }
    let digits = s.strip_prefix("heisenberg").or_else(|| s.strip_prefix('h'));
    match digits.and_then(|d| d.parse::<usize>().ok()) {
        Some(n) => CarnotStep2::heisenberg(n),
        None => input(format!("unknown Carnot preset {s:?}")),
    }
}

/// `koranyi`, `folland` or `scaled`, `beta`.
pub fn parse_gauge(parts: &[&str]) -> Result<Gauge<f64>> {
    match parts {
        [] | ["koranyi"] => Ok(Gauge::Koranyi),
        ["folland"] => Ok(Gauge::folland()),
        ["scaled" | "scaled_koranyi", beta] => {
            Gauge::scaled(beta.parse().map_err(|_| Error::Input(format!("bad gauge scale {beta:?}")))?)
        }
        _ => input(format!("unknown gauge {:?}", parts.join(":"))),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn cone_distance_examples() {
        let tau = 2.0 * PI;
        let p = |r, f| ConePoint { rho: r, phi: f };
        assert!((cone_distance(tau, p(1.0, 0.0), p(1.0, PI)) - 2.0).abs() < 1e-15);
        assert_eq!(cone_distance(1.3, p(0.0, 0.0), p(2.5, 1.0)), 2.5);
        let d = cone_distance(0.5 * PI, p(1.0, 0.0), p(1.0, 3.0 * PI / 8.0));
        assert!((d - (2.0 - 2.0 * (PI / 8.0).cos()).sqrt()).abs() < 1e-15);
        assert!((d - 0.3902).abs() < 1e-4);
    }

    #[test]
    fn ball_volume_examples() {
        let e2 = ModelSpace::euclidean(2).unwrap();
        assert_eq!(e2.ball_volume(&[0.3, 0.1], 1.0).unwrap().value, PI);
        let h1 = ModelSpace::parse("carnot:h1:koranyi").unwrap();
        let v = h1.ball_volume(&[0.0; 3], 1.0).unwrap().value;
        assert!((v - PI * PI / 2.0).abs() < 1e-12, "{v}");
        let cone = ModelSpace::flat_cone(1.1).unwrap();
        let v = cone.ball_volume(&[0.0, 0.4], 2.0).unwrap();
        assert_eq!(v, Volume { value: 0.55 * 4.0, method: VolumeMethod::Exact });
        assert!(e2.ball_volume(&[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn cone_ball_area_matches_independent_polar_quadrature() {
        // Oracle: brute-force midpoint rule in apex polar coordinates.
        let brute = |angle: f64, a: f64, r: f64| {
            let (nr, nf) = (1500, 1500);
            let rmax = a + r;
            let mut s = 0.0;
            for i in 0..nr {
                let rho = (i as f64 + 0.5) * rmax / nr as f64;
                for j in 0..nf {
                    let phi = (j as f64 + 0.5) * angle / nf as f64;
                    let d = cone_distance(angle, ConePoint { rho: a, phi: 0.0 }, ConePoint { rho, phi });
                    if d < r {
                        s += rho;
                    }
                }
            }
            s * rmax / nr as f64 * angle / nf as f64
        };
        let gl = GaussLegendre::new(64);
        for (angle, a, r) in [(PI, 0.5, 1.0), (PI, 1.5, 1.0), (0.7, 1.0, 0.8), (1.9 * PI, 0.3, 0.5), (0.5, 3.0, 1.0)] {
            let got = cone_ball_area(0.5 * angle, a, r, &gl);
            let want = brute(angle, a, r);
            assert!((got - want).abs() < 5e-3 * want, "{angle} {a} {r}: {got} vs {want}");
        }
    }

    #[test]
    fn theta_examples() {
        let e3 = ModelSpace::euclidean(3).unwrap();
        assert!((e3.theta_r(&[1.0, 2.0, 3.0], 0.7).unwrap() - 1.0).abs() < 1e-15);
        let cone = ModelSpace::parse("cone:3pi/2").unwrap();
        assert!((cone.theta_r(&[0.0, 0.0], 0.9).unwrap() - 0.75).abs() < 1e-15);
        let half = ModelSpace::half_space(2).unwrap();
        assert!((half.theta_r(&[0.2, 0.0], 0.3).unwrap() - 0.5).abs() < 1e-13);
        assert!((half.theta_r(&[0.2, 0.5], 0.3).unwrap() - 1.0).abs() < 1e-15);
        let h1 = ModelSpace::parse("carnot:h1:koranyi").unwrap();
        assert!(matches!(h1.theta_r(&[0.0; 3], 1.0), Err(Error::Input(_))));
    }

    #[test]
    fn half_space_deficit_closed_form_in_the_plane() {
        let gl = GaussLegendre::new(64);
        for s in [0.0f64, 0.1, 0.5, 0.9, 0.999] {
            let want = (s.acos() - s * (1.0 - s * s).sqrt()) / PI;
            assert!((half_space_deficit(2, s, &gl) - want).abs() < 1e-14);
        }
        // n = 3: cap volume pi (r-h)^2 (2r+h)/3 over 4 pi r^3 / 3.
        let s: f64 = 0.3;
        let want = (1.0 - s).powi(2) * (2.0 + s) / 4.0;
        assert!((half_space_deficit(3, s, &gl) - want).abs() < 1e-14);
    }

    #[test]
    fn mm_boundary_examples() {
        let unit = Region::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        assert_eq!(ModelSpace::euclidean(2).unwrap().mm_boundary_mass(&unit, 0.1).unwrap(), 0.0);
        let half = ModelSpace::half_space(2).unwrap();
        // Oracle: 1-D quadrature of the circular-segment area.
        let kappa = adaptive(|s| (s.acos() - s * (1.0 - s * s).sqrt()) / PI, 0.0, 1.0, 1e-14).unwrap();
        assert!((kappa - 2.0 / (3.0 * PI)).abs() < 1e-12);
        let m = half.mm_boundary_mass(&unit, 1e-3).unwrap();
        assert!((m - 2.0 * kappa).abs() < 1e-3 * m, "{m}");
        assert!((half.boundary_measure(&unit).unwrap() - 2.0).abs() < 1e-14);
        let cone = ModelSpace::flat_cone(PI).unwrap();
        let apex = Region::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let a = cone.mm_boundary_mass(&apex, 0.1).unwrap();
        let b = cone.mm_boundary_mass(&apex, 0.01).unwrap();
        assert!(a > 0.0 && b < 0.1 * a * 1.0001, "{a} {b}");
    }

    #[test]
    fn v_kn_examples() {
        let v = v_kn(0.0, 3.0, 2.0).unwrap();
        assert!((v - 4.0 * PI / 3.0 * 8.0).abs() < 1e-12);
        let r: f64 = 0.01;
        let v = v_kn(2.0, 3.0, r).unwrap();
        let dev = (v - omega(3.0) * r.powi(3)).abs() / r.powi(5);
        // Expansion: omega_3 r^3 (1 - (3/5)(K/(N-1)) r^2 / ... ), so the ratio is O(1).
        assert!(dev < 10.0, "{dev}");
        assert!(v_kn(1.0, 3.0, 5.0).is_err());
        let e2 = ModelSpace::euclidean(2).unwrap();
        for r in [0.1, 1.0, 7.0] {
            assert!((e2.bishop_gromov_ratio(&[0.0, 0.0], r, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn v_kn_integer_and_quadrature_paths_agree() {
        for (k, r) in [(1.0, 1.3), (-2.0, 0.8), (0.5, 0.2)] {
            let closed = v_kn(k, 4.0, r).unwrap();
            let quad = 4.0 * omega(4.0) * adaptive(|t| s_kn(k, 4.0, t).powi(3), 0.0, r, 1e-15).unwrap();
            assert!((closed - quad).abs() < 1e-10 * closed, "{closed} {quad}");
        }
        let a = v_kn(-1.0, 2.5, 0.7).unwrap();
        let b = v_kn(-1.0, 2.5 + 1e-7, 0.7).unwrap();
        assert!((a - b).abs() < 1e-5 * a);
    }

    #[test]
    fn parses_specs() {
        assert!(matches!(ModelSpace::parse("half:3").unwrap(), ModelSpace::HalfSpace { n: 3 }));
        assert!((parse_angle("3pi/2").unwrap() - 1.5 * PI).abs() < 1e-15);
        let ModelSpace::Carnot { gauge, .. } = ModelSpace::parse("carnot:heisenberg2:scaled:16").unwrap() else {
            panic!()
        };
        assert_eq!(gauge.beta(), Some(16.0));
        assert!(ModelSpace::parse("cone:7").is_err());
        assert!(ModelSpace::parse("torus:2").is_err());
    }

    proptest! {
        #[test]
        fn full_cone_is_the_plane(r1 in 0.0f64..5.0, f1 in 0.0f64..6.28, r2 in 0.0f64..5.0, f2 in 0.0f64..6.28) {
            let tau = 2.0 * PI;
            let d = cone_distance(tau, ConePoint { rho: r1, phi: f1 }, ConePoint { rho: r2, phi: f2 });
            let (x1, y1) = (r1 * f1.cos(), r1 * f1.sin());
            let (x2, y2) = (r2 * f2.cos(), r2 * f2.sin());
            prop_assert!((d - ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn cone_triangle_inequality(
            angle in 0.3f64..6.28,
            a in (0.0f64..3.0, 0.0f64..1.0),
            b in (0.0f64..3.0, 0.0f64..1.0),
            c in (0.0f64..3.0, 0.0f64..1.0),
        ) {
            let p = |(r, t): (f64, f64)| ConePoint { rho: r, phi: t * angle * 0.999 };
            let (a, b, c) = (p(a), p(b), p(c));
            let d = |x, y| cone_distance(angle, x, y);
            prop_assert!((d(a, b) - d(b, a)).abs() < 1e-15);
            prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        }

        #[test]
        fn apex_density_is_constant(angle in 0.2f64..6.28, r in 0.01f64..10.0) {
            let cone = ModelSpace::flat_cone(angle).unwrap();
            prop_assert!((cone.theta_r(&[0.0, 0.0], r).unwrap() - angle / (2.0 * PI)).abs() < 1e-14);
        }
    }
}
