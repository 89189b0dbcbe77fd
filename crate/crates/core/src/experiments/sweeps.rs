use rayon::prelude::*;

use super::{ExperimentReport, Metadata, RateCheck, Tolerance};
use crate::carnot::{CarnotStep2, Gauge};
use crate::cloud::{Bump, LatticeSpec, PointCloud};
use crate::error::{input, Result};
use crate::integration::{r_laplacian, Estimate, Scheme};
use crate::mmspace::{Averaging, MetricMeasure, Radius};
use crate::model_spaces::{ModelSpace, Region};

/// Radii, scheme and verdict inputs shared by all sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub radii: Vec<f64>,
    pub scheme: Scheme,
    pub reference: Option<f64>,
    pub tolerance: Tolerance,
    pub rate_check: Option<RateCheck>,
}

impl SweepConfig {
    pub fn new(radii: Vec<f64>, scheme: Scheme) -> Self {
        Self { radii, scheme, reference: None, tolerance: Tolerance::absolute(1e-3), rate_check: None }
    }

    pub fn reference(mut self, value: f64, tolerance: Tolerance) -> Self {
        self.reference = Some(value);
        self.tolerance = tolerance;
        self
    }

    pub fn rate(mut self, expected: f64, tolerance: f64) -> Self {
        self.rate_check = Some(RateCheck { expected, tolerance });
        self
    }

    fn seed(&self) -> Option<u64> {
        match self.scheme {
            Scheme::MonteCarlo { seed, .. } => Some(seed),
            Scheme::Grid { .. } => None,
        }
    }

    fn report(&self, mut meta: Metadata, values: Vec<Estimate>) -> Result<ExperimentReport> {
        meta.seed = meta.seed.or(self.seed());
        ExperimentReport::build(meta, self.radii.clone(), values, self.reference, self.tolerance, self.rate_check)
    }
}

/// `r0 2^-k` for `k = 0..count`.
pub fn default_radii(r0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r0 * 0.5f64.powi(k as i32)).collect()
}

/// `Delta_r u(x)` on each radius of the sweep. Radius `k` draws from Monte
/// Carlo stream `k`.
pub fn amv_sweep(
    space: &ModelSpace,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    cfg: &SweepConfig,
    mut meta: Metadata,
) -> Result<ExperimentReport> {
    space.check_point(x)?;
    let values = cfg
        .radii
        .par_iter()
        .enumerate()
        .map(|(k, r)| r_laplacian(space, u, x, *r, cfg.scheme, k as u64))
        .collect::<Result<Vec<_>>>()?;
    meta.experiment = "amv-sweep".into();
    meta.space = space.name();
    meta.point = format!("{x:?}");
    meta.scheme = cfg.scheme.to_string();
    cfg.report(meta, values)
}

/// `max_j |Delta_r u(p_j)|` over a finite point set standing in for a compact
/// set. The standard error reported is that of the maximizing point.
pub fn strong_amv_scan(
    space: &ModelSpace,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    points: &[Vec<f64>],
    cfg: &SweepConfig,
    mut meta: Metadata,
) -> Result<ExperimentReport> {
    if points.is_empty() {
        return input("strong scan needs at least one point");
    }
    for p in points {
        space.check_point(p)?;
    }
    let m = points.len();
    let all = (0..cfg.radii.len() * m)
        .into_par_iter()
        .map(|t| {
            let (k, j) = (t / m, t % m);
            r_laplacian(space, u, &points[j], cfg.radii[k], cfg.scheme, t as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = all
        .chunks(m)
        .map(|row| {
            // First maximizer, so ties resolve the same way every run.
            let best = row.iter().fold(&row[0], |b, e| if e.value.abs() > b.value.abs() { e } else { b });
            Estimate { value: best.value.abs(), ..best.clone() }
        })
        .collect();
    meta.experiment = "strong-scan".into();
    meta.space = space.name();
    meta.point = format!("{m} points");
    meta.scheme = cfg.scheme.to_string();
    cfg.report(meta, values)
}

/// `count` points with gauge in `[lo, hi)`: deterministic low-discrepancy
/// directions dilated onto evenly spaced gauge levels.
pub fn annulus_points(g: &CarnotStep2<f64>, gauge: &Gauge<f64>, count: usize, lo: f64, hi: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0 < lo && lo < hi && hi.is_finite()) {
        return input(format!("annulus needs 0 < lo < hi, got {lo}, {hi}"));
    }
    const PRIMES: [f64; 12] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];
    let dim = g.dim();
    let mut out = Vec::with_capacity(count);
    let mut j = 0u64;
    while out.len() < count {
        j += 1;
        let z: Vec<f64> =
            (0..dim).map(|i| 2.0 * ((j as f64) * PRIMES[i % 12].sqrt().fract() + 0.5).fract() - 1.0).collect();
        let n = gauge.value_flat(g.v1(), &z);
        if !(n > 1e-3) {
            continue;
        }
        let level = lo + (hi - lo) * (out.len() as f64 + 0.5) / count as f64;
        let p = g.dilate(&(level / n), &crate::carnot::GPoint::from_coords(g.v1(), &z))?;
        out.push(p.coords());
    }
    Ok(out)
}

/// Lattice spacing of the clouds in a weak sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spacing {
    /// One cloud of spacing `h` for every radius.
    Fixed(f64),
    /// A fresh cloud per radius with `h = r / m`. A non-integer `m^2` keeps
    /// lattice distances off the ball radius.
    PerRadius(f64),
}

/// How to discretize a planar model space for weak sweeps.
#[derive(Clone, Debug)]
pub struct CloudPlan {
    pub space: ModelSpace,
    pub center: Vec<f64>,
    /// Cloud radius; by default just large enough for the support check.
    pub radius: Option<f64>,
    pub spacing: Spacing,
    pub jitter: f64,
    pub seed: u64,
}

impl CloudPlan {
    pub fn new(space: ModelSpace, center: Vec<f64>, spacing: Spacing) -> Self {
        Self { space, center, radius: None, spacing, jitter: 0.0, seed: 0 }
    }

    /// A cloud whose artificial edge is at least `reach` away from the support
    /// of `phi`.
    fn cloud(&self, h: f64, reach: f64, phi: &Bump) -> Result<PointCloud> {
        let need = self.space.distance(&self.center, &phi.center)? + phi.outer + reach;
        let radius = self.radius.unwrap_or(need + 2.0 * h);
        let cloud = PointCloud::lattice(&self.space, &self.center, radius, LatticeSpec { h, jitter: self.jitter, seed: self.seed })?;
        let margin = cloud.support_margin(phi);
        if margin < reach {
            return input(format!(
                "the support of phi comes within {margin:.4} of the cloud edge; at least {reach:.4} is needed"
            ));
        }
        Ok(cloud)
    }
}

fn cloud_sweep(
    plan: &CloudPlan,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    phi: &Bump,
    cfg: &SweepConfig,
    reach_factor: f64,
    pairing: impl Fn(&Averaging<'_, f64, PointCloud>, &[f64], &[f64]) -> Result<f64>,
) -> Result<Vec<Estimate>> {
    plan.space.check_point(&phi.center)?;
    let max_r = cfg.radii.iter().cloned().fold(0.0, f64::max);
    let fixed = match plan.spacing {
        Spacing::Fixed(h) => Some(plan.cloud(h, reach_factor * max_r, phi)?),
        Spacing::PerRadius(m) if !(m > 1.0) => return input(format!("cells per radius must exceed 1, got {m}")),
        Spacing::PerRadius(_) => None,
    };
    let mut values = Vec::with_capacity(cfg.radii.len());
    for r in &cfg.radii {
        let owned;
        let cloud = match (&fixed, plan.spacing) {
            (Some(c), _) => c,
            (None, Spacing::PerRadius(m)) => {
                owned = plan.cloud(r / m, reach_factor * r, phi)?;
                &owned
            }
            (None, Spacing::Fixed(_)) => unreachable!(),
        };
        let uf = cloud.sample(u);
        let pf = cloud.sample(&|p| phi.value(&plan.space, p));
        let avg = Averaging::new(cloud, &Radius::new(*r)?);
        values.push(Estimate::discrete(pairing(&avg, &pf, &uf)?));
        log::debug!("cloud sweep r = {r}: {} points, value {}", cloud.len(), values.last().unwrap().value);
    }
    Ok(values)
}

fn cloud_meta(mut meta: Metadata, name: &str, plan: &CloudPlan, phi: &Bump) -> Metadata {
    meta.experiment = name.into();
    meta.space = plan.space.name();
    meta.point = format!("phi: centre {:?}, inner {}, outer {}", phi.center, phi.inner, phi.outer);
    meta.scheme = match plan.spacing {
        Spacing::Fixed(h) => format!("lattice:h={h}"),
        Spacing::PerRadius(m) => format!("lattice:h=r/{m}"),
    };
    if plan.jitter > 0.0 {
        meta.extra.insert("jitter".into(), format!("{} (seed {})", plan.jitter, plan.seed));
    }
    meta
}

/// `int phi Delta_r u` on point-cloud discretizations.
pub fn weak_amv_sweep(
    plan: &CloudPlan,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    phi: &Bump,
    cfg: &SweepConfig,
    meta: Metadata,
) -> Result<ExperimentReport> {
    let values = cloud_sweep(plan, u, phi, cfg, 1.0, |avg, p, u| avg.weak_pairing(p, u))?;
    cfg.report(cloud_meta(meta, "weak-sweep", plan, phi), values)
}

/// `int phi (Delta_r - sym Delta_r) u`, evaluated through `delta_r` so that
/// equal ball masses give exact zeros. Ball masses of neighbours enter, hence
/// the doubled support margin.
pub fn sym_vs_plain_sweep(
    plan: &CloudPlan,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    phi: &Bump,
    cfg: &SweepConfig,
    meta: Metadata,
) -> Result<ExperimentReport> {
    let values = cloud_sweep(plan, u, phi, cfg, 2.0, |avg, p, u| avg.deviation_pairing(p, u))?;
    cfg.report(cloud_meta(meta, "sym-vs-plain", plan, phi), values)
}

/// `|mu_r|(U)` per radius; on a half-space divided by the boundary measure of
/// `U`, giving mass per unit boundary.
pub fn mm_boundary_sweep(space: &ModelSpace, region: &Region, cfg: &SweepConfig, mut meta: Metadata) -> Result<ExperimentReport> {
    let norm = match space {
        ModelSpace::HalfSpace { .. } => {
            let b = space.boundary_measure(region)?;
            if !(b > 0.0) {
                return input("the region does not meet the boundary, so there is no per-length normalization");
            }
            b
        }
        _ => 1.0,
    };
    let values = cfg
        .radii
        .par_iter()
        .map(|r| Ok(Estimate::exact(space.mm_boundary_mass(region, *r)? / norm)))
        .collect::<Result<Vec<_>>>()?;
    meta.experiment = "mm-boundary".into();
    meta.space = space.name();
    meta.point = format!("{region:?}");
    meta.scheme = "quadrature".into();
    if norm != 1.0 {
        meta.extra.insert("normalization".into(), format!("per unit boundary measure ({norm})"));
    }
    cfg.report(meta, values)
}
