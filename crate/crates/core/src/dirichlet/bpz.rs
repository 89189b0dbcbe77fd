//! Barrier fields and the discrete Dirichlet problem on gauge balls.

use super::{solve, BoundaryPartition};
use crate::carnot::{AnalyticField, CarnotStep2, GPoint, Gauge};
use crate::error::{input, Result};
use crate::experiments::{ExperimentReport, Metadata, Tolerance};
use crate::integration::Estimate;
use crate::mmspace::{MetricMeasure, Radius};
use crate::scalar::Real;

/// The barrier term `(phi_q / 2) (|(p^{-1} p0)^(1)|^2 - R^2) / R^2`.
///
/// It vanishes where the horizontal part of `p0^{-1} p` has norm `R` and has
/// constant sub-Laplacian `phi_q v1 / R^2`. Koranyi-type gauges bound `|z1|`,
/// so on the closed gauge ball it is non-negative.
pub fn bpz_barrier<T: Real>(
    g: &CarnotStep2<T>,
    gauge: &Gauge<T>,
    center: &GPoint<T>,
    radius: T,
    phi_q: T,
    q: &GPoint<T>,
) -> Result<AnalyticField<T>> {
    g.check_point(center)?;
    g.check_point(q)?;
    if !(radius > T::zero()) || !radius.is_finite() {
        return input(format!("ball radius must be positive, got {radius}"));
    }
    if !(phi_q < T::zero()) || !phi_q.is_finite() {
        return input(format!("the barrier needs a negative value phi(q), got {phi_q}"));
    }
    let dq = g.distance(gauge, q, center)?;
    if !(dq < radius) {
        return input(format!("q lies at gauge distance {dq} from the centre, outside the ball of radius {radius}"));
    }
    let r2 = radius * radius;
    let norm = AnalyticField::horizontal_norm_sq(g.v1(), g.v2()).centred_at(g, center)?;
    Ok(norm.scaled(phi_q / (T::two() * r2)).plus(AnalyticField::constant(g.dim(), -phi_q / T::two())))
}

/// Lattice points `p0 . l` for `l` in the dilated integer lattice
/// `{(a h, c h^2 / 2) : a, c integer}` with `gauge(l) < radius`, each carrying
/// the cell volume as mass.
///
/// With an integer bracket the lattice is a subgroup, so every r-ball is the
/// same stencil translated and interior balls are exact copies of each other.
#[derive(Debug)]
pub struct GaugeBallLattice {
    v1: usize,
    dim: usize,
    h: f64,
    gauge: Gauge<f64>,
    bracket: Vec<i64>,
    ints: Vec<i64>,
    coords: Vec<f64>,
    level: Vec<f64>,
    /// Box `|l_i| <= bounds[i]` around the enumerated points, indexed densely.
    bounds: Vec<i64>,
    table: Vec<u32>,
    stencil: Vec<(Vec<i64>, f64)>,
    stencil_radius: f64,
    mass: f64,
}

/// Largest index table, in entries.
const TABLE_LIMIT: f64 = 5e7;
const MAX_DIM: usize = 8;
const ABSENT: u32 = u32::MAX;

impl GaugeBallLattice {
    pub fn new(
        g: &CarnotStep2<f64>,
        gauge: &Gauge<f64>,
        center: &GPoint<f64>,
        h: f64,
        radius: f64,
        stencil_radius: f64,
    ) -> Result<Self> {
        g.check_point(center)?;
        if !g.has_integer_bracket() {
            return input("the lattice needs integer structure constants");
        }
        if !(h > 0.0 && radius > 0.0 && stencil_radius > 0.0) || !(radius + stencil_radius).is_finite() {
            return input(format!("lattice spacing and radii must be positive, got h = {h}, {radius}, {stencil_radius}"));
        }
        if g.dim() > MAX_DIM {
            return input(format!("the lattice supports dimension up to {MAX_DIM}"));
        }
        let (v1, v2) = (g.v1(), g.v2());
        let mut bracket = Vec::with_capacity(v2 * v1 * v1);
        for k in 0..v2 {
            for i in 0..v1 {
                for j in 0..v1 {
                    bracket.push(g.b(k, i, j).round() as i64);
                }
            }
        }
        let mut lat = Self {
            v1,
            dim: g.dim(),
            h,
            gauge: gauge.clone(),
            bracket,
            ints: Vec::new(),
            coords: Vec::new(),
            level: Vec::new(),
            bounds: Vec::new(),
            table: Vec::new(),
            stencil: Vec::new(),
            stencil_radius,
            mass: h.powi(v1 as i32) * (h * h / 2.0).powi(v2 as i32),
        };
        lat.stencil = lat.enumerate(stencil_radius)?;
        lat.bounds = lat.bounds_for(radius)?;
        let entries: f64 = lat.bounds.iter().map(|b| (2 * b + 1) as f64).product();
        if entries > TABLE_LIMIT {
            return input(format!("{entries:.0} lattice cells to index; use a larger spacing"));
        }
        lat.table = vec![ABSENT; entries as usize];
        let base: Vec<f64> = center.coords();
        for (l, level) in lat.enumerate(radius)? {
            let real = lat.real(&l);
            let mut p = vec![0.0; lat.dim];
            g.mul_flat(&base, &real, &mut p);
            let slot = lat.slot(&l).expect("enumerated points lie in their box");
            lat.table[slot] = lat.level.len() as u32;
            lat.ints.extend_from_slice(&l);
            lat.coords.extend_from_slice(&p);
            lat.level.push(level);
        }
        Ok(lat)
    }

    fn real(&self, l: &[i64]) -> Vec<f64> {
        let h2 = self.h * self.h / 2.0;
        l.iter().enumerate().map(|(i, &c)| c as f64 * if i < self.v1 { self.h } else { h2 }).collect()
    }

    /// Position of `l` in the index table, if inside the box.
    fn slot(&self, l: &[i64]) -> Option<usize> {
        let mut slot = 0usize;
        for (c, b) in l.iter().zip(&self.bounds) {
            if c.abs() > *b {
                return None;
            }
            slot = slot * (2 * *b as usize + 1) + (c + b) as usize;
        }
        Some(slot)
    }

    fn bounds_for(&self, rho: f64) -> Result<Vec<i64>> {
        let Some((eh, ev)) = self.gauge.unit_envelope() else {
            return input("the gauge has no bounding box for its unit ball");
        };
        let h2 = self.h * self.h / 2.0;
        Ok((0..self.dim)
            .map(|i| if i < self.v1 { (rho * eh / self.h).floor() as i64 } else { (rho * rho * ev / h2).floor() as i64 })
            .collect())
    }

    /// Lattice points with gauge below `rho`, in lexicographic order.
    fn enumerate(&self, rho: f64) -> Result<Vec<(Vec<i64>, f64)>> {
        let bounds = self.bounds_for(rho)?;
        let candidates: f64 = bounds.iter().map(|b| (2 * b + 1) as f64).product();
        if candidates > 5e8 {
            return input(format!("{candidates:.0} lattice candidates; use a larger spacing"));
        }
        let mut out = Vec::new();
        let mut l: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            let level = self.gauge.value_flat(self.v1, &self.real(&l));
            if level < rho {
                out.push((l.clone(), level));
            }
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if l[i] < bounds[i] {
                    l[i] += 1;
                    break;
                }
                l[i] = -bounds[i];
            }
        }
    }

    /// `x . y` in lattice coordinates.
    fn mul(&self, x: &[i64], y: &[i64], out: &mut [i64]) {
        let v1 = self.v1;
        for i in 0..self.dim {
            out[i] = x[i] + y[i];
        }
        for k in 0..self.dim - v1 {
            let mut s = 0;
            for i in 0..v1 {
                for j in 0..v1 {
                    s += self.bracket[(k * v1 + i) * v1 + j] * x[i] * y[j];
                }
            }
            out[v1 + k] += s;
        }
    }

    fn int(&self, i: usize) -> &[i64] {
        &self.ints[i * self.dim..(i + 1) * self.dim]
    }

    /// Group coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Gauge distance of point `i` from the centre.
    pub fn level(&self, i: usize) -> f64 {
        self.level[i]
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }
}

impl MetricMeasure<f64> for GaugeBallLattice {
    fn len(&self) -> usize {
        self.level.len()
    }

    fn mass(&self, _: usize) -> f64 {
        self.mass
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        let neg: Vec<i64> = self.int(j).iter().map(|c| -c).collect();
        let mut d = vec![0; self.dim];
        self.mul(&neg, self.int(i), &mut d);
        self.gauge.value_flat(self.v1, &self.real(&d))
    }

    fn for_each_in_ball(&self, x: usize, r: &f64, visit: &mut dyn FnMut(usize)) {
        if *r > self.stencil_radius {
            for y in 0..self.len() {
                if self.distance(x, y) < *r {
                    visit(y);
                }
            }
            return;
        }
        // Points are stored in lexicographic order of their lattice
        // coordinates and left translation by `x` preserves that order on the
        // stencil, so members come out ascending.
        let mut q = [0i64; MAX_DIM];
        let q = &mut q[..self.dim];
        for (s, level) in &self.stencil {
            if *level < *r {
                self.mul(self.int(x), s, q);
                if let Some(y) = self.slot(q).map(|k| self.table[k]).filter(|y| *y != ABSENT) {
                    visit(y as usize);
                }
            }
        }
    }
}

/// One refinement level of [`bpz_demo`]: lattice spacing and averaging radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpzLevel {
    pub h: f64,
    pub r: f64,
}

/// Solves the discrete Dirichlet problem on the gauge ball `B_R(center)` with
/// data `u` and reports `sup |solution - u|` over the interior at each level.
///
/// The boundary is the layer `R - r <= gauge < R + r`, so every interior ball
/// and every ball around an interior point's neighbour is complete.
pub fn bpz_demo(
    g: &CarnotStep2<f64>,
    gauge: &Gauge<f64>,
    u: &AnalyticField<f64>,
    center: &GPoint<f64>,
    big_r: f64,
    levels: &[BpzLevel],
    tolerance: Tolerance,
    mut meta: Metadata,
) -> Result<ExperimentReport> {
    u.check_dim(g.dim())?;
    if levels.is_empty() {
        return input("at least one refinement level is needed");
    }
    let mut values = Vec::with_capacity(levels.len());
    let mut notes = Vec::new();
    for level in levels {
        if !(level.r > 0.0 && level.r < big_r) {
            return input(format!("averaging radius {} must lie in (0, R = {big_r})", level.r));
        }
        let lat = GaugeBallLattice::new(g, gauge, center, level.h, big_r + level.r, level.r)?;
        let data: Vec<f64> = (0..lat.len()).map(|i| u.value(lat.point(i))).collect();
        let part = BoundaryPartition::from_mask(&data, |i| lat.level(i) >= big_r - level.r)?;
        if part.interior().is_empty() {
            return input(format!("no lattice point lies inside gauge radius {} at h = {}", big_r - level.r, level.h));
        }
        let sol = solve(&lat, &part, &Radius::new(level.r)?)?;
        let sup = part
            .interior()
            .iter()
            .map(|&i| (sol.field.values()[i] - data[i]).abs())
            .fold(0.0, f64::max);
        notes.push(format!(
            "h = {}, r = {}: {} points, {} interior, residual {:.2e}, sup difference {sup:.6e}",
            level.h,
            level.r,
            lat.len(),
            part.interior().len(),
            sol.residual
        ));
        log::info!("{}", notes.last().unwrap());
        values.push(Estimate::discrete(sup));
    }
    meta.experiment = "bpz-demo".into();
    meta.space = format!("carnot:v1={},v2={}:{}", g.v1(), g.v2(), gauge.name());
    if meta.field.is_empty() {
        meta.field = u.describe();
    }
    meta.point = format!("ball: centre {:?}, R = {big_r}", center.coords());
    meta.scheme = "lattice".into();
    meta.extra.insert(
        "levels".into(),
        levels.iter().map(|l| format!("h={},r={}", l.h, l.r)).collect::<Vec<_>>().join(";"),
    );
    let radii = levels.iter().map(|l| l.r).collect();
    let mut report = ExperimentReport::build(meta, radii, values, Some(0.0), tolerance, None)?;
    report.notes.extend(notes);
    Ok(report)
}
