//! Point-cloud discretizations of the planar model spaces.
//!
//! A cloud is the set of cell centres of a square lattice of spacing `h` that
//! fall in a ball `B_R(c)` of the model space, each carrying its cell area as
//! mass. On the plane and on the cone of angle `pi` (the plane modulo `-1`)
//! every interior ball sees the same lattice pattern, so the discrete ball
//! masses are constant away from the artificial edge `d(c, .) = R` and from
//! the real boundary or apex.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

use crate::error::{input, Result};
use crate::mmspace::MetricMeasure;
use crate::model_spaces::ModelSpace;

/// Lattice spacing and optional jitter for [`PointCloud::lattice`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    pub h: f64,
    /// Each point is moved uniformly within `[-jitter h, jitter h]^2`;
    /// `jitter` must lie in `[0, 0.5)`.
    pub jitter: f64,
    pub seed: u64,
}

impl LatticeSpec {
    pub fn regular(h: f64) -> Self {
        Self { h, jitter: 0.0, seed: 0 }
    }
}

/// A finite metric measure space sampled from a planar model space.
#[derive(Clone, Debug)]
pub struct PointCloud {
    space: ModelSpace,
    center: Vec<f64>,
    radius: f64,
    h: f64,
    points: Vec<[f64; 2]>,
    mass: Vec<f64>,
    index: CellIndex,
}

/// A Lipschitz bump `phi(p) = clamp((outer - d(center, p)) / (outer - inner), 0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
}

impl Bump {
    pub fn new(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return input(format!("bump needs 0 <= inner < outer, got {inner}, {outer}"));
        }
        Ok(Self { center, inner, outer })
    }

    pub fn value(&self, space: &ModelSpace, p: &[f64]) -> f64 {
        let d = space.distance_unchecked(&self.center, p);
        ((self.outer - d) / (self.outer - self.inner)).clamp(0.0, 1.0)
    }
}

impl PointCloud {
    /// Lattice cell centres of `space` inside `B_radius(center)`.
    ///
    /// Supported spaces: `euclidean:2`, `half:2` (rows `y = (j + 1/2) h`,
    /// `j >= 0`) and flat cones. The cones of angle `pi` and `2 pi` use the
    /// square lattice of their developing map; other angles use polar rings of
    /// width `h` with exact annular-sector masses.
    pub fn lattice(space: &ModelSpace, center: &[f64], radius: f64, spec: LatticeSpec) -> Result<Self> {
        space.check_point(center)?;
        let h = spec.h;
        if !(h > 0.0) || !h.is_finite() || !(radius > h) || !radius.is_finite() {
            return input(format!("lattice needs 0 < h < radius, got h = {h}, radius = {radius}"));
        }
        if !(0.0..0.5).contains(&spec.jitter) {
            return input(format!("jitter must lie in [0, 0.5), got {}", spec.jitter));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let mut jitter = |x: f64, y: f64| {
            if spec.jitter == 0.0 {
                return (x, y);
            }
            let a = spec.jitter * h;
            (x + rng.gen_range(-a..a), y + rng.gen_range(-a..a))
        };
        let cell = |i: i64| (i as f64 + 0.5) * h;
        let mut points = Vec::new();
        let mut mass = Vec::new();
        match space {
            ModelSpace::Euclidean { n: 2 } | ModelSpace::HalfSpace { n: 2 } => {
                let half = matches!(space, ModelSpace::HalfSpace { .. });
                let (lo, hi) = cell_range(center, radius, h);
                for j in (if half { 0 } else { lo[1] })..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let (x, y) = jitter(cell(i), cell(j));
                        if space.distance_unchecked(center, &[x, y]) < radius {
                            points.push([x, y]);
                            mass.push(h * h);
                        }
                    }
                }
            }
            ModelSpace::FlatCone { angle } if *angle == PI || *angle == 2.0 * PI => {
                // The cone of angle pi is the plane modulo z -> -z, and the
                // square lattice is invariant under that map, so its upper
                // half-plane part represents the cone.
                let extent = ((center[0] + radius) / h).ceil() as i64 + 1;
                let j_lo = if *angle == PI { 0 } else { -extent };
                for j in j_lo..=extent {
                    for i in -extent..=extent {
                        let (x, y) = jitter(cell(i), cell(j));
                        let rho = x.hypot(y);
                        let mut phi = y.atan2(x).rem_euclid(2.0 * PI);
                        if phi >= *angle {
                            phi = 0.0;
                        }
                        let p = [rho, phi];
                        if space.distance_unchecked(center, &p) < radius {
                            points.push(p);
                            mass.push(h * h);
                        }
                    }
                }
            }
            ModelSpace::FlatCone { angle } => {
                let rings = ((center[0] + radius) / h).ceil() as usize + 1;
                for k in 0..rings {
                    let rho = (k as f64 + 0.5) * h;
                    let cells = ((angle * (k as f64 + 0.5)).round() as usize).max(1);
                    let dphi = angle / cells as f64;
                    let m = 0.5 * dphi * h * h * (2.0 * k as f64 + 1.0);
                    for j in 0..cells {
                        let p = [rho, (j as f64 + 0.5) * dphi];
                        if space.distance_unchecked(center, &p) < radius {
                            points.push(p);
                            mass.push(m);
                        }
                    }
                }
            }
            _ => return input(format!("point clouds are available for 2-D model spaces, not {}", space.name())),
        }
        if points.is_empty() {
            return input("the lattice has no points in the requested ball");
        }
        let index = CellIndex::new(space, &points, h);
        log::debug!("lattice cloud on {} with {} points, h = {h}", space.name(), points.len());
        Ok(Self { space: space.clone(), center: center.to_vec(), radius, h, points, mass, index })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Values of `f` at the points.
    pub fn sample(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Vec<f64> {
        self.points.iter().map(|p| f(p)).collect()
    }

    /// Distance from the support of `phi` to the artificial edge of the cloud,
    /// by the triangle inequality. Negative when the support sticks out.
    pub fn support_margin(&self, phi: &Bump) -> f64 {
        self.radius - self.space.distance_unchecked(&self.center, &phi.center) - phi.outer
    }
}

impl MetricMeasure<f64> for PointCloud {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.space.distance_unchecked(&self.points[i], &self.points[j])
    }

    fn for_each_in_ball(&self, x: usize, r: &f64, visit: &mut dyn FnMut(usize)) {
        let mut hits = Vec::new();
        self.index.candidates(x, *r, &mut |y| {
            if self.space.distance_unchecked(&self.points[x], &self.points[y]) < *r {
                hits.push(y);
            }
        });
        hits.sort_unstable();
        hits.into_iter().for_each(visit);
    }
}

fn cell_range(center: &[f64], radius: f64, h: f64) -> ([i64; 2], [i64; 2]) {
    let lo = |c: f64| ((c - radius) / h).floor() as i64 - 1;
    let hi = |c: f64| ((c + radius) / h).ceil() as i64 + 1;
    ([lo(center[0]), lo(center[1])], [hi(center[0]), hi(center[1])])
}

/// Bucket grid over a planar embedding `e` with `|e(p) - e(q)| <= lip d(p, q)`.
/// For a cone of angle `a <= 2 pi` the map `(rho, phi) -> rho e^{i 2 pi phi / a}`
/// is `2 pi / a`-Lipschitz.
#[derive(Clone, Debug)]
struct CellIndex {
    emb: Vec<[f64; 2]>,
    lip: f64,
    size: f64,
    origin: [f64; 2],
    dims: [usize; 2],
    start: Vec<usize>,
    members: Vec<usize>,
}

impl CellIndex {
    fn new(space: &ModelSpace, points: &[[f64; 2]], h: f64) -> Self {
        let (emb, lip): (Vec<[f64; 2]>, f64) = match space {
            ModelSpace::FlatCone { angle } => {
                let c = 2.0 * PI / angle;
                (points.iter().map(|p| [p[0] * (c * p[1]).cos(), p[0] * (c * p[1]).sin()]).collect(), c)
            }
            _ => (points.to_vec(), 1.0),
        };
        let size = 2.0 * h * lip;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for e in &emb {
            for k in 0..2 {
                lo[k] = lo[k].min(e[k]);
                hi[k] = hi[k].max(e[k]);
            }
        }
        let dims = [0, 1].map(|k| ((hi[k] - lo[k]) / size).floor() as usize + 1);
        let key = |e: &[f64; 2]| {
            let ix = (((e[0] - lo[0]) / size) as usize).min(dims[0] - 1);
            let iy = (((e[1] - lo[1]) / size) as usize).min(dims[1] - 1);
            iy * dims[0] + ix
        };
        let mut start = vec![0usize; dims[0] * dims[1] + 1];
        for e in &emb {
            start[key(e) + 1] += 1;
        }
        for c in 0..dims[0] * dims[1] {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut members = vec![0; emb.len()];
        for (i, e) in emb.iter().enumerate() {
            let c = key(e);
            members[fill[c]] = i;
            fill[c] += 1;
        }
        Self { emb, lip, size, origin: lo, dims, start, members }
    }

    /// Every `y` with `d(x, y) < r`, plus some farther points.
    fn candidates(&self, x: usize, r: f64, visit: &mut dyn FnMut(usize)) {
        let e = self.emb[x];
        let reach = self.lip * r;
        let span = |k: usize| {
            let lo = ((e[k] - reach - self.origin[k]) / self.size).floor().max(0.0) as usize;
            let hi = (((e[k] + reach - self.origin[k]) / self.size).floor().max(0.0) as usize).min(self.dims[k] - 1);
            (lo, hi)
        };
        let ((x0, x1), (y0, y1)) = (span(0), span(1));
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let c = iy * self.dims[0] + ix;
                self.members[self.start[c]..self.start[c + 1]].iter().for_each(|&y| visit(y));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{ball_masses, Averaging, Radius};
    use proptest::prelude::*;

    fn brute_ball(cloud: &PointCloud, x: usize, r: f64) -> Vec<usize> {
        (0..cloud.len()).filter(|&y| cloud.distance(x, y) < r).collect()
    }

    #[test]
    fn masses_and_counts() {
        let plane = ModelSpace::euclidean(2).unwrap();
        let cloud = PointCloud::lattice(&plane, &[0.0, 0.0], 1.0, LatticeSpec::regular(0.05)).unwrap();
        let area: f64 = cloud.masses().iter().sum();
        assert!((area - PI).abs() < 0.05, "{area}");
        let half = ModelSpace::half_space(2).unwrap();
        let cloud = PointCloud::lattice(&half, &[0.0, 0.0], 1.0, LatticeSpec::regular(0.05)).unwrap();
        assert!(cloud.points().iter().all(|p| p[1] > 0.0));
        let area: f64 = cloud.masses().iter().sum();
        assert!((area - 0.5 * PI).abs() < 0.05, "{area}");
        let cone = ModelSpace::flat_cone(1.0).unwrap();
        let cloud = PointCloud::lattice(&cone, &[0.0, 0.0], 1.0, LatticeSpec::regular(0.02)).unwrap();
        let area: f64 = cloud.masses().iter().sum();
        assert!((area - 0.5).abs() < 0.02, "{area}");
    }

    #[test]
    fn neighbour_search_matches_brute_force() {
        for (spec, c, h) in [("euclidean:2", [0.3, -0.2], 0.1), ("half:2", [0.0, 0.0], 0.1), ("cone:pi", [0.0, 0.0], 0.1),
            ("cone:2pi", [0.5, 1.0], 0.1), ("cone:1.3", [0.2, 0.4], 0.07), ("cone:3pi/2", [0.0, 0.0], 0.1)]
        {
            let space = ModelSpace::parse(spec).unwrap();
            let cloud = PointCloud::lattice(&space, &c, 1.0, LatticeSpec { h, jitter: 0.3, seed: 5 }).unwrap();
            for x in (0..cloud.len()).step_by(7) {
                for r in [0.05, 0.23, 0.61] {
                    let mut got = Vec::new();
                    cloud.for_each_in_ball(x, &r, &mut |y| got.push(y));
                    assert_eq!(got, brute_ball(&cloud, x, r), "{spec} x={x} r={r}");
                }
            }
        }
    }

    #[test]
    fn cone_pi_lattice_is_locally_regular() {
        // Away from the apex and the edge every ball has the same mass, also
        // across the seam.
        let cone = ModelSpace::flat_cone(PI).unwrap();
        let h = 0.1;
        let r = 3.5 * h;
        let cloud = PointCloud::lattice(&cone, &[0.0, 0.0], 2.0, LatticeSpec::regular(h)).unwrap();
        let masses = ball_masses(&cloud, &r);
        let plane_count = (-4i32..=4)
            .flat_map(|i| (-4i32..=4).map(move |j| (i, j)))
            .filter(|(i, j)| ((i * i + j * j) as f64) < 3.5 * 3.5)
            .count() as f64;
        for (i, p) in cloud.points().iter().enumerate() {
            if p[0] > r + h && p[0] < 2.0 - 2.0 * r {
                assert!((masses[i] - plane_count * h * h).abs() < 1e-12, "{p:?}");
            }
        }
    }

    #[test]
    fn interior_plane_balls_have_equal_mass() {
        let plane = ModelSpace::euclidean(2).unwrap();
        let cloud = PointCloud::lattice(&plane, &[0.0, 0.0], 1.0, LatticeSpec::regular(0.05)).unwrap();
        let r = Radius::new(0.175).unwrap();
        let avg = Averaging::new(&cloud, &r);
        let inner: Vec<f64> = (0..cloud.len())
            .filter(|&i| cloud.space().distance_unchecked(&[0.0, 0.0], &cloud.points()[i]) < 0.8)
            .map(|i| avg.ball_mass()[i])
            .collect();
        assert!(inner.iter().all(|m| *m == inner[0]));
    }

    #[test]
    fn bad_requests() {
        let plane = ModelSpace::euclidean(2).unwrap();
        assert!(PointCloud::lattice(&plane, &[0.0, 0.0], 1.0, LatticeSpec::regular(0.0)).is_err());
        assert!(PointCloud::lattice(&plane, &[0.0, 0.0], 1.0, LatticeSpec { h: 0.1, jitter: 0.5, seed: 0 }).is_err());
        let e3 = ModelSpace::euclidean(3).unwrap();
        assert!(PointCloud::lattice(&e3, &[0.0; 3], 1.0, LatticeSpec::regular(0.1)).is_err());
        assert!(Bump::new(vec![0.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn support_margin_uses_cloud_centre() {
        let plane = ModelSpace::euclidean(2).unwrap();
        let cloud = PointCloud::lattice(&plane, &[0.0, 0.0], 2.0, LatticeSpec::regular(0.1)).unwrap();
        let phi = Bump::new(vec![0.5, 0.0], 0.5, 1.0).unwrap();
        assert!((cloud.support_margin(&phi) - 0.5).abs() < 1e-15);
        assert_eq!(phi.value(&plane, &[0.5, 0.3]), 1.0);
        assert!((phi.value(&plane, &[0.5, 0.75]) - 0.5).abs() < 1e-12);
        assert_eq!(phi.value(&plane, &[2.0, 0.0]), 0.0);
    }

    proptest! {
        #[test]
        fn cone_embedding_is_lipschitz(
            angle in 0.3f64..6.28, r1 in 0.0f64..2.0, p1 in 0.0f64..1.0, r2 in 0.0f64..2.0, p2 in 0.0f64..1.0,
        ) {
            let space = ModelSpace::flat_cone(angle).unwrap();
            let pts = [[r1, p1 * angle], [r2, p2 * angle]];
            let index = CellIndex::new(&space, &pts, 0.1);
            let de = (index.emb[0][0] - index.emb[1][0]).hypot(index.emb[0][1] - index.emb[1][1]);
            let d = space.distance_unchecked(&pts[0], &pts[1]);
            prop_assert!(de <= index.lip * d + 1e-12);
        }
    }
}
