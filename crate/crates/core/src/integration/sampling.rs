use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::SeedSpec;
use crate::carnot::{CarnotStep2, Gauge};
use crate::error::{input, Error, Result};
use crate::model_spaces::{omega, ModelSpace};

/// Accepted samples per Monte Carlo block.
pub const BLOCK: u64 = 1 << 16;

/// Below this acceptance rate the envelope is considered misconfigured.
const MIN_ACCEPTANCE: f64 = 1e-3;

/// Uniform proposals from a bounding envelope of `B_r(x)`, accepted when they
/// land in the ball.
pub struct BallSampler<'a> {
    x: Vec<f64>,
    r: f64,
    kind: Kind<'a>,
}

enum Kind<'a> {
    Euclidean { n: usize },
    Half { n: usize },
    ConeApex { angle: f64 },
    Cone { angle: f64, a: f64, phi: f64 },
    Carnot { group: &'a CarnotStep2<f64>, gauge: &'a Gauge<f64>, h: f64, v: f64 },
}

fn unit_ball_point<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let k = out.len();
    if k == 0 {
        return;
    }
    let mut norm = 0.0;
    for o in out.iter_mut() {
        *o = rng.sample(StandardNormal);
        norm += *o * *o;
    }
    let radius = rng.gen::<f64>().powf(1.0 / k as f64) / norm.sqrt();
    out.iter_mut().for_each(|o| *o *= radius);
}

impl<'a> BallSampler<'a> {
    pub fn new(space: &'a ModelSpace, x: &[f64], r: f64) -> Result<Self> {
        space.check_point(x)?;
        if !(r > 0.0) || !r.is_finite() {
            return input(format!("radius must be positive, got {r}"));
        }
        let kind = match space {
            ModelSpace::Euclidean { n } => Kind::Euclidean { n: *n },
            ModelSpace::HalfSpace { n } => Kind::Half { n: *n },
            ModelSpace::FlatCone { angle } if x[0] == 0.0 => Kind::ConeApex { angle: *angle },
            ModelSpace::FlatCone { angle } => Kind::Cone { angle: *angle, a: x[0], phi: x[1] },
            ModelSpace::Carnot { group, gauge } => {
                let Some((h, v)) = gauge.unit_envelope() else {
                    return input("this gauge profile supplies no unit-ball envelope, so its balls cannot be sampled");
                };
                Kind::Carnot { group, gauge, h, v }
            }
        };
        Ok(Self { x: x.to_vec(), r, kind })
    }

    /// Volume of the proposal region.
    pub fn envelope_volume(&self) -> f64 {
        let r = self.r;
        match &self.kind {
            Kind::Euclidean { n } | Kind::Half { n } => omega(*n as f64) * r.powi(*n as i32),
            Kind::ConeApex { angle } => 0.5 * angle * r * r,
            Kind::Cone { .. } => PI * r * r,
            Kind::Carnot { group, h, v, .. } => {
                omega(group.v1() as f64) * (r * h).powi(group.v1() as i32) * (2.0 * r * r * v).powi(group.v2() as i32)
            }
        }
    }

    /// Draws one proposal; on acceptance writes the point into `out`.
    pub fn propose_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) -> bool {
        let (x, r) = (&self.x, self.r);
        match &self.kind {
            Kind::Euclidean { .. } => {
                unit_ball_point(rng, out);
                out.iter_mut().zip(x).for_each(|(o, c)| *o = c + r * *o);
                true
            }
            Kind::Half { n } => {
                unit_ball_point(rng, out);
                out.iter_mut().zip(x).for_each(|(o, c)| *o = c + r * *o);
                out[n - 1] >= 0.0
            }
            Kind::ConeApex { angle } => {
                out[0] = r * rng.gen::<f64>().sqrt();
                out[1] = (x[1] + angle * rng.gen::<f64>()).rem_euclid(*angle);
                true
            }
            Kind::Cone { angle, a, phi } => {
                // Unfold with the centre on the axis; keep the part of the disk
                // inside the sector |phi| <= angle/2.
                let mut w = [0.0; 2];
                unit_ball_point(rng, &mut w);
                let (px, py) = (a + r * w[0], r * w[1]);
                let rel = py.atan2(px);
                if rel.abs() > 0.5 * angle {
                    return false;
                }
                out[0] = px.hypot(py);
                out[1] = (phi + rel).rem_euclid(*angle);
                if out[1] >= *angle {
                    out[1] = 0.0;
                }
                true
            }
            Kind::Carnot { group, gauge, h, v } => {
                let v1 = group.v1();
                let mut stack = [0.0; 16];
                let mut heap = Vec::new();
                let z: &mut [f64] = if group.dim() <= 16 {
                    &mut stack[..group.dim()]
                } else {
                    heap.resize(group.dim(), 0.0);
                    &mut heap
                };
                unit_ball_point(rng, &mut z[..v1]);
                z[..v1].iter_mut().for_each(|c| *c *= r * h);
                for c in &mut z[v1..] {
                    *c = r * r * v * (2.0 * rng.gen::<f64>() - 1.0);
                }
                if !(gauge.value_flat(v1, z) < r) {
                    return false;
                }
                group.mul_flat(x, z, out);
                true
            }
        }
    }

    /// Convenience wrapper allocating the point.
    pub fn propose<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.x.len()];
        self.propose_into(rng, &mut out).then_some(out)
    }
}

struct BlockStats {
    count: u64,
    trials: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

fn run_block(
    sampler: &BallSampler<'_>,
    seed: SeedSpec,
    block: u64,
    target: u64,
    k: usize,
    f: &(dyn Fn(&[f64], &mut [f64]) + Sync),
) -> Result<BlockStats> {
    let mut rng = seed.rng(block);
    let mut stats = BlockStats { count: 0, trials: 0, mean: vec![0.0; k], m2: vec![0.0; k] };
    let mut y = vec![0.0; sampler.x.len()];
    let mut vals = vec![0.0; k];
    while stats.count < target {
        stats.trials += 1;
        if stats.trials >= 10_000 && (stats.count as f64) < MIN_ACCEPTANCE * stats.trials as f64 {
            return Err(Error::Numeric(format!(
                "ball sampler acceptance {:.2e} after {} proposals is below {MIN_ACCEPTANCE:e}",
                stats.count as f64 / stats.trials as f64,
                stats.trials
            )));
        }
        if !sampler.propose_into(&mut rng, &mut y) {
            continue;
        }
        f(&y, &mut vals);
        stats.count += 1;
        let n = stats.count as f64;
        for j in 0..k {
            let d = vals[j] - stats.mean[j];
            stats.mean[j] += d / n;
            stats.m2[j] += d * (vals[j] - stats.mean[j]);
        }
    }
    Ok(stats)
}

/// Mean and standard error of `k` integrands over `n` uniform samples of
/// `B_r(x)`.
pub fn mc_integrate(
    space: &ModelSpace,
    x: &[f64],
    r: f64,
    n: u64,
    seed: SeedSpec,
    k: usize,
    f: &(dyn Fn(&[f64], &mut [f64]) + Sync),
) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return input("Monte Carlo needs at least one sample");
    }
    let sampler = BallSampler::new(space, x, r)?;
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<BlockStats> = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(&sampler, seed, b, BLOCK.min(n - b * BLOCK), k, f))
        .collect::<Result<_>>()?;
    // Chan's pairwise update, in block order.
    let mut total = BlockStats { count: 0, trials: 0, mean: vec![0.0; k], m2: vec![0.0; k] };
    for p in parts {
        let (na, nb) = (total.count as f64, p.count as f64);
        let nn = na + nb;
        for j in 0..k {
            let d = p.mean[j] - total.mean[j];
            total.mean[j] += d * nb / nn;
            total.m2[j] += p.m2[j] + d * d * na * nb / nn;
        }
        total.count += p.count;
        total.trials += p.trials;
    }
    log::debug!(
        "sampled {} points of B_{r}({x:?}) in {} with acceptance {:.4}",
        total.count,
        space.name(),
        total.count as f64 / total.trials as f64
    );
    let nf = total.count as f64;
    Ok(total
        .mean
        .iter()
        .zip(&total.m2)
        .map(|(m, m2)| {
            let se = if total.count > 1 { (m2 / (nf - 1.0) / nf).max(0.0).sqrt() } else { 0.0 };
            (*m, se)
        })
        .collect())
}

/// `n` uniform points of `B_r(x)` with the observed acceptance rate.
pub fn sample_ball(space: &ModelSpace, x: &[f64], r: f64, n: u64, seed: SeedSpec) -> Result<(Vec<Vec<f64>>, f64)> {
    if n == 0 {
        return input("sample_ball needs n >= 1");
    }
    let sampler = BallSampler::new(space, x, r)?;
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<(Vec<Vec<f64>>, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.rng(b);
            let target = BLOCK.min(n - b * BLOCK);
            let mut pts = Vec::with_capacity(target as usize);
            let mut trials = 0u64;
            while (pts.len() as u64) < target {
                trials += 1;
                if trials >= 10_000 && (pts.len() as f64) < MIN_ACCEPTANCE * trials as f64 {
                    return Err(Error::Numeric(format!("ball sampler acceptance below {MIN_ACCEPTANCE:e}")));
                }
                if let Some(p) = sampler.propose(&mut rng) {
                    pts.push(p);
                }
            }
            Ok((pts, trials))
        })
        .collect::<Result<_>>()?;
    let trials: u64 = parts.iter().map(|p| p.1).sum();
    let points: Vec<Vec<f64>> = parts.into_iter().flat_map(|p| p.0).collect();
    let rate = points.len() as f64 / trials as f64;
    log::info!("sample_ball on {}: acceptance {rate:.4}", space.name());
    Ok((points, rate))
}
