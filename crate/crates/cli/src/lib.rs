//! Reproducible experiment runs.
//!
//! [`run`] turns a [`RunConfig`] into a [`RunRecord`] and writes it, with
//! plot data, under the config's output directory as `<command>.json` and
//! `<command>.csv`. Nothing else is written except the Dirichlet solution
//! (`dirichlet-solution.txt`) and a failing identity instance
//! (`identities-offending.json`).

pub mod config;
mod identities;
pub mod report;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use amv_core::carnot::axioms::axiom_residuals;
use amv_core::carnot::{AnalyticField, CarnotStep2, GPoint, Gauge};
use amv_core::dirichlet::{bpz_demo, parse_mask, solve, BoundaryPartition, BpzLevel};
use amv_core::experiments::{
    amv_sweep, annulus_points, catalog_field, mm_boundary_sweep, strong_amv_scan, sym_vs_plain_sweep, weak_amv_sweep,
    CloudPlan, ExperimentReport, Metadata, Spacing, SweepConfig, Tolerance, Verdict,
};
use amv_core::integration::{carnot_constant_at_radius, carnot_constant_checked, isotropy_check};
use amv_core::mmspace::{parse_space, write_field, Averaging, Radius};
use amv_core::model_spaces::ModelSpace;
use amv_core::{Error, MMSpace, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub use config::{Command, RunConfig};
pub use identities::{run_identities, IdentityInstance};
pub use report::{Report, RunRecord};

use config::defaults as d;
use report::{AxiomReport, BatchInstance, DirichletBatch, DirichletReport, IsotropyReport};

/// A finished run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub record: RunRecord,
    /// Files written (for `recheck`, the file read).
    pub files: Vec<PathBuf>,
    /// For `recheck`: whether the stored verdict follows from stored values.
    pub consistent: Option<bool>,
}

impl Outcome {
    /// 0 pass, 1 fail, 3 inconclusive. `recheck` exits 0 iff the report is
    /// consistent.
    pub fn exit_code(&self) -> i32 {
        if let Some(ok) = self.consistent {
            return if ok { 0 } else { 1 };
        }
        match self.record.report.verdict() {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }

    /// The line printed on stdout.
    pub fn verdict_line(&self) -> String {
        match self.consistent {
            Some(ok) => format!(
                "recheck: stored verdict {}, {}",
                self.record.report.verdict(),
                if ok { "consistent" } else { "NOT consistent with stored values" }
            ),
            None => self.record.report.summary(),
        }
    }
}

/// Runs `cfg` and writes its outputs.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    if let Command::Recheck { report } = &cfg.command {
        let record: RunRecord = serde_json::from_str(&fs::read_to_string(report)?)?;
        let consistent = record.report.recheck()?;
        return Ok(Outcome { record, files: vec![report.clone()], consistent: Some(consistent) });
    }
    let mut extra_files: Vec<(String, String)> = Vec::new();
    let report = execute(cfg, &mut extra_files)?;
    let record = RunRecord { config: cfg.clone(), report };
    let name = cfg.command.name();
    fs::create_dir_all(&cfg.out)?;
    let mut files = vec![write(&cfg.out, &format!("{name}.json"), &serde_json::to_string_pretty(&record)?)?];
    files.push(write(&cfg.out, &format!("{name}.csv"), &record.report.to_csv())?);
    for (file, text) in extra_files {
        files.push(write(&cfg.out, &file, &text)?);
    }
    Ok(Outcome { record, files, consistent: None })
}

fn write(dir: &Path, file: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(file);
    fs::write(&path, text)?;
    Ok(path)
}

fn execute(cfg: &RunConfig, extra: &mut Vec<(String, String)>) -> Result<Report> {
    match &cfg.command {
        Command::Identities { count, size_max, replay } => {
            let tol = cfg.scalar_tolerance_or(d::IDENTITY_TOL);
            let (mut summary, bad) = match replay {
                Some(path) => identities::replay(serde_json::from_str(&fs::read_to_string(path)?)?, tol)?,
                None => run_identities(*count, *size_max, cfg.seed, cfg.fault_inject, tol)?,
            };
            if let Some(inst) = bad {
                let file = "identities-offending.json".to_string();
                extra.push((file.clone(), serde_json::to_string_pretty(&inst)?));
                summary.offending = Some(file);
            }
            Ok(Report::Identities(summary))
        }
        Command::AmvSweep { space, field, point } => {
            let space = ModelSpace::parse(space)?;
            let u = catalog_field(&space, field)?;
            let x = match point {
                Some(p) => config::parse_list(p)?,
                None => space.origin(),
            };
            let mut sweep = SweepConfig::new(cfg.radii_or(d::AMV_RADII)?, cfg.scheme_or(d::AMV_SCHEME)?);
            if let Some(r) = cfg.reference.or(u.amv_limit) {
                sweep = sweep.reference(r, cfg.tolerance_or(d::around(r, d::AMV_TOL)));
            }
            Ok(Report::Sweep(amv_sweep(&space, &*u.eval, &x, &sweep, Metadata::new("", "", field))?))
        }
        Command::StrongScan { space, field, points, annulus } => {
            let space = ModelSpace::parse(space)?;
            let (g, gauge) = config::carnot_of(&space)?;
            let u = catalog_field(&space, field)?;
            let ends = config::parse_list(annulus)?;
            let [lo, hi] = ends[..] else {
                return Err(Error::Input(format!("annulus needs lo,hi, got {annulus:?}")));
            };
            let pts = annulus_points(&g, &gauge, *points, lo, hi)?;
            let reference = cfg.reference.unwrap_or(0.0);
            let tol = cfg.tolerance_or(Tolerance::relative_to_max(d::STRONG_TOL));
            let sweep = SweepConfig::new(cfg.radii_or(d::STRONG_RADII)?, cfg.scheme_or(d::STRONG_SCHEME)?)
                .reference(reference, tol);
            let mut meta = Metadata::new("", "", field);
            meta.extra.insert("annulus".into(), format!("{lo} <= gauge < {hi}"));
            Ok(Report::Sweep(strong_amv_scan(&space, &*u.eval, &pts, &sweep, meta)?))
        }
        Command::WeakSweep { space, field, phi, cells } | Command::SymVsPlain { space, field, phi, cells } => {
            let weak = matches!(cfg.command, Command::WeakSweep { .. });
            let space = ModelSpace::parse(space)?;
            let u = catalog_field(&space, field)?;
            let phi = match phi {
                Some(s) => config::parse_bump(s)?,
                None => config::default_bump(&space)?,
            };
            // The weak pairing tends to zero for fields with zero amv limit; the
            // deviation pairing for any field away from a boundary.
            let boundary = matches!(space, ModelSpace::HalfSpace { .. });
            let default_ref = if weak {
                u.amv_limit.filter(|l| *l == 0.0)
            } else {
                (!boundary).then_some(0.0)
            };
            let mut sweep = SweepConfig::new(cfg.radii_or(d::CLOUD_RADII)?, "grid:1".parse()?);
            if let Some(r) = cfg.reference.or(default_ref) {
                sweep = sweep.reference(r, cfg.tolerance_or(d::around(r, d::CLOUD_TOL)));
            }
            let plan = CloudPlan::new(space.clone(), space.origin(), Spacing::PerRadius(*cells));
            let meta = Metadata::new("", "", field);
            let rep = if weak {
                weak_amv_sweep(&plan, &*u.eval, &phi, &sweep, meta)?
            } else {
                sym_vs_plain_sweep(&plan, &*u.eval, &phi, &sweep, meta)?
            };
            Ok(Report::Sweep(rep))
        }
        Command::MmBoundary { space, region } => {
            let space = ModelSpace::parse(space)?;
            let region = config::parse_region(&space, region)?;
            let mut sweep = SweepConfig::new(cfg.radii_or(d::MM_RADII)?, "grid:1".parse()?);
            let (reference, tol, rate) = match &space {
                ModelSpace::Euclidean { .. } => (Some(0.0), d::MM_ZERO_TOL, None),
                ModelSpace::HalfSpace { n: 2 } => (Some(2.0 / (3.0 * PI)), d::MM_HALF_TOL, None),
                ModelSpace::FlatCone { .. } => (Some(0.0), d::MM_CONE_TOL, Some(d::MM_CONE_RATE)),
                _ => (None, d::MM_HALF_TOL, None),
            };
            if let Some(r) = cfg.reference.or(reference) {
                sweep = sweep.reference(r, cfg.tolerance_or(d::around(r, tol)));
            }
            if let Some((p, t)) = rate {
                sweep = sweep.rate(p, t);
            }
            Ok(Report::Sweep(mm_boundary_sweep(&space, &region, &sweep, Metadata::new("", "", "-"))?))
        }
        Command::CarnotConstant { group, gauge, check_scheme } => {
            let (g, gauge) = config::parse_carnot(group, gauge.as_deref())?;
            carnot_constant(cfg, &g, &gauge, check_scheme.as_deref())
        }
        Command::Isotropy { space, directions } => {
            let space = ModelSpace::parse(space)?;
            let (g, gauge) = config::carnot_of(&space)?;
            isotropy(cfg, &space, &g, &gauge, *directions)
        }
        Command::Dirichlet { space_file, mask_file, radius, random, size, perturbations } => match random {
            Some(count) => dirichlet_batch(cfg, *count, *size, *radius, *perturbations),
            None => {
                let (Some(sf), Some(mf)) = (space_file, mask_file) else {
                    return Err(Error::Input("dirichlet needs --space-file and --mask-file, or --random".into()));
                };
                let space: MMSpace = parse_space(&fs::read_to_string(sf)?)?;
                let part: BoundaryPartition<f64> = parse_mask(&fs::read_to_string(mf)?)?;
                let sol = solve(&space, &part, &Radius::new(*radius)?)?;
                extra.push(("dirichlet-solution.txt".into(), write_field(sol.field.values())));
                let mut rep = DirichletReport {
                    solve: sol.report(&part, *radius),
                    tolerance: cfg.scalar_tolerance_or(d::DIRICHLET_TOL),
                    verdict: Verdict::Fail,
                };
                rep.verdict = rep.judge();
                Ok(Report::Dirichlet(rep))
            }
        },
        Command::BpzDemo { space, field, big_r, levels, ratio } => {
            let space = ModelSpace::parse(space)?;
            let (g, gauge) = config::carnot_of(&space)?;
            let u = bpz_field(&g, field, *big_r)?;
            let levels: Vec<BpzLevel> =
                config::parse_list(levels)?.into_iter().map(|h| BpzLevel { h, r: ratio * h }).collect();
            let tol = cfg.tolerance_or(Tolerance::absolute(d::BPZ_TOL));
            let mut meta = Metadata::new("", "", field);
            meta.extra.insert("radius_over_spacing".into(), ratio.to_string());
            let rep = bpz_demo(&g, &gauge, &u, &g.identity(), *big_r, &levels, tol, meta)?;
            Ok(Report::Sweep(rep))
        }
        Command::Axioms { space, count } => {
            let space = ModelSpace::parse(space)?;
            let (g, gauge) = config::carnot_of(&space)?;
            // Koranyi runs also cover the Folland scaling.
            let gauges = if matches!(gauge, Gauge::Koranyi) { vec![gauge, Gauge::folland()] } else { vec![gauge] };
            let residuals = axiom_residuals(&g, &gauges, *count, cfg.seed)?;
            let mut rep = AxiomReport {
                space: space.name(),
                gauges: gauges.iter().map(Gauge::name).collect(),
                count: *count,
                seed: cfg.seed,
                residuals,
                verdict: Verdict::Fail,
            };
            rep.verdict = rep.judge();
            Ok(Report::Axioms(rep))
        }
        Command::Recheck { .. } => unreachable!("handled in run"),
    }
}

fn carnot_constant(cfg: &RunConfig, g: &CarnotStep2<f64>, gauge: &Gauge<f64>, check: Option<&str>) -> Result<Report> {
    let scheme = cfg.scheme_or(d::CONSTANT_SCHEME)?;
    let radii = cfg.radii_or(d::CONSTANT_RADII)?;
    let values = radii.iter().map(|r| carnot_constant_at_radius(g, gauge, *r, scheme)).collect::<Result<Vec<_>>>()?;
    let space = ModelSpace::carnot(g.clone(), gauge.clone())?;
    let mut meta = Metadata::new("carnot-constant", &space.name(), "|z1|^2 / (2 v1)");
    meta.point = "origin".into();
    meta.scheme = scheme.to_string();
    if let amv_core::integration::Scheme::MonteCarlo { seed, .. } = scheme {
        meta.seed = Some(seed);
    }
    let tol = cfg.scalar_tolerance_or(d::CONSTANT_TOL);
    if let Some(other) = check {
        let other = cfg_scheme(cfg, other)?;
        let (a, b) = carnot_constant_checked(g, gauge, scheme, other, tol)?;
        meta.extra.insert(
            "cross_check".into(),
            format!("{scheme}: {:.9} +- {:.1e}; {other}: {:.9} +- {:.1e}", a.value, a.std_error, b.value, b.std_error),
        );
    }
    let reference = cfg.reference.or_else(|| config::known_constant(g, gauge));
    let rep = ExperimentReport::build(meta, radii, values, reference, cfg.tolerance_or(Tolerance::relative(tol)), None)?;
    Ok(Report::Sweep(rep))
}

fn cfg_scheme(cfg: &RunConfig, s: &str) -> Result<amv_core::integration::Scheme> {
    let mut c = cfg.clone();
    c.scheme = Some(s.into());
    c.scheme_or(s)
}

fn isotropy(cfg: &RunConfig, space: &ModelSpace, g: &CarnotStep2<f64>, gauge: &Gauge<f64>, count: usize) -> Result<Report> {
    if count == 0 {
        return Err(Error::Input("at least one direction is needed".into()));
    }
    let v1 = g.v1();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    // Directions draw from their own stream, separate from the integration.
    rng.set_stream(u64::MAX);
    let directions: Vec<Vec<f64>> = (0..count)
        .map(|_| loop {
            let a: Vec<f64> = (0..v1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = a.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 1e-3 && n <= 1.0 {
                break a.into_iter().map(|c| c / n).collect();
            }
        })
        .collect();
    let scheme = cfg.scheme_or(d::ISOTROPY_SCHEME)?;
    let values = isotropy_check(g, gauge, &directions, scheme)?;
    let mut meta = Metadata::new("isotropy", &space.name(), "<a, z1>^2");
    meta.point = "origin".into();
    meta.scheme = scheme.to_string();
    meta.seed = Some(cfg.seed);
    // mean <a, z1>^2 = mean |z1|^2 / v1 = 2 C.
    let reference = cfg.reference.or_else(|| config::known_constant(g, gauge).map(|c| 2.0 * c));
    let mut rep = IsotropyReport {
        metadata: meta,
        directions,
        values,
        reference,
        tolerance: cfg.scalar_tolerance_or(d::ISOTROPY_TOL),
        ratio_limit: d::ISOTROPY_RATIO,
        max_over_min: 0.0,
        verdict: Verdict::Fail,
    };
    let (verdict, ratio) = rep.judge();
    rep.verdict = verdict;
    rep.max_over_min = f64::from_bits(ratio);
    Ok(Report::Isotropy(rep))
}

/// Catalog fields for the gauge-ball demo. The Folland kernel has its pole
/// at `(0, 3 R^2)` on the centre axis, at Koranyi gauge `sqrt(3) R`, outside
/// the lattice for `r < 0.7 R`.
fn bpz_field(g: &CarnotStep2<f64>, name: &str, big_r: f64) -> Result<AnalyticField<f64>> {
    let (v1, v2) = (g.v1(), g.v2());
    Ok(match name {
        "const" => AnalyticField::constant(g.dim(), 1.0),
        "affine" => {
            let mut a = vec![0.0; v1];
            a[0] = 1.0;
            if v1 > 1 {
                a[1] = -0.5;
            }
            AnalyticField::horizontal_affine(&a, 0.25, v2)
        }
        "hnorm2" => AnalyticField::horizontal_norm_sq(v1, v2),
        "folland" => {
            let mut pole = vec![0.0; g.dim()];
            pole[v1] = 3.0 * big_r * big_r;
            AnalyticField::folland_kernel(g).centred_at(g, &GPoint::from_coords(v1, &pole))?
        }
        _ => return Err(Error::Input(format!("bpz-demo field {name:?} is not one of affine, const, hnorm2, folland"))),
    })
}

/// Planar instance: `size` uniform points in the unit square with Euclidean
/// distances, the frame outside `[0.2, 0.8]^2` as boundary.
fn random_dirichlet_instance(rng: &mut ChaCha12Rng, size: usize) -> Result<(MMSpace, BoundaryPartition<f64>)> {
    let pts: Vec<[f64; 2]> = (0..size).map(|_| [rng.gen(), rng.gen()]).collect();
    let dist = (0..size * size)
        .map(|t| {
            let (a, b) = (pts[t / size], pts[t % size]);
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
        .collect();
    let mass = (0..size).map(|_| rng.gen_range(0.1..10.0)).collect();
    let space = MMSpace::with_index_ids(dist, mass)?;
    let frame = |p: [f64; 2]| p.iter().any(|c| *c < 0.2 || *c > 0.8);
    let boundary = (0..size).filter(|&i| frame(pts[i])).map(|i| (i, rng.gen_range(-1.0..1.0))).collect();
    Ok((space, BoundaryPartition::new(size, boundary)?))
}

fn dirichlet_batch(cfg: &RunConfig, count: usize, size: usize, radius: f64, perturbations: usize) -> Result<Report> {
    let r = Radius::new(radius)?;
    let mut per_instance = Vec::with_capacity(count);
    let mut skipped = 0;
    let mut stream = 0u64;
    while per_instance.len() < count {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        stream += 1;
        let (space, part) = random_dirichlet_instance(&mut rng, size)?;
        let sol = match solve(&space, &part, &r) {
            Ok(sol) => sol,
            Err(Error::Disconnected { .. }) => {
                skipped += 1;
                if skipped > 100 * count.max(1) {
                    return Err(Error::Input(format!("radius {radius} leaves almost every instance disconnected")));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let u = sol.field.values();
        let rep = sol.report(&part, radius);
        let inside = |v: Option<f64>| v.map_or(true, |v| rep.min_boundary <= v && v <= rep.max_boundary);
        let avg = Averaging::new(&space, &r);
        let base = avg.total_energy(u, u)?;
        let mut min_gain = f64::INFINITY;
        let mut worst_expansion: f64 = 0.0;
        for _ in 0..perturbations {
            let amp = 10f64.powf(rng.gen_range(-3.0..0.0));
            let mut v = vec![0.0; u.len()];
            for &i in part.interior() {
                v[i] = amp * rng.gen_range(-1.0..1.0);
            }
            let moved: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let e = avg.total_energy(&moved, &moved)?;
            let evv = avg.total_energy(&v, &v)?;
            let gain = e - base;
            min_gain = min_gain.min(gain);
            let err = (gain - evv).abs() / (e.abs() + base.abs() + evv.abs());
            if !(err <= worst_expansion) {
                worst_expansion = err;
            }
        }
        per_instance.push(BatchInstance {
            interior: part.interior().len(),
            residual_ratio: rep.residual / rep.scale,
            maximum_principle: inside(rep.min_interior) && inside(rep.max_interior),
            min_energy_gain: min_gain,
            expansion_error: worst_expansion,
        });
    }
    let worst = per_instance.iter().map(|i| i.residual_ratio).fold(0.0, f64::max);
    let mut batch = DirichletBatch {
        instances: count,
        size,
        radius,
        seed: cfg.seed,
        disconnected_skipped: skipped,
        perturbations,
        residual_tolerance: cfg.scalar_tolerance_or(d::DIRICHLET_TOL),
        expansion_tolerance: d::EXPANSION_TOL,
        worst_residual_ratio: worst,
        per_instance,
        verdict: Verdict::Fail,
    };
    batch.verdict = batch.judge();
    Ok(Report::DirichletBatch(batch))
}
