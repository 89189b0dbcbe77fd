//! Run configuration and the small spec languages used on the command line.

use std::f64::consts::PI;
use std::path::PathBuf;

use amv_core::carnot::{CarnotStep2, Gauge};
use amv_core::cloud::Bump;
use amv_core::experiments::{default_radii, Tolerance};
use amv_core::integration::Scheme;
use amv_core::model_spaces::{ModelSpace, Region};
use amv_core::{Error, Result};
use clap::Subcommand;
use serde::{Deserialize, Serialize};

/// Everything a run depends on. Two runs with equal configs write identical
/// files; the thread count is deliberately not part of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// `geom:r0:count` for `r0 2^-k`, or a comma list of decreasing radii.
    pub radii: Option<String>,
    /// `mc:n:seed`, `mc:n` (seed taken from `seed`) or `grid:res`.
    pub scheme: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    /// Replaces the number in the command's default tolerance, keeping its form.
    pub tolerance: Option<f64>,
    /// Replaces the command's default reference value.
    pub reference: Option<f64>,
    pub fault_inject: bool,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self { command, radii: None, scheme: None, seed: 0, out: out.into(), tolerance: None, reference: None, fault_inject: false }
    }

    pub fn radii_or(&self, default: &str) -> Result<Vec<f64>> {
        parse_radii(self.radii.as_deref().unwrap_or(default))
    }

    pub fn scheme_or(&self, default: &str) -> Result<Scheme> {
        let s = self.scheme.as_deref().unwrap_or(default);
        match s.split(':').collect::<Vec<_>>().as_slice() {
            ["mc", n] => format!("mc:{n}:{}", self.seed).parse(),
            _ => s.parse(),
        }
    }

    /// `default` with its magnitude replaced by `--tolerance` when given.
    pub fn tolerance_or(&self, default: Tolerance) -> Tolerance {
        let Some(t) = self.tolerance else { return default };
        Tolerance {
            absolute: if default.absolute > 0.0 { t } else { 0.0 },
            relative_to_reference: if default.relative_to_reference > 0.0 { t } else { 0.0 },
            relative_to_max: if default.relative_to_max > 0.0 { t } else { 0.0 },
        }
    }

    pub fn scalar_tolerance_or(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Exact operator identities on random finite spaces.
    Identities {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 40)]
        size_max: usize,
        /// Re-evaluate an instance written by a failing run.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// `Delta_r u(x)` over a radius sweep.
    AmvSweep {
        space: String,
        #[arg(long)]
        field: String,
        /// Comma-separated coordinates; the origin by default.
        #[arg(long)]
        point: Option<String>,
    },
    /// `max |Delta_r u|` over an annulus of a Carnot group.
    StrongScan {
        space: String,
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Gauge range `lo,hi` of the annulus.
        #[arg(long, default_value = "1,2")]
        annulus: String,
    },
    /// `int phi Delta_r u` on lattice discretizations of a planar space.
    WeakSweep {
        space: String,
        #[arg(long)]
        field: String,
        /// Test function `c1,c2:inner:outer`; a default per space otherwise.
        #[arg(long)]
        phi: Option<String>,
        /// Lattice cells per radius.
        #[arg(long, default_value_t = 3.5)]
        cells: f64,
    },
    /// `int phi (Delta_r - sym Delta_r) u` on lattice discretizations.
    SymVsPlain {
        space: String,
        #[arg(long)]
        field: String,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, default_value_t = 3.5)]
        cells: f64,
    },
    /// Total variation of the mm-boundary measure over a region.
    MmBoundary {
        space: String,
        /// `unit`, `ball:c1,c2:radius` or `box:lo1,lo2:hi1,hi2`.
        #[arg(long, default_value = "unit")]
        region: String,
    },
    /// The Carnot amv constant, at each radius of the sweep.
    CarnotConstant {
        /// `heisenberg:1`, `h1`, `@algebra-file` or a full `carnot:` space.
        group: String,
        /// `koranyi`, `folland` or `scaled:beta`.
        gauge: Option<String>,
        /// Second scheme that must agree with the first.
        #[arg(long)]
        check_scheme: Option<String>,
    },
    /// Second moments of the unit gauge ball along random horizontal directions.
    Isotropy {
        space: String,
        #[arg(long, default_value_t = 20)]
        directions: usize,
    },
    /// Discrete Dirichlet problem from files, or a batch of random instances.
    Dirichlet {
        #[arg(long)]
        space_file: Option<PathBuf>,
        #[arg(long)]
        mask_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0.35)]
        radius: f64,
        /// Solve this many random planar instances instead.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 40)]
        size: usize,
        /// Random variations tried per random instance.
        #[arg(long, default_value_t = 100)]
        perturbations: usize,
    },
    /// Dirichlet problem on gauge-ball lattices under joint refinement.
    BpzDemo {
        #[arg(default_value = "carnot:h1:koranyi")]
        space: String,
        /// `affine`, `const`, `hnorm2` or `folland` (pole outside the ball).
        #[arg(long, default_value = "affine")]
        field: String,
        #[arg(long, default_value_t = 1.0)]
        big_r: f64,
        /// Lattice spacings, coarse to fine.
        #[arg(long, default_value = "0.2,0.16,0.13,0.1")]
        levels: String,
        /// Averaging radius over spacing.
        #[arg(long, default_value_t = 2.5)]
        ratio: f64,
    },
    /// Group, gauge and left-invariant field properties on random instances.
    Axioms {
        #[arg(default_value = "carnot:h1:koranyi")]
        space: String,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
    /// Re-derive the verdict of a written report from its stored values.
    Recheck { report: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Identities { .. } => "identities",
            Self::AmvSweep { .. } => "amv-sweep",
            Self::StrongScan { .. } => "strong-scan",
            Self::WeakSweep { .. } => "weak-sweep",
            Self::SymVsPlain { .. } => "sym-vs-plain",
            Self::MmBoundary { .. } => "mm-boundary",
            Self::CarnotConstant { .. } => "carnot-constant",
            Self::Isotropy { .. } => "isotropy",
            Self::Dirichlet { .. } => "dirichlet",
            Self::BpzDemo { .. } => "bpz-demo",
            Self::Axioms { .. } => "axioms",
            Self::Recheck { .. } => "recheck",
        }
    }
}

/// Default radii, scheme and tolerance of each command. Every verdict
/// threshold used by a run comes from here or from the config.
pub mod defaults {
    use super::*;

    pub const IDENTITY_TOL: f64 = 1e-12;

    pub const AMV_RADII: &str = "geom:1:8";
    pub const AMV_SCHEME: &str = "grid:32";
    pub const AMV_TOL: f64 = 1e-3;

    pub const STRONG_RADII: &str = "geom:0.4:6";
    pub const STRONG_SCHEME: &str = "grid:24";
    pub const STRONG_TOL: f64 = 5e-3;

    pub const CLOUD_RADII: &str = "geom:0.1:4";
    pub const CLOUD_TOL: f64 = 1e-3;

    pub const MM_RADII: &str = "geom:0.4:6";
    pub const MM_ZERO_TOL: f64 = 1e-12;
    pub const MM_HALF_TOL: f64 = 0.02;
    pub const MM_CONE_TOL: f64 = 1e-3;
    pub const MM_CONE_RATE: (f64, f64) = (1.0, 0.2);

    pub const CONSTANT_RADII: &str = "1";
    pub const CONSTANT_SCHEME: &str = "grid:64";
    pub const CONSTANT_TOL: f64 = 1e-3;

    pub const ISOTROPY_SCHEME: &str = "mc:1e7";
    pub const ISOTROPY_TOL: f64 = 0.01;
    pub const ISOTROPY_RATIO: f64 = 1.01;

    pub const DIRICHLET_TOL: f64 = 1e-10;
    pub const EXPANSION_TOL: f64 = 1e-12;

    pub const BPZ_TOL: f64 = 1e-3;

    /// Amv tolerance around a reference: relative, or absolute at zero.
    pub fn around(reference: f64, t: f64) -> Tolerance {
        if reference == 0.0 {
            Tolerance::absolute(t)
        } else {
            Tolerance::relative(t)
        }
    }
}

pub fn parse_radii(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Input(format!("cannot parse radii {spec:?}; expected geom:r0:count or a comma list"));
    if let Some(rest) = spec.strip_prefix("geom:") {
        let (r0, count) = rest.split_once(':').ok_or_else(bad)?;
        let r0: f64 = r0.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        return Ok(default_radii(r0, count));
    }
    parse_list(spec)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Input(format!("cannot parse number {t:?} in {s:?}"))))
        .collect()
}

/// `c1,c2:inner:outer`.
pub fn parse_bump(s: &str) -> Result<Bump> {
    match s.split(':').collect::<Vec<_>>().as_slice() {
        [c, inner, outer] => {
            let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Input(format!("bad number {t:?} in {s:?}")));
            Bump::new(parse_list(c)?, num(inner)?, num(outer)?)
        }
        _ => Err(Error::Input(format!("cannot parse test function {s:?}; expected c1,c2:inner:outer"))),
    }
}

/// Default test function: interior for Euclidean space and cones, straddling
/// the boundary for the half-plane.
pub fn default_bump(space: &ModelSpace) -> Result<Bump> {
    match space {
        ModelSpace::HalfSpace { .. } => Bump::new(vec![0.0, 0.0], 1.0, 1.5),
        ModelSpace::FlatCone { .. } => Bump::new(vec![0.6, 1.0], 0.2, 0.4),
        _ => Bump::new(vec![0.2, 0.1], 0.3, 0.6),
    }
}

/// `unit`, `ball:c:radius`, `box:lo:hi`.
pub fn parse_region(space: &ModelSpace, s: &str) -> Result<Region> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Input(format!("cannot parse region {s:?}"));
    match parts.as_slice() {
        ["unit"] => Ok(Region::Ball { center: vec![0.0; space.point_dim()], radius: 1.0 }),
        ["ball", c, r] => Ok(Region::Ball { center: parse_list(c)?, radius: r.parse().map_err(|_| bad())? }),
        ["box", lo, hi] => Ok(Region::Box { lo: parse_list(lo)?, hi: parse_list(hi)? }),
        _ => Err(bad()),
    }
}

/// Group and gauge from either `carnot:preset:gauge` or a preset plus gauge.
pub fn parse_carnot(group: &str, gauge: Option<&str>) -> Result<(CarnotStep2<f64>, Gauge<f64>)> {
    let spec = if group.starts_with("carnot:") {
        group.to_string()
    } else {
        // `heisenberg:1` is accepted for `h1`.
        let preset = group.replacen("heisenberg:", "h", 1);
        format!("carnot:{preset}:{}", gauge.unwrap_or("koranyi"))
    };
    carnot_of(&ModelSpace::parse(&spec)?)
}

pub fn carnot_of(space: &ModelSpace) -> Result<(CarnotStep2<f64>, Gauge<f64>)> {
    match space {
        ModelSpace::Carnot { group, gauge } => Ok((group.clone(), gauge.clone())),
        other => Err(Error::Input(format!("{} is not a Carnot group", other.name()))),
    }
}

/// Closed-form amv constant, where one is known: `1/(3 pi)` on the first
/// Heisenberg group with the Koranyi gauge.
pub fn known_constant(g: &CarnotStep2<f64>, gauge: &Gauge<f64>) -> Option<f64> {
    let h1 = CarnotStep2::heisenberg(1).ok()?;
    (*g == h1 && matches!(gauge, Gauge::Koranyi)).then(|| 1.0 / (3.0 * PI))
}
