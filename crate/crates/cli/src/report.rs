//! Reports written by the commands. Each keeps the numbers its verdict was
//! drawn from, so [`Report::recheck`] can redo the judgement without
//! recomputing anything.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use amv_core::carnot::axioms::AxiomResidual;
use amv_core::dirichlet::SolveReport;
use amv_core::experiments::{ExperimentReport, Metadata, Verdict};
use amv_core::integration::Estimate;
use amv_core::Result;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// What a run writes: its config and its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub report: Report,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Sweep(ExperimentReport),
    Identities(IdentitySummary),
    Isotropy(IsotropyReport),
    Dirichlet(DirichletReport),
    DirichletBatch(DirichletBatch),
    Axioms(AxiomReport),
}

impl Report {
    pub fn verdict(&self) -> Verdict {
        match self {
            Self::Sweep(r) => r.verdict,
            Self::Identities(r) => r.verdict,
            Self::Isotropy(r) => r.verdict,
            Self::Dirichlet(r) => r.verdict,
            Self::DirichletBatch(r) => r.verdict,
            Self::Axioms(r) => r.verdict,
        }
    }

    /// Whether the stored verdict follows from the stored values.
    pub fn recheck(&self) -> Result<bool> {
        Ok(match self {
            Self::Sweep(r) => r.recheck()?,
            Self::Identities(r) => r.judge() == r.verdict,
            Self::Isotropy(r) => r.judge() == (r.verdict, r.max_over_min.to_bits()),
            Self::Dirichlet(r) => r.judge() == r.verdict,
            Self::DirichletBatch(r) => r.judge() == r.verdict,
            Self::Axioms(r) => r.judge() == r.verdict,
        })
    }

    pub fn summary(&self) -> String {
        match self {
            Self::Sweep(r) => r.summary(),
            Self::Identities(r) => {
                let worst = r.worst.values().cloned().fold(0.0, f64::max);
                format!("identities: {} instances, worst residual {worst:.3e}: {}", r.count, r.verdict)
            }
            Self::Isotropy(r) => format!(
                "isotropy {}: {} directions, max/min {:.6}, reference {}: {}",
                r.metadata.space,
                r.values.len(),
                r.max_over_min,
                r.reference.map_or("none".into(), |v| format!("{v:.6}")),
                r.verdict
            ),
            Self::Dirichlet(r) => format!(
                "dirichlet: {} interior of {} points, residual {:.3e} (scale {:.3e}): {}",
                r.solve.interior, r.solve.points, r.solve.residual, r.solve.scale, r.verdict
            ),
            Self::DirichletBatch(r) => format!(
                "dirichlet: {} random instances, worst residual ratio {:.3e}, {} perturbations: {}",
                r.instances, r.worst_residual_ratio, r.perturbations, r.verdict
            ),
            Self::Axioms(r) => {
                let failing: Vec<&str> = r.residuals.iter().filter(|a| !a.holds()).map(|a| a.name.as_str()).collect();
                let detail = if failing.is_empty() { "all hold".to_string() } else { failing.join(", ") };
                format!("axioms {}: {} instances, {detail}: {}", r.space, r.count, r.verdict)
            }
        }
    }

    /// Plot data.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Self::Sweep(r) => out = r.to_csv(),
            Self::Identities(r) => {
                out.push_str("identity,worst_residual\n");
                for (k, v) in &r.worst {
                    let _ = writeln!(out, "{k},{v:e}");
                }
            }
            Self::Isotropy(r) => {
                out.push_str("direction,value,std_error\n");
                for (a, v) in r.directions.iter().zip(&r.values) {
                    let dir: Vec<String> = a.iter().map(|c| format!("{c:e}")).collect();
                    let _ = writeln!(out, "{},{:e},{:e}", dir.join(" "), v.value, v.std_error);
                }
            }
            Self::Dirichlet(r) => {
                out.push_str("residual,scale,min_boundary,max_boundary,min_interior,max_interior\n");
                let s = &r.solve;
                let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
                let _ = writeln!(
                    out,
                    "{:e},{:e},{:e},{:e},{},{}",
                    s.residual,
                    s.scale,
                    s.min_boundary,
                    s.max_boundary,
                    opt(s.min_interior),
                    opt(s.max_interior)
                );
            }
            Self::DirichletBatch(r) => {
                out.push_str("instance,interior,residual_ratio,min_energy_gain\n");
                for (i, inst) in r.per_instance.iter().enumerate() {
                    let _ = writeln!(out, "{i},{},{:e},{:e}", inst.interior, inst.residual_ratio, inst.min_energy_gain);
                }
            }
            Self::Axioms(r) => {
                out.push_str("property,worst,tolerance\n");
                for a in &r.residuals {
                    let _ = writeln!(out, "{},{:e},{:e}", a.name, a.worst, a.tolerance);
                }
            }
        }
        out
    }
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Worst relative residual per identity over all instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub count: usize,
    pub size_max: usize,
    pub seed: u64,
    pub fault_inject: bool,
    pub tolerance: f64,
    pub worst: BTreeMap<String, f64>,
    /// Instances with at least one residual at or above the tolerance.
    pub failures: usize,
    /// File holding the first failing instance, relative to the output path.
    pub offending: Option<String>,
    pub verdict: Verdict,
}

impl IdentitySummary {
    pub fn judge(&self) -> Verdict {
        // NaN residuals fail.
        pass_if(self.failures == 0 && self.worst.values().all(|r| *r < self.tolerance))
    }
}

/// `mean <a, z1>^2` over the unit gauge ball along each direction `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub metadata: Metadata,
    pub directions: Vec<Vec<f64>>,
    pub values: Vec<Estimate>,
    pub reference: Option<f64>,
    /// Allowed relative deviation of each value from the reference.
    pub tolerance: f64,
    /// Largest allowed max/min ratio.
    pub ratio_limit: f64,
    pub max_over_min: f64,
    pub verdict: Verdict,
}

impl IsotropyReport {
    pub fn judge(&self) -> (Verdict, u64) {
        let max = self.values.iter().map(|v| v.value).fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
        let ratio = max / min;
        let near = |v: &Estimate| self.reference.map_or(true, |r| (v.value - r).abs() <= self.tolerance * r.abs());
        let ok = min > 0.0 && ratio <= self.ratio_limit && self.values.iter().all(near);
        (pass_if(ok), ratio.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletReport {
    pub solve: SolveReport,
    /// Allowed residual relative to the scale.
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl DirichletReport {
    pub fn judge(&self) -> Verdict {
        let s = &self.solve;
        let inside = |v: Option<f64>| v.map_or(true, |v| s.min_boundary <= v && v <= s.max_boundary);
        pass_if(s.residual <= self.tolerance * s.scale && inside(s.min_interior) && inside(s.max_interior))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchInstance {
    pub interior: usize,
    /// Residual over scale.
    pub residual_ratio: f64,
    /// Whether interior values stayed within the boundary data range.
    pub maximum_principle: bool,
    /// Smallest `E(u + v) - E(u)` over the variations.
    pub min_energy_gain: f64,
    /// Largest `|E(u + v) - E(u) - E(v, v)|` relative to the terms.
    pub expansion_error: f64,
}

/// Random Dirichlet instances: stationarity, maximum principle and strict
/// minimality under random interior variations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletBatch {
    pub instances: usize,
    pub size: usize,
    pub radius: f64,
    pub seed: u64,
    /// Random instances skipped because part of the interior was cut off
    /// from the boundary.
    pub disconnected_skipped: usize,
    pub perturbations: usize,
    pub residual_tolerance: f64,
    pub expansion_tolerance: f64,
    pub worst_residual_ratio: f64,
    pub per_instance: Vec<BatchInstance>,
    pub verdict: Verdict,
}

impl DirichletBatch {
    pub fn judge(&self) -> Verdict {
        let ok = self.per_instance.len() == self.instances
            && self.per_instance.iter().all(|i| {
                i.residual_ratio <= self.residual_tolerance
                    && i.maximum_principle
                    && (self.perturbations == 0 || i.min_energy_gain > 0.0)
                    && i.expansion_error <= self.expansion_tolerance
            });
        pass_if(ok)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub space: String,
    pub gauges: Vec<String>,
    pub count: usize,
    pub seed: u64,
    pub residuals: Vec<AxiomResidual>,
    pub verdict: Verdict,
}

impl AxiomReport {
    pub fn judge(&self) -> Verdict {
        pass_if(!self.residuals.is_empty() && self.residuals.iter().all(AxiomResidual::holds))
    }
}
