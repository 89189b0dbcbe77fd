//! r-sweeps with limit extrapolation and verdicts.
//!
//! A sweep evaluates a scale-`r` quantity on a decreasing list of radii, fits
//! `a + b r^p` to the smallest radii and compares the extrapolated `a` with a
//! reference. Reports keep every input of the verdict, so [`ExperimentReport::recheck`]
//! reproduces it from the stored numbers alone.

mod catalog;
mod fit;
mod sweeps;

pub use catalog::{catalog_field, CatalogEntry};
pub use fit::{fit_limit, Fit, FitShape};
pub use sweeps::{
    amv_sweep, annulus_points, default_radii, mm_boundary_sweep, strong_amv_scan, sym_vs_plain_sweep,
    weak_amv_sweep, CloudPlan, Spacing, SweepConfig,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::integration::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// How the acceptance band around the reference is formed:
/// `absolute + relative_to_reference |ref| + relative_to_max max_i |v_i|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    #[serde(default)]
    pub absolute: f64,
    #[serde(default)]
    pub relative_to_reference: f64,
    #[serde(default)]
    pub relative_to_max: f64,
}

impl Tolerance {
    pub fn absolute(t: f64) -> Self {
        Self { absolute: t, ..Self::default() }
    }

    pub fn relative(t: f64) -> Self {
        Self { relative_to_reference: t, ..Self::default() }
    }

    pub fn relative_to_max(t: f64) -> Self {
        Self { relative_to_max: t, ..Self::default() }
    }

    pub fn resolve(&self, reference: f64, values: &[Estimate]) -> f64 {
        let max = values.iter().map(|v| v.value.abs()).fold(0.0, f64::max);
        self.absolute + self.relative_to_reference * reference.abs() + self.relative_to_max * max
    }
}

/// Expected convergence order with its allowed deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub expected: f64,
    pub tolerance: f64,
}

/// Provenance of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub space: String,
    pub field: String,
    pub point: String,
    pub scheme: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub extra: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(experiment: &str, space: &str, field: &str) -> Self {
        Self { experiment: experiment.into(), space: space.into(), field: field.into(), ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: Metadata,
    pub radii: Vec<f64>,
    pub values: Vec<Estimate>,
    pub fitted_limit: f64,
    pub limit_error: f64,
    /// `None` when the values show no significant dependence on `r`.
    pub fitted_rate: Option<f64>,
    pub fit_shape: FitShape,
    /// Limit refitted on the smaller half of the radii.
    pub half_limit: Option<f64>,
    pub reference: Option<f64>,
    pub tolerance: Tolerance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate_check: Option<RateCheck>,
    /// Whether the values never rise with decreasing radius beyond three
    /// combined standard errors.
    pub monotone: bool,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    /// Fits and judges `values` taken at the strictly decreasing `radii`.
    pub fn build(
        metadata: Metadata,
        radii: Vec<f64>,
        values: Vec<Estimate>,
        reference: Option<f64>,
        tolerance: Tolerance,
        rate_check: Option<RateCheck>,
    ) -> Result<Self> {
        check_radii(&radii)?;
        if values.len() != radii.len() {
            return input(format!("{} values for {} radii", values.len(), radii.len()));
        }
        let mut report = Self {
            metadata,
            radii,
            values,
            fitted_limit: f64::NAN,
            limit_error: f64::NAN,
            fitted_rate: None,
            fit_shape: FitShape::Irregular,
            half_limit: None,
            reference,
            tolerance,
            rate_check,
            monotone: false,
            verdict: Verdict::Inconclusive,
            notes: Vec::new(),
        };
        report.judge();
        Ok(report)
    }

    /// Recomputes the fit and verdict from the stored radii and values.
    fn judge(&mut self) {
        // Differences far below the tolerance cannot move the verdict.
        let floor = 1e-3 * self.tolerance.resolve(self.reference.unwrap_or(0.0), &self.values);
        let fit = fit_limit(&self.radii, &self.values, floor);
        self.fitted_limit = fit.limit;
        self.limit_error = fit.limit_error;
        self.fitted_rate = fit.rate;
        self.fit_shape = fit.shape;
        let k = self.radii.len();
        self.half_limit = (k >= 6).then(|| fit_limit(&self.radii[k / 2..], &self.values[k / 2..], floor).limit);
        self.monotone = self.values.windows(2).all(|w| {
            let slack = 3.0 * w[0].std_error.hypot(w[1].std_error);
            w[1].value.abs() <= w[0].value.abs() + slack + 1e-14 * w[0].value.abs()
        });
        self.notes.clear();
        let Some(reference) = self.reference else {
            self.notes.push("no reference value".into());
            self.verdict = Verdict::Inconclusive;
            return;
        };
        let tol = self.tolerance.resolve(reference, &self.values);
        self.verdict = if fit.shape == FitShape::Irregular {
            self.notes.push("values are not monotone in r beyond their error bars; no extrapolation".into());
            Verdict::Inconclusive
        } else if !(self.limit_error <= tol) {
            self.notes.push(format!("limit error {:.3e} exceeds tolerance {tol:.3e}", self.limit_error));
            Verdict::Inconclusive
        } else if let Some(h) = self.half_limit.filter(|h| !((h - self.fitted_limit).abs() <= tol)) {
            self.notes.push(format!("half-radii refit moves the limit to {h:.6e}"));
            Verdict::Inconclusive
        } else if (self.fitted_limit - reference).abs() <= tol {
            match (self.rate_check, self.fitted_rate) {
                (Some(rc), Some(p)) if (p - rc.expected).abs() > rc.tolerance => {
                    self.notes.push(format!("fitted rate {p:.3} is outside {} +- {}", rc.expected, rc.tolerance));
                    Verdict::Fail
                }
                (Some(_), None) => {
                    self.notes.push("rate check requested but no rate could be fitted".into());
                    Verdict::Inconclusive
                }
                _ => Verdict::Pass,
            }
        } else {
            Verdict::Fail
        };
    }

    /// Re-derives the verdict from stored values and reports whether the
    /// stored fit and verdict agree with it.
    pub fn recheck(&self) -> Result<bool> {
        let again = Self::build(
            self.metadata.clone(),
            self.radii.clone(),
            self.values.clone(),
            self.reference,
            self.tolerance,
            self.rate_check,
        )?;
        Ok(again.verdict == self.verdict
            && same(again.fitted_limit, self.fitted_limit)
            && same(again.limit_error, self.limit_error)
            && again.fitted_rate.map(f64::to_bits) == self.fitted_rate.map(f64::to_bits))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `radius,value,std_error` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,value,std_error\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(out, "{r:e},{:e},{:e}", v.value, v.std_error);
        }
        out
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let reference = self.reference.map_or("none".to_string(), |r| format!("{r:.6}"));
        let rate = self.fitted_rate.map_or("-".to_string(), |p| format!("{p:.3}"));
        format!(
            "{} {}: limit {:.6} +- {:.1e} (rate {rate}), reference {reference}: {}",
            self.metadata.experiment, self.metadata.space, self.fitted_limit, self.limit_error, self.verdict
        )
    }
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return input("at least one radius is needed");
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return input(format!("radii must be positive and finite: {radii:?}"));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return input(format!("radii must be strictly decreasing: {radii:?}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
