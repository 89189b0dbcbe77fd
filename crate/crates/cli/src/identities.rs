//! The identity suite on random finite spaces.

use std::collections::BTreeMap;

use amv_core::experiments::Verdict;
use amv_core::mmspace::{check_identities_split, parse_space, write_space, IdentityResidual, MetricMeasure, Radius};
use amv_core::{MMSpace, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::IdentitySummary;

/// Relative mass change of the injected fault.
const FAULT: f64 = 1e-6;

/// One instance in replayable form. With `perturbed` present, left-hand
/// sides are evaluated on `space` and right-hand sides on `perturbed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityInstance {
    pub space: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perturbed: Option<String>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub r: f64,
}

impl IdentityInstance {
    /// Instance `index` of the run seeded by `seed`: `1..=size_max` points,
    /// symmetric distances in `[0, 1)` without the triangle inequality,
    /// masses in `[0.1, 10)`, fields in `[-1, 1)`, radius in `[0.05, 1.2)`.
    pub fn random(seed: u64, index: u64, size_max: usize, fault: bool) -> Result<Self> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let n = rng.gen_range(1..=size_max.max(1));
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = rng.gen_range(0.0..1.0);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
        let u = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = rng.gen_range(0.05..1.2);
        let space = MMSpace::with_index_ids(dist, mass)?;
        let perturbed = if fault {
            // Prefer a point with a neighbour, so the change reaches the operators.
            let start = rng.gen_range(0..n);
            let k = (0..n)
                .map(|t| (start + t) % n)
                .find(|&k| (0..n).any(|y| y != k && space.distance(k, y) < r))
                .unwrap_or(start);
            Some(write_space(&space.with_mass(k, space.masses()[k] * (1.0 + FAULT))?))
        } else {
            None
        };
        Ok(Self { space: write_space(&space), perturbed, u, v, r })
    }

    pub fn evaluate(&self) -> Result<Vec<IdentityResidual>> {
        let left: MMSpace = parse_space(&self.space)?;
        let right: MMSpace = match &self.perturbed {
            Some(text) => parse_space(text)?,
            None => left.clone(),
        };
        check_identities_split(&left, &right, &self.u, &self.v, &Radius::new(self.r)?)
    }
}

/// Runs `count` instances. Returns the summary and the first failing
/// instance; the summary's `offending` is left for the caller to fill in.
pub fn run_identities(
    count: usize,
    size_max: usize,
    seed: u64,
    fault_inject: bool,
    tolerance: f64,
) -> Result<(IdentitySummary, Option<IdentityInstance>)> {
    let results = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let inst = IdentityInstance::random(seed, i, size_max, fault_inject)?;
            let res = inst.evaluate()?;
            Ok((inst, res))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(count, size_max, seed, fault_inject, tolerance, results))
}

/// Re-evaluates a stored instance.
pub fn replay(inst: IdentityInstance, tolerance: f64) -> Result<(IdentitySummary, Option<IdentityInstance>)> {
    let res = inst.evaluate()?;
    let fault = inst.perturbed.is_some();
    Ok(summarize(1, 0, 0, fault, tolerance, vec![(inst, res)]))
}

fn summarize(
    count: usize,
    size_max: usize,
    seed: u64,
    fault_inject: bool,
    tolerance: f64,
    results: Vec<(IdentityInstance, Vec<IdentityResidual>)>,
) -> (IdentitySummary, Option<IdentityInstance>) {
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut failures = 0;
    let mut first = None;
    for (inst, res) in results {
        let mut failed = false;
        for r in res {
            let w = worst.entry(r.name).or_insert(0.0);
            // NaN propagates as a failure.
            if !(r.residual <= *w) {
                *w = r.residual;
            }
            if !(r.residual < tolerance) {
                failed = true;
            }
        }
        if failed {
            failures += 1;
            if first.is_none() {
                first = Some(inst);
            }
        }
    }
    let mut summary =
        IdentitySummary { count, size_max, seed, fault_inject, tolerance, worst, failures, offending: None, verdict: Verdict::Pass };
    summary.verdict = summary.judge();
    (summary, first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_passes_with_empty_summary() {
        let (s, bad) = run_identities(0, 40, 7, false, 1e-12).unwrap();
        assert!(s.worst.is_empty());
        assert_eq!(s.verdict, Verdict::Pass);
        assert!(bad.is_none());
    }

    #[test]
    fn instances_are_reproducible_and_replayable() {
        let a = IdentityInstance::random(3, 5, 12, true).unwrap();
        assert_eq!(a, IdentityInstance::random(3, 5, 12, true).unwrap());
        let text = serde_json::to_string(&a).unwrap();
        let back: IdentityInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back.evaluate().unwrap(), a.evaluate().unwrap());
    }

    #[test]
    fn clean_and_faulty_runs() {
        let (s, _) = run_identities(30, 20, 1, false, 1e-12).unwrap();
        assert_eq!(s.verdict, Verdict::Pass, "{s:?}");
        let (s, bad) = run_identities(30, 20, 1, true, 1e-12).unwrap();
        assert_eq!(s.verdict, Verdict::Fail);
        let (again, _) = replay(bad.unwrap(), 1e-12).unwrap();
        assert_eq!(again.verdict, Verdict::Fail);
    }
}
