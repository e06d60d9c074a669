use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

/// Outcome of one check over a point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub check: String,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub point_count: usize,
    /// Points dropped because the metric or potential was invalid there.
    pub skipped: usize,
    /// Sup norm of the residual at each evaluated point.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Whether the hypothesis the check relies on held on the sample.
    pub hypothesis_ok: bool,
}

/// Maximum that propagates NaN instead of ignoring it.
pub(crate) fn nan_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

impl ResidualReport {
    pub fn new(check: &str, label: &str, residuals: Vec<f64>, skipped: usize, tolerance: f64) -> Self {
        let max_residual = nan_max(residuals.iter().copied());
        let mean_residual = if residuals.is_empty() {
            0.0
        } else {
            residuals.iter().sum::<f64>() / residuals.len() as f64
        };
        ResidualReport {
            check: check.to_string(),
            label: label.to_string(),
            seed: None,
            point_count: residuals.len(),
            skipped,
            pass: !residuals.is_empty() && max_residual <= tolerance,
            residuals,
            max_residual,
            mean_residual,
            tolerance,
            hypothesis_ok: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_hypothesis(mut self, ok: bool) -> Self {
        self.hypothesis_ok = ok;
        self
    }
}

/// Evaluate `f` at every point in parallel, keeping point order. Points
/// failing with a pointwise error are skipped and counted; any other error
/// aborts.
pub(crate) fn map_points<T, F>(points: &[Vec<f64>], f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = points.par_iter().map(|p| f(p)).collect();
    let mut out = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) if e.is_pointwise() => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}
