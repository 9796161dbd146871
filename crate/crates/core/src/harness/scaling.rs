use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::trace::RegretTrace;

/// Slack on the envelope comparison so the calibration point never flags itself.
const ENVELOPE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub horizon: u64,
    pub seeds: usize,
    pub mean: f64,
    pub std: f64,
    /// `c d sqrt(T ln T)` with `c` fitted at the smallest horizon.
    pub envelope: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub dim: usize,
    /// Slope of `ln mean` against `ln T`.
    pub alpha: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub envelope_constant: f64,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn envelope_violations(&self) -> Vec<u64> {
        self.rows.iter().filter(|r| r.exceeds).map(|r| r.horizon).collect()
    }
}

fn rate(dim: usize, horizon: u64) -> f64 {
    let t = horizon as f64;
    dim as f64 * (t * t.ln()).sqrt()
}

/// Fits `ln R(T) = alpha ln T + b` to per-horizon mean final regrets.
pub fn scaling_fit(groups: &[(u64, Vec<f64>)], dim: usize) -> Result<ScalingReport, HarnessError> {
    let mut groups: Vec<&(u64, Vec<f64>)> = groups.iter().collect();
    groups.sort_by_key(|g| g.0);
    let distinct = {
        let mut hs: Vec<u64> = groups.iter().map(|g| g.0).collect();
        hs.dedup();
        hs.len()
    };
    if distinct < 3 || distinct != groups.len() {
        return Err(HarnessError::InsufficientGrid(format!(
            "need at least three distinct horizons, got {:?}",
            groups.iter().map(|g| g.0).collect::<Vec<_>>()
        )));
    }
    if groups[0].0 < 2 {
        return Err(HarnessError::InsufficientGrid("horizons must be at least 2".into()));
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (horizon, regrets) in &groups {
        if regrets.is_empty() {
            return Err(HarnessError::InsufficientGrid(format!("no runs at T = {horizon}")));
        }
        let n = regrets.len() as f64;
        let mean = regrets.iter().sum::<f64>() / n;
        if !(mean > 0.0) {
            return Err(HarnessError::InsufficientGrid(format!(
                "mean regret {mean} at T = {horizon} has no logarithm"
            )));
        }
        let std = if regrets.len() > 1 {
            (regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(ScalingRow {
            horizon: *horizon,
            seeds: regrets.len(),
            mean,
            std,
            envelope: 0.0,
            exceeds: false,
        });
    }

    let xs: Vec<f64> = rows.iter().map(|r| (r.horizon as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (alpha * x + intercept)).collect();

    let c = rows[0].mean / rate(dim, rows[0].horizon);
    for row in &mut rows {
        row.envelope = c * rate(dim, row.horizon);
        row.exceeds = row.mean > row.envelope * (1.0 + ENVELOPE_SLACK);
    }
    Ok(ScalingReport {
        dim,
        alpha,
        intercept,
        residuals,
        envelope_constant: c,
        rows,
    })
}

pub fn scaling_fit_traces(groups: &[(u64, Vec<RegretTrace>)], dim: usize) -> Result<ScalingReport, HarnessError> {
    let finals: Vec<(u64, Vec<f64>)> = groups
        .iter()
        .map(|(t, traces)| (*t, traces.iter().map(RegretTrace::final_regret).collect()))
        .collect();
    scaling_fit(&finals, dim)
}
