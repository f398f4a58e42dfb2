//! Estimation of the speed threshold of the auxiliary process `(b0, b1, b1)`:
//! the infimum of the speeds `d` for which `P(X_t(n) >= d t)` decays
//! exponentially in `t`, started from the flat configuration.

use serde::Serialize;

use super::stats::{ols, wilson};
use crate::engine::{derive_aux_process, run_replicas, Engine};
use crate::error::{Error, Result};
use crate::model::{Boundary, Configuration, RateTriple};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.96;

pub const DEFAULT_HORIZONS: [f64; 3] = [100.0, 400.0, 1600.0];

/// `beta0, beta0 + step, ...` up to and including `beta1` (within round-off).
pub fn default_d_grid(beta0: f64, beta1: f64, step: f64) -> Vec<f64> {
    let steps = ((beta1 - beta0) / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=steps).map(|i| beta0 + step * i as f64).collect();
    if g.last().is_some_and(|&d| beta1 - d > 1e-9) {
        g.push(beta1);
    }
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub d: f64,
    /// Replicas with `X_t(n) >= d t`, one entry per horizon.
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    /// Least-squares decay rate of the continuity-corrected `ln p` in `t`.
    pub rate: Option<f64>,
    /// Conservative lower bound on the decay rate from the first and last
    /// horizons' Wilson intervals.
    pub rate_lower: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DtildeEstimate {
    pub n: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub aux_beta: RateTriple,
    pub horizons: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub fits: Vec<DecayFit>,
    pub d_hat: f64,
    /// Grid interval containing the threshold: `(last non-significant, d_hat)`.
    pub bracket: (f64, f64),
    /// No grid point showed decay; `d_hat` was set to `beta1`.
    pub upper_endpoint: bool,
}

impl DtildeEstimate {
    pub fn bracket_width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

/// Estimates the threshold for `n` sites. The auxiliary process runs from the
/// flat zero-condition configuration; `X_t(n)` is its right-most site.
#[allow(clippy::too_many_arguments)]
pub fn estimate_dtilde(
    engine: &dyn Engine,
    n: usize,
    beta1: f64,
    beta0: f64,
    d_grid: &[f64],
    horizons: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<DtildeEstimate> {
    let beta = RateTriple::new(beta0, beta1, beta1)?;
    if beta1 < beta0 {
        return Err(Error::Precondition(format!(
            "threshold estimation needs beta1 >= beta0, got beta0={beta0}, beta1={beta1}"
        )));
    }
    if n == 0 || replicas == 0 {
        return Err(Error::Precondition("n and replicas must be positive".into()));
    }
    if horizons.len() < 3 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("at least three strictly increasing horizons are required".into()));
    }
    let margin = 0.25 * beta0;
    if d_grid.is_empty()
        || d_grid.windows(2).any(|w| w[0] >= w[1])
        || d_grid.iter().any(|&d| d <= beta0 - margin || d >= beta1 + margin)
    {
        return Err(Error::Precondition(format!(
            "d grid must be strictly increasing inside ({}, {})",
            beta0 - margin,
            beta1 + margin
        )));
    }

    let aux = derive_aux_process(&beta);
    let start = Configuration::flat(n, Boundary::Zero)?;
    let horizon = *horizons.last().expect("checked");
    let trajs = run_replicas(engine, &aux, &start, horizon, horizons, seed, replicas)?;
    // Right-most height at each horizon, per replica.
    let edge: Vec<Vec<u64>> = trajs.iter().map(|t| t.snapshots.iter().map(|s| s[n - 1]).collect()).collect();

    let r = replicas as u64;
    let (t_first, t_last) = (horizons[0], horizon);
    let mut fits = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let counts: Vec<u64> = (0..horizons.len())
            .map(|h| {
                let level = d * horizons[h];
                edge.iter().filter(|e| e[h] as f64 >= level).count() as u64
            })
            .collect();
        let probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / r as f64).collect();
        let intervals: Vec<(f64, f64)> = counts.iter().map(|&c| wilson(c, r, WILSON_Z)).collect();
        let y: Vec<f64> = counts.iter().map(|&c| ((c as f64 + 0.5) / (r as f64 + 1.0)).ln()).collect();
        let rate = ols(horizons, &y).map(|(s, _, _)| -s);
        let lo_first = intervals[0].0;
        let hi_last = intervals[intervals.len() - 1].1;
        let rate_lower = (lo_first.ln() - hi_last.ln()) / (t_last - t_first);
        fits.push(DecayFit {
            d,
            counts,
            probabilities,
            intervals,
            rate,
            rate_lower,
            significant: rate_lower > 0.0,
        });
    }

    let first = fits.iter().position(|f| f.significant);
    let (d_hat, bracket, upper_endpoint) = match first {
        Some(i) => {
            let d_hat = fits[i].d.clamp(beta0, beta1);
            let below = if i == 0 { beta0.min(d_hat) } else { fits[i - 1].d.clamp(beta0, d_hat) };
            (d_hat, (below, d_hat), false)
        }
        None => {
            let below = d_grid.last().copied().unwrap_or(beta0).clamp(beta0, beta1);
            (beta1, (below, beta1), true)
        }
    };

    Ok(DtildeEstimate {
        n,
        beta0,
        beta1,
        aux_beta: aux,
        horizons: horizons.to_vec(),
        replicas,
        seed,
        fits,
        d_hat,
        bracket,
        upper_endpoint,
    })
}
