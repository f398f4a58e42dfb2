use serde::Serialize;

use super::stats::ols;
use crate::engine::{run_replicas, Engine};
use crate::error::{Error, Result};
use crate::model::{Configuration, RateTriple};

/// Grid points with fewer hits than this are left out of the fits.
pub const MIN_TAIL_COUNT: u64 = 5;
/// Slopes at or below this do not count as exponential decay.
pub const MIN_ALPHA: f64 = 0.05;
/// Largest allowed ratio between per-horizon slopes for a stable fit.
pub const MAX_ALPHA_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStatus {
    /// Positive slope at every horizon, stable across horizons.
    Tight,
    NotTight,
    /// Too few nonzero tail probabilities to fit a slope.
    TooLight,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    /// Shape coordinate, 0-based: `h_j = x(j) - x(j+1)`.
    pub coord: usize,
    pub horizons: Vec<f64>,
    pub k_grid: Vec<u64>,
    pub replicas: usize,
    pub seed: u64,
    /// `counts[h][i]`: replicas with `|h_j| >= k_grid[i]` at `horizons[h]`.
    pub counts: Vec<Vec<u64>>,
    /// `ln` of the tail probabilities; `None` where the count is zero.
    pub log_prob: Vec<Vec<Option<f64>>>,
    /// Decay rate `alpha` fitted separately at each horizon.
    pub alpha_by_horizon: Vec<Option<f64>>,
    /// Common decay rate, fitted with one intercept per horizon.
    pub alpha_hat: Option<f64>,
    pub intercepts: Vec<Option<f64>>,
    /// `R^2` of the common-slope fit.
    pub r_squared: Option<f64>,
    pub status: TailStatus,
    pub note: Option<String>,
}

impl TailFit {
    pub fn probability(&self, horizon_index: usize, k_index: usize) -> f64 {
        self.counts[horizon_index][k_index] as f64 / self.replicas as f64
    }
}

/// Fits `P(|h_j(t)| >= k) ~ C_t exp(-alpha k)` at each horizon from
/// independent replicas started at `initial`.
pub fn fit_tail(
    engine: &dyn Engine,
    beta: &RateTriple,
    initial: &Configuration,
    coord: usize,
    horizons: &[f64],
    k_grid: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<TailFit> {
    let coords = initial.shape().diffs().len();
    if coord >= coords {
        return Err(Error::Precondition(format!(
            "shape coordinate {coord} out of range (the shape has {coords} coordinates)"
        )));
    }
    if horizons.is_empty() || k_grid.is_empty() || replicas == 0 {
        return Err(Error::Precondition("horizons, k grid and replicas must be non-empty".into()));
    }
    if k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("k grid must be strictly increasing".into()));
    }
    let mut sorted = horizons.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted != horizons {
        return Err(Error::Precondition("horizons must be non-decreasing".into()));
    }
    let horizon = *sorted.last().expect("non-empty");
    let trajs = run_replicas(engine, beta, initial, horizon, horizons, seed, replicas)?;

    let mut counts = vec![vec![0u64; k_grid.len()]; horizons.len()];
    for t in &trajs {
        for (h, snap) in t.snapshots.iter().enumerate() {
            let d = (snap[coord] as i64 - snap[(coord + 1) % snap.len()] as i64).unsigned_abs();
            // Exceedance counts for a sorted grid: cumulative, hence monotone in k.
            for (i, &k) in k_grid.iter().enumerate() {
                if d >= k {
                    counts[h][i] += 1;
                } else {
                    break;
                }
            }
        }
    }
    let rf = replicas as f64;
    let log_prob: Vec<Vec<Option<f64>>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| (c > 0).then(|| (c as f64 / rf).ln())).collect())
        .collect();

    // Usable points per horizon: enough hits, and k >= 1.
    let usable: Vec<Vec<(f64, f64)>> = counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(k_grid)
                .filter(|(&c, &k)| c >= MIN_TAIL_COUNT && k >= 1)
                .map(|(&c, &k)| (k as f64, (c as f64 / rf).ln()))
                .collect()
        })
        .collect();

    let alpha_by_horizon: Vec<Option<f64>> = usable
        .iter()
        .map(|pts| {
            if pts.len() < 3 {
                return None;
            }
            let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
            ols(&x, &y).map(|(s, _, _)| -s)
        })
        .collect();

    // Common slope with per-horizon intercepts.
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    let mut means = Vec::with_capacity(usable.len());
    for pts in &usable {
        if pts.len() < 2 {
            means.push(None);
            continue;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        for &(x, y) in pts {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        means.push(Some((mx, my)));
    }
    let slope = (sxx > 0.0).then(|| sxy / sxx);
    let alpha_hat = slope.map(|s| -s);
    let intercepts = means.iter().map(|m| m.and_then(|(mx, my)| slope.map(|s| my - s * mx))).collect();
    let r_squared = slope.map(|_| if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) });

    let (status, note) = if alpha_by_horizon.iter().any(Option::is_none) {
        (TailStatus::TooLight, Some("tail too light to fit".to_string()))
    } else {
        let alphas: Vec<f64> = alpha_by_horizon.iter().flatten().copied().collect();
        let min = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min > MIN_ALPHA && max / min <= MAX_ALPHA_RATIO {
            (TailStatus::Tight, None)
        } else if min <= MIN_ALPHA {
            (TailStatus::NotTight, Some(format!("decay rate {min:.4} at some horizon is not positive")))
        } else {
            (TailStatus::NotTight, Some(format!("decay rate varies across horizons ({min:.4} to {max:.4})")))
        }
    };

    Ok(TailFit {
        coord,
        horizons: horizons.to_vec(),
        k_grid: k_grid.to_vec(),
        replicas,
        seed,
        counts,
        log_prob,
        alpha_by_horizon,
        alpha_hat,
        intercepts,
        r_squared,
        status,
        note,
    })
}
