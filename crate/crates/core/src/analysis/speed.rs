use std::io::Write;

use serde::Serialize;

use super::stats::mean_se;
use crate::engine::{run_replicas, Engine};
use crate::error::{Error, Result};
use crate::model::{Configuration, RateTriple};

#[derive(Debug, Clone, Serialize)]
pub struct SpeedEstimate {
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Mean of `X_T(j) / T` over replicas.
    pub speeds: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Largest `|s_i - s_j| / sqrt(se_i^2 + se_j^2)` over site pairs.
    pub max_gap_se: f64,
    #[serde(skip)]
    pub per_replica: Vec<Vec<f64>>,
}

impl SpeedEstimate {
    /// Average over sites.
    pub fn mean(&self) -> f64 {
        self.speeds.iter().sum::<f64>() / self.speeds.len() as f64
    }

    /// Sum over sites with its standard error, from per-replica totals.
    pub fn total(&self) -> (f64, f64) {
        let totals: Vec<f64> = self.per_replica.iter().map(|s| s.iter().sum()).collect();
        mean_se(&totals)
    }

    /// Raw values: `replica,site_1,...,site_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["replica".to_string()];
        header.extend((1..=self.speeds.len()).map(|j| format!("site_{j}")));
        w.write_record(&header)?;
        for (r, row) in self.per_replica.iter().enumerate() {
            let mut rec = vec![r.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Endpoint speeds `X_T / T` averaged over independent replicas.
pub fn estimate_speeds(
    engine: &dyn Engine,
    beta: &RateTriple,
    initial: &Configuration,
    horizon: f64,
    replicas: usize,
    seed: u64,
) -> Result<SpeedEstimate> {
    if replicas == 0 {
        return Err(Error::Precondition("at least one replica is required".into()));
    }
    let trajs = run_replicas(engine, beta, initial, horizon, &[], seed, replicas)?;
    let per_replica: Vec<Vec<f64>> = trajs.iter().map(|t| t.speeds()).collect();
    let n = initial.len();
    let mut speeds = Vec::with_capacity(n);
    let mut std_errors = Vec::with_capacity(n);
    for j in 0..n {
        let col: Vec<f64> = per_replica.iter().map(|s| s[j]).collect();
        let (m, se) = mean_se(&col);
        speeds.push(m);
        std_errors.push(se);
    }
    let mut max_gap_se: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let gap = (speeds[i] - speeds[j]).abs();
            if gap == 0.0 {
                continue;
            }
            let se = (std_errors[i].powi(2) + std_errors[j].powi(2)).sqrt();
            max_gap_se = max_gap_se.max(if se > 0.0 { gap / se } else { f64::INFINITY });
        }
    }
    Ok(SpeedEstimate { horizon, replicas, seed, speeds, std_errors, max_gap_se, per_replica })
}
