//! Scans of the `(beta1, beta2)` plane at `beta0 = 1`, combining region
//! verdicts with recurrence statistics of simulated shapes.

mod recurrence;
mod table;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use recurrence::{recurrence_statistics, RecurrenceStats, RecurrenceTracker};
pub use table::{key_order, load_table, read_table, save_table, write_table, HEADER};

use crate::analysis::fit_tail;
use crate::engine::{Engine, EngineRegistry};
use crate::error::{Error, Result};
use crate::exact::{region_verdict, RegionVerdict};
use crate::model::{Boundary, Configuration, RateTriple};
use crate::seed;

pub const TABLE_FILE: &str = "sweep.csv";
pub const MANIFEST_FILE: &str = "sweep.json";

fn default_engine() -> String {
    "poisson".into()
}

fn default_radius() -> i64 {
    5
}

fn default_k_max() -> u64 {
    20
}

fn default_true() -> bool {
    true
}

/// What to simulate at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub horizon: f64,
    pub replicas: usize,
    #[serde(default = "default_engine")]
    pub engine: String,
    /// Recurrence statistics and endpoint speeds.
    #[serde(default = "default_true")]
    pub recurrence: bool,
    /// Tail slope of the first shape coordinate at `T/4, T/2, T`.
    #[serde(default)]
    pub tail: bool,
    #[serde(default = "default_radius")]
    pub box_radius: i64,
    #[serde(default = "default_k_max")]
    pub tail_k_max: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            horizon: 1000.0,
            replicas: 8,
            engine: default_engine(),
            recurrence: true,
            tail: false,
            box_radius: default_radius(),
            tail_k_max: default_k_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: usize,
    pub beta1_grid: Vec<f64>,
    pub beta2_grid: Vec<f64>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub seed: u64,
    /// Directory receiving the table and manifest; nothing is written if unset.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Precondition("sweep needs n >= 1".into()));
        }
        for (name, grid) in [("beta1", &self.beta1_grid), ("beta2", &self.beta2_grid)] {
            if grid.is_empty() {
                return Err(Error::Precondition(format!("{name} grid is empty")));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Precondition(format!("{name} grid must be strictly increasing")));
            }
            if let Some(&bad) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidRate { name: "grid", value: bad });
            }
        }
        let p = &self.protocol;
        if (p.recurrence || p.tail) && !(p.horizon.is_finite() && p.horizon > 0.0 && p.replicas > 0) {
            return Err(Error::Precondition(
                "protocol needs a positive horizon and at least one replica".into(),
            ));
        }
        if p.tail && self.n < 2 {
            return Err(Error::Precondition("tail fits need n >= 2".into()));
        }
        Ok(())
    }

    /// Seed of the point `(beta1, beta2)`; independent of the grids.
    pub fn point_seed(&self, beta1: f64, beta2: f64) -> u64 {
        seed::derive(self.seed, &[self.n as u64, beta1.to_bits(), beta2.to_bits()])
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.beta1_grid.iter().flat_map(|&b1| self.beta2_grid.iter().map(move |&b2| (b1, b2))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub n: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub verdict: RegionVerdict,
    /// Mean number of returns of the shape to zero per replica.
    pub returns: Option<f64>,
    /// Mean time of the last return (0 for replicas that never return).
    pub last_return: Option<f64>,
    /// Mean fraction of time in the box `max |h_i| <= radius`.
    pub occupation: Option<f64>,
    pub alpha_hat: Option<f64>,
    /// Mean endpoint speed over sites and replicas.
    pub speed_mean: Option<f64>,
    /// Fraction of replicas with no return in the second half of the horizon.
    pub returns_stopped_fraction: Option<f64>,
    /// `ok`, or `failed: <reason>`.
    pub status: String,
    /// Seconds; not persisted in the table.
    pub wall_time: f64,
}

impl PointResult {
    fn key(&self) -> (usize, u64, u64) {
        (self.n, self.beta1.to_bits(), self.beta2.to_bits())
    }
}

/// Computes one grid point. Failures of the empirical part are recorded in
/// `status`; the verdict is always present.
pub fn run_point(spec: &SweepSpec, engine: &dyn Engine, beta1: f64, beta2: f64) -> PointResult {
    let started = Instant::now();
    let mut result = PointResult {
        n: spec.n,
        beta1,
        beta2,
        verdict: region_verdict(spec.n, &RateTriple::new(1.0, beta1, beta2).expect("validated grid")),
        returns: None,
        last_return: None,
        occupation: None,
        alpha_hat: None,
        speed_mean: None,
        returns_stopped_fraction: None,
        status: "ok".into(),
        wall_time: 0.0,
    };
    if let Err(e) = empirical(spec, engine, &mut result) {
        result.status = format!("failed: {e}");
    }
    result.wall_time = started.elapsed().as_secs_f64();
    result
}

fn empirical(spec: &SweepSpec, engine: &dyn Engine, out: &mut PointResult) -> Result<()> {
    let p = &spec.protocol;
    let beta = RateTriple::new(1.0, out.beta1, out.beta2)?;
    let start = Configuration::flat(spec.n, Boundary::Zero)?;
    let point_seed = spec.point_seed(out.beta1, out.beta2);
    if p.recurrence {
        let runs: Vec<(RecurrenceStats, Vec<u64>)> = (0..p.replicas)
            .map(|r| {
                recurrence_statistics(
                    engine,
                    &beta,
                    &start,
                    p.horizon,
                    seed::replica(point_seed, r as u64),
                    p.box_radius,
                )
            })
            .collect::<Result<_>>()?;
        let k = runs.len() as f64;
        out.returns = Some(runs.iter().map(|(s, _)| s.returns as f64).sum::<f64>() / k);
        out.last_return = Some(runs.iter().map(|(s, _)| s.last_return.unwrap_or(0.0)).sum::<f64>() / k);
        out.occupation = Some(runs.iter().map(|(s, _)| s.occupation).sum::<f64>() / k);
        out.returns_stopped_fraction =
            Some(runs.iter().filter(|(s, _)| s.returns_stopped()).count() as f64 / k);
        let total: u64 = runs.iter().flat_map(|(_, h)| h).sum();
        out.speed_mean = Some(total as f64 / (k * spec.n as f64 * p.horizon));
    }
    if p.tail {
        let h = p.horizon;
        let k_grid: Vec<u64> = (0..=p.tail_k_max).collect();
        let fit = fit_tail(
            engine,
            &beta,
            &start,
            0,
            &[h / 4.0, h / 2.0, h],
            &k_grid,
            p.replicas,
            seed::derive(point_seed, &[0x7461_696c]),
        )?;
        out.alpha_hat = fit.alpha_hat;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepManifest {
    pub spec: SweepSpec,
    pub seed: u64,
    pub tool_version: String,
    pub points: usize,
}

/// Runs every grid point not already present in the output table, persisting
/// after each batch. Returns the full table in key order.
pub fn run_sweep(spec: &SweepSpec, registry: &EngineRegistry) -> Result<Vec<PointResult>> {
    spec.validate()?;
    let engine = registry.get(&spec.protocol.engine)?;
    let table_path = spec.output.as_ref().map(|d| d.join(TABLE_FILE));
    if let Some(dir) = &spec.output {
        fs::create_dir_all(dir)?;
    }

    let mut rows: Vec<PointResult> = match &table_path {
        Some(p) if p.exists() => load_table(p)?,
        _ => Vec::new(),
    };
    let done: BTreeSet<(usize, u64, u64)> = rows.iter().map(PointResult::key).collect();
    let todo: Vec<(f64, f64)> = spec
        .points()
        .into_iter()
        .filter(|&(b1, b2)| !done.contains(&(spec.n, b1.to_bits(), b2.to_bits())))
        .collect();

    let batch = rayon::current_num_threads().max(1) * 2;
    for chunk in todo.chunks(batch) {
        let fresh: Vec<PointResult> =
            chunk.par_iter().map(|&(b1, b2)| run_point(spec, engine.as_ref(), b1, b2)).collect();
        rows.extend(fresh);
        rows.sort_by(key_order);
        if let Some(p) = &table_path {
            save_table(&rows, p)?;
        }
    }
    rows.sort_by(key_order);
    if let Some(dir) = &spec.output {
        if let Some(p) = &table_path {
            if !p.exists() {
                save_table(&rows, p)?;
            }
        }
        write_manifest(spec, rows.len(), &dir.join(MANIFEST_FILE))?;
    }
    Ok(rows)
}

fn write_manifest(spec: &SweepSpec, points: usize, path: &Path) -> Result<()> {
    let m = SweepManifest {
        spec: spec.clone(),
        seed: spec.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        points,
    };
    fs::write(path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}
