//! Exact event-driven simulation of the crystal process.
//!
//! Two interchangeable engines implement [`Engine`]: the thinned-stream
//! construction ([`PoissonEngine`]) and a direct generator sampler
//! ([`GillespieEngine`]) kept as an independent oracle. They are looked up by
//! name through an [`EngineRegistry`]. The coupling harness in [`coupling`]
//! drives several processes off one shared stream family.

pub mod coupling;
mod gillespie;
mod poisson;
mod registry;
pub mod streams;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use coupling::{run_coupled, run_coupled_observed, CoupleSpec, Participant};
pub use gillespie::GillespieEngine;
pub use poisson::PoissonEngine;
pub use registry::EngineRegistry;
pub use streams::{Event, StreamFamily};

use crate::error::{Error, Result};
use crate::model::{Configuration, RateTriple};
use crate::seed;

/// Receives every accepted deposit, after the state has been updated.
pub trait Observer {
    fn on_deposit(&mut self, time: f64, site: usize, state: &Configuration);
}

/// Observer that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl Observer for NoObserver {
    #[inline]
    fn on_deposit(&mut self, _: f64, _: usize, _: &Configuration) {}
}

impl<F: FnMut(f64, usize, &Configuration)> Observer for F {
    #[inline]
    fn on_deposit(&mut self, time: f64, site: usize, state: &Configuration) {
        self(time, site, state)
    }
}

/// A simulation strategy for the crystal process.
pub trait Engine: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn run_observed(
        &self,
        beta: &RateTriple,
        initial: &Configuration,
        horizon: f64,
        schedule: &[f64],
        seed: u64,
        observer: &mut dyn Observer,
    ) -> Result<Trajectory>;

    fn run(
        &self,
        beta: &RateTriple,
        initial: &Configuration,
        horizon: f64,
        schedule: &[f64],
        seed: u64,
    ) -> Result<Trajectory> {
        self.run_observed(beta, initial, horizon, schedule, seed, &mut NoObserver)
    }
}

/// Output of one run: the state at each scheduled time plus counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Configuration,
    pub horizon: f64,
    pub schedule: Vec<f64>,
    /// Heights at each scheduled time (state after all events at or before it).
    pub snapshots: Vec<Vec<u64>>,
    pub final_state: Configuration,
    /// Events processed. For the stream engine this counts rejected arrivals too.
    pub event_count: u64,
    /// Accepted deposits per site.
    pub deposits: Vec<u64>,
}

impl Trajectory {
    pub(crate) fn start(initial: &Configuration, horizon: f64, schedule: &[f64]) -> Self {
        Self {
            initial: initial.clone(),
            horizon,
            schedule: schedule.to_vec(),
            snapshots: Vec::with_capacity(schedule.len()),
            final_state: initial.clone(),
            event_count: 0,
            deposits: vec![0; initial.len()],
        }
    }

    /// Records every pending snapshot whose time is strictly before `time`.
    #[inline]
    pub(crate) fn snapshot_before(&mut self, time: f64, state: &Configuration) {
        while self.snapshots.len() < self.schedule.len() && self.schedule[self.snapshots.len()] < time {
            self.snapshots.push(state.heights().to_vec());
        }
    }

    pub(crate) fn finish(&mut self, state: Configuration) {
        while self.snapshots.len() < self.schedule.len() {
            self.snapshots.push(state.heights().to_vec());
        }
        self.final_state = state;
    }

    pub fn final_heights(&self) -> &[u64] {
        self.final_state.heights()
    }

    /// `X_T(j) / T` for every site.
    pub fn speeds(&self) -> Vec<f64> {
        self.final_heights().iter().map(|&h| h as f64 / self.horizon).collect()
    }

    /// Writes `time,site_1,...,site_n`, one row per snapshot.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend((1..=self.initial.len()).map(|j| format!("site_{j}")));
        w.write_record(&header)?;
        for (t, snap) in self.schedule.iter().zip(&self.snapshots) {
            let mut row = vec![t.to_string()];
            row.extend(snap.iter().map(u64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sidecar metadata written next to a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub engine: String,
    pub beta: RateTriple,
    pub boundary: String,
    pub initial: String,
    pub seed: u64,
    pub horizon: f64,
    pub event_count: u64,
}

impl TrajectoryMeta {
    pub fn new(engine: &str, beta: &RateTriple, seed: u64, traj: &Trajectory) -> Self {
        Self {
            engine: engine.to_string(),
            beta: *beta,
            boundary: traj.initial.boundary().tag().to_string(),
            initial: traj.initial.to_string(),
            seed,
            horizon: traj.horizon,
            event_count: traj.event_count,
        }
    }
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn export_trajectory(
    dir: &Path,
    stem: &str,
    traj: &Trajectory,
    meta: &TrajectoryMeta,
) -> Result<Vec<std::path::PathBuf>> {
    let csv_path = dir.join(format!("{stem}.csv"));
    traj.write_csv(std::fs::File::create(&csv_path)?)?;
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(meta)?)?;
    Ok(vec![csv_path, json_path])
}

pub(crate) fn validate_run(horizon: f64, schedule: &[f64]) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Precondition(format!("horizon must be positive and finite, got {horizon}")));
    }
    if schedule.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::Precondition("snapshot times must lie in [0, horizon]".into()));
    }
    if schedule.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("snapshot times must be non-decreasing".into()));
    }
    Ok(())
}

/// `k` evenly spaced snapshot times `horizon * i / k`, `i = 1..=k`.
pub fn even_schedule(horizon: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| horizon * i as f64 / k as f64).collect()
}

/// The auxiliary triple `(beta0, beta1, beta1)`.
pub fn derive_aux_process(beta: &RateTriple) -> RateTriple {
    RateTriple::new(beta.beta0(), beta.beta1(), beta.beta1())
        .expect("components of a valid triple are positive")
}

/// Runs `replicas` independent copies in parallel. Replica `r` uses seed
/// `seed::replica(seed, r)`, so the output does not depend on thread count.
pub fn run_replicas(
    engine: &dyn Engine,
    beta: &RateTriple,
    initial: &Configuration,
    horizon: f64,
    schedule: &[f64],
    seed: u64,
    replicas: usize,
) -> Result<Vec<Trajectory>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| engine.run(beta, initial, horizon, schedule, seed::replica(seed, r as u64)))
        .collect()
}

/// Stream-construction run; see [`PoissonEngine`].
pub fn run_poisson(
    beta: &RateTriple,
    initial: &Configuration,
    horizon: f64,
    schedule: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    PoissonEngine.run(beta, initial, horizon, schedule, seed)
}

/// Direct generator sampling; see [`GillespieEngine`].
pub fn run_gillespie(
    beta: &RateTriple,
    initial: &Configuration,
    horizon: f64,
    schedule: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    GillespieEngine.run(beta, initial, horizon, schedule, seed)
}
