use super::{validate_run, Engine, Observer, StreamFamily, Trajectory};
use crate::error::Result;
use crate::model::{Configuration, RateTriple};

/// Thinned-stream construction of the crystal process.
///
/// The stream family is built from `beta` itself. At an arrival of level `k`
/// at site `j` the pile grows iff `beta[V_j] >= b_k`, where `b` are the
/// sorted rates. Level 0 arrivals are therefore always accepted.
#[derive(Debug, Default, Clone, Copy)]
pub struct PoissonEngine;

impl Engine for PoissonEngine {
    fn name(&self) -> &'static str {
        "poisson"
    }

    fn description(&self) -> &'static str {
        "thinned per-site Poisson streams with level acceptance"
    }

    fn run_observed(
        &self,
        beta: &RateTriple,
        initial: &Configuration,
        horizon: f64,
        schedule: &[f64],
        seed: u64,
        observer: &mut dyn Observer,
    ) -> Result<Trajectory> {
        validate_run(horizon, schedule)?;
        let mut traj = Trajectory::start(initial, horizon, schedule);
        let mut state = initial.clone();
        let mut family = StreamFamily::new(beta, initial.len(), seed);
        let levels = family.levels();

        while family.peek_time().is_some_and(|t| t <= horizon) {
            let ev = family.next_event().expect("peeked");
            traj.snapshot_before(ev.time, &state);
            traj.event_count += 1;
            let rate = beta.rate(state.neighbor_count_unchecked(ev.site));
            if rate >= levels[ev.level as usize] {
                state.deposit_in_place(ev.site);
                traj.deposits[ev.site] += 1;
                observer.on_deposit(ev.time, ev.site, &state);
            }
        }
        traj.finish(state);
        Ok(traj)
    }
}
