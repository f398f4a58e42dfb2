use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{validate_run, Engine, Observer, Trajectory};
use crate::error::Result;
use crate::model::{Configuration, RateTriple};
use crate::seed;

/// Direct sampling of the generator: exponential holding time at the total
/// rate `sum_j beta[V_j]`, then a site chosen proportionally to its rate.
#[derive(Debug, Default, Clone, Copy)]
pub struct GillespieEngine;

impl Engine for GillespieEngine {
    fn name(&self) -> &'static str {
        "gillespie"
    }

    fn description(&self) -> &'static str {
        "direct-method stochastic simulation of the jump generator"
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
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[0x6769_6c6c]));
        let mut traj = Trajectory::start(initial, horizon, schedule);
        let mut state = initial.clone();
        let n = state.len();
        let mut rates = vec![0.0; n];
        let mut t = 0.0;

        loop {
            for (j, r) in rates.iter_mut().enumerate() {
                *r = beta.rate(state.neighbor_count_unchecked(j));
            }
            let total: f64 = rates.iter().sum();
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap / total;
            if t > horizon {
                break;
            }
            let mut pick = rng.random::<f64>() * total;
            let mut site = n - 1;
            for (j, &r) in rates.iter().enumerate() {
                if pick < r {
                    site = j;
                    break;
                }
                pick -= r;
            }
            traj.snapshot_before(t, &state);
            traj.event_count += 1;
            state.deposit_in_place(site);
            traj.deposits[site] += 1;
            observer.on_deposit(t, site, &state);
        }
        traj.finish(state);
        Ok(traj)
    }
}
