//! Shared-randomness coupling of several crystal processes.
//!
//! All participants read one [`StreamFamily`] whose top rate dominates every
//! participant's rates. An arrival at site `j` carries a mark `u` uniform on
//! `[0, b2)`; a participant with triple `beta` grows at `j` iff
//! `u < beta[V_j(state)]`. Each marginal is thus an exact thinning of a
//! rate-`b2` stream, and for monotone triples a higher state (or a larger
//! triple, or more sites) can only accept more often. Participants with fewer
//! sites use the streams of their own site indices.

use serde::{Deserialize, Serialize};

use super::{validate_run, Event, StreamFamily, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Configuration, RateTriple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub beta: RateTriple,
    pub initial: Configuration,
}

impl Participant {
    pub fn new(beta: RateTriple, initial: Configuration) -> Self {
        Self { beta, initial }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupleSpec {
    participants: Vec<Participant>,
    seed: u64,
}

impl CoupleSpec {
    /// Rejects an empty list and any non-monotone triple.
    pub fn new(participants: Vec<Participant>, seed: u64) -> Result<Self> {
        if participants.is_empty() {
            return Err(Error::Precondition("coupling needs at least one participant".into()));
        }
        if let Some((i, p)) = participants.iter().enumerate().find(|(_, p)| !p.beta.is_monotone()) {
            return Err(Error::Precondition(format!(
                "participant {i} has non-monotone rates ({}); couplings require beta0 <= beta1 <= beta2",
                p.beta
            )));
        }
        Ok(Self { participants, seed })
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sites(&self) -> usize {
        self.participants.iter().map(|p| p.initial.len()).max().unwrap_or(0)
    }

    /// Componentwise maximum of the sorted participant triples.
    pub fn dominating(&self) -> RateTriple {
        let mut top = [0.0f64; 3];
        for p in &self.participants {
            for (t, b) in top.iter_mut().zip(p.beta.sorted()) {
                *t = t.max(b);
            }
        }
        RateTriple::new(top[0], top[1], top[2]).expect("maxima of positive rates")
    }
}

pub fn run_coupled(spec: &CoupleSpec, horizon: f64, schedule: &[f64]) -> Result<Vec<Trajectory>> {
    run_coupled_observed(spec, horizon, schedule, |_, _| {})
}

/// Like [`run_coupled`], calling `on_event` after every arrival with the
/// current state of every participant.
pub fn run_coupled_observed<F>(
    spec: &CoupleSpec,
    horizon: f64,
    schedule: &[f64],
    mut on_event: F,
) -> Result<Vec<Trajectory>>
where
    F: FnMut(&Event, &[Configuration]),
{
    validate_run(horizon, schedule)?;
    let mut family = StreamFamily::new(&spec.dominating(), spec.sites(), spec.seed);
    let mut states: Vec<Configuration> = spec.participants.iter().map(|p| p.initial.clone()).collect();
    let mut trajs: Vec<Trajectory> =
        spec.participants.iter().map(|p| Trajectory::start(&p.initial, horizon, schedule)).collect();

    while family.peek_time().is_some_and(|t| t <= horizon) {
        let ev = family.next_event().expect("peeked");
        for ((p, state), traj) in spec.participants.iter().zip(&mut states).zip(&mut trajs) {
            if ev.site >= state.len() {
                continue;
            }
            traj.snapshot_before(ev.time, state);
            traj.event_count += 1;
            if ev.mark < p.beta.rate(state.neighbor_count_unchecked(ev.site)) {
                state.deposit_in_place(ev.site);
                traj.deposits[ev.site] += 1;
            }
        }
        on_event(&ev, &states);
    }
    for (traj, state) in trajs.iter_mut().zip(states) {
        traj.finish(state);
    }
    Ok(trajs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    fn beta(a: f64, b: f64, c: f64) -> RateTriple {
        RateTriple::new(a, b, c).unwrap()
    }

    fn cfg(s: &str) -> Configuration {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_non_monotone() {
        let p = Participant::new(beta(3.0, 2.0, 1.0), cfg("zero:0,0"));
        assert!(matches!(CoupleSpec::new(vec![p], 1), Err(Error::Precondition(_))));
        assert!(CoupleSpec::new(vec![], 1).is_err());
    }

    #[test]
    fn attractive_order_is_kept_at_every_event() {
        let b = beta(1.0, 2.0, 3.0);
        let spec = CoupleSpec::new(
            vec![Participant::new(b, cfg("zero:0,2,0,1")), Participant::new(b, cfg("zero:1,2,3,1"))],
            5,
        )
        .unwrap();
        let mut checked = 0;
        run_coupled_observed(&spec, 50.0, &[], |_, s| {
            assert!(s[0].dominated_by(&s[1]));
            checked += 1;
        })
        .unwrap();
        assert!(checked > 100);
    }

    #[test]
    fn single_participant_marginal_speed() {
        // Two sites with beta0 < beta1: both sites grow at 2*b0*b1/(b0+b1) = 1.5.
        let b = beta(1.0, 3.0, 3.0);
        let mut total = 0.0;
        let reps = 20;
        let horizon = 2000.0;
        for r in 0..reps {
            let spec = CoupleSpec::new(
                vec![Participant::new(b, Configuration::flat(2, Boundary::Zero).unwrap())],
                crate::seed::replica(4, r),
            )
            .unwrap();
            let t = run_coupled(&spec, horizon, &[]).unwrap();
            total += t[0].speeds().iter().sum::<f64>() / 2.0;
        }
        let mean = total / reps as f64;
        assert!((mean - 1.5).abs() < 0.03, "mean speed {mean}");
    }

    #[test]
    fn fewer_sites_use_prefix_streams() {
        let b = beta(1.0, 1.0, 1.0);
        let spec = CoupleSpec::new(
            vec![
                Participant::new(b, Configuration::flat(2, Boundary::Zero).unwrap()),
                Participant::new(b, Configuration::flat(4, Boundary::Zero).unwrap()),
            ],
            9,
        )
        .unwrap();
        let t = run_coupled(&spec, 10.0, &[]).unwrap();
        // All-accept: the shared prefix sites see identical arrivals.
        assert_eq!(t[0].final_heights(), &t[1].final_heights()[..2]);
    }
}
