use serde::{Deserialize, Serialize};

use crate::engine::{Engine, Observer};
use crate::error::Result;
use crate::model::{Configuration, RateTriple};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceStats {
    /// Entries of the shape into the zero shape.
    pub returns: u64,
    pub last_return: Option<f64>,
    /// Fraction of `[0, horizon]` spent with `max |h_i| <= radius`.
    pub occupation: f64,
    pub horizon: f64,
}

impl RecurrenceStats {
    /// No return in the second half of the horizon.
    pub fn returns_stopped(&self) -> bool {
        self.last_return.is_none_or(|t| t < 0.5 * self.horizon)
    }
}

/// Observer that counts returns of the shape to zero and the time spent in
/// the box `max |h_i| <= radius`.
#[derive(Debug, Clone)]
pub struct RecurrenceTracker {
    radius: i64,
    at_zero: bool,
    inside: bool,
    last_time: f64,
    inside_time: f64,
    returns: u64,
    last_return: Option<f64>,
}

impl RecurrenceTracker {
    pub fn new(initial: &Configuration, radius: i64) -> Self {
        let shape = initial.shape();
        Self {
            radius,
            at_zero: shape.is_zero(),
            inside: shape.max_abs() <= radius,
            last_time: 0.0,
            inside_time: 0.0,
            returns: 0,
            last_return: None,
        }
    }

    pub fn finish(mut self, horizon: f64) -> RecurrenceStats {
        if self.inside {
            self.inside_time += horizon - self.last_time;
        }
        RecurrenceStats {
            returns: self.returns,
            last_return: self.last_return,
            occupation: if horizon > 0.0 { self.inside_time / horizon } else { 1.0 },
            horizon,
        }
    }
}

impl Observer for RecurrenceTracker {
    fn on_deposit(&mut self, time: f64, _site: usize, state: &Configuration) {
        if self.inside {
            self.inside_time += time - self.last_time;
        }
        self.last_time = time;
        let shape = state.shape();
        let zero = shape.is_zero();
        if zero && !self.at_zero {
            self.returns += 1;
            self.last_return = Some(time);
        }
        self.at_zero = zero;
        self.inside = shape.max_abs() <= self.radius;
    }
}

/// Runs one trajectory and returns its recurrence record.
pub fn recurrence_statistics(
    engine: &dyn Engine,
    beta: &RateTriple,
    initial: &Configuration,
    horizon: f64,
    seed: u64,
    radius: i64,
) -> Result<(RecurrenceStats, Vec<u64>)> {
    let mut tracker = RecurrenceTracker::new(initial, radius);
    let traj = engine.run_observed(beta, initial, horizon, &[], seed, &mut tracker)?;
    Ok((tracker.finish(horizon), traj.final_heights().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PoissonEngine;
    use crate::exact::mu_n2;
    use crate::model::Boundary;

    fn beta(a: f64, b: f64, c: f64) -> RateTriple {
        RateTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn still_shape() {
        let x = Configuration::flat(3, Boundary::Zero).unwrap();
        let s = RecurrenceTracker::new(&x, 5).finish(10.0);
        assert_eq!(s.returns, 0);
        assert_eq!(s.occupation, 1.0);
        assert!(s.returns_stopped());
    }

    #[test]
    fn counts_entries_only() {
        let mut t = RecurrenceTracker::new(&"zero:0,0".parse().unwrap(), 0);
        t.on_deposit(1.0, 0, &"zero:1,0".parse().unwrap());
        t.on_deposit(2.0, 1, &"zero:1,1".parse().unwrap());
        t.on_deposit(4.0, 0, &"zero:2,1".parse().unwrap());
        let s = t.finish(5.0);
        assert_eq!(s.returns, 1);
        assert_eq!(s.last_return, Some(2.0));
        // Inside the radius-0 box during [0, 1) and [2, 4).
        assert!((s.occupation - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn two_sites_occupation_matches_partial_sum() {
        let b = beta(1.0, 3.0, 2.0);
        let x = Configuration::flat(2, Boundary::Zero).unwrap();
        let expect: f64 = (-5..=5).map(|i| mu_n2(1.0, 3.0, i).unwrap()).sum();
        let (s, _) = recurrence_statistics(&PoissonEngine, &b, &x, 20_000.0, 3, 5).unwrap();
        assert!((s.occupation - expect).abs() < 0.005, "{} vs {expect}", s.occupation);
        assert!(s.returns > 1000);
        assert!(!s.returns_stopped());
    }

    #[test]
    fn comb_regime_stops_returning() {
        let b = beta(3.0, 2.0, 1.0);
        let x = Configuration::flat(4, Boundary::Zero).unwrap();
        let (s, _) = recurrence_statistics(&PoissonEngine, &b, &x, 2000.0, 8, 5).unwrap();
        assert!(s.returns_stopped(), "{s:?}");
        assert!(s.last_return.unwrap_or(0.0) < 100.0);
    }
}
