use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::stats::total_variation;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{Boundary, Configuration, RateTriple, Shape};

/// Total variation between the two halves of the window above which the
/// occupation law is flagged as drifting.
pub const DRIFT_TV: f64 = 0.1;

/// Time-weighted occupation law of the shape over `[burn_in, horizon]`.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeDistribution {
    pub boundary: Boundary,
    pub burn_in: f64,
    pub horizon: f64,
    pub deposits: u64,
    #[serde(serialize_with = "serialize_law")]
    pub frequencies: BTreeMap<Vec<i64>, f64>,
    /// Total variation between the laws of the first and second half of the window.
    pub drift_tv: f64,
    /// `drift_tv > DRIFT_TV`: the law has not settled, as for a non-ergodic shape.
    pub drifting: bool,
}

fn serialize_law<S: serde::Serializer>(
    law: &BTreeMap<Vec<i64>, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(law.len()))?;
    for (h, p) in law {
        seq.serialize_element(&(h, p))?;
    }
    seq.end()
}

impl ShapeDistribution {
    pub fn get(&self, h: &[i64]) -> f64 {
        self.frequencies.get(h).copied().unwrap_or(0.0)
    }

    /// Total variation to a reference law given pointwise; the reference mass
    /// outside the observed support is added in full.
    pub fn tv_to<F: Fn(&[i64]) -> f64>(&self, law: F) -> f64 {
        let mut s = 0.0;
        let mut covered = 0.0;
        for (h, p) in &self.frequencies {
            let q = law(h);
            covered += q;
            s += (p - q).abs();
        }
        0.5 * (s + (1.0 - covered).max(0.0))
    }

    /// `sum_h beta[V_j(h)] p(h)` for every site `j`.
    pub fn throughput(&self, beta: &RateTriple) -> Vec<f64> {
        let sites =
            self.frequencies.keys().next().map(|h| Shape::new(h.clone(), self.boundary).sites()).unwrap_or(0);
        let mut v = vec![0.0; sites];
        for (h, p) in &self.frequencies {
            let shape = Shape::new(h.clone(), self.boundary);
            for (j, x) in v.iter_mut().enumerate() {
                *x += beta.rate(shape.neighbor_count(j)) * p;
            }
        }
        v
    }
}

/// Runs one trajectory and records how long the shape spends in each state
/// after `burn_in`.
pub fn empirical_shape_distribution(
    engine: &dyn Engine,
    beta: &RateTriple,
    initial: &Configuration,
    burn_in: f64,
    horizon: f64,
    seed: u64,
) -> Result<ShapeDistribution> {
    if !(burn_in >= 0.0 && burn_in < horizon) {
        return Err(Error::Precondition(format!(
            "burn-in must lie in [0, horizon), got {burn_in} with horizon {horizon}"
        )));
    }
    let mid = 0.5 * (burn_in + horizon);
    let mut dwell: HashMap<Vec<i64>, [f64; 2]> = HashMap::new();
    let mut current = initial.shape().diffs().to_vec();
    let mut last = 0.0f64;
    let mut deposits = 0u64;

    let add = |shape: &Vec<i64>, from: f64, to: f64, dwell: &mut HashMap<Vec<i64>, [f64; 2]>| {
        let a = from.max(burn_in);
        if to <= a {
            return;
        }
        let first = (to.min(mid) - a).max(0.0);
        let second = (to - a.max(mid)).max(0.0);
        let e = dwell.entry(shape.clone()).or_insert([0.0; 2]);
        e[0] += first;
        e[1] += second;
    };

    {
        let mut observer = |time: f64, _site: usize, state: &Configuration| {
            add(&current, last, time, &mut dwell);
            current = state.shape().diffs().to_vec();
            last = time;
            deposits += 1;
        };
        engine.run_observed(beta, initial, horizon, &[], seed, &mut observer)?;
    }
    add(&current, last, horizon, &mut dwell);

    let half = [mid - burn_in, horizon - mid];
    let mut frequencies = BTreeMap::new();
    let mut halves = [BTreeMap::new(), BTreeMap::new()];
    let window = horizon - burn_in;
    for (h, d) in dwell {
        frequencies.insert(h.clone(), (d[0] + d[1]) / window);
        for k in 0..2 {
            if d[k] > 0.0 {
                halves[k].insert(h.clone(), d[k] / half[k]);
            }
        }
    }
    let drift_tv = total_variation(&halves[0], &halves[1]);
    Ok(ShapeDistribution {
        boundary: initial.boundary(),
        burn_in,
        horizon,
        deposits,
        frequencies,
        drift_tv,
        drifting: drift_tv > DRIFT_TV,
    })
}
