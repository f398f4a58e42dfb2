use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{enumerate_comb_set, CombCase};
use crate::model::RateTriple;

/// Default per-coordinate tolerance: `0.05 * max(beta)`.
pub fn default_comb_tolerance(beta: &RateTriple) -> f64 {
    0.05 * beta.max()
}

#[derive(Debug, Clone, Serialize)]
pub struct CombMatch {
    pub case: CombCase,
    pub observed: Vec<f64>,
    /// The `l-inf` nearest element of the comb set.
    pub nearest: Vec<f64>,
    /// Position of `nearest` in enumeration order.
    pub nearest_index: usize,
    /// `max_j |observed_j - nearest_j|`.
    pub deviation: f64,
    pub tolerance: f64,
    /// `Some(nearest)` iff `deviation <= tolerance`.
    pub matched: Option<Vec<f64>>,
}

impl CombMatch {
    pub fn is_match(&self) -> bool {
        self.matched.is_some()
    }
}

/// Finds the comb vector nearest to `speeds` in the sup norm. Ties go to the
/// element enumerated first.
pub fn classify_comb(speeds: &[f64], beta: &RateTriple, case: CombCase, tol: f64) -> Result<CombMatch> {
    if speeds.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    let set = enumerate_comb_set(speeds.len(), beta, case)?;
    if set.is_empty() {
        return Err(Error::Precondition(format!(
            "comb set {case} has no element of length {}",
            speeds.len()
        )));
    }
    let mut best = (0, f64::INFINITY);
    for (i, v) in set.iter().enumerate() {
        let d = speeds.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if d < best.1 {
            best = (i, d);
        }
    }
    let nearest = set[best.0].clone();
    Ok(CombMatch {
        case,
        observed: speeds.to_vec(),
        matched: (best.1 <= tol).then(|| nearest.clone()),
        nearest,
        nearest_index: best.0,
        deviation: best.1,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(a: f64, b: f64, c: f64) -> RateTriple {
        RateTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn examples() {
        let m =
            classify_comb(&[2.01, 0.98, 1.99, 1.02, 2.0], &beta(2.0, 3.0, 1.0), CombCase::E1, 0.05).unwrap();
        assert_eq!(m.matched, Some(vec![2.0, 1.0, 2.0, 1.0, 2.0]));
        assert!((m.deviation - 0.02).abs() < 1e-12);

        let m = classify_comb(&[2.0, 3.0], &beta(3.0, 2.0, 1.0), CombCase::E2, 0.05).unwrap();
        assert_eq!(m.matched, Some(vec![2.0, 3.0]));

        let m = classify_comb(&[2.4, 2.4, 1.0, 2.4, 2.4], &beta(2.0, 3.0, 1.0), CombCase::E1, 0.0).unwrap();
        assert_eq!(m.deviation, 0.0);
        assert!(m.is_match());
    }

    #[test]
    fn no_match_outside_tolerance() {
        let m = classify_comb(&[2.2, 1.0, 2.0, 1.0, 2.0], &beta(2.0, 3.0, 1.0), CombCase::E1, 0.05).unwrap();
        assert!(!m.is_match());
        assert_eq!(m.nearest, vec![2.0, 1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn ties_go_to_first_element() {
        // Equidistant from (3, 2) and (2, 3).
        let m = classify_comb(&[2.5, 2.5], &beta(3.0, 2.0, 1.0), CombCase::E2, 1.0).unwrap();
        assert_eq!(m.nearest_index, 0);
        assert_eq!(m.nearest, vec![3.0, 2.0]);
    }

    #[test]
    fn wrong_case_rejected() {
        assert!(classify_comb(&[1.0, 1.0], &beta(2.0, 3.0, 1.0), CombCase::E2, 0.05).is_err());
        assert!(classify_comb(&[], &beta(2.0, 3.0, 1.0), CombCase::E1, 0.05).is_err());
        assert!((default_comb_tolerance(&beta(2.0, 3.0, 1.0)) - 0.15).abs() < 1e-15);
    }
}
