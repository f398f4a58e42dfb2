use serde::{Deserialize, Serialize};

use super::closed_form::transience_bound;
use super::comb_set::CombCase;
use crate::model::RateTriple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ErgodicProved,
    TransientProved,
    CombTransient,
    Undecided,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::ErgodicProved => "ergodic-proved",
            Verdict::TransientProved => "transient-proved",
            Verdict::CombTransient => "comb-transient",
            Verdict::Undecided => "undecided",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Every known sufficient condition for ergodicity or transience of the
/// shape of `n` sites under the zero condition, evaluated at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub n: usize,
    pub beta: RateTriple,
    /// `beta0 < beta2 < beta1`.
    pub in_domain_d: bool,
    /// `beta1, beta2 > (n-1)^2 beta0`.
    pub cond_prior: bool,
    /// `n >= 2` and `beta0 < beta1 <= beta2`.
    pub cond_monotone: bool,
    /// `n == 2` and `beta1 > beta0`.
    pub two_site_ergodic: bool,
    /// `n == 3` and `beta1, beta2 > beta0`.
    pub three_site_ergodic: bool,
    /// Smallest parameter `m >= 2` with `n <= m + 2`, used by (a) and (b).
    pub m: usize,
    pub threshold_a: f64,
    pub threshold_b: f64,
    pub threshold_c: f64,
    /// In D and `beta2 > m beta0`.
    pub cond_a: bool,
    /// In D and `beta2 > ((m-1) beta1 + beta0) / m`.
    pub cond_b: bool,
    /// In D and `beta2 > 4 sqrt(2 beta1 beta0)`; independent of `n`.
    pub cond_c: bool,
    /// Comb ordering, present iff `beta2 < beta0`.
    pub comb_case: Option<CombCase>,
    /// `B(beta0, beta2)`, present iff `beta0 < beta2 < 2 beta0`.
    pub transience_b: Option<f64>,
    /// `n >= 5`, `beta0 < beta2 < 2 beta0` and `beta1 > B`.
    pub transience: bool,
    pub label: Verdict,
}

impl RegionVerdict {
    pub fn ergodic_flags(&self) -> bool {
        self.cond_prior
            || self.cond_monotone
            || self.two_site_ergodic
            || self.three_site_ergodic
            || self.cond_a
            || self.cond_b
            || self.cond_c
    }

    /// A comb case that yields a non-constant speed profile. With two sites in
    /// case (i) the limit is `(v, v)`, which is not transient.
    pub fn comb_transient(&self) -> bool {
        match self.comb_case {
            Some(CombCase::E1) => self.n >= 3,
            Some(_) => self.n >= 2,
            None => false,
        }
    }

    pub fn transient_flags(&self) -> bool {
        self.transience || self.comb_transient() || self.two_site_transient()
    }

    /// `n == 2` and `beta1 < beta0`: the two-site shape is transient.
    pub fn two_site_transient(&self) -> bool {
        self.n == 2 && self.beta.beta1() < self.beta.beta0()
    }
}

/// Evaluates every predicate at `(n, beta)`.
pub fn region_verdict(n: usize, beta: &RateTriple) -> RegionVerdict {
    let (b0, b1, b2) = (beta.beta0(), beta.beta1(), beta.beta2());
    let in_d = beta.in_domain_d();
    let sq = (n.saturating_sub(1) as f64).powi(2);
    let m = n.saturating_sub(2).max(2);
    let mf = m as f64;
    let threshold_a = mf * b0;
    let threshold_b = ((mf - 1.0) * b1 + b0) / mf;
    let threshold_c = 4.0 * std::f64::consts::SQRT_2 * (b1 * b0).sqrt();
    let transience_b = transience_bound(b0, b2).ok();

    let mut v = RegionVerdict {
        n,
        beta: *beta,
        in_domain_d: in_d,
        cond_prior: n >= 2 && b1 > sq * b0 && b2 > sq * b0,
        cond_monotone: n >= 2 && b0 < b1 && b1 <= b2,
        two_site_ergodic: n == 2 && b1 > b0,
        three_site_ergodic: n == 3 && b1 > b0 && b2 > b0,
        m,
        threshold_a,
        threshold_b,
        threshold_c,
        cond_a: n >= 2 && in_d && b2 > threshold_a,
        cond_b: n >= 2 && in_d && b2 > threshold_b,
        cond_c: n >= 2 && in_d && b2 > threshold_c,
        comb_case: CombCase::for_rates(beta),
        transience_b,
        transience: n >= 5 && transience_b.is_some_and(|b| b1 > b),
        label: Verdict::Undecided,
    };
    v.label = if v.comb_transient() {
        Verdict::CombTransient
    } else if v.ergodic_flags() {
        Verdict::ErgodicProved
    } else if v.transience || v.two_site_transient() {
        Verdict::TransientProved
    } else {
        Verdict::Undecided
    };
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beta(a: f64, b: f64, c: f64) -> RateTriple {
        RateTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn examples() {
        let v = region_verdict(3, &beta(1.0, 2.0, 1.5));
        assert!(v.three_site_ergodic);
        assert_eq!(v.label, Verdict::ErgodicProved);

        let v = region_verdict(7, &beta(1.0, 10.0, 9.0));
        assert!((v.threshold_c - 4.0 * 20f64.sqrt()).abs() < 1e-12);
        assert!(!v.cond_c);
        assert_eq!(v.m, 5);
        assert!((v.threshold_b - 41.0 / 5.0).abs() < 1e-12);
        assert!(v.cond_b);
        assert!(v.cond_a);
        assert_eq!(v.label, Verdict::ErgodicProved);

        let v = region_verdict(5, &beta(1.0, 60.0, 1.5));
        assert_eq!(v.transience_b, Some(54.0));
        assert!(v.transience);
        assert_eq!(v.label, Verdict::TransientProved);
        assert!(!region_verdict(4, &beta(1.0, 60.0, 1.5)).transience);
        assert!(!region_verdict(5, &beta(1.0, 50.0, 1.5)).transience);
    }

    #[test]
    fn two_sites() {
        assert_eq!(region_verdict(2, &beta(1.0, 3.0, 0.5)).label, Verdict::ErgodicProved);
        assert_eq!(region_verdict(2, &beta(3.0, 1.0, 5.0)).label, Verdict::TransientProved);
        assert_eq!(region_verdict(2, &beta(3.0, 2.0, 1.0)).label, Verdict::CombTransient);
        // Case (i) with beta1 == beta0: null recurrent, no label applies.
        assert_eq!(region_verdict(2, &beta(2.0, 2.0, 1.0)).label, Verdict::Undecided);
    }

    #[test]
    fn comb_labels() {
        assert_eq!(region_verdict(5, &beta(2.0, 3.0, 1.0)).label, Verdict::CombTransient);
        assert_eq!(region_verdict(4, &beta(3.0, 2.0, 1.0)).comb_case, Some(CombCase::E2));
        assert_eq!(region_verdict(5, &beta(3.0, 1.0, 2.0)).comb_case, Some(CombCase::E3));
    }

    #[test]
    fn json_has_one_field_per_predicate() {
        let v = region_verdict(5, &beta(1.0, 60.0, 1.5));
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["label"], "transient-proved");
        assert_eq!(j["transience_b"], 54.0);
        assert_eq!(j["beta"], serde_json::json!([1.0, 60.0, 1.5]));
        for key in ["cond_prior", "cond_a", "cond_b", "cond_c", "transience"] {
            assert!(j[key].is_boolean(), "{key}");
        }
    }

    fn arb_beta() -> impl Strategy<Value = RateTriple> {
        (0.1f64..10.0, 0.1f64..100.0, 0.1f64..20.0).prop_map(|(a, b, c)| beta(a, b, c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(5000))]

        #[test]
        fn proved_labels_are_exclusive(n in 1usize..12, b in arb_beta()) {
            let v = region_verdict(n, &b);
            prop_assert!(!(v.ergodic_flags() && v.transient_flags()), "{v:?}");
            prop_assert_eq!(v.comb_case.is_some(), b.beta2() < b.beta0());
        }

        #[test]
        fn condition_c_does_not_depend_on_n(n in 2usize..12, m in 2usize..12, b in arb_beta()) {
            let v = region_verdict(n, &b);
            if v.cond_c {
                let w = region_verdict(m, &b);
                prop_assert!(w.cond_c);
                prop_assert_eq!(w.label, Verdict::ErgodicProved);
            }
        }
    }
}
