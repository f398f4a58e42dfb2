use crate::error::{Error, Result};

/// Growth rate of two sites under the zero condition, `2 b0 b1 / (b0 + b1)`.
/// Requires `beta1 > beta0` (the shape is ergodic only then).
pub fn v2(beta0: f64, beta1: f64) -> Result<f64> {
    check_positive(&[beta0, beta1])?;
    if beta1 <= beta0 {
        return Err(Error::NotErgodic(format!(
            "two-site shape needs beta1 > beta0, got beta0={beta0}, beta1={beta1}"
        )));
    }
    Ok(harmonic_speed(beta0, beta1))
}

/// Growth rate of two sites between infinite walls, `2 b1 b2 / (b1 + b2)`.
/// Requires `beta2 > beta1`.
pub fn v2_inf(beta1: f64, beta2: f64) -> Result<f64> {
    check_positive(&[beta1, beta2])?;
    if beta2 <= beta1 {
        return Err(Error::NotErgodic(format!(
            "two-site shape with infinite walls needs beta2 > beta1, got beta1={beta1}, beta2={beta2}"
        )));
    }
    Ok(harmonic_speed(beta1, beta2))
}

/// `2ab / (a + b)`, without the ergodicity precondition. At `a == b` it is the
/// common rate, which is the speed of the null-recurrent two-site block.
pub(crate) fn harmonic_speed(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Stationary law of the two-site shape `x(1) - x(2) = i`:
/// `(b1 - b0)/(b1 + b0) * (b0/b1)^|i|`.
pub fn mu_n2(beta0: f64, beta1: f64, i: i64) -> Result<f64> {
    check_positive(&[beta0, beta1])?;
    if beta1 <= beta0 {
        return Err(Error::NotErgodic(format!(
            "two-site shape needs beta1 > beta0, got beta0={beta0}, beta1={beta1}"
        )));
    }
    let ratio = beta0 / beta1;
    Ok((beta1 - beta0) / (beta1 + beta0) * ratio.powi(i.unsigned_abs().min(i32::MAX as u64) as i32))
}

/// Smallest `beta1` for which three sites are guaranteed a growth rate of at
/// least `3 beta0 - eps`: `27 b0^2 b2 / (eps (b2 - b0))`.
pub fn vitesse_threshold(beta0: f64, beta2: f64, eps: f64) -> Result<f64> {
    check_positive(&[beta0, beta2])?;
    if beta2 <= beta0 {
        return Err(Error::Precondition(format!(
            "threshold needs beta2 > beta0, got beta0={beta0}, beta2={beta2}"
        )));
    }
    if !(eps > 0.0 && eps < 3.0 * beta0) {
        return Err(Error::Precondition(format!(
            "eps must lie in (0, 3*beta0) = (0, {}), got {eps}",
            3.0 * beta0
        )));
    }
    Ok(27.0 * beta0 * beta0 * beta2 / (eps * (beta2 - beta0)))
}

/// The constant `B` above which the shape is transient for `n >= 5`:
/// `max(b0 b2 / (2 b0 - b2), 27 b0^2 b2 / ((3 b0 - b2)(b2 - b0)))`.
/// Defined for `beta0 < beta2 < 2 beta0`.
pub fn transience_bound(beta0: f64, beta2: f64) -> Result<f64> {
    check_positive(&[beta0, beta2])?;
    if !(beta2 > beta0 && beta2 < 2.0 * beta0) {
        return Err(Error::Precondition(format!(
            "transience bound needs beta0 < beta2 < 2*beta0, got beta0={beta0}, beta2={beta2}"
        )));
    }
    let two_site = beta0 * beta2 / (2.0 * beta0 - beta2);
    let three_site = 27.0 * beta0 * beta0 * beta2 / ((3.0 * beta0 - beta2) * (beta2 - beta0));
    Ok(two_site.max(three_site))
}

fn check_positive(xs: &[f64]) -> Result<()> {
    for &x in xs {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidRate { name: "beta", value: x });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v2_values() {
        assert!((v2(1.0, 3.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(v2(2.0, 2.0), Err(Error::NotErgodic(_))));
        assert!(v2(3.0, 1.0).is_err());
        // Limit as beta1 decreases to beta0.
        assert!((v2(1.0, 1.0 + 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!((v2_inf(2.0, 3.0).unwrap() - 2.4).abs() < 1e-15);
        assert!(v2_inf(3.0, 2.0).is_err());
    }

    #[test]
    fn mu_is_a_probability_law() {
        assert!((mu_n2(1.0, 3.0, 0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(mu_n2(1.0, 3.0, 2).unwrap(), mu_n2(1.0, 3.0, -2).unwrap());
        // Geometric series: the tail beyond |i| = 200 is below 1e-90.
        let total: f64 = (-200..=200).map(|i| mu_n2(1.0, 3.0, i).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(mu_n2(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn vitesse_values() {
        assert_eq!(vitesse_threshold(1.0, 2.0, 1.0).unwrap(), 54.0);
        assert!(vitesse_threshold(1.0, 1.0, 1.0).is_err());
        assert!(vitesse_threshold(1.0, 2.0, 3.0).is_err());
        assert!(vitesse_threshold(1.0, 2.0, 0.0).is_err());
        let mut last = 0.0;
        for k in 1..12 {
            let t = vitesse_threshold(1.0, 1.0 + 10f64.powi(-k), 1.0).unwrap();
            assert!(t > last);
            last = t;
        }
        assert!(last > 1e12);
    }

    #[test]
    fn transience_bound_values() {
        assert_eq!(transience_bound(1.0, 1.5).unwrap(), 54.0);
        assert!(transience_bound(1.0, 2.0).is_err());
        assert!(transience_bound(1.0, 1.0).is_err());
        assert!(transience_bound(1.0, 2.0 - 1e-9).unwrap() > 1e8);
        assert!(transience_bound(1.0, 1.0 + 1e-9).unwrap() > 1e8);
    }
}
