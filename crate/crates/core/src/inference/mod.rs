//! Confidence intervals for bound parameters.
//!
//! * [`one_sided_ci`] is `[0, θ̂_U + z_{1−α}·SE_U]`. It covers both the
//!   parameter and the whole identified set `[0, θ_U]`.
//! * [`spec_test_ci`] is the same interval, declared empty when its upper
//!   end is negative. Emptiness rejects `H₀: θ_U ≥ 0` and with it the
//!   maintained assumptions.
//! * [`shares_ci`] is the Imbens–Manski/Stoye interval for an interval
//!   whose two endpoints are both estimated.

mod normal;

pub use normal::{norm_cdf, norm_pdf, norm_quantile};

use crate::error::{Error, Result};
use crate::estimate::BoundEstimate;
use crate::model::Interval;

/// Upper end of the Stoye bisection bracket.
pub const STOYE_BRACKET: f64 = 6.0;

const STOYE_TOLERANCE: f64 = 1e-14;

fn check_one_sided_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 0.5 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("alpha must lie in (0, 0.5], got {alpha}")))
    }
}

fn check_two_sided_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("alpha must lie in (0, 0.5), got {alpha}")))
    }
}

/// Upper end of the one-sided interval, before any emptiness check.
pub fn one_sided_upper(upper_hat: f64, se_upper: f64, alpha: f64) -> Result<f64> {
    check_one_sided_alpha(alpha)?;
    Ok(upper_hat + norm_quantile(1.0 - alpha)? * se_upper)
}

/// `[0, θ̂_U + z_{1−α}·SE_U]`.
pub fn one_sided_ci(est: &BoundEstimate, alpha: f64) -> Result<Interval> {
    let upper = one_sided_upper(est.upper_hat, est.se_upper, alpha)?;
    Ok(Interval::confidence(0.0, upper, alpha))
}

/// One-sided interval that is empty when `θ̂_U + z_{1−α}·SE_U < 0`.
pub fn spec_test_ci(est: &BoundEstimate, alpha: f64) -> Result<Interval> {
    let upper = one_sided_upper(est.upper_hat, est.se_upper, alpha)?;
    if upper < 0.0 {
        Ok(Interval::empty_confidence(alpha))
    } else {
        Ok(Interval::confidence(0.0, upper, alpha))
    }
}

/// Left side minus right side of `Φ(c + Δ/σ) − Φ(−c) = 1 − α`.
pub fn stoye_residual(c: f64, delta_hat: f64, se_l: f64, se_u: f64, alpha: f64) -> f64 {
    let sigma = se_l.max(se_u);
    norm_cdf(c + delta_hat / sigma) - norm_cdf(-c) - (1.0 - alpha)
}

/// Critical value `c ≥ 0` solving `Φ(c + Δ̂/max(SE_L, SE_U)) − Φ(−c) = 1 − α`.
///
/// It lies between `z_{1−α}` (wide sets) and `z_{1−α/2}` (point
/// identification).
pub fn stoye_critical(delta_hat: f64, se_l: f64, se_u: f64, alpha: f64) -> Result<f64> {
    check_two_sided_alpha(alpha)?;
    if !(delta_hat >= 0.0 && se_l >= 0.0 && se_u >= 0.0) {
        return Err(Error::DomainError(format!(
            "length and standard errors must be non-negative, got ({delta_hat}, {se_l}, {se_u})"
        )));
    }
    if se_l.max(se_u) == 0.0 {
        return if delta_hat == 0.0 {
            norm_quantile(1.0 - alpha / 2.0)
        } else {
            norm_quantile(1.0 - alpha)
        };
    }
    let f = |c: f64| stoye_residual(c, delta_hat, se_l, se_u, alpha);
    let (mut lo, mut hi) = (0.0, STOYE_BRACKET);
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::NoRoot(format!(
            "critical value not bracketed by [0, {STOYE_BRACKET}] for delta {delta_hat}, se ({se_l}, {se_u}), alpha {alpha}"
        )));
    }
    while hi - lo > STOYE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stoye interval `[L̂ − c·SE_L, Û + c·SE_U]` without clamping.
pub fn interval_ci(lower: f64, upper: f64, se_l: f64, se_u: f64, alpha: f64) -> Result<Interval> {
    let c = stoye_critical((upper - lower).max(0.0), se_l, se_u, alpha)?;
    Ok(Interval::confidence(lower - c * se_l, upper + c * se_u, alpha))
}

/// Stoye interval for a type share, clamped to `[0, 1]`.
pub fn shares_ci(est: &BoundEstimate, alpha: f64) -> Result<Interval> {
    let iv = interval_ci(est.lower_hat, est.upper_hat, est.se_lower, est.se_upper, alpha)?;
    Ok(Interval::confidence(iv.lower.max(0.0), iv.upper.min(1.0), alpha))
}

/// Symmetric `θ̂ ± z_{1−α/2}·SE` for a point-identified parameter, built from
/// the upper endpoint.
pub fn two_sided_ci(est: &BoundEstimate, alpha: f64) -> Result<Interval> {
    check_two_sided_alpha(alpha)?;
    let z = norm_quantile(1.0 - alpha / 2.0)?;
    Ok(Interval::confidence(
        est.upper_hat - z * est.se_upper,
        est.upper_hat + z * est.se_upper,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AssumptionSet, EstimandKind};
    use proptest::prelude::*;

    fn est(upper_hat: f64, se_upper: f64) -> BoundEstimate {
        BoundEstimate {
            estimand: EstimandKind::Apr,
            assumptions: AssumptionSet::MTR_MTS,
            lower_hat: 0.0,
            upper_hat,
            se_lower: 0.0,
            se_upper,
            n: 1000.0,
            g: 1000,
        }
    }

    fn share(lower: f64, upper: f64, se_l: f64, se_u: f64) -> BoundEstimate {
        BoundEstimate {
            estimand: EstimandKind::ShareAp,
            lower_hat: lower,
            se_lower: se_l,
            ..est(upper, se_u)
        }
    }

    #[test]
    fn one_sided_published_rows() {
        let apr = one_sided_ci(&est(3.37, 2.76), 0.05).unwrap();
        assert_eq!(apr.lower, 0.0);
        assert!((apr.upper - 7.91).abs() < 0.005, "{}", apr.upper);
        let ate = one_sided_ci(&est(0.68, 0.56), 0.05).unwrap();
        assert!((ate.upper - 1.60).abs() < 0.005, "{}", ate.upper);
    }

    #[test]
    fn one_sided_zero_se() {
        let iv = one_sided_ci(&est(0.25, 0.0), 0.05).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.25));
    }

    #[test]
    fn alpha_out_of_range() {
        assert!(one_sided_ci(&est(0.1, 0.1), 0.0).is_err());
        assert!(one_sided_ci(&est(0.1, 0.1), 0.6).is_err());
        assert!(one_sided_ci(&est(0.1, 0.1), 0.5).is_ok());
        assert!(stoye_critical(0.1, 0.1, 0.1, 0.5).is_err());
        assert!(stoye_critical(-0.1, 0.1, 0.1, 0.05).is_err());
    }

    #[test]
    fn spec_test_rejects_and_accepts() {
        assert!(spec_test_ci(&est(-0.05, 0.02), 0.05).unwrap().is_empty());
        let iv = spec_test_ci(&est(-0.01, 0.02), 0.05).unwrap();
        assert!(!iv.is_empty());
        assert!((iv.upper - 0.0229).abs() < 5e-5, "{}", iv.upper);
        let all = spec_test_ci(&est(0.0337, 0.0276), 0.05).unwrap();
        assert!((all.upper - 0.0791).abs() < 5e-5);
    }

    #[test]
    fn stoye_limits() {
        let point = stoye_critical(0.0, 0.02, 0.02, 0.05).unwrap();
        assert!((point - 1.959963984540054).abs() < 1e-10);
        let wide = stoye_critical(1e3, 1e-3, 1e-3, 0.05).unwrap();
        assert!((wide - 1.6448536269514722).abs() < 1e-10);
        let no_noise = stoye_critical(0.0, 0.0, 0.0, 0.05).unwrap();
        assert!((no_noise - 1.959963984540054).abs() < 1e-10);
    }

    #[test]
    fn stoye_unit_ratio() {
        let c = stoye_critical(1.0, 1.0, 1.0, 0.05).unwrap();
        assert!((c - 1.68147744232815).abs() < 1e-9, "{c}");
        assert!(stoye_residual(c, 1.0, 1.0, 1.0, 0.05).abs() <= 1e-12);
    }

    #[test]
    fn shares_synthetic() {
        let iv = shares_ci(&share(0.40, 0.50, 0.02, 0.03), 0.05).unwrap();
        assert!((iv.lower - 0.367102865).abs() < 1e-8, "{}", iv.lower);
        assert!((iv.upper - 0.549345702).abs() < 1e-8, "{}", iv.upper);
    }

    #[test]
    fn shares_degenerate_is_symmetric() {
        let iv = shares_ci(&share(0.5, 0.5, 0.01, 0.01), 0.05).unwrap();
        assert!((iv.upper - 0.5 - 0.0196).abs() < 1e-5);
        assert!((0.5 - iv.lower - 0.0196).abs() < 1e-5);
    }

    #[test]
    fn shares_clamped_to_unit_interval() {
        let iv = shares_ci(&share(0.01, 0.99, 0.05, 0.05), 0.05).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 1.0));
        let raw = interval_ci(0.01, 0.99, 0.05, 0.05, 0.05).unwrap();
        assert!(raw.lower < 0.0 && raw.upper > 1.0);
    }

    #[test]
    fn two_sided_symmetric() {
        let iv = two_sided_ci(&est(0.2, 0.01), 0.05).unwrap();
        assert!((iv.upper - 0.2 - 0.0196).abs() < 1e-5);
        assert!((0.2 - iv.lower - 0.0196).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn stoye_bracketed_and_solves(delta in 0.0f64..2.0, se_l in 1e-4f64..0.5, se_u in 1e-4f64..0.5, alpha in 0.01f64..0.2) {
            let c = stoye_critical(delta, se_l, se_u, alpha).unwrap();
            let z1 = norm_quantile(1.0 - alpha).unwrap();
            let z2 = norm_quantile(1.0 - alpha / 2.0).unwrap();
            prop_assert!(c >= z1 - 1e-9 && c <= z2 + 1e-9);
            prop_assert!(stoye_residual(c, delta, se_l, se_u, alpha).abs() <= 1e-8);
        }

        #[test]
        fn stoye_decreasing_in_length(d1 in 0.0f64..1.0, extra in 1e-3f64..1.0, se in 1e-3f64..0.5) {
            let a = stoye_critical(d1, se, se, 0.05).unwrap();
            let b = stoye_critical(d1 + extra, se, se, 0.05).unwrap();
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn one_sided_monotone(u in -1.0f64..1.0, se in 0.0f64..1.0, du in 0.0f64..1.0, dse in 0.0f64..1.0) {
            let base = one_sided_ci(&est(u, se), 0.05).unwrap().upper;
            prop_assert!(one_sided_ci(&est(u + du, se), 0.05).unwrap().upper >= base);
            prop_assert!(one_sided_ci(&est(u, se + dse), 0.05).unwrap().upper >= base);
            prop_assert!(one_sided_ci(&est(u, se), 0.01).unwrap().upper >= base);
        }
    }
}
