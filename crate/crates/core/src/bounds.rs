//! Closed-form sharp identification bounds.
//!
//! Every bound is a function of the observed cells only. Under MTR+MTS the
//! upper bounds are the exogenous-treatment point identifiers
//! `θ_U = (p₁ − p₀)/(1 − p₀)` and `θ_U^(r) = (p₁ − p₀)/p₁`, with
//! `p_d = Pr(Y=1 | D=d)`; under MTS alone they take the Tian–Pearl
//! exogeneity shapes. Without MTS, MTR alone still caps the persuasion rates
//! below one because it pins the type of two observed cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, AssumptionSet, EstimandKind, Interval, JointDistribution};

/// Ratio denominators below this are rejected.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

fn guarded(value: f64, what: &'static str) -> Result<f64> {
    if value < DENOMINATOR_GUARD {
        Err(Error::DegenerateDenominator(what))
    } else {
        Ok(value)
    }
}

/// `θ_U = (p₁ − p₀)/(1 − p₀)`. Negative values are returned as-is.
pub fn theta_upper(dist: &JointDistribution) -> Result<f64> {
    let d = dist.derive();
    let denom = guarded(1.0 - d.pc0, "1 - Pr(Y=1|D=0)")?;
    Ok((d.pc1 - d.pc0) / denom)
}

/// `θ_U^(r) = (p₁ − p₀)/p₁`. Negative values are returned as-is.
pub fn theta_r_upper(dist: &JointDistribution) -> Result<f64> {
    let d = dist.derive();
    let denom = guarded(d.pc1, "Pr(Y=1|D=1)")?;
    Ok((d.pc1 - d.pc0) / denom)
}

/// `p₁ − p₀`, the sharp upper bound on the ATE (and on PNS) under MTR+MTS.
pub fn ate_upper(dist: &JointDistribution) -> f64 {
    let d = dist.derive();
    d.pc1 - d.pc0
}

/// Bounds on the NP, AP and TP shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareBounds {
    pub np: Interval,
    pub ap: Interval,
    pub tp: Interval,
}

impl ShareBounds {
    pub fn get(&self, estimand: EstimandKind) -> Option<Interval> {
        match estimand {
            EstimandKind::ShareNp => Some(self.np),
            EstimandKind::ShareAp => Some(self.ap),
            EstimandKind::ShareTp => Some(self.tp),
            _ => None,
        }
    }
}

/// Share bounds under MTR+MTS:
/// `NP ∈ [Pr(Y=0|D=1), Pr(Y=0)]`, `AP ∈ [Pr(Y=1|D=0), Pr(Y=1)]`,
/// `TP ∈ [0, p₁ − p₀]`.
///
/// No sign check is made on `p₁ − p₀`; [`sharp_bounds`] does that.
pub fn shares_bounds(dist: &JointDistribution) -> ShareBounds {
    let d = dist.derive();
    ShareBounds {
        np: Interval::identified(1.0 - d.pc1, dist.p00() + dist.p01()),
        ap: Interval::identified(d.pc0, d.py1),
        tp: Interval::identified(0.0, d.pc1 - d.pc0),
    }
}

/// Upper bounds under MTS alone (no MTR).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtsOnlyUppers {
    pub apr: f64,
    pub r_apr: f64,
    pub ps: f64,
    pub pn: f64,
    pub pns: f64,
}

pub fn mts_only_uppers(dist: &JointDistribution) -> Result<MtsOnlyUppers> {
    let d = dist.derive();
    let concordant = guarded(dist.p11() + dist.p00(), "Pr(Y=1,D=1) + Pr(Y=0,D=0)")?;
    let fail0 = guarded(1.0 - d.pc0, "Pr(Y=0|D=0)")?;
    let succ1 = guarded(d.pc1, "Pr(Y=1|D=1)")?;
    Ok(MtsOnlyUppers {
        apr: (d.pc1 / concordant).min(1.0),
        r_apr: ((1.0 - d.pc0) / concordant).min(1.0),
        ps: (d.pc1 / fail0).min(1.0),
        pn: ((1.0 - d.pc0) / succ1).min(1.0),
        pns: (1.0 - d.pc0).min(d.pc1),
    })
}

/// `Pr(Y=1,D=1) + Pr(Y=0,D=0)`, the PNS upper bound without MTS.
pub fn pns_upper_no_mts(dist: &JointDistribution) -> f64 {
    dist.p11() + dist.p00()
}

/// Sharp uppers on θ and θ^(r) under MTR alone.
///
/// MTR forces the `(Y=0, D=1)` cell to be never-persuadable and the
/// `(Y=1, D=0)` cell to be already-persuaded; every other unit may be TP.
/// Hence `θ ≤ (P00 + P11)/(1 − P10)` and `θ^(r) ≤ (P00 + P11)/(1 − P01)`.
pub fn mtr_only_uppers(dist: &JointDistribution) -> Result<(f64, f64)> {
    let top = dist.p00() + dist.p11();
    let apr = top / guarded(1.0 - dist.p10(), "1 - P10")?;
    let r_apr = top / guarded(1.0 - dist.p01(), "1 - P01")?;
    Ok((apr.min(1.0), r_apr.min(1.0)))
}

/// Lower bound on the ATE when MTR is not imposed: `−(P10 + P01)`.
pub fn ate_lower_no_mtr(dist: &JointDistribution) -> f64 {
    -(dist.p10() + dist.p01())
}

/// Sharp identified interval for `estimand` under `assumptions`.
///
/// Without any assumption APR, R-APR, PS and PN are uninformative; MTR alone
/// tightens only APR and R-APR (see [`mtr_only_uppers`]). Without MTR
/// the ATE is no longer a share and its lower bound is `−(P10 + P01)`.
/// Share bounds are only available here under MTR+MTS; the
/// [`oracle`](crate::oracle) computes them for the other rows.
pub fn sharp_bounds(
    estimand: EstimandKind,
    assumptions: AssumptionSet,
    dist: &JointDistribution,
) -> Result<Interval> {
    let dist = validate(*dist, true)?;
    use EstimandKind::*;

    if estimand.is_share() && assumptions != AssumptionSet::MTR_MTS {
        return Err(Error::SharesNotCovered(assumptions.to_string()));
    }

    match (assumptions.mtr, assumptions.mts) {
        (true, true) => {
            let d = dist.derive();
            if d.pc1 < d.pc0 {
                return Err(Error::InconsistentWithAssumptions {
                    assumptions: assumptions.to_string(),
                    reason: format!(
                        "Pr(Y=1|D=1) = {} < Pr(Y=1|D=0) = {}",
                        d.pc1, d.pc0
                    ),
                });
            }
            Ok(match estimand {
                Apr | Ps => Interval::identified(0.0, theta_upper(&dist)?),
                RApr | Pn => Interval::identified(0.0, theta_r_upper(&dist)?),
                Pns | Ate | ShareTp => Interval::identified(0.0, ate_upper(&dist)),
                ShareNp => shares_bounds(&dist).np,
                ShareAp => shares_bounds(&dist).ap,
            })
        }
        (false, true) => {
            let up = mts_only_uppers(&dist)?;
            Ok(match estimand {
                Apr => Interval::identified(0.0, up.apr),
                RApr => Interval::identified(0.0, up.r_apr),
                Ps => Interval::identified(0.0, up.ps),
                Pn => Interval::identified(0.0, up.pn),
                Pns => Interval::identified(0.0, up.pns),
                Ate => Interval::identified(ate_lower_no_mtr(&dist), ate_upper(&dist)),
                ShareNp | ShareAp | ShareTp => unreachable!(),
            })
        }
        (true, false) if matches!(estimand, Apr | RApr) => {
            let (apr, r_apr) = mtr_only_uppers(&dist)?;
            Ok(Interval::identified(0.0, if estimand == Apr { apr } else { r_apr }))
        }
        (mtr, false) => Ok(match estimand {
            Apr | RApr | Ps | Pn => Interval::identified(0.0, 1.0),
            Pns => Interval::identified(0.0, pns_upper_no_mts(&dist)),
            Ate if mtr => Interval::identified(0.0, pns_upper_no_mts(&dist)),
            Ate => Interval::identified(ate_lower_no_mtr(&dist), pns_upper_no_mts(&dist)),
            ShareNp | ShareAp | ShareTp => unreachable!(),
        }),
    }
}

/// Under MTS alone, θ and θ^(r) cannot both have non-trivial upper bounds.
/// Returns `true` when that holds, which it always should.
pub fn mts_complementarity(dist: &JointDistribution) -> bool {
    match mts_only_uppers(dist) {
        Ok(up) => !(up.apr < 1.0 && up.r_apr < 1.0),
        Err(_) => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: (f64, f64, f64, f64) = (0.30, 0.10, 0.20, 0.40);

    fn ex() -> JointDistribution {
        JointDistribution::interior(EX.0, EX.1, EX.2, EX.3).unwrap()
    }

    fn uniform() -> JointDistribution {
        JointDistribution::interior(0.25, 0.25, 0.25, 0.25).unwrap()
    }

    fn all_sample() -> JointDistribution {
        JointDistribution::from_conditionals(0.7988, 0.8056, 1.0 - 0.45588235294117335).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn theta_upper_examples() {
        close(theta_upper(&all_sample()).unwrap(), 0.0337, 0.0005);
        assert_eq!(theta_upper(&uniform()).unwrap(), 0.0);
        close(theta_upper(&ex()).unwrap(), 5.0 / 9.0, 1e-12);
    }

    #[test]
    fn theta_r_upper_examples() {
        close(theta_r_upper(&all_sample()).unwrap(), 0.0084, 0.0005);
        assert_eq!(theta_r_upper(&uniform()).unwrap(), 0.0);
        close(theta_r_upper(&ex()).unwrap(), 0.625, 1e-12);
    }

    #[test]
    fn ate_upper_examples() {
        close(ate_upper(&all_sample()), 0.0068, 0.0005);
        assert_eq!(ate_upper(&uniform()), 0.0);
        close(ate_upper(&ex()), 5.0 / 12.0, 1e-12);
    }

    #[test]
    fn theta_upper_may_be_negative() {
        let dist = JointDistribution::interior(0.1, 0.4, 0.3, 0.2).unwrap();
        assert!(theta_upper(&dist).unwrap() < 0.0);
        assert!(matches!(
            sharp_bounds(EstimandKind::Apr, AssumptionSet::MTR_MTS, &dist),
            Err(Error::InconsistentWithAssumptions { .. })
        ));
    }

    #[test]
    fn degenerate_denominator() {
        // pc0 = 1 - 1e-13 is not reachable with interior cells at 1e-9, so
        // exercise the guard directly on an unvalidated distribution.
        let dist = JointDistribution::new(1e-14, 0.5 - 1e-14, 0.25, 0.25).unwrap();
        assert!(matches!(theta_upper(&dist), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn share_examples() {
        let s = shares_bounds(&ex());
        close(s.np.lower, 1.0 / 3.0, 1e-12);
        close(s.np.upper, 0.5, 1e-12);
        close(s.ap.lower, 0.25, 1e-12);
        close(s.ap.upper, 0.5, 1e-12);
        close(s.tp.upper, 5.0 / 12.0, 1e-12);
        close(s.np.lower + s.ap.lower + s.tp.upper, 1.0, 1e-12);

        let s = shares_bounds(&uniform());
        assert_eq!((s.np.lower, s.np.upper), (0.5, 0.5));
        assert_eq!((s.ap.lower, s.ap.upper), (0.5, 0.5));
        assert_eq!((s.tp.lower, s.tp.upper), (0.0, 0.0));

        let s = shares_bounds(&all_sample());
        close(s.np.lower, 0.1944, 1e-12);
        close(s.np.upper, 0.1975, 1e-12);
        close(s.ap.lower, 0.7988, 1e-12);
        close(s.ap.upper, 0.8025, 1e-12);
    }

    #[test]
    fn table_rows_on_example() {
        use EstimandKind::*;
        let d = ex();
        let up = |e, a| sharp_bounds(e, a, &d).unwrap().upper;
        for e in EstimandKind::CAUSAL {
            assert_eq!(sharp_bounds(e, AssumptionSet::NONE, &d).unwrap().lower, 0.0);
        }
        assert_eq!(up(Apr, AssumptionSet::NONE), 1.0);
        close(up(Pns, AssumptionSet::NONE), 0.70, 1e-12);
        close(up(Apr, AssumptionSet::MTS), 0.9523809523809523, 1e-12);
        assert_eq!(up(RApr, AssumptionSet::MTS), 1.0);
        close(up(Pns, AssumptionSet::MTS), 2.0 / 3.0, 1e-12);
        close(up(Ps, AssumptionSet::MTS), 8.0 / 9.0, 1e-12);
        assert_eq!(up(Pn, AssumptionSet::MTS), 1.0);
        close(up(Apr, AssumptionSet::MTR_MTS), 5.0 / 9.0, 1e-12);
        // MTR alone: 0.7/0.9 and 0.7/0.8, confirmed by grid search.
        close(up(Apr, AssumptionSet::MTR), 7.0 / 9.0, 1e-12);
        close(up(RApr, AssumptionSet::MTR), 0.875, 1e-12);
        assert_eq!(up(Ps, AssumptionSet::MTR), 1.0);
    }

    #[test]
    fn ate_without_mtr_has_negative_lower() {
        let iv = sharp_bounds(EstimandKind::Ate, AssumptionSet::NONE, &ex()).unwrap();
        close(iv.lower, -0.30, 1e-12);
        close(iv.upper, 0.70, 1e-12);
        let iv = sharp_bounds(EstimandKind::Ate, AssumptionSet::MTS, &ex()).unwrap();
        close(iv.lower, -0.30, 1e-12);
        close(iv.upper, 5.0 / 12.0, 1e-12);
        let iv = sharp_bounds(EstimandKind::Ate, AssumptionSet::MTR, &ex()).unwrap();
        assert_eq!(iv.lower, 0.0);
    }

    #[test]
    fn shares_outside_main_row_rejected() {
        for a in [AssumptionSet::NONE, AssumptionSet::MTR, AssumptionSet::MTS] {
            assert!(matches!(
                sharp_bounds(EstimandKind::ShareAp, a, &ex()),
                Err(Error::SharesNotCovered(_))
            ));
        }
    }

    #[test]
    fn complementarity_examples() {
        assert!(mts_complementarity(&ex()));
        assert!(mts_complementarity(&uniform()));
        let d = JointDistribution::interior(0.0917, 0.3642, 0.1058, 0.4383).unwrap();
        assert!(mts_complementarity(&d));
    }

    #[test]
    fn boundary_input_rejected() {
        let d = JointDistribution::new(0.5, 0.5, 0.0, 0.0).unwrap();
        assert!(matches!(
            sharp_bounds(EstimandKind::Apr, AssumptionSet::NONE, &d),
            Err(Error::BoundaryCell { .. })
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        /// Interior distributions with `pc1 >= pc0`.
        fn ordered() -> impl Strategy<Value = JointDistribution> {
            (0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0).prop_filter_map(
                "pc1 >= pc0",
                |(a, b, c, d)| {
                    let dist = JointDistribution::from_counts(a, b, c, d).ok()?;
                    let dp = dist.derive();
                    (dp.pc1 >= dp.pc0).then_some(dist)
                },
            )
        }

        proptest! {
            #[test]
            fn rows_are_nested(dist in ordered()) {
                for e in EstimandKind::CAUSAL {
                    let both = sharp_bounds(e, AssumptionSet::MTR_MTS, &dist).unwrap();
                    let mts = sharp_bounds(e, AssumptionSet::MTS, &dist).unwrap();
                    let none = sharp_bounds(e, AssumptionSet::NONE, &dist).unwrap();
                    let mtr = sharp_bounds(e, AssumptionSet::MTR, &dist).unwrap();
                    prop_assert!(both.upper <= mts.upper + 1e-15);
                    prop_assert!(mts.upper <= none.upper + 1e-15);
                    prop_assert!(both.upper <= mtr.upper + 1e-15);
                    prop_assert!(mtr.upper <= none.upper);
                    if !matches!(e, EstimandKind::Apr | EstimandKind::RApr) {
                        prop_assert_eq!(mtr, none);
                    }
                    for iv in [both, mts, none, mtr] {
                        prop_assert_eq!(iv.lower, 0.0);
                        prop_assert!((0.0..=1.0).contains(&iv.upper));
                    }
                }
            }

            #[test]
            fn probabilities_of_causation_share_persuasion_bounds(dist in ordered()) {
                let a = AssumptionSet::MTR_MTS;
                prop_assert_eq!(
                    sharp_bounds(EstimandKind::Ps, a, &dist).unwrap().upper.to_bits(),
                    theta_upper(&dist).unwrap().to_bits()
                );
                prop_assert_eq!(
                    sharp_bounds(EstimandKind::Pn, a, &dist).unwrap().upper.to_bits(),
                    theta_r_upper(&dist).unwrap().to_bits()
                );
            }

            #[test]
            fn mts_ps_pn_match_exogeneity_shapes(dist in ordered()) {
                let d = dist.derive();
                let ps = sharp_bounds(EstimandKind::Ps, AssumptionSet::MTS, &dist).unwrap().upper;
                let pn = sharp_bounds(EstimandKind::Pn, AssumptionSet::MTS, &dist).unwrap().upper;
                prop_assert!((ps - (d.pc1 / (1.0 - d.pc0)).min(1.0)).abs() <= 1e-15);
                prop_assert!((pn - ((1.0 - d.pc0) / d.pc1).min(1.0)).abs() <= 1e-15);
            }

            #[test]
            fn complementarity_always_holds(
                a in 0.001f64..1.0, b in 0.001f64..1.0, c in 0.001f64..1.0, d in 0.001f64..1.0
            ) {
                let dist = JointDistribution::from_counts(a, b, c, d).unwrap();
                prop_assert!(mts_complementarity(&dist));
            }
        }
    }
}
