//! Shared domain types.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cells must sum to one within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Smallest cell probability accepted when interior cells are required.
pub const INTERIOR_THRESHOLD: f64 = 1e-9;

/// The four cell probabilities `p_yd = Pr(Y = y, D = d)` of a binary
/// outcome/treatment pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    p00: f64,
    p10: f64,
    p01: f64,
    p11: f64,
}

impl JointDistribution {
    /// Builds a distribution from cells ordered `(p00, p10, p01, p11)`.
    ///
    /// Only the probability axioms are checked here; use [`validate`] with
    /// `require_interior = true` before computing bounds.
    pub fn new(p00: f64, p10: f64, p01: f64, p11: f64) -> Result<Self> {
        let dist = JointDistribution { p00, p10, p01, p11 };
        validate(dist, false)
    }

    /// Builds an interior distribution, rejecting boundary cells.
    pub fn interior(p00: f64, p10: f64, p01: f64, p11: f64) -> Result<Self> {
        validate(JointDistribution { p00, p10, p01, p11 }, true)
    }

    /// Normalises nonnegative (possibly weighted) cell counts.
    pub fn from_counts(n00: f64, n10: f64, n01: f64, n11: f64) -> Result<Self> {
        let counts = [n00, n10, n01, n11];
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::NotADistribution(format!(
                "counts must be finite and nonnegative, got {counts:?}"
            )));
        }
        let total = n00 + n10 + n01 + n11;
        if total <= 0.0 {
            return Err(Error::NotADistribution("all counts are zero".into()));
        }
        JointDistribution::new(n00 / total, n10 / total, n01 / total, n11 / total)
    }

    /// Builds the cells from `Pr(Y=1|D=0)`, `Pr(Y=1|D=1)` and `Pr(D=1)`.
    pub fn from_conditionals(pc0: f64, pc1: f64, q1: f64) -> Result<Self> {
        for (name, v) in [("p0", pc0), ("p1", pc1), ("q1", q1)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::NotADistribution(format!(
                    "{name} = {v} is not a probability"
                )));
            }
        }
        let q0 = 1.0 - q1;
        JointDistribution::new(q0 * (1.0 - pc0), q0 * pc0, q1 * (1.0 - pc1), q1 * pc1)
    }

    pub fn p00(&self) -> f64 {
        self.p00
    }
    pub fn p10(&self) -> f64 {
        self.p10
    }
    pub fn p01(&self) -> f64 {
        self.p01
    }
    pub fn p11(&self) -> f64 {
        self.p11
    }

    /// `Pr(Y = y, D = d)`.
    pub fn cell(&self, y: u8, d: u8) -> f64 {
        match (y, d) {
            (0, 0) => self.p00,
            (1, 0) => self.p10,
            (0, 1) => self.p01,
            _ => self.p11,
        }
    }

    /// Cells in `(p00, p10, p01, p11)` order.
    pub fn cells(&self) -> [f64; 4] {
        [self.p00, self.p10, self.p01, self.p11]
    }

    pub fn derive(&self) -> DerivedProbs {
        derive(self)
    }
}

/// Checks the probability axioms and, optionally, that every cell is interior.
pub fn validate(dist: JointDistribution, require_interior: bool) -> Result<JointDistribution> {
    let cells = dist.cells();
    if cells.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::NotADistribution(format!(
            "cells must be finite and nonnegative, got {cells:?}"
        )));
    }
    let sum: f64 = cells.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotADistribution(format!("cells sum to {sum}")));
    }
    if require_interior {
        const NAMES: [&str; 4] = ["p00", "p10", "p01", "p11"];
        for (name, value) in NAMES.iter().zip(cells) {
            if value < INTERIOR_THRESHOLD {
                return Err(Error::BoundaryCell { cell: name, value });
            }
        }
    }
    Ok(dist)
}

/// Marginal and conditional probabilities identified from the cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedProbs {
    /// `Pr(D = 0)`
    pub q0: f64,
    /// `Pr(D = 1)`
    pub q1: f64,
    /// `Pr(Y = 1 | D = 0)`
    pub pc0: f64,
    /// `Pr(Y = 1 | D = 1)`
    pub pc1: f64,
    /// `Pr(Y = 1)`
    pub py1: f64,
}

pub fn derive(dist: &JointDistribution) -> DerivedProbs {
    let q0 = dist.p00 + dist.p10;
    let q1 = dist.p01 + dist.p11;
    DerivedProbs {
        q0,
        q1,
        pc0: dist.p10 / q0,
        pc1: dist.p11 / q1,
        py1: dist.p10 + dist.p11,
    }
}

/// Which monotonicity assumptions are imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AssumptionSet {
    pub mtr: bool,
    pub mts: bool,
}

impl AssumptionSet {
    pub const NONE: AssumptionSet = AssumptionSet { mtr: false, mts: false };
    pub const MTR: AssumptionSet = AssumptionSet { mtr: true, mts: false };
    pub const MTS: AssumptionSet = AssumptionSet { mtr: false, mts: true };
    pub const MTR_MTS: AssumptionSet = AssumptionSet { mtr: true, mts: true };

    /// The four rows of the bounds table, weakest first.
    pub const ALL: [AssumptionSet; 4] = [Self::NONE, Self::MTR, Self::MTS, Self::MTR_MTS];

    pub fn new(mtr: bool, mts: bool) -> Self {
        AssumptionSet { mtr, mts }
    }

    /// Whether `self` imposes at least everything `other` does.
    pub fn contains(&self, other: &AssumptionSet) -> bool {
        (self.mtr || !other.mtr) && (self.mts || !other.mts)
    }
}

impl fmt::Display for AssumptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.mtr, self.mts) {
            (false, false) => "none",
            (true, false) => "mtr",
            (false, true) => "mts",
            (true, true) => "mtr+mts",
        })
    }
}

impl FromStr for AssumptionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut set = AssumptionSet::NONE;
        let s = s.trim().to_ascii_lowercase();
        if s == "none" || s.is_empty() {
            return Ok(set);
        }
        for part in s.split('+') {
            match part.trim() {
                "mtr" => set.mtr = true,
                "mts" => set.mts = true,
                other => {
                    return Err(Error::DomainError(format!(
                        "unknown assumption `{other}` (expected mtr, mts, mtr+mts or none)"
                    )))
                }
            }
        }
        Ok(set)
    }
}

/// Target parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimandKind {
    /// Average persuasion rate `Pr{Y(1)=1 | Y(0)=0}`.
    #[serde(rename = "APR")]
    Apr,
    /// Reverse persuasion rate `Pr{Y(0)=0 | Y(1)=1}`.
    #[serde(rename = "R-APR")]
    RApr,
    /// Probability of sufficiency.
    #[serde(rename = "PS")]
    Ps,
    /// Probability of necessity.
    #[serde(rename = "PN")]
    Pn,
    /// Probability of necessity and sufficiency.
    #[serde(rename = "PNS")]
    Pns,
    /// Average treatment effect.
    #[serde(rename = "ATE")]
    Ate,
    /// Share of never-persuadable units.
    #[serde(rename = "NP")]
    ShareNp,
    /// Share of already-persuaded units.
    #[serde(rename = "AP")]
    ShareAp,
    /// Share of treatment-persuadable units.
    #[serde(rename = "TP")]
    ShareTp,
}

impl EstimandKind {
    pub const ALL: [EstimandKind; 9] = [
        EstimandKind::Apr,
        EstimandKind::RApr,
        EstimandKind::Ps,
        EstimandKind::Pn,
        EstimandKind::Pns,
        EstimandKind::Ate,
        EstimandKind::ShareNp,
        EstimandKind::ShareAp,
        EstimandKind::ShareTp,
    ];

    /// The five causal parameters of the bounds table.
    pub const CAUSAL: [EstimandKind; 5] = [
        EstimandKind::Apr,
        EstimandKind::RApr,
        EstimandKind::Ps,
        EstimandKind::Pn,
        EstimandKind::Pns,
    ];

    pub fn is_share(&self) -> bool {
        matches!(
            self,
            EstimandKind::ShareNp | EstimandKind::ShareAp | EstimandKind::ShareTp
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            EstimandKind::Apr => "APR",
            EstimandKind::RApr => "R-APR",
            EstimandKind::Ps => "PS",
            EstimandKind::Pn => "PN",
            EstimandKind::Pns => "PNS",
            EstimandKind::Ate => "ATE",
            EstimandKind::ShareNp => "NP",
            EstimandKind::ShareAp => "AP",
            EstimandKind::ShareTp => "TP",
        }
    }
}

impl fmt::Display for EstimandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "apr" | "theta" => EstimandKind::Apr,
            "r-apr" | "rapr" | "theta-r" => EstimandKind::RApr,
            "ps" => EstimandKind::Ps,
            "pn" => EstimandKind::Pn,
            "pns" => EstimandKind::Pns,
            "ate" => EstimandKind::Ate,
            "np" | "share-np" => EstimandKind::ShareNp,
            "ap" | "share-ap" => EstimandKind::ShareAp,
            "tp" | "share-tp" => EstimandKind::ShareTp,
            _ => return Err(Error::DomainError(format!("unknown estimand `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    IdentifiedSet,
    Confidence,
}

/// A closed interval `[lower, upper]`. Only confidence intervals may be
/// empty (a rejected specification test).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub kind: IntervalKind,
    pub alpha: Option<f64>,
    empty: bool,
}

impl Interval {
    pub fn identified(lower: f64, upper: f64) -> Self {
        Interval {
            lower,
            upper,
            kind: IntervalKind::IdentifiedSet,
            alpha: None,
            empty: false,
        }
    }

    pub fn confidence(lower: f64, upper: f64, alpha: f64) -> Self {
        Interval {
            lower,
            upper,
            kind: IntervalKind::Confidence,
            alpha: Some(alpha),
            empty: false,
        }
    }

    pub fn empty_confidence(alpha: f64) -> Self {
        Interval {
            lower: f64::NAN,
            upper: f64::NAN,
            kind: IntervalKind::Confidence,
            alpha: Some(alpha),
            empty: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.empty && self.lower <= x && x <= self.upper
    }

    /// Whether `[lower, upper]` lies inside this interval.
    pub fn covers(&self, lower: f64, upper: f64) -> bool {
        !self.empty && self.lower <= lower && upper <= self.upper
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.upper - self.lower
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return f.write_str("(empty)");
        }
        let prec = f.precision().unwrap_or(4);
        let lower = if self.lower == 0.0 {
            "0".to_string()
        } else {
            format!("{:.*}", prec, self.lower)
        };
        write!(f, "[{}, {:.*}]", lower, prec, self.upper)
    }
}

/// Population shares of the never-persuadable, already-persuaded and
/// treatment-persuadable types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeShares {
    pub np: f64,
    pub ap: f64,
    pub tp: f64,
}

impl TypeShares {
    pub fn new(np: f64, ap: f64, tp: f64) -> Result<Self> {
        let shares = [np, ap, tp];
        if shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::NotADistribution(format!(
                "type shares must be nonnegative, got {shares:?}"
            )));
        }
        let sum = np + ap + tp;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotADistribution(format!("type shares sum to {sum}")));
        }
        Ok(TypeShares { np, ap, tp })
    }
}
