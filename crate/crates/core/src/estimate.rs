//! Plug-in estimates of the bound endpoints with cluster-robust
//! delta-method standard errors.
//!
//! Every endpoint is a smooth function of the moment vector
//! `m = (p₁, p₀, Q₁)` with `p_d = Pr(Y=1|D=d)` and `Q₁ = Pr(D=1)`. Its
//! per-row influence function is
//!
//! ```text
//! ψᵢ = ( dᵢ(yᵢ − p₁)/Q₁,  (1 − dᵢ)(yᵢ − p₀)/Q₀,  dᵢ − Q₁ )
//! ```
//!
//! Cluster sums `S_c = Σ_{i∈c} wᵢψᵢ` give
//! `V = g/(g−1) · n⁻² · Σ_c S_c S_cᵀ`, and an endpoint `f(m)` gets
//! `SE = sqrt(∇fᵀ V ∇f)`. Without a cluster column every row is its own
//! cluster.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::bounds::{self, sharp_bounds};
use crate::error::{Error, Result};
use crate::model::{validate, AssumptionSet, EstimandKind, JointDistribution};
use crate::sample::{Filter, MicroSample, Row};

/// Weighted cell counts `n_yd`, total weight `n` and cluster count `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCounts {
    pub n00: f64,
    pub n10: f64,
    pub n01: f64,
    pub n11: f64,
    pub n: f64,
    pub g: usize,
}

impl CellCounts {
    pub fn joint(&self) -> Result<JointDistribution> {
        JointDistribution::from_counts(self.n00, self.n10, self.n01, self.n11)
    }
}

/// Point estimates of an identified interval's endpoints and their
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub estimand: EstimandKind,
    pub assumptions: AssumptionSet,
    pub lower_hat: f64,
    pub upper_hat: f64,
    pub se_lower: f64,
    pub se_upper: f64,
    pub n: f64,
    pub g: usize,
}

impl BoundEstimate {
    /// Whether the lower endpoint is the constant zero rather than an
    /// estimated quantity.
    pub fn lower_is_fixed(&self) -> bool {
        self.lower_hat == 0.0 && self.se_lower == 0.0
    }
}

pub type EstimateMap = BTreeMap<EstimandKind, BoundEstimate>;

/// Weighted cell counts over rows passing `filter`.
pub fn tabulate(sample: &MicroSample, filter: &Filter) -> Result<CellCounts> {
    let keep = filter.compile(sample)?;
    let mut cells = [Neumaier::default(); 4];
    let mut clusters = vec![false; sample.cluster_labels().len()];
    let mut rows = 0usize;
    for row in sample.rows().iter().filter(|r| keep(r)) {
        cells[cell_index(row)].add(row.weight);
        if let Some(c) = row.cluster {
            clusters[c as usize] = true;
        }
        rows += 1;
    }
    let [n00, n10, n01, n11] = cells.map(|c| c.total());
    if n00 + n10 <= 0.0 {
        return Err(Error::EmptyArm(0));
    }
    if n01 + n11 <= 0.0 {
        return Err(Error::EmptyArm(1));
    }
    let g = if sample.is_clustered() {
        clusters.iter().filter(|&&seen| seen).count()
    } else {
        rows
    };
    Ok(CellCounts {
        n00,
        n10,
        n01,
        n11,
        n: n00 + n10 + n01 + n11,
        g,
    })
}

fn cell_index(row: &Row) -> usize {
    match (row.y, row.d) {
        (false, false) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (true, true) => 3,
    }
}

/// Estimands reported under `assumptions`. Shares only have closed forms
/// under MTR+MTS.
pub fn reported_estimands(assumptions: AssumptionSet) -> Vec<EstimandKind> {
    EstimandKind::ALL
        .into_iter()
        .filter(|e| !e.is_share() || assumptions == AssumptionSet::MTR_MTS)
        .collect()
}

/// Plug-in endpoints under MTR+MTS, without standard errors.
pub fn point_estimates(counts: &CellCounts) -> Result<EstimateMap> {
    point_estimates_under(counts, AssumptionSet::MTR_MTS)
}

/// Plug-in endpoints under `assumptions`, without standard errors.
///
/// Under MTR+MTS the upper bounds are not clamped: a negative `θ̂_U` is
/// kept so that the specification test can see it.
pub fn point_estimates_under(counts: &CellCounts, assumptions: AssumptionSet) -> Result<EstimateMap> {
    let dist = validate(counts.joint()?, true)?;
    reported_estimands(assumptions)
        .into_iter()
        .map(|e| {
            let (lower_hat, upper_hat) = endpoint_values(e, assumptions, &dist)?;
            Ok((
                e,
                BoundEstimate {
                    estimand: e,
                    assumptions,
                    lower_hat,
                    upper_hat,
                    se_lower: 0.0,
                    se_upper: 0.0,
                    n: counts.n,
                    g: counts.g,
                },
            ))
        })
        .collect()
}

/// Unclamped population or plug-in endpoints of `estimand` at `dist`.
pub fn endpoint_values(
    estimand: EstimandKind,
    assumptions: AssumptionSet,
    dist: &JointDistribution,
) -> Result<(f64, f64)> {
    use EstimandKind::*;
    if assumptions != AssumptionSet::MTR_MTS {
        let iv = sharp_bounds(estimand, assumptions, dist)?;
        return Ok((iv.lower, iv.upper));
    }
    Ok(match estimand {
        Apr | Ps => (0.0, bounds::theta_upper(dist)?),
        RApr | Pn => (0.0, bounds::theta_r_upper(dist)?),
        Pns | Ate | ShareTp => (0.0, bounds::ate_upper(dist)),
        ShareNp | ShareAp => {
            let iv = bounds::shares_bounds(dist).get(estimand).expect("share estimand");
            (iv.lower, iv.upper)
        }
    })
}

/// Point estimates with cluster-robust delta-method standard errors.
pub fn clustered_se(
    sample: &MicroSample,
    filter: &Filter,
    assumptions: AssumptionSet,
) -> Result<EstimateMap> {
    let counts = tabulate(sample, filter)?;
    if counts.g < 2 {
        return Err(Error::TooFewClusters(counts.g));
    }
    let mut estimates = point_estimates_under(&counts, assumptions)?;
    let cov = moment_covariance(sample, filter, &counts)?;
    let m = Moments::from_counts(&counts);
    for est in estimates.values_mut() {
        let (lo, hi) = endpoint_gradients(est.estimand, assumptions, &m);
        est.se_lower = quad_form(&lo, &cov).sqrt();
        est.se_upper = quad_form(&hi, &cov).sqrt();
    }
    Ok(estimates)
}

/// The moment vector `(p₁, p₀, Q₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub p1: f64,
    pub p0: f64,
    pub q1: f64,
}

impl Moments {
    pub fn from_counts(c: &CellCounts) -> Self {
        let w0 = c.n00 + c.n10;
        let w1 = c.n01 + c.n11;
        Moments {
            p1: c.n11 / w1,
            p0: c.n10 / w0,
            q1: w1 / c.n,
        }
    }

    /// Influence of one observation on the moments.
    pub fn influence(&self, y: bool, d: bool) -> [f64; 3] {
        let y = f64::from(u8::from(y));
        let dv = f64::from(u8::from(d));
        [
            dv * (y - self.p1) / self.q1,
            (1.0 - dv) * (y - self.p0) / (1.0 - self.q1),
            dv - self.q1,
        ]
    }
}

/// Cluster-robust covariance of the moment vector.
pub fn moment_covariance(
    sample: &MicroSample,
    filter: &Filter,
    counts: &CellCounts,
) -> Result<[[f64; 3]; 3]> {
    let keep = filter.compile(sample)?;
    let m = Moments::from_counts(counts);
    let mut meat = [[Neumaier::default(); 3]; 3];
    let mut add_outer = |s: [f64; 3]| {
        for i in 0..3 {
            for j in 0..3 {
                meat[i][j].add(s[i] * s[j]);
            }
        }
    };
    if sample.is_clustered() {
        let mut sums = vec![[Neumaier::default(); 3]; sample.cluster_labels().len()];
        for row in sample.rows().iter().filter(|r| keep(r)) {
            let psi = m.influence(row.y, row.d);
            let slot = &mut sums[row.cluster.expect("clustered sample") as usize];
            for k in 0..3 {
                slot[k].add(row.weight * psi[k]);
            }
        }
        for s in &sums {
            add_outer([s[0].total(), s[1].total(), s[2].total()]);
        }
    } else {
        for row in sample.rows().iter().filter(|r| keep(r)) {
            let psi = m.influence(row.y, row.d);
            add_outer(psi.map(|v| row.weight * v));
        }
    }
    let g = counts.g as f64;
    let scale = g / (g - 1.0) / (counts.n * counts.n);
    Ok([0, 1, 2].map(|i| [0, 1, 2].map(|j| scale * meat[i][j].total())))
}

fn quad_form(grad: &[f64; 3], cov: &[[f64; 3]; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += grad[i] * cov[i][j] * grad[j];
        }
    }
    acc.max(0.0)
}

/// Gradients of the lower and upper endpoints with respect to `(p₁, p₀, Q₁)`.
pub fn endpoint_gradients(
    estimand: EstimandKind,
    assumptions: AssumptionSet,
    m: &Moments,
) -> ([f64; 3], [f64; 3]) {
    use EstimandKind::*;
    let p1 = Dual::var(m.p1, 0);
    let p0 = Dual::var(m.p0, 1);
    let q1 = Dual::var(m.q1, 2);
    let one = Dual::constant(1.0);
    let zero = Dual::constant(0.0);
    let q0 = one - q1;
    // Pr(Y=1,D=1) + Pr(Y=0,D=0)
    let concordant = q1 * p1 + q0 * (one - p0);
    // Pr(Y=1,D=0) + Pr(Y=0,D=1)
    let discordant = q0 * p0 + q1 * (one - p1);
    let ate = p1 - p0;

    let (lo, hi) = match (assumptions.mtr, assumptions.mts) {
        (true, true) => match estimand {
            Apr | Ps => (zero, ate / (one - p0)),
            RApr | Pn => (zero, ate / p1),
            Pns | Ate | ShareTp => (zero, ate),
            ShareNp => (one - p1, one - (q1 * p1 + q0 * p0)),
            ShareAp => (p0, q1 * p1 + q0 * p0),
        },
        (false, true) => match estimand {
            Apr => (zero, (p1 / concordant).min(one)),
            RApr => (zero, ((one - p0) / concordant).min(one)),
            Ps => (zero, (p1 / (one - p0)).min(one)),
            Pn => (zero, ((one - p0) / p1).min(one)),
            Pns => (zero, (one - p0).min(p1)),
            Ate => (-discordant, ate),
            ShareNp | ShareAp | ShareTp => (zero, zero),
        },
        (true, false) if matches!(estimand, Apr | RApr) => {
            // Pr(Y=1,D=0) and Pr(Y=0,D=1) pin NP and AP mass under MTR.
            let denom = if estimand == Apr { one - q0 * p0 } else { one - q1 * (one - p1) };
            (zero, (concordant / denom).min(one))
        }
        (mtr, false) => match estimand {
            Apr | RApr | Ps | Pn => (zero, one),
            Pns => (zero, concordant),
            Ate if mtr => (zero, concordant),
            Ate => (-discordant, concordant),
            ShareNp | ShareAp | ShareTp => (zero, zero),
        },
    };
    (lo.grad, hi.grad)
}

/// Forward-mode dual number carrying the gradient with respect to the three
/// moments.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual {
    val: f64,
    grad: [f64; 3],
}

impl Dual {
    fn constant(val: f64) -> Self {
        Dual { val, grad: [0.0; 3] }
    }

    fn var(val: f64, index: usize) -> Self {
        let mut grad = [0.0; 3];
        grad[index] = 1.0;
        Dual { val, grad }
    }

    fn min(self, other: Dual) -> Dual {
        if self.val <= other.val {
            self
        } else {
            other
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            val: self.val + o.val,
            grad: [0, 1, 2].map(|i| self.grad[i] + o.grad[i]),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            val: self.val - o.val,
            grad: [0, 1, 2].map(|i| self.grad[i] - o.grad[i]),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            val: -self.val,
            grad: self.grad.map(|g| -g),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            val: self.val * o.val,
            grad: [0, 1, 2].map(|i| self.grad[i] * o.val + self.val * o.grad[i]),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let v = self.val / o.val;
        Dual {
            val: v,
            grad: [0, 1, 2].map(|i| (self.grad[i] - v * o.grad[i]) / o.val),
        }
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Published type-share bounds for one subgroup, as probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelShares {
    pub ap_lb: f64,
    pub ap_ub: f64,
    pub np_lb: f64,
    pub np_ub: f64,
}

/// Allowed mismatch between `Pr(Y=1)` implied by the NP upper bound and the
/// reported AP upper bound.
pub const PANEL_TOLERANCE: f64 = 5e-4;

/// Recovers the joint distribution from reported AP/NP share bounds.
///
/// `Pr(Y=1|D=0)` is the AP lower bound, `Pr(Y=1|D=1)` is one minus the NP
/// lower bound, and `Pr(D=0)` solves
/// `Q₀(1 − p₀) + (1 − Q₀)(1 − p₁) = NP upper bound`.
pub fn reconstruct_joint(panel: &PanelShares) -> Result<JointDistribution> {
    let pc0 = panel.ap_lb;
    let pc1 = 1.0 - panel.np_lb;
    let slope = pc1 - pc0;
    if slope.abs() < 1e-12 {
        return Err(Error::InconsistentPanel(
            "NP lower and AP lower bounds imply p1 = p0; Pr(D=0) is not identified".into(),
        ));
    }
    let q0 = (panel.np_ub - (1.0 - pc1)) / slope;
    if !(q0 > 0.0 && q0 < 1.0) {
        return Err(Error::InconsistentPanel(format!(
            "implied Pr(D=0) = {q0} is not in (0, 1)"
        )));
    }
    let q1 = 1.0 - q0;
    let dist = JointDistribution::interior(q0 * (1.0 - pc0), q0 * pc0, q1 * (1.0 - pc1), q1 * pc1)
        .map_err(|e| Error::InconsistentPanel(e.to_string()))?;
    let py1 = dist.p10() + dist.p11();
    if (py1 - panel.ap_ub).abs() > PANEL_TOLERANCE {
        return Err(Error::InconsistentPanel(format!(
            "implied Pr(Y=1) = {py1:.6} but AP upper bound is {}",
            panel.ap_ub
        )));
    }
    Ok(dist)
}
