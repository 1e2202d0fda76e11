//! Brute-force sharp bounds over the polytope of latent potential-outcome
//! tables.
//!
//! A latent table is the joint distribution of `(Y(0), Y(1), D)`. Under MTR
//! the `(1,0)` column is empty and the table has six cells:
//!
//! ```text
//!   (Y(0),Y(1)):  (0,0) (0,1) (1,0) (1,1)
//!   D = 0          q1    q2     -    q3
//!   D = 1          q4    q5     -    q6
//! ```
//!
//! so only `q2` and `q5` are free once the observed cells are fixed.
//! Without MTR the table has eight cells
//!
//! ```text
//!   D = 0          q1    q2    q3    q4
//!   D = 1          q5    q6    q7    q8
//! ```
//!
//! with free variables `q2, q4, q7, q8`. MTS adds linear constraints on
//! the free variables. Every estimand is linear-fractional in the free
//! variables, so a coarse grid followed by boundary line searches along a
//! set of edge directions finds the exact extrema.

use serde::{Deserialize, Serialize};

use crate::bounds::ShareBounds;
use crate::error::{Error, Result};
use crate::model::{validate, AssumptionSet, EstimandKind, Interval, JointDistribution};

/// Default grid step when MTR is imposed (two free variables).
pub const DEFAULT_GRID_MONOTONE: f64 = 1e-3;
/// Default grid step without MTR (four free variables).
pub const DEFAULT_GRID_GENERAL: f64 = 5e-3;
/// Largest grid step accepted.
pub const MAX_GRID: f64 = 0.05;

const CONSISTENCY_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-12;
const MAX_LINE_SEARCHES: usize = 10_000;

pub fn default_grid(assumptions: AssumptionSet) -> f64 {
    if assumptions.mtr {
        DEFAULT_GRID_MONOTONE
    } else {
        DEFAULT_GRID_GENERAL
    }
}

/// Joint distribution of `(Y(0), Y(1), D)`; see the module docs for the
/// cell layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LatentTable {
    Monotone([f64; 6]),
    General([f64; 8]),
}

impl LatentTable {
    pub fn cells(&self) -> &[f64] {
        match self {
            LatentTable::Monotone(q) => q,
            LatentTable::General(q) => q,
        }
    }

    /// Observed `(p00, p10, p01, p11)` implied by the table.
    pub fn observed(&self) -> [f64; 4] {
        match *self {
            LatentTable::Monotone(q) => [q[0] + q[1], q[2], q[3], q[4] + q[5]],
            LatentTable::General(q) => [q[0] + q[1], q[2] + q[3], q[4] + q[6], q[5] + q[7]],
        }
    }

    /// Checks nonnegativity, total mass, and agreement with `dist`.
    pub fn check_consistent(&self, dist: &JointDistribution) -> Result<()> {
        let q = self.cells();
        if let Some(bad) = q.iter().position(|v| *v < -CONSISTENCY_TOL || !v.is_finite()) {
            return Err(Error::InconsistentLatent(format!(
                "q{} = {} is negative",
                bad + 1,
                q[bad]
            )));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > CONSISTENCY_TOL {
            return Err(Error::InconsistentLatent(format!("cells sum to {total}")));
        }
        for (implied, observed) in self.observed().iter().zip(dist.cells()) {
            if (implied - observed).abs() > CONSISTENCY_TOL {
                return Err(Error::InconsistentLatent(format!(
                    "implied cells {:?} differ from observed {:?}",
                    self.observed(),
                    dist.cells()
                )));
            }
        }
        Ok(())
    }

    /// `(Pr{Y(1)=1|D=1} − Pr{Y(1)=1|D=0}, Pr{Y(0)=1|D=1} − Pr{Y(0)=1|D=0})`.
    /// MTS holds when both are nonnegative.
    pub fn mts_gaps(&self) -> (f64, f64) {
        // Accumulate Pr{Y(d)=1, D=t} from the general layout.
        let g = self.as_general();
        let d0 = g[0] + g[1] + g[2] + g[3];
        let d1 = g[4] + g[5] + g[6] + g[7];
        let y1_d0 = g[1] + g[3];
        let y1_d1 = g[5] + g[7];
        let y0_d0 = g[2] + g[3];
        let y0_d1 = g[6] + g[7];
        (y1_d1 / d1 - y1_d0 / d0, y0_d1 / d1 - y0_d0 / d0)
    }

    pub fn satisfies_mts(&self, tol: f64) -> bool {
        let (a, b) = self.mts_gaps();
        a >= -tol && b >= -tol
    }

    /// Embeds a six-cell table into the eight-cell layout.
    pub fn as_general(&self) -> [f64; 8] {
        match *self {
            LatentTable::Monotone(q) => [q[0], q[1], 0.0, q[2], q[3], q[4], 0.0, q[5]],
            LatentTable::General(q) => q,
        }
    }

    /// Value of `estimand` at this table, without consistency checks.
    pub fn value(&self, estimand: EstimandKind) -> f64 {
        let [q1, q2, q3, q4, q5, q6, q7, q8] = self.as_general();
        // Types: NP = (0,0), TP = (0,1), defier = (1,0), AP = (1,1).
        let tp = q2 + q6;
        match estimand {
            EstimandKind::Apr => tp / (q1 + q2 + q5 + q6),
            EstimandKind::RApr => tp / (q2 + q4 + q6 + q8),
            EstimandKind::Ps => q2 / (q1 + q2),
            EstimandKind::Pn => q6 / (q6 + q8),
            EstimandKind::Pns | EstimandKind::ShareTp => tp,
            EstimandKind::Ate => tp - (q3 + q7),
            EstimandKind::ShareNp => q1 + q5,
            EstimandKind::ShareAp => q4 + q8,
        }
    }
}

/// Value of `estimand` at a latent table consistent with `dist`.
pub fn evaluate_estimand(
    estimand: EstimandKind,
    q: &LatentTable,
    dist: &JointDistribution,
) -> Result<f64> {
    q.check_consistent(dist)?;
    Ok(q.value(estimand))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeVar {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
}

/// `lower <= x[i] + x[j] <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumConstraint {
    pub vars: (usize, usize),
    pub lower: f64,
    pub upper: f64,
}

/// Free-variable parameterisation of the latent tables compatible with the
/// observed cells and the assumption set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleRegion {
    pub assumptions: AssumptionSet,
    pub dist: JointDistribution,
    pub vars: Vec<FreeVar>,
    pub sums: Vec<SumConstraint>,
}

pub fn feasible_region(assumptions: AssumptionSet, dist: &JointDistribution) -> Result<FeasibleRegion> {
    let dist = validate(*dist, true)?;
    let [p00, p10, p01, p11] = dist.cells();
    let q0 = p00 + p10;
    let q1 = p01 + p11;

    let (vars, sums) = if assumptions.mtr {
        let (mut q2_hi, mut q5_hi) = (p00, p11);
        if assumptions.mts {
            // Selection on Y(0) caps q5, selection on Y(1) caps q2.
            q5_hi = p11 - p10 * (p01 + p11) / (p00 + p10);
            q2_hi = p00 - p01 * (p10 + p00) / (p01 + p11);
            if q5_hi < -FEASIBILITY_TOL || q2_hi < -FEASIBILITY_TOL {
                return Err(Error::EmptyRegion(format!(
                    "MTS slack is negative (q2 <= {q2_hi:.6}, q5 <= {q5_hi:.6})"
                )));
            }
            q5_hi = q5_hi.max(0.0);
            q2_hi = q2_hi.max(0.0);
        }
        (
            vec![
                FreeVar { name: "q2", lower: 0.0, upper: q2_hi },
                FreeVar { name: "q5", lower: 0.0, upper: q5_hi },
            ],
            Vec::new(),
        )
    } else {
        let vars = vec![
            FreeVar { name: "q2", lower: 0.0, upper: p00 },
            FreeVar { name: "q4", lower: 0.0, upper: p10 },
            FreeVar { name: "q7", lower: 0.0, upper: p01 },
            FreeVar { name: "q8", lower: 0.0, upper: p11 },
        ];
        let sums = if assumptions.mts {
            let lo78 = p10 * q1 / q0;
            if lo78 > q1 + FEASIBILITY_TOL {
                return Err(Error::EmptyRegion(format!(
                    "q7 + q8 >= {lo78:.6} exceeds Pr(D=1) = {q1:.6}"
                )));
            }
            vec![
                SumConstraint { vars: (0, 1), lower: 0.0, upper: p11 * q0 / q1 },
                SumConstraint { vars: (2, 3), lower: lo78.min(q1), upper: q1 },
            ]
        } else {
            Vec::new()
        };
        (vars, sums)
    };
    Ok(FeasibleRegion { assumptions, dist, vars, sums })
}

impl FeasibleRegion {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.vars
            .iter()
            .zip(x)
            .all(|(v, &xi)| xi >= v.lower - FEASIBILITY_TOL && xi <= v.upper + FEASIBILITY_TOL)
            && self.sums.iter().all(|s| {
                let t = x[s.vars.0] + x[s.vars.1];
                t >= s.lower - FEASIBILITY_TOL && t <= s.upper + FEASIBILITY_TOL
            })
    }

    /// Latent table at the free-variable point `x`.
    pub fn latent(&self, x: &[f64]) -> LatentTable {
        let [p00, p10, p01, p11] = self.dist.cells();
        if self.assumptions.mtr {
            let (q2, q5) = (x[0], x[1]);
            LatentTable::Monotone([p00 - q2, q2, p10, p01, q5, p11 - q5])
        } else {
            let (q2, q4, q7, q8) = (x[0], x[1], x[2], x[3]);
            LatentTable::General([p00 - q2, q2, p10 - q4, q4, p01 - q7, p11 - q8, q7, q8])
        }
    }

    /// Largest `t >= 0` with `x + t·dir` feasible.
    fn max_step(&self, x: &[f64], dir: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        let mut limit = |value: f64, rate: f64, lo: f64, hi: f64| {
            if rate > 0.0 {
                t = t.min((hi - value) / rate);
            } else if rate < 0.0 {
                t = t.min((lo - value) / rate);
            }
        };
        for ((v, &xi), &di) in self.vars.iter().zip(x).zip(dir) {
            limit(xi, di, v.lower, v.upper);
        }
        for s in &self.sums {
            let (i, j) = s.vars;
            limit(x[i] + x[j], dir[i] + dir[j], s.lower, s.upper);
        }
        t.max(0.0)
    }

    fn clamp_into_box(&self, x: &mut [f64]) {
        for (xi, v) in x.iter_mut().zip(&self.vars) {
            *xi = xi.clamp(v.lower, v.upper);
        }
    }

    /// Grid points along each axis: `lower, lower + h, ...` plus `upper`.
    fn axis_points(&self, grid: f64) -> Vec<Vec<f64>> {
        self.vars
            .iter()
            .map(|v| {
                let span = v.upper - v.lower;
                let steps = (span / grid).floor() as usize;
                let mut pts: Vec<f64> = (0..=steps).map(|k| v.lower + k as f64 * grid).collect();
                if pts.last().is_some_and(|&p| v.upper - p > FEASIBILITY_TOL) {
                    pts.push(v.upper);
                }
                pts
            })
            .collect()
    }

    /// Calls `visit` on every feasible grid point.
    fn for_each_grid_point(&self, grid: f64, mut visit: impl FnMut(&[f64])) {
        let axes = self.axis_points(grid);
        let dim = axes.len();
        let mut idx = vec![0usize; dim];
        let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
        loop {
            if self.contains(&x) {
                visit(&x);
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == dim {
                    return;
                }
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    x[k] = axes[k][idx[k]];
                    break;
                }
                idx[k] = 0;
                x[k] = axes[k][0];
                k += 1;
            }
        }
    }

    /// Coordinate and pairwise edge directions; they generate the tangent
    /// cone of the region at every point.
    fn directions(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut dirs = Vec::new();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = sign;
                dirs.push(d);
            }
            for j in (i + 1)..n {
                for (si, sj) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                    let mut d = vec![0.0; n];
                    d[i] = si;
                    d[j] = sj;
                    dirs.push(d);
                }
            }
        }
        dirs
    }

    /// Improves `x` by jumping to the far end of the feasible segment along
    /// any direction that increases `sign * f`. A linear-fractional
    /// objective is monotone along segments, so the far end is the best
    /// point on each segment.
    fn refine(
        &self,
        estimand: EstimandKind,
        sign: f64,
        mut x: Vec<f64>,
        dirs: &[Vec<f64>],
    ) -> (f64, Vec<f64>) {
        let f = |x: &[f64]| sign * self.latent(x).value(estimand);
        let mut fx = f(&x);
        let mut y = vec![0.0; x.len()];
        for _ in 0..MAX_LINE_SEARCHES {
            let mut improved = false;
            for d in dirs {
                let t = self.max_step(&x, d);
                if t <= 0.0 {
                    continue;
                }
                for ((yi, xi), di) in y.iter_mut().zip(&x).zip(d) {
                    *yi = xi + t * di;
                }
                self.clamp_into_box(&mut y);
                if !self.contains(&y) {
                    continue;
                }
                let fy = f(&y);
                if fy > fx + 1e-14 * fx.abs().max(1.0) {
                    x.copy_from_slice(&y);
                    fx = fy;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        (sign * fx, x)
    }
}

/// Oracle extrema for one estimand, with the latent tables attaining them.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBound {
    pub estimand: EstimandKind,
    pub interval: Interval,
    pub argmin: LatentTable,
    pub argmax: LatentTable,
}

fn check_grid(grid: f64) -> Result<()> {
    if !(grid > 0.0 && grid <= MAX_GRID) {
        return Err(Error::DomainError(format!(
            "grid step must lie in (0, {MAX_GRID}], got {grid}"
        )));
    }
    Ok(())
}

/// Minimises and maximises each of `estimands` over the feasible region
/// with one shared grid pass.
pub fn oracle_bounds(
    estimands: &[EstimandKind],
    assumptions: AssumptionSet,
    dist: &JointDistribution,
    grid: f64,
) -> Result<Vec<OracleBound>> {
    check_grid(grid)?;
    let region = feasible_region(assumptions, dist)?;

    struct Best {
        min: (f64, Vec<f64>),
        max: (f64, Vec<f64>),
    }
    let mut best: Vec<Option<Best>> = estimands.iter().map(|_| None).collect();
    region.for_each_grid_point(grid, |x| {
        let table = region.latent(x);
        for (slot, &e) in best.iter_mut().zip(estimands) {
            let v = table.value(e);
            match slot {
                None => {
                    *slot = Some(Best {
                        min: (v, x.to_vec()),
                        max: (v, x.to_vec()),
                    })
                }
                Some(b) => {
                    if v < b.min.0 {
                        b.min = (v, x.to_vec());
                    }
                    if v > b.max.0 {
                        b.max = (v, x.to_vec());
                    }
                }
            }
        }
    });

    let dirs = region.directions();
    estimands
        .iter()
        .zip(best)
        .map(|(&estimand, slot)| {
            let b = slot.ok_or_else(|| Error::EmptyRegion("no feasible grid point".into()))?;
            let (lo, xlo) = region.refine(estimand, -1.0, b.min.1, &dirs);
            let (hi, xhi) = region.refine(estimand, 1.0, b.max.1, &dirs);
            Ok(OracleBound {
                estimand,
                interval: Interval::identified(lo, hi),
                argmin: region.latent(&xlo),
                argmax: region.latent(&xhi),
            })
        })
        .collect()
}

/// Sharp identified interval of `estimand` by search over the latent
/// polytope.
pub fn sharp_bounds_oracle(
    estimand: EstimandKind,
    assumptions: AssumptionSet,
    dist: &JointDistribution,
    grid: f64,
) -> Result<Interval> {
    Ok(oracle_bounds(&[estimand], assumptions, dist, grid)?[0].interval)
}

/// Type-share bounds by search over the latent polytope. Without MTR the
/// shares exclude the defier type `(Y(0), Y(1)) = (1, 0)`.
pub fn shares_oracle(
    assumptions: AssumptionSet,
    dist: &JointDistribution,
    grid: f64,
) -> Result<ShareBounds> {
    let out = oracle_bounds(
        &[EstimandKind::ShareNp, EstimandKind::ShareAp, EstimandKind::ShareTp],
        assumptions,
        dist,
        grid,
    )?;
    Ok(ShareBounds {
        np: out[0].interval,
        ap: out[1].interval,
        tp: out[2].interval,
    })
}
