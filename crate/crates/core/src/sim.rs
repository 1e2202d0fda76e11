//! Synthetic data-generating processes and a Monte Carlo coverage harness.
//!
//! A DGP is a population of latent types (never-persuadable, persuadable,
//! already-persuaded and, when MTR is deliberately broken, defiers), each
//! selecting into treatment with its own probability. Clusters draw a
//! Rademacher effect `u = ±1` that shifts every selection logit by `2ρu`
//! and, optionally, moves `ρu·m` mass from never-persuadable to
//! already-persuaded units, with `m = min(π_NP, π_AP)/2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{clustered_se, endpoint_values, BoundEstimate};
use crate::inference::{interval_ci, one_sided_ci, shares_ci, spec_test_ci};
use crate::model::{validate, AssumptionSet, EstimandKind, Interval, JointDistribution};
use crate::oracle::LatentTable;
use crate::sample::{Filter, MicroSample};

/// Slack allowed when checking that a DGP respects MTS.
pub const MTS_CHECK_TOLERANCE: f64 = 1e-12;

/// Fractions of the population identified set at which interior coverage is
/// reported.
pub const INTERIOR_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// Latent type probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMix {
    pub np: f64,
    pub ap: f64,
    pub tp: f64,
    #[serde(default)]
    pub defier: f64,
}

/// Per-type probabilities of selecting into treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub np: f64,
    pub ap: f64,
    pub tp: f64,
    #[serde(default = "half")]
    pub defier: f64,
}

fn half() -> f64 {
    0.5
}

impl Selection {
    /// Same selection probability for every type.
    pub fn uniform(s: f64) -> Self {
        Selection {
            np: s,
            ap: s,
            tp: s,
            defier: s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub shares: TypeMix,
    pub selection: Selection,
    pub clusters: usize,
    pub cluster_size: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub outcome_shift: bool,
    #[serde(default)]
    pub break_mtr: bool,
    #[serde(default)]
    pub break_mts: bool,
}

// Latent columns in (Y(0), Y(1)) order.
const NP: usize = 0;
const TP: usize = 1;
const DEFIER: usize = 2;
const AP: usize = 3;

impl DgpSpec {
    /// An i.i.d. design of `n` rows with no cluster effect.
    pub fn iid(shares: TypeMix, selection: Selection, n: usize) -> Self {
        DgpSpec {
            shares,
            selection,
            clusters: n,
            cluster_size: 1,
            rho: 0.0,
            outcome_shift: false,
            break_mtr: false,
            break_mts: false,
        }
    }

    pub fn n(&self) -> usize {
        self.clusters * self.cluster_size
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.shares;
        let mix = [s.np, s.tp, s.defier, s.ap];
        if mix.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid(format!("type shares must be non-negative, got {mix:?}")));
        }
        let total: f64 = mix.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("type shares sum to {total}, not 1")));
        }
        if s.defier > 0.0 && !self.break_mtr {
            return Err(invalid("a defier share requires break_mtr".into()));
        }
        if self.break_mtr && s.defier <= 0.0 {
            return Err(invalid("break_mtr requires a positive defier share".into()));
        }
        let sel = &self.selection;
        for p in [sel.np, sel.ap, sel.tp, sel.defier] {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid(format!("selection probabilities must lie in (0, 1), got {p}")));
            }
        }
        if self.clusters == 0 || self.cluster_size == 0 {
            return Err(invalid("cluster count and size must be positive".into()));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        let latent = self.population_latent();
        let [p00, p10, p01, p11] = latent.observed();
        validate(JointDistribution::new(p00, p10, p01, p11)?, true)
            .map_err(|e| invalid(format!("implied distribution: {e}")))?;
        if !self.break_mts && !latent.satisfies_mts(MTS_CHECK_TOLERANCE) {
            let (g1, g0) = latent.mts_gaps();
            return Err(invalid(format!(
                "selection violates MTS (gaps {g1:.6}, {g0:.6}); set break_mts to allow this"
            )));
        }
        Ok(())
    }

    fn mix_array(&self) -> [f64; 4] {
        let s = &self.shares;
        [s.np, s.tp, s.defier, s.ap]
    }

    fn selection_array(&self) -> [f64; 4] {
        let s = &self.selection;
        [s.np, s.tp, s.defier, s.ap]
    }

    /// Type shares and selection probabilities in a cluster with effect `u`.
    fn cluster_params(&self, u: f64) -> ([f64; 4], [f64; 4]) {
        let mut mix = self.mix_array();
        if self.outcome_shift {
            let m = 0.5 * mix[NP].min(mix[AP]);
            mix[NP] -= u * self.rho * m;
            mix[AP] += u * self.rho * m;
        }
        let shift = 2.0 * self.rho * u;
        let sel = self.selection_array().map(|s| logistic(logit(s) + shift));
        (mix, sel)
    }

    /// Population latent table, averaging over the cluster effect.
    pub fn population_latent(&self) -> LatentTable {
        let mut q = [0.0; 8];
        for u in [-1.0, 1.0] {
            let (mix, sel) = self.cluster_params(u);
            for t in 0..4 {
                q[t] += 0.5 * mix[t] * (1.0 - sel[t]);
                q[4 + t] += 0.5 * mix[t] * sel[t];
            }
        }
        LatentTable::General(q)
    }

    /// Population value of `estimand`.
    pub fn true_value(&self, estimand: EstimandKind) -> f64 {
        self.population_latent().value(estimand)
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidSpec(msg)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Observed joint distribution implied by the DGP.
pub fn implied_joint(spec: &DgpSpec) -> Result<JointDistribution> {
    spec.validate()?;
    let [p00, p10, p01, p11] = spec.population_latent().observed();
    JointDistribution::new(p00, p10, p01, p11)
}

/// Draws one sample with a fresh generator seeded from `seed`.
pub fn draw_sample(spec: &DgpSpec, seed: u64) -> Result<MicroSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw_with(spec, &mut rng))
}

/// Generator for replication `rep` of a study seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Draws a sample from an already validated spec. Singleton clusters are
/// written without a cluster column, which is equivalent for estimation.
pub fn draw_with<R: Rng>(spec: &DgpSpec, rng: &mut R) -> MicroSample {
    let clustered = spec.cluster_size > 1;
    let mut sample = MicroSample::with_capacity(Vec::new(), spec.n());
    let params = [spec.cluster_params(-1.0), spec.cluster_params(1.0)];
    for c in 0..spec.clusters {
        let (mix, sel) = &params[usize::from(rng.random_bool(0.5))];
        for _ in 0..spec.cluster_size {
            let t = draw_type(mix, rng.random::<f64>());
            let d = rng.random::<f64>() < sel[t];
            let y = if d { t == TP || t == AP } else { t == DEFIER || t == AP };
            if clustered {
                sample.push_generated(y, d, c);
            } else {
                sample
                    .push(y, d, None, 1.0, Vec::new())
                    .expect("generated row is valid");
            }
        }
    }
    sample
}

fn draw_type(mix: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (t, p) in mix.iter().enumerate() {
        acc += p;
        if u < acc {
            return t;
        }
    }
    // Rounding left a sliver above the cumulative total.
    mix.iter().rposition(|p| *p > 0.0).unwrap_or(AP)
}

/// Settings for a coverage study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub targets: Vec<EstimandKind>,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub assumptions: AssumptionSet,
}

/// Minimum number of replications accepted by [`run_coverage`].
pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorCoverage {
    pub fraction: f64,
    pub value: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub estimand: EstimandKind,
    pub true_value: f64,
    pub population_lower: f64,
    pub population_upper: f64,
    /// Coverage of the population value of the parameter.
    pub coverage_true: f64,
    /// Coverage of the population upper bound.
    pub coverage_upper: f64,
    /// Share of replications whose interval contains the whole identified set.
    pub coverage_set: f64,
    pub coverage_interior: Vec<InteriorCoverage>,
    /// Share of replications whose specification-test interval is empty.
    pub empty_rate: f64,
    pub mean_lower_hat: f64,
    pub mean_upper_hat: f64,
    pub mean_ci_lower: f64,
    pub mean_ci_upper: f64,
    /// Monte Carlo standard error of a coverage rate at `1 − α`.
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub spec: DgpSpec,
    pub config: CoverageConfig,
    /// Replications whose estimation succeeded; rates use this denominator.
    pub completed: usize,
    pub failed: usize,
    pub targets: Vec<TargetReport>,
}

struct Population {
    estimand: EstimandKind,
    truth: f64,
    lower: f64,
    upper: f64,
}

#[derive(Clone, Copy)]
struct Draw {
    est: BoundEstimate,
    ci: Interval,
    empty: bool,
}

/// Runs `config.replications` independent draw-estimate-CI cycles.
///
/// Replication `r` uses [`replication_rng`]`(seed, r)`, so the report does not
/// depend on the rayon thread count.
pub fn run_coverage(spec: &DgpSpec, config: &CoverageConfig) -> Result<McReport> {
    spec.validate()?;
    if config.replications < MIN_REPLICATIONS {
        return Err(invalid(format!(
            "at least {MIN_REPLICATIONS} replications are required, got {}",
            config.replications
        )));
    }
    if config.targets.is_empty() {
        return Err(invalid("no coverage targets given".into()));
    }
    if config.targets.iter().any(|t| t.is_share()) && config.assumptions != AssumptionSet::MTR_MTS {
        return Err(invalid("share targets are only estimated under mtr+mts".into()));
    }
    let joint = implied_joint(spec)?;
    let population = config
        .targets
        .iter()
        .map(|&e| {
            let (lower, upper) = endpoint_values(e, config.assumptions, &joint)?;
            Ok(Population {
                estimand: e,
                truth: spec.true_value(e),
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let draws: Vec<Option<Vec<Draw>>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| replicate(spec, config, rep))
        .collect::<Result<_>>()?;

    let completed: Vec<&Vec<Draw>> = draws.iter().flatten().collect();
    let done = completed.len();
    let rate = |hits: usize| if done == 0 { f64::NAN } else { hits as f64 / done as f64 };
    let mean = |xs: &mut dyn Iterator<Item = f64>| rate_sum(xs) / done as f64;

    let targets = population
        .iter()
        .enumerate()
        .map(|(k, pop)| {
            let col = || completed.iter().map(move |d| d[k]);
            let count = |f: &dyn Fn(&Draw) -> bool| col().filter(|d| f(d)).count();
            let coverage_interior = INTERIOR_FRACTIONS
                .iter()
                .map(|&fraction| {
                    let value = pop.lower + fraction * (pop.upper - pop.lower);
                    InteriorCoverage {
                        fraction,
                        value,
                        coverage: rate(count(&|d| d.ci.contains(value))),
                    }
                })
                .collect();
            let nominal = 1.0 - config.alpha;
            TargetReport {
                estimand: pop.estimand,
                true_value: pop.truth,
                population_lower: pop.lower,
                population_upper: pop.upper,
                coverage_true: rate(count(&|d| d.ci.contains(pop.truth))),
                coverage_upper: rate(count(&|d| d.ci.contains(pop.upper))),
                coverage_set: rate(count(&|d| d.ci.covers(pop.lower, pop.upper))),
                coverage_interior,
                empty_rate: rate(count(&|d| d.empty)),
                mean_lower_hat: mean(&mut col().map(|d| d.est.lower_hat)),
                mean_upper_hat: mean(&mut col().map(|d| d.est.upper_hat)),
                mean_ci_lower: mean(&mut col().map(|d| d.ci.lower)),
                mean_ci_upper: mean(&mut col().map(|d| d.ci.upper)),
                mc_se: (nominal * (1.0 - nominal) / done.max(1) as f64).sqrt(),
            }
        })
        .collect();

    Ok(McReport {
        spec: *spec,
        config: config.clone(),
        completed: done,
        failed: config.replications - done,
        targets,
    })
}

fn rate_sum(xs: &mut dyn Iterator<Item = f64>) -> f64 {
    let mut acc = crate::estimate::Neumaier::default();
    xs.for_each(|x| acc.add(x));
    acc.total()
}

/// One replication. Samples that land on a boundary cell or an empty arm
/// yield `None`; other errors abort the study.
fn replicate(spec: &DgpSpec, config: &CoverageConfig, rep: u64) -> Result<Option<Vec<Draw>>> {
    let mut rng = replication_rng(config.seed, rep);
    let sample = draw_with(spec, &mut rng);
    let estimates = match clustered_se(&sample, &Filter::new(), config.assumptions) {
        Ok(e) => e,
        Err(Error::BoundaryCell { .. } | Error::EmptyArm(_) | Error::DegenerateDenominator(_)) => {
            return Ok(None)
        }
        Err(e) => return Err(e),
    };
    config
        .targets
        .iter()
        .map(|t| {
            let est = estimates[t];
            let (ci, empty) = if est.lower_is_fixed() {
                let ci = one_sided_ci(&est, config.alpha)?;
                let empty = spec_test_ci(&est, config.alpha)?.is_empty();
                (ci, empty)
            } else if t.is_share() {
                (shares_ci(&est, config.alpha)?, false)
            } else {
                let ci = interval_ci(est.lower_hat, est.upper_hat, est.se_lower, est.se_upper, config.alpha)?;
                (ci, false)
            };
            Ok(Draw { est, ci, empty })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Adjusts the never-persuadable selection probability so that
/// `Pr(Y=1|D=1) − Pr(Y=1|D=0)` equals `gap`, and marks the spec as
/// MTS-violating when the result requires it.
pub fn with_conditional_gap(base: &DgpSpec, gap: f64) -> Result<DgpSpec> {
    let at = |s_np: f64| -> Result<f64> {
        let mut spec = *base;
        spec.selection.np = s_np;
        let [p00, p10, p01, p11] = spec.population_latent().observed();
        let d = JointDistribution::new(p00, p10, p01, p11)?.derive();
        Ok(d.pc1 - d.pc0 - gap)
    };
    // Raising s_NP adds Y=0 units to the treated and removes them from the
    // controls, so the gap falls monotonically.
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    let (f_lo, f_hi) = (at(lo)?, at(hi)?);
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::NoRoot(format!(
            "gap {gap} is not reachable by varying the never-persuadable selection probability"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut spec = *base;
    spec.selection.np = 0.5 * (lo + hi);
    spec.break_mts = !spec.population_latent().satisfies_mts(MTS_CHECK_TOLERANCE);
    spec.validate()?;
    Ok(spec)
}
