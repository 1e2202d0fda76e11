mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use persuasion_core::advise::{advise, DesignFacts};
use persuasion_core::bounds::sharp_bounds;
use persuasion_core::estimate::{clustered_se, reported_estimands};
use persuasion_core::inference::{interval_ci, shares_ci, spec_test_ci};
use persuasion_core::oracle::{default_grid, oracle_bounds};
use persuasion_core::sample::{CsvSchema, Filter, MicroSample};
use persuasion_core::sim::{draw_sample, run_coverage, CoverageConfig, DgpSpec, Selection, TypeMix};
use persuasion_core::{AssumptionSet, EstimandKind, JointDistribution};

use render::{BoundsRow, EstimateRow};

#[derive(Parser)]
#[command(name = "persuasion", version, about = "Sharp bounds on persuasion rates under MTR/MTS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identified intervals from population probabilities.
    Bounds(BoundsArgs),
    /// Plug-in bounds, standard errors and confidence intervals from a CSV file.
    Estimate(EstimateArgs),
    /// Monte Carlo coverage study; writes a JSON report.
    Coverage(CoverageArgs),
    /// Recommend an estimation strategy for a study design.
    Advise(AdviseArgs),
    /// Draw a synthetic sample and write it as CSV.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct BoundsArgs {
    /// Cell probabilities p00,p10,p01,p11 with p_yd = Pr(Y=y, D=d).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["p0", "p1", "q1"])]
    cells: Option<Vec<f64>>,
    /// Pr(Y=1 | D=0).
    #[arg(long, requires_all = ["p1", "q1"])]
    p0: Option<f64>,
    /// Pr(Y=1 | D=1).
    #[arg(long, requires_all = ["p0", "q1"])]
    p1: Option<f64>,
    /// Pr(D=1).
    #[arg(long, requires_all = ["p0", "p1"])]
    q1: Option<f64>,
    #[arg(long)]
    mtr: bool,
    #[arg(long)]
    mts: bool,
    /// Comma-separated estimands (apr, r-apr, ps, pn, pns, ate, np, ap, tp).
    #[arg(long, value_delimiter = ',')]
    estimands: Option<Vec<String>>,
    /// Cross-check against the brute-force latent-table search.
    #[arg(long)]
    oracle: bool,
    /// Oracle grid step.
    #[arg(long, requires = "oracle")]
    grid: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "y")]
    y: String,
    #[arg(long, default_value = "d")]
    d: String,
    #[arg(long)]
    cluster: Option<String>,
    #[arg(long)]
    weight: Option<String>,
    /// Keep rows with column=value; repeatable.
    #[arg(long)]
    filter: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// mtr+mts, mts, mtr or none.
    #[arg(long, default_value = "mtr+mts")]
    assume: AssumptionSet,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct DgpArgs {
    /// JSON design file; overrides the other design flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    np: f64,
    #[arg(long, default_value_t = 0.7)]
    ap: f64,
    #[arg(long, default_value_t = 0.1)]
    tp: f64,
    #[arg(long, default_value_t = 0.0)]
    defier: f64,
    #[arg(long, default_value_t = 0.5)]
    s_np: f64,
    #[arg(long, default_value_t = 0.5)]
    s_ap: f64,
    #[arg(long, default_value_t = 0.5)]
    s_tp: f64,
    #[arg(long, default_value_t = 0.5)]
    s_defier: f64,
    /// Rows, as singleton clusters when --clusters is absent.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, requires = "cluster_size")]
    clusters: Option<usize>,
    #[arg(long, requires = "clusters")]
    cluster_size: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    outcome_shift: bool,
    #[arg(long)]
    break_mtr: bool,
    #[arg(long)]
    break_mts: bool,
}

impl DgpArgs {
    fn spec(&self) -> anyhow::Result<DgpSpec> {
        let spec = if let Some(path) = &self.spec {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            let mut spec = DgpSpec::iid(
                TypeMix {
                    np: self.np,
                    ap: self.ap,
                    tp: self.tp,
                    defier: self.defier,
                },
                Selection {
                    np: self.s_np,
                    ap: self.s_ap,
                    tp: self.s_tp,
                    defier: self.s_defier,
                },
                self.n,
            );
            if let (Some(g), Some(m)) = (self.clusters, self.cluster_size) {
                spec.clusters = g;
                spec.cluster_size = m;
            }
            spec.rho = self.rho;
            spec.outcome_shift = self.outcome_shift;
            spec.break_mtr = self.break_mtr;
            spec.break_mts = self.break_mts;
            spec
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    dgp: DgpArgs,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "apr")]
    targets: Vec<String>,
    #[arg(long, default_value = "mtr+mts")]
    assume: AssumptionSet,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AdviseArgs {
    /// Sample selection is a concern.
    #[arg(long)]
    selection: bool,
    /// Treatment is as good as randomly assigned.
    #[arg(long)]
    exogenous: bool,
    /// A valid instrument is available.
    #[arg(long)]
    iv: bool,
    /// Panel data with pre-treatment outcomes are available.
    #[arg(long)]
    panel: bool,
    /// Monotone treatment selection is plausible.
    #[arg(long)]
    mts: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    dgp: DgpArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_estimands(names: &[String]) -> anyhow::Result<Vec<EstimandKind>> {
    let mut out = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            out.extend(EstimandKind::ALL);
        } else {
            out.push(name.parse()?);
        }
    }
    out.dedup();
    Ok(out)
}

fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<String> {
    let dist = match (&args.cells, args.p0, args.p1, args.q1) {
        (Some(c), ..) => match c[..] {
            [p00, p10, p01, p11] => JointDistribution::new(p00, p10, p01, p11)?,
            _ => bail!("--cells takes four comma-separated probabilities, got {}", c.len()),
        },
        (None, Some(p0), Some(p1), Some(q1)) => JointDistribution::from_conditionals(p0, p1, q1)?,
        _ => bail!("give either --cells or all of --p0, --p1, --q1"),
    };
    let assumptions = AssumptionSet::new(args.mtr, args.mts);
    let estimands = match &args.estimands {
        Some(names) => parse_estimands(names)?,
        None => reported_estimands(assumptions),
    };
    let oracle = if args.oracle {
        let grid = args.grid.unwrap_or_else(|| default_grid(assumptions));
        Some(oracle_bounds(&estimands, assumptions, &dist, grid)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for (k, &e) in estimands.iter().enumerate() {
        let closed = match sharp_bounds(e, assumptions, &dist) {
            Ok(iv) => Some(iv),
            // Shares outside MTR+MTS are still available from the oracle.
            Err(persuasion_core::Error::SharesNotCovered(_)) if oracle.is_some() => None,
            Err(err) => return Err(err.into()),
        };
        let o = oracle.as_ref().map(|o| o[k].interval);
        rows.push(BoundsRow {
            estimand: e,
            assumptions: assumptions.to_string(),
            lower: closed.map(|iv| iv.lower),
            upper: closed.map(|iv| iv.upper),
            oracle_lower: o.map(|iv| iv.lower),
            oracle_upper: o.map(|iv| iv.upper),
        });
    }
    Ok(match args.format {
        Format::Json => render::bounds_json(&rows),
        Format::Text => render::bounds_text(&rows),
        Format::Csv => bail!("csv output is only available for estimate"),
    })
}

fn cmd_estimate(args: &EstimateArgs) -> anyhow::Result<String> {
    let schema = CsvSchema {
        y: args.y.clone(),
        d: args.d.clone(),
        cluster: args.cluster.clone(),
        weight: args.weight.clone(),
    };
    let sample = MicroSample::from_csv_path(&args.input, &schema)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut filter = Filter::new();
    for cond in &args.filter {
        filter.parse_condition(cond)?;
    }
    let estimates = clustered_se(&sample, &filter, args.assume)?;
    let mut rows = Vec::new();
    for est in estimates.values() {
        let (ci, empty) = if est.lower_is_fixed() {
            let ci = spec_test_ci(est, args.alpha)?;
            (ci, ci.is_empty())
        } else if est.estimand.is_share() {
            (shares_ci(est, args.alpha)?, false)
        } else {
            let ci = interval_ci(est.lower_hat, est.upper_hat, est.se_lower, est.se_upper, args.alpha)?;
            (ci, false)
        };
        rows.push(EstimateRow {
            estimand: est.estimand,
            assumptions: est.assumptions.to_string(),
            lower: est.lower_hat,
            upper: est.upper_hat,
            se_lower: est.se_lower,
            se_upper: est.se_upper,
            ci_lower: (!empty).then_some(ci.lower),
            ci_upper: (!empty).then_some(ci.upper),
            alpha: args.alpha,
            n: est.n,
            clusters: est.g,
            empty,
        });
    }
    Ok(match args.format {
        Format::Text => render::estimate_text(&rows),
        Format::Json => render::estimate_json(&rows),
        Format::Csv => render::estimate_csv(&rows)?,
    })
}

fn cmd_coverage(args: &CoverageArgs) -> anyhow::Result<()> {
    let spec = args.dgp.spec()?;
    let config = CoverageConfig {
        targets: parse_estimands(&args.targets)?,
        replications: args.reps,
        alpha: args.alpha,
        seed: args.seed,
        assumptions: args.assume,
    };
    let report = run_coverage(&spec, &config)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(args.output.as_ref(), text.as_bytes())
}

fn cmd_advise(args: &AdviseArgs) -> String {
    let facts = DesignFacts {
        selection: args.selection,
        exogenous: args.exogenous,
        iv: args.iv,
        panel: args.panel,
        mts: args.mts,
    };
    format!("{}\n", advise(&facts))
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let spec = args.dgp.spec()?;
    let sample = draw_sample(&spec, args.seed)?;
    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    emit(args.output.as_ref(), &buf)
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let text = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a)?,
        Command::Estimate(a) => cmd_estimate(a)?,
        Command::Coverage(a) => return cmd_coverage(a),
        Command::Advise(a) => cmd_advise(a),
        Command::Simulate(a) => return cmd_simulate(a),
    };
    print!("{text}");
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<persuasion_core::Error>() {
        Some(e) if e.is_domain() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
