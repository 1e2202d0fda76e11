use std::fmt::Write as _;

use persuasion_core::{EstimandKind, Interval};
use serde::{Deserialize, Serialize};

/// Probability as a percentage rounded half-to-even at two decimals.
pub fn pct(x: f64) -> String {
    if !x.is_finite() {
        return "-".into();
    }
    let v = (x * 100.0 * 100.0).round_ties_even() / 100.0;
    // Avoid printing "-0.00".
    format!("{:.2}", v + 0.0)
}

/// One estimand's row in `estimate` output. Values are probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub estimand: EstimandKind,
    pub assumptions: String,
    pub lower: f64,
    pub upper: f64,
    pub se_lower: f64,
    pub se_upper: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub alpha: f64,
    pub n: f64,
    pub clusters: usize,
    pub empty: bool,
}

impl EstimateRow {
    /// Rows with a lower endpoint fixed at zero are reported as upper bounds.
    pub fn one_sided(&self) -> bool {
        self.lower == 0.0 && self.se_lower == 0.0
    }
}

pub fn estimate_json(rows: &[EstimateRow]) -> String {
    let mut out = serde_json::to_string_pretty(rows).expect("rows serialize");
    out.push('\n');
    out
}

pub fn estimate_csv(rows: &[EstimateRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn estimate_text(rows: &[EstimateRow]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return out;
    };
    writeln!(
        out,
        "n = {}  clusters = {}  assumptions = {}  alpha = {}",
        first.n, first.clusters, first.assumptions, first.alpha
    )
    .unwrap();

    let upper: Vec<&EstimateRow> = rows.iter().filter(|r| r.one_sided()).collect();
    let interval: Vec<&EstimateRow> = rows.iter().filter(|r| !r.one_sided()).collect();
    if !upper.is_empty() {
        writeln!(out, "\nUpper bounds (percent)").unwrap();
        writeln!(out, "{:<9}{:>9}{:>9}{:>9}", "Estimand", "Est", "SE", "UCB").unwrap();
        for r in &upper {
            let ucb = if r.empty {
                "empty".to_string()
            } else {
                r.ci_upper.map_or("-".into(), pct)
            };
            writeln!(
                out,
                "{:<9}{:>9}{:>9}{:>9}",
                r.estimand.label(),
                pct(r.upper),
                pct(r.se_upper),
                ucb
            )
            .unwrap();
        }
    }
    if !interval.is_empty() {
        writeln!(out, "\nInterval bounds (percent)").unwrap();
        writeln!(
            out,
            "{:<9}{:>9}{:>9}{:>9}{:>9}",
            "Estimand", "CI-LB", "LB", "UB", "CI-UB"
        )
        .unwrap();
        for r in &interval {
            writeln!(
                out,
                "{:<9}{:>9}{:>9}{:>9}{:>9}",
                r.estimand.label(),
                r.ci_lower.map_or("-".into(), pct),
                pct(r.lower),
                pct(r.upper),
                r.ci_upper.map_or("-".into(), pct)
            )
            .unwrap();
        }
    }
    let rejected: Vec<&str> = rows
        .iter()
        .filter(|r| r.empty)
        .map(|r| r.estimand.label())
        .collect();
    if !rejected.is_empty() {
        writeln!(
            out,
            "\nspecification test: identified set empty at alpha = {} ({}); the maintained assumptions are rejected",
            first.alpha,
            rejected.join(", ")
        )
        .unwrap();
    }
    out
}

/// One estimand's row in `bounds` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub estimand: EstimandKind,
    pub assumptions: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_upper: Option<f64>,
}

impl BoundsRow {
    fn closed(&self) -> Option<Interval> {
        Some(Interval::identified(self.lower?, self.upper?))
    }

    fn oracle(&self) -> Option<Interval> {
        Some(Interval::identified(self.oracle_lower?, self.oracle_upper?))
    }

    /// Largest endpoint gap between the closed form and the oracle.
    pub fn discrepancy(&self) -> Option<f64> {
        let (c, o) = (self.closed()?, self.oracle()?);
        Some((c.lower - o.lower).abs().max((c.upper - o.upper).abs()))
    }
}

pub fn bounds_text(rows: &[BoundsRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let closed = r
            .closed()
            .map_or("no closed form".to_string(), |iv| iv.to_string());
        write!(out, "{}: {}", r.estimand.label(), closed).unwrap();
        if let Some(o) = r.oracle() {
            write!(out, "  oracle {o}").unwrap();
        }
        out.push('\n');
    }
    let gaps: Vec<f64> = rows.iter().filter_map(BoundsRow::discrepancy).collect();
    if let Some(max) = gaps.iter().copied().reduce(f64::max) {
        writeln!(out, "max discrepancy: {max:.1e}").unwrap();
    }
    out
}

pub fn bounds_json(rows: &[BoundsRow]) -> String {
    let mut out = serde_json::to_string_pretty(rows).expect("rows serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rounds_half_even() {
        assert_eq!(pct(0.0068), "0.68");
        assert_eq!(pct(0.033797), "3.38");
        assert_eq!(pct(0.00125), "0.12");
        assert_eq!(pct(0.00135), "0.14");
        assert_eq!(pct(-0.0000001), "0.00");
        assert_eq!(pct(f64::NAN), "-");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let rows = vec![EstimateRow {
            estimand: EstimandKind::Apr,
            assumptions: "mtr+mts".into(),
            lower: 0.0,
            upper: 0.1 + 0.2,
            se_lower: 0.0,
            se_upper: 1.0 / 3.0,
            ci_lower: None,
            ci_upper: None,
            alpha: 0.05,
            n: 5000.0,
            clusters: 5000,
            empty: true,
        }];
        let text = estimate_json(&rows);
        let parsed: Vec<EstimateRow> = serde_json::from_str(&text).unwrap();
        assert_eq!(estimate_json(&parsed), text);
    }
}
