//! Per-round precarity distributions, serialized as delimited text, and the
//! stratum-by-stratum comparison of two reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::{Attribute, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::metrics::PrecarityParams;
use crate::population::IncomeClass;

pub const HISTOGRAM_BINS: usize = 40;
/// First bin of the top quartile of the index range.
pub const TOP_QUARTILE_FIRST_BIN: usize = HISTOGRAM_BINS * 3 / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    All,
    Class(IncomeClass),
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [
        Stratum::All,
        Stratum::Class(IncomeClass::Low),
        Stratum::Class(IncomeClass::Middle),
        Stratum::Class(IncomeClass::High),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::All => "all",
            Stratum::Class(c) => c.as_str(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.as_str() == s)
    }

    fn contains(self, class: IncomeClass) -> bool {
        match self {
            Stratum::All => true,
            Stratum::Class(c) => c == class,
        }
    }
}

fn parse_attribute(s: &str) -> Option<Attribute> {
    Attribute::ALL.into_iter().find(|a| a.as_str() == s)
}

/// Equal-width histogram over `[0, upper]`.
pub fn histogram(values: &[f64], upper: f64) -> Vec<u64> {
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &v in values {
        let bin = ((v / upper) * HISTOGRAM_BINS as f64).floor();
        let bin = if bin.is_nan() { 0 } else { (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1) };
        counts[bin] += 1;
    }
    counts
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub round: usize,
    pub attribute: Attribute,
    pub stratum: Stratum,
    pub count: u64,
    pub mean: f64,
    pub median: f64,
    pub bins: Vec<u64>,
}

impl SummaryRow {
    pub fn top_quartile_count(&self) -> u64 {
        self.bins[TOP_QUARTILE_FIRST_BIN..].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    /// Upper edge of the histogram range.
    pub upper: f64,
    pub rows: Vec<SummaryRow>,
}

const FIXED_COLUMNS: [&str; 7] = ["scenario", "round", "attribute", "stratum", "count", "mean", "median"];

impl ScenarioReport {
    /// Summaries for rounds `1..=rounds`, every attribute and stratum.
    pub fn from_record(scenario: &str, record: &TrajectoryRecord, params: &PrecarityParams) -> Self {
        let upper = params.upper_bound();
        let mut rows = Vec::new();
        for round in 1..=record.rounds() {
            for attribute in Attribute::ALL {
                let values = record.values(round, attribute);
                for stratum in Stratum::ALL {
                    let selected: Vec<f64> = values
                        .iter()
                        .zip(&record.income_classes)
                        .filter(|(_, c)| stratum.contains(**c))
                        .map(|(v, _)| *v)
                        .collect();
                    rows.push(SummaryRow {
                        round,
                        attribute,
                        stratum,
                        count: selected.len() as u64,
                        mean: mean(&selected),
                        median: median(&selected),
                        bins: histogram(&selected, upper),
                    });
                }
            }
        }
        Self {
            scenario: scenario.to_string(),
            upper,
            rows,
        }
    }

    pub fn row(&self, round: usize, attribute: Attribute, stratum: Stratum) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.round == round && r.attribute == attribute && r.stratum == stratum)
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=HISTOGRAM_BINS)
            .map(|k| self.upper * k as f64 / HISTOGRAM_BINS as f64)
            .collect()
    }

    pub fn header() -> String {
        let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend((0..HISTOGRAM_BINS).map(|k| format!("bin_{k:02}")));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                self.scenario,
                r.round,
                r.attribute.as_str(),
                r.stratum.as_str(),
                r.count,
                r.mean,
                r.median
            );
            for c in &r.bins {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a report written by [`ScenarioReport::to_csv`].
pub fn parse_report(text: &str, upper: f64) -> Result<ScenarioReport> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Report("empty report".into()))?;
    if header.trim_end() != ScenarioReport::header() {
        return Err(Error::Report("unexpected header".into()));
    }
    let mut scenario: Option<String> = None;
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Report(format!("line {line_no}: {what}"));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FIXED_COLUMNS.len() + HISTOGRAM_BINS {
            return Err(bad("wrong number of fields"));
        }
        match &scenario {
            None => scenario = Some(fields[0].to_string()),
            Some(s) if s != fields[0] => return Err(bad("mixed scenario names")),
            Some(_) => {}
        }
        let round = fields[1].parse().map_err(|_| bad("bad round"))?;
        let attribute = parse_attribute(fields[2]).ok_or_else(|| bad("bad attribute"))?;
        let stratum = Stratum::parse(fields[3]).ok_or_else(|| bad("bad stratum"))?;
        let count: u64 = fields[4].parse().map_err(|_| bad("bad count"))?;
        let mean: f64 = fields[5].parse().map_err(|_| bad("bad mean"))?;
        let median: f64 = fields[6].parse().map_err(|_| bad("bad median"))?;
        if !(mean.is_finite() && median.is_finite()) {
            return Err(bad("non-finite summary value"));
        }
        let bins = fields[FIXED_COLUMNS.len()..]
            .iter()
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("bad bin count"))?;
        if bins.iter().try_fold(0u64, |acc, &b| acc.checked_add(b)) != Some(count) {
            return Err(bad("bin counts do not sum to count"));
        }
        rows.push(SummaryRow {
            round,
            attribute,
            stratum,
            count,
            mean,
            median,
            bins,
        });
    }
    Ok(ScenarioReport {
        scenario: scenario.unwrap_or_default(),
        upper,
        rows,
    })
}

/// Run metadata written next to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub scenario: String,
    pub seed: u64,
    pub config_digest: String,
    pub agent_model: String,
    pub rounds: usize,
    pub households: usize,
    pub acceptance_quantile: f64,
    pub threshold_income: f64,
    pub intervention: String,
    pub bin_edges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub round: usize,
    pub attribute: Attribute,
    pub stratum: Stratum,
    pub mean_delta: f64,
    pub median_delta: f64,
    pub top_quartile_delta: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario_a: String,
    pub scenario_b: String,
    pub rows: Vec<ComparisonRow>,
}

/// Per-stratum deltas `a − b`. Both reports must cover the same strata in
/// the same order.
pub fn compare(a: &ScenarioReport, b: &ScenarioReport) -> Result<Comparison> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::Report(format!(
            "reports have {} and {} strata",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let rows = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| {
            if (x.round, x.attribute, x.stratum) != (y.round, y.attribute, y.stratum) {
                return Err(Error::Report(format!(
                    "stratum mismatch: round {} {} {} vs round {} {} {}",
                    x.round,
                    x.attribute.as_str(),
                    x.stratum.as_str(),
                    y.round,
                    y.attribute.as_str(),
                    y.stratum.as_str()
                )));
            }
            Ok(ComparisonRow {
                round: x.round,
                attribute: x.attribute,
                stratum: x.stratum,
                mean_delta: x.mean - y.mean,
                median_delta: x.median - y.median,
                top_quartile_delta: x.top_quartile_count() as i64 - y.top_quartile_count() as i64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        scenario_a: a.scenario.clone(),
        scenario_b: b.scenario.clone(),
        rows,
    })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("scenario_a,scenario_b,round,attribute,stratum,mean_delta,median_delta,top_quartile_delta\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.scenario_a,
                self.scenario_b,
                r.round,
                r.attribute.as_str(),
                r.stratum.as_str(),
                r.mean_delta,
                r.median_delta,
                r.top_quartile_delta
            );
        }
        out
    }
}
