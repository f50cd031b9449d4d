//! Delimited input tables: per-household incomes, the net-worth-by-income
//! percentile table and the expenditure-by-income-decile table.
//!
//! Every table is comma-separated with a header row. Errors carry the
//! 1-based line number of the offending row.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Monotone piecewise-linear lookup from percentile (0–100) to a value.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileTable {
    points: Vec<(f64, f64)>,
}

impl PercentileTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("percentile table", "no rows"));
        }
        for (p, v) in &points {
            if !(0.0..=100.0).contains(p) {
                return Err(Error::param("percentile table", format!("percentile {p} not in [0, 100]")));
            }
            if !v.is_finite() {
                return Err(Error::param("percentile table", "non-finite value"));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::param("percentile table", "percentiles must be strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation between rows; flat beyond the first and last row.
    pub fn lookup(&self, percentile: f64) -> f64 {
        let pts = &self.points;
        if percentile <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if percentile >= last.0 {
            return last.1;
        }
        let hi = pts.partition_point(|&(p, _)| p <= percentile);
        let (p0, v0) = pts[hi - 1];
        let (p1, v1) = pts[hi];
        v0 + (v1 - v0) * (percentile - p0) / (p1 - p0)
    }
}

impl Default for PercentileTable {
    /// Illustrative median net worth by income percentile (US dollars).
    fn default() -> Self {
        Self::new(vec![
            (0.0, 0.0),
            (10.0, 6_500.0),
            (30.0, 31_200.0),
            (50.0, 71_400.0),
            (70.0, 139_200.0),
            (85.0, 283_000.0),
            (95.0, 1_589_300.0),
            (100.0, 2_500_000.0),
        ])
        .expect("valid default table")
    }
}

/// Monthly basic expenditures per income decile.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpenditureTable {
    by_decile: [f64; 10],
}

impl ExpenditureTable {
    pub fn new(by_decile: [f64; 10]) -> Result<Self> {
        if by_decile.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("expenditure table", "expenses must be finite and >= 0"));
        }
        Ok(Self { by_decile })
    }

    pub fn for_decile(&self, decile: u8) -> f64 {
        self.by_decile[decile as usize]
    }

    pub fn values(&self) -> &[f64; 10] {
        &self.by_decile
    }
}

impl Default for ExpenditureTable {
    /// Illustrative annual consumer expenditures by income decile, as monthly amounts.
    fn default() -> Self {
        let annual = [
            26_000.0, 32_500.0, 38_800.0, 45_300.0, 52_000.0, 58_700.0, 66_200.0, 76_500.0,
            92_000.0, 138_000.0,
        ];
        Self::new(annual.map(|a| a / 12.0)).expect("valid default table")
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str, source: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::ingest(source, 1, format!("missing column `{name}`")))
}

fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn csv_error(source: &str, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("ragged row: expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    Error::ingest(source, line, message)
}

fn number(record: &csv::StringRecord, idx: usize, name: &str, source: &str) -> Result<f64> {
    let line = line_of(record);
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::ingest(source, line, format!("missing `{name}` field")))?;
    let value: f64 = raw
        .parse()
        .map_err(|_| Error::ingest(source, line, format!("`{name}` is not a number: {raw:?}")))?;
    if !value.is_finite() {
        return Err(Error::ingest(source, line, format!("`{name}` is not finite")));
    }
    Ok(value)
}

/// Parses a household income file (column `income`, monthly currency).
pub fn parse_income_table(text: &str, source: &str) -> Result<Vec<f64>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let idx = column(&headers, "income", source)?;
    let mut incomes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let income = number(&record, idx, "income", source)?;
        if income < 0.0 {
            return Err(Error::ingest(source, line_of(&record), "income must be >= 0"));
        }
        incomes.push(income);
    }
    if incomes.is_empty() {
        return Err(Error::ingest(source, 1, "no income rows"));
    }
    Ok(incomes)
}

/// Parses a `percentile,net_worth` table.
pub fn parse_percentile_table(text: &str, source: &str) -> Result<PercentileTable> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let p_idx = column(&headers, "percentile", source)?;
    let v_idx = column(&headers, "net_worth", source)?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = line_of(&record);
        let p = number(&record, p_idx, "percentile", source)?;
        let v = number(&record, v_idx, "net_worth", source)?;
        if !(0.0..=100.0).contains(&p) {
            return Err(Error::ingest(source, line, format!("percentile {p} not in [0, 100]")));
        }
        if let Some(&(prev, _)) = points.last() {
            if p <= prev {
                return Err(Error::ingest(source, line, "percentiles must be strictly increasing"));
            }
        }
        points.push((p, v));
    }
    if points.is_empty() {
        return Err(Error::ingest(source, 1, "no table rows"));
    }
    PercentileTable::new(points)
}

/// Parses an `income_decile,monthly_expenses` table; every decile 0–9 exactly once.
pub fn parse_expenditure_table(text: &str, source: &str) -> Result<ExpenditureTable> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let d_idx = column(&headers, "income_decile", source)?;
    let v_idx = column(&headers, "monthly_expenses", source)?;
    let mut by_decile = [None; 10];
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = line_of(&record);
        let raw = record.get(d_idx).unwrap_or_default();
        let decile: usize = raw
            .parse()
            .ok()
            .filter(|d| *d < 10)
            .ok_or_else(|| Error::ingest(source, line, format!("income_decile must be 0-9, got {raw:?}")))?;
        let value = number(&record, v_idx, "monthly_expenses", source)?;
        if value < 0.0 {
            return Err(Error::ingest(source, line, "monthly_expenses must be >= 0"));
        }
        if by_decile[decile].replace(value).is_some() {
            return Err(Error::ingest(source, line, format!("duplicate income_decile {decile}")));
        }
    }
    let mut values = [0.0; 10];
    for (d, slot) in by_decile.iter().enumerate() {
        values[d] = slot.ok_or_else(|| Error::ingest(source, 0, format!("income_decile {d} missing")))?;
    }
    ExpenditureTable::new(values)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn income_table_basic() {
        let v = parse_income_table("id,income\n1,100\n2, 250.5\n", "inc").unwrap();
        assert_eq!(v, vec![100.0, 250.5]);
    }

    #[test]
    fn income_table_errors_carry_lines() {
        let err = parse_income_table("income\n10\nabc\n", "inc.csv").unwrap_err();
        assert!(err.to_string().starts_with("inc.csv:3:"), "{err}");
        let err = parse_income_table("income,x\n10,1\n20\n", "inc.csv").unwrap_err();
        assert!(err.to_string().contains("ragged"), "{err}");
        let err = parse_income_table("wage\n10\n", "inc.csv").unwrap_err();
        assert!(err.to_string().contains("missing column"), "{err}");
        assert!(parse_income_table("income\n-1\n", "inc").is_err());
        assert!(parse_income_table("income\n", "inc").is_err());
    }

    #[test]
    fn percentile_lookup_interpolates() {
        let t = parse_percentile_table("percentile,net_worth\n0,0\n50,100\n100,300\n", "nw").unwrap();
        assert_eq!(t.lookup(25.0), 50.0);
        assert_eq!(t.lookup(75.0), 200.0);
        assert_eq!(t.lookup(-3.0), 0.0);
        assert_eq!(t.lookup(100.0), 300.0);
    }

    #[test]
    fn percentile_table_must_increase() {
        let err = parse_percentile_table("percentile,net_worth\n10,1\n10,2\n", "nw").unwrap_err();
        assert!(err.to_string().starts_with("nw:3:"), "{err}");
        assert!(parse_percentile_table("percentile,net_worth\n101,1\n", "nw").is_err());
    }

    #[test]
    fn expenditure_table_requires_all_deciles() {
        let mut text = String::from("income_decile,monthly_expenses\n");
        for d in 0..10 {
            text.push_str(&format!("{d},{}\n", 1000 + d * 100));
        }
        let t = parse_expenditure_table(&text, "exp").unwrap();
        assert_eq!(t.for_decile(9), 1900.0);

        let missing: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(parse_expenditure_table(&missing, "exp").is_err());
        let dup = format!("{text}3,5\n");
        let err = parse_expenditure_table(&dup, "exp").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        assert!(parse_expenditure_table("income_decile,monthly_expenses\n10,1\n", "exp").is_err());
    }
}
