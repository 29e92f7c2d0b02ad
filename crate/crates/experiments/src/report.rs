//! Per-seed run records, percentile aggregation and the CSV report format
//! `algo,rank_I,rank_J,metric,value`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// One algorithm run at one rank budget and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algo: String,
    /// Requested row-index budget.
    pub rank_i: usize,
    /// Requested column-index budget.
    pub rank_j: usize,
    pub seed: u64,
    /// Rows actually used (`|I|`, or the Tucker row rank).
    pub card_i: usize,
    /// Columns actually used.
    pub card_j: usize,
    /// Relative `l2(H)` error; `None` when no reference matrix is available.
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub records: Vec<RunRecord>,
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algo: String,
    pub rank_i: usize,
    pub rank_j: usize,
    pub metric: String,
    pub value: f64,
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(if lo == hi { v[lo] } else { v[lo] + (v[hi] - v[lo]) * frac })
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 50.0)
}

impl RunReport {
    pub fn push(&mut self, record: RunRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: RunReport) {
        self.records.extend(other.records);
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn groups(&self) -> BTreeMap<(&str, usize, usize), Vec<&RunRecord>> {
        let mut groups: BTreeMap<(&str, usize, usize), Vec<&RunRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry((r.algo.as_str(), r.rank_i, r.rank_j)).or_default().push(r);
        }
        groups
    }

    /// Relative errors of `algo` at budget `(rank, rank)` over all seeds.
    pub fn errors(&self, algo: &str, rank: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.algo == algo && r.rank_i == rank && r.rank_j == rank)
            .filter_map(|r| r.rel_error)
            .collect()
    }

    pub fn median_error(&self, algo: &str, rank: usize) -> Option<f64> {
        median(&self.errors(algo, rank))
    }

    /// Distinct rank budgets recorded for `algo`, ascending.
    pub fn ranks(&self, algo: &str) -> Vec<usize> {
        let mut ranks: Vec<usize> = self.records.iter().filter(|r| r.algo == algo).map(|r| r.rank_i).collect();
        ranks.sort_unstable();
        ranks.dedup();
        ranks
    }

    /// Aggregated rows, ordered by algorithm, rank and metric name.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = Vec::new();
        for ((algo, rank_i, rank_j), recs) in self.groups() {
            let mut metrics: BTreeMap<&str, f64> = BTreeMap::new();
            metrics.insert("seeds", recs.len() as f64);
            let ci: Vec<f64> = recs.iter().map(|r| r.card_i as f64).collect();
            let cj: Vec<f64> = recs.iter().map(|r| r.card_j as f64).collect();
            metrics.insert("card_I_p50", median(&ci).unwrap_or(0.0));
            metrics.insert("card_J_p50", median(&cj).unwrap_or(0.0));
            let errs: Vec<f64> = recs.iter().filter_map(|r| r.rel_error).collect();
            if !errs.is_empty() {
                for (name, q) in [("rel_error_p10", 10.0), ("rel_error_p50", 50.0), ("rel_error_p90", 90.0)] {
                    metrics.insert(name, percentile(&errs, q).unwrap_or(f64::NAN));
                }
            }
            for (metric, value) in metrics {
                out.push(ReportRow {
                    algo: algo.to_string(),
                    rank_i,
                    rank_j,
                    metric: metric.to_string(),
                    value,
                });
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["algo", "rank_I", "rank_J", "metric", "value"])?;
        for row in self.rows() {
            w.write_record([
                row.algo.clone(),
                row.rank_i.to_string(),
                row.rank_j.to_string(),
                row.metric.clone(),
                // Display prints the shortest string that parses back exactly
                row.value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes the aggregated report to `path`.
pub fn emit_report(report: &RunReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    report.write_csv(std::io::BufWriter::new(file))
}

/// Parses a report written by [`emit_report`].
pub fn read_report<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).with_context(|| format!("missing column {k}"));
        rows.push(ReportRow {
            algo: field(0)?.to_string(),
            rank_i: field(1)?.parse()?,
            rank_j: field(2)?.parse()?,
            metric: field(3)?.to_string(),
            value: field(4)?.parse()?,
        });
    }
    Ok(rows)
}
