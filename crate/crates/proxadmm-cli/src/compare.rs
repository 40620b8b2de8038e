//! Aligns solver traces by iteration and tabulates one metric across them.
//!
//! Any CSV with a `t` column and the needed metric columns qualifies, so
//! traces produced by other implementations can be compared against ours.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proxadmm::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    /// Constraint violation ‖Ax - b‖.
    #[value(name = "feas")]
    Feas,
    /// Projected-gradient optimality gap (needs the extended trace column).
    #[value(name = "opt_gap")]
    OptGap,
    /// Optimality gap plus constraint violation.
    #[value(name = "sum")]
    Sum,
}

impl Metric {
    fn columns(self) -> &'static [&'static str] {
        match self {
            Metric::Feas => &["feas"],
            Metric::OptGap => &["opt_gap"],
            Metric::Sum => &["opt_gap", "feas"],
        }
    }
}

/// Iteration-aligned metric table. Rows keep only iterations present in
/// every trace; `spread` is max minus min across the row.
#[derive(Debug)]
pub struct CompareTable {
    pub names: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>, f64)>,
}

impl CompareTable {
    /// Writes the table as CSV to stdout. Stops quietly if the reader goes
    /// away (`compare ... | head` must not panic on the broken pipe).
    pub fn print(&self) {
        use std::io::Write;
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        if writeln!(out, "t,{},spread", self.names.join(",")).is_err() {
            return;
        }
        for (t, values, spread) in &self.rows {
            let cells: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            if writeln!(out, "{t},{},{spread}", cells.join(",")).is_err() {
                return;
            }
        }
    }
}

/// Reads one trace and extracts the metric per iteration. Rows where a
/// needed cell is empty (sampled columns) are skipped.
fn load_metric(path: &Path, metric: Metric) -> Result<BTreeMap<u64, f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read trace {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema(format!("trace {} is empty", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let index_of = |name: &str| columns.iter().position(|c| *c == name);
    let t_idx = index_of("t")
        .ok_or_else(|| Error::Schema(format!("trace {} lacks column `t`", path.display())))?;
    let mut needed = Vec::new();
    for name in metric.columns() {
        let idx = index_of(name).ok_or_else(|| {
            Error::Schema(format!("trace {} lacks column `{name}`", path.display()))
        })?;
        needed.push(idx);
    }

    let mut out = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Schema(format!(
                "trace {} row {} has {} fields, header has {}",
                path.display(),
                lineno + 2,
                fields.len(),
                columns.len()
            )));
        }
        if needed.iter().any(|&i| fields[i].is_empty()) {
            continue;
        }
        let t: u64 = fields[t_idx].parse().map_err(|_| {
            Error::Schema(format!(
                "trace {} row {}: bad iteration `{}`",
                path.display(),
                lineno + 2,
                fields[t_idx]
            ))
        })?;
        let mut value = 0.0;
        for &i in &needed {
            value += fields[i].parse::<f64>().map_err(|_| {
                Error::Schema(format!(
                    "trace {} row {}: bad number `{}` in column `{}`",
                    path.display(),
                    lineno + 2,
                    fields[i],
                    columns[i]
                ))
            })?;
        }
        out.insert(t, value);
    }
    Ok(out)
}

pub fn compare_traces(paths: &[PathBuf], metric: Metric) -> Result<CompareTable> {
    if paths.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "comparison needs at least two traces, got {}",
            paths.len()
        )));
    }
    let traces: Vec<BTreeMap<u64, f64>> = paths
        .iter()
        .map(|p| load_metric(p, metric))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &t in traces[0].keys() {
        let values: Option<Vec<f64>> = traces.iter().map(|tr| tr.get(&t).copied()).collect();
        let Some(values) = values else { continue };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        rows.push((t, values, hi - lo));
    }
    Ok(CompareTable {
        names: paths.iter().map(|p| p.display().to_string()).collect(),
        rows,
    })
}
