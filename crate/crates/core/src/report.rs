//! Delimited report files. Every writer is deterministic: no timestamps and
//! a fixed row order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{CrComponent, DecileRow, DecileTable, MetricsReport};
use crate::money::WeightedMkd;
use crate::scenario::{BoundsRun, Budget, ColumnLabel, FitResult, Metric, PROGRAM_RETENTION};

pub const TABLE2_FILE: &str = "table2.csv";
pub const DECILES_FILE: &str = "deciles.csv";
pub const BUDGET_FILE: &str = "budget.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const FIT_FILE: &str = "fit.csv";

pub fn table3_file(group: &str) -> String {
    format!("table3_{group}.csv")
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per metric, one column per table column.
pub fn metric_table_csv(reports: &[&MetricsReport]) -> String {
    let mut out = String::from("metric");
    for l in &ColumnLabel::TABLE2[..reports.len()] {
        out.push(',');
        out.push_str(l.as_str());
    }
    out.push('\n');
    for m in Metric::ALL {
        out.push_str(m.as_str());
        for r in reports {
            out.push(',');
            out.push_str(&num(m.of(r)));
        }
        out.push('\n');
    }
    out
}

fn decile_line(out: &mut String, row: &DecileRow) {
    let label = row.decile.map(|d| d.to_string()).unwrap_or_else(|| "all".into());
    let r = &row.record;
    let _ = write!(out, "{label},{},{},{}", num(row.mean_pre_disposable), opt(row.nrr_shock_raw), opt(r.nrr));
    for c in CrComponent::ALL {
        let _ = write!(out, ",{}", opt(r.cr_components.get(&c).copied()));
    }
    let _ = writeln!(out, ",{},{},{}", opt(r.cr_total), r.nrr_excluded, r.cr_excluded);
}

pub fn deciles_csv(t: &DecileTable) -> String {
    let mut out = String::from("decile,mean_pre_disposable,nrr_shock_raw,nrr_total");
    for c in CrComponent::ALL {
        out.push_str(&format!(",cr_{}", c.as_str()));
    }
    out.push_str(",cr_total,nrr_excluded,cr_excluded\n");
    for row in t.rows.iter().chain([&t.all]) {
        decile_line(&mut out, row);
    }
    out
}

fn money_row(out: &mut String, program: &str, group: &str, amount: WeightedMkd, eur_mkd: f64) {
    let mkd = amount.round_to_mkd();
    let _ = writeln!(out, "{program},{group},{mkd},{:.2}", mkd.to_f64() / eur_mkd);
}

pub fn budget_csv(b: &Budget, eur_mkd: f64) -> String {
    let mut out = String::from("program,group,amount_mkd,amount_eur\n");
    for l in &b.lines {
        money_row(&mut out, l.program, &l.group, l.amount, eur_mkd);
    }
    money_row(&mut out, "total", "all", b.total, eur_mkd);
    for (g, v) in &b.retention_estimate {
        let _ = writeln!(out, "{PROGRAM_RETENTION}_estimate,{},{v:.2},{:.2}", g.as_str(), v / eur_mkd);
    }
    out
}

pub fn bounds_csv(b: &BoundsRun) -> String {
    let mut out = String::from("metric,column");
    for d in &b.durations {
        let _ = write!(out, ",d{d}");
    }
    out.push_str(",min,point,max\n");
    for m in Metric::ALL {
        for (j, l) in ColumnLabel::TABLE2.iter().enumerate() {
            let _ = write!(out, "{},{}", m.as_str(), l.as_str());
            for v in b.values(m, j) {
                let _ = write!(out, ",{}", num(v));
            }
            let band = b.band(m, j);
            let _ = writeln!(out, ",{},{},{}", num(band.min), num(band.point), num(band.max));
        }
    }
    out
}

pub fn fit_csv(f: &FitResult) -> String {
    format!("slope,intercept,r_squared,n_sectors\n{},{},{},{}\n", num(f.slope), num(f.intercept), num(f.r_squared), f.n_sectors)
}

pub fn write_report(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
}
