//! `data stats` and `data query`: summarize or filter learning-rate
//! records, either from the packaged tables or from user CSV files.
//!
//! Packaged tables can be overridden by pointing `LEARNCURVE_DATA_DIR` at a
//! directory holding `table_<id>.csv` files with the same schema.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use learncurve::dataset::box_stats_by_technology;
use learncurve::{RateFilter, RateRecord, TableId};

use crate::commands::{cell, emit_text, num};
use crate::failure::Failure;
use crate::manifest::ManifestScope;

#[derive(Subcommand)]
pub enum DataCmd {
    /// Per-technology box statistics over learning-by-doing rates.
    Stats(StatsArgs),
    /// Filter records and print them in the input schema.
    Query(QueryArgs),
}

#[derive(Args)]
pub struct StatsArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render an aligned human table instead of CSV.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
pub struct QueryArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Keep records whose technology matches exactly.
    #[arg(long)]
    technology: Option<String>,
    /// Keep records whose region matches exactly.
    #[arg(long)]
    region: Option<String>,
    /// Keep records whose series ends in or after this year.
    #[arg(long)]
    year_min: Option<i32>,
    /// Keep records whose series ends in or before this year.
    #[arg(long)]
    year_max: Option<i32>,
    /// Write the records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render an aligned human table instead of CSV.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SourceArgs {
    /// Packaged table id (`c1` .. `c6`) or `all`.
    #[arg(long, default_value = "all")]
    table: String,
    /// Load records from this CSV instead of a packaged table.
    #[arg(long, conflicts_with = "table")]
    file: Option<PathBuf>,
}

pub fn run(cmd: DataCmd) -> Result<(), Failure> {
    match cmd {
        DataCmd::Stats(args) => stats(args),
        DataCmd::Query(args) => query(args),
    }
}

/// Resolves the record source: an explicit file, or one/all packaged
/// tables (honoring `LEARNCURVE_DATA_DIR`).
fn load_source(source: &SourceArgs, scope: &mut ManifestScope) -> Result<Vec<RateRecord>, Failure> {
    if let Some(path) = &source.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Data(format!("cannot read data {path:?}: {e}")))?;
        scope.add_input(text.as_bytes());
        return Ok(learncurve::dataset::load_records_str(&text)?);
    }
    let ids: Vec<TableId> = if source.table == "all" {
        TableId::ALL.to_vec()
    } else {
        vec![source
            .table
            .parse()
            .map_err(|_| Failure::Usage(format!("unknown table {:?}; use c1..c6 or all", source.table)))?]
    };
    let mut records = Vec::new();
    for id in ids {
        let text = table_text(id)?;
        scope.add_input(text.as_bytes());
        records.extend(learncurve::dataset::load_records_str(&text)?);
    }
    Ok(records)
}

/// Returns packaged table text, or the override from `LEARNCURVE_DATA_DIR`.
fn table_text(id: TableId) -> Result<String, Failure> {
    match std::env::var_os("LEARNCURVE_DATA_DIR") {
        Some(dir) => {
            let path = Path::new(&dir).join(format!("table_{id}.csv"));
            std::fs::read_to_string(&path)
                .map_err(|e| Failure::Data(format!("cannot read table override {path:?}: {e}")))
        }
        None => Ok(id.csv_text().to_string()),
    }
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let mut scope = ManifestScope::new();
    let records = load_source(&args.source, &mut scope)?;
    let stats = box_stats_by_technology(&records);

    let payload = if args.pretty {
        let mut s = format!(
            "{:<28} {:>4} {:>10} {:>10} {:>10} {:>12} {:>12} outliers\n",
            "technology", "n", "median", "q1", "q3", "whisker_low", "whisker_high"
        );
        for (tech, b) in &stats {
            let outliers = b.outliers.iter().map(|v| cell(*v)).collect::<Vec<_>>().join(" ");
            s.push_str(&format!(
                "{:<28} {:>4} {:>10} {:>10} {:>10} {:>12} {:>12} {outliers}\n",
                tech,
                b.n,
                cell(b.median),
                cell(b.q1),
                cell(b.q3),
                cell(b.whisker_low),
                cell(b.whisker_high)
            ));
        }
        s
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "technology",
            "n",
            "median",
            "q1",
            "q3",
            "whisker_low",
            "whisker_high",
            "outliers",
        ])?;
        for (tech, b) in &stats {
            let outliers = b.outliers.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";");
            w.write_record([
                tech.clone(),
                b.n.to_string(),
                num(b.median),
                num(b.q1),
                num(b.q3),
                num(b.whisker_low),
                num(b.whisker_high),
                outliers,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
        String::from_utf8(bytes).expect("csv output is utf-8")
    };
    emit_text(&payload, args.out.as_deref(), &mut scope)?;
    scope.finish(None)
}

fn query(args: QueryArgs) -> Result<(), Failure> {
    let mut scope = ManifestScope::new();
    let records = load_source(&args.source, &mut scope)?;
    let filter = RateFilter {
        technology: args.technology.clone(),
        region: args.region.clone(),
        end_year_min: args.year_min,
        end_year_max: args.year_max,
    };
    let hits = learncurve::query(&records, &filter);

    let payload = if args.pretty {
        let mut s = format!(
            "{:<22} {:<28} {:>8} {:>8} {:>10}\n",
            "source", "technology", "end_year", "lbd", "lbr"
        );
        for r in &hits {
            let year = r.end_year.map(|y| y.to_string()).unwrap_or_default();
            let lbr = r.lbr.map(|v| cell(v)).unwrap_or_default();
            s.push_str(&format!(
                "{:<22} {:<28} {:>8} {:>8} {:>10}\n",
                r.source,
                r.technology,
                year,
                cell(r.lbd),
                lbr
            ));
        }
        s
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "source",
            "technology",
            "cost_metric",
            "experience_metric",
            "region",
            "end_year",
            "lbd_percent",
            "lbr_percent",
        ])?;
        for r in &hits {
            w.write_record([
                r.source.clone(),
                r.technology.clone(),
                r.cost_metric.clone(),
                r.experience_metric.clone(),
                r.region.clone().unwrap_or_default(),
                r.end_year.map(|y| y.to_string()).unwrap_or_default(),
                num(r.lbd * 100.0),
                r.lbr.map(|v| num(v * 100.0)).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
        String::from_utf8(bytes).expect("csv output is utf-8")
    };
    emit_text(&payload, args.out.as_deref(), &mut scope)?;
    scope.finish(None)
}
