//! Packaged, queryable learning-rate observations from the recent empirical
//! literature, plus the box-plot statistics used to summarise them.
//!
//! Six tables ship with the crate (solar PV, wind, biofuels, fuel cells,
//! hydrogen production, storage). Each row records one published estimate:
//! who reported it, for which technology tag, against which cost and
//! experience metrics, and the learning-by-doing rate (plus the
//! learning-by-research rate for two-factor studies). Rates are stored as
//! fractions; the CSV files carry percents for readability. A transcription
//! convention for the occasional ranged estimate ("13-23 %") is to emit one
//! row per endpoint; the packaged tables currently contain none.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// Errors from loading or summarising rate data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("line {line}: {msg}")]
    Validation { line: u64, msg: String },
    #[error("box statistics need at least one value")]
    Empty,
    #[error("box statistics require finite values, got {0}")]
    NonFinite(f64),
}

/// One published learning-rate estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRecord {
    /// Citation key, e.g. `"Schmidt, Hawkes"`.
    pub source: String,
    /// Category tag, e.g. `pv_module`, `wind_onshore`, `electrolyser_aec`,
    /// `storage_li_ion`.
    pub technology: String,
    /// What was costed (free text, as reported).
    pub cost_metric: String,
    /// What counted as experience (free text, as reported).
    pub experience_metric: String,
    /// Geography, or the market segment where the study splits by segment
    /// rather than region.
    pub region: Option<String>,
    /// Final year of the underlying data, when reported.
    pub end_year: Option<i32>,
    /// Learning-by-doing rate as a fraction; negative means costs rose.
    pub lbd: f64,
    /// Learning-by-research rate, for two-factor studies.
    pub lbr: Option<f64>,
}

/// Identifier for one of the packaged tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl TableId {
    pub const ALL: [TableId; 6] = [
        TableId::C1,
        TableId::C2,
        TableId::C3,
        TableId::C4,
        TableId::C5,
        TableId::C6,
    ];

    /// Raw CSV text of the packaged table.
    pub fn csv_text(self) -> &'static str {
        match self {
            TableId::C1 => include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../data/table_c1.csv"
            )),
            TableId::C2 => include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../data/table_c2.csv"
            )),
            TableId::C3 => include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../data/table_c3.csv"
            )),
            TableId::C4 => include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../data/table_c4.csv"
            )),
            TableId::C5 => include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../data/table_c5.csv"
            )),
            TableId::C6 => include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../data/table_c6.csv"
            )),
        }
    }

    /// Subject area covered by the table.
    pub fn topic(self) -> &'static str {
        match self {
            TableId::C1 => "solar photovoltaics",
            TableId::C2 => "wind power",
            TableId::C3 => "biofuel plants",
            TableId::C4 => "hydrogen fuel cells",
            TableId::C5 => "hydrogen production",
            TableId::C6 => "energy storage",
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TableId::C1 => "c1",
            TableId::C2 => "c2",
            TableId::C3 => "c3",
            TableId::C4 => "c4",
            TableId::C5 => "c5",
            TableId::C6 => "c6",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TableId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(TableId::C1),
            "c2" => Ok(TableId::C2),
            "c3" => Ok(TableId::C3),
            "c4" => Ok(TableId::C4),
            "c5" => Ok(TableId::C5),
            "c6" => Ok(TableId::C6),
            other => Err(format!("unknown table `{other}` (expected c1..c6)")),
        }
    }
}

const HEADER: [&str; 8] = [
    "source",
    "technology",
    "cost_metric",
    "experience_metric",
    "region",
    "end_year",
    "lbd_percent",
    "lbr_percent",
];

fn parse_csv(text: &str) -> Result<Vec<RateRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(DatasetError::Parse {
            line: 1,
            msg: format!(
                "expected header `{}`, got `{}`",
                HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| DatasetError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(DatasetError::Parse {
                line,
                msg: format!("expected {} fields, got {}", HEADER.len(), record.len()),
            });
        }
        let required = |idx: usize, name: &str| -> Result<String, DatasetError> {
            let v = record[idx].to_string();
            if v.is_empty() {
                Err(DatasetError::Parse {
                    line,
                    msg: format!("missing required field `{name}`"),
                })
            } else {
                Ok(v)
            }
        };
        let optional = |idx: usize| -> Option<String> {
            let v = &record[idx];
            (!v.is_empty()).then(|| v.to_string())
        };
        let end_year = match optional(5) {
            None => None,
            Some(s) => Some(s.parse::<i32>().map_err(|_| DatasetError::Parse {
                line,
                msg: format!("cannot parse end_year `{s}`"),
            })?),
        };
        let percent = |idx: usize, name: &str| -> Result<Option<f64>, DatasetError> {
            match optional(idx) {
                None => Ok(None),
                Some(s) => {
                    let v = s.parse::<f64>().map_err(|_| DatasetError::Parse {
                        line,
                        msg: format!("cannot parse {name} `{s}`"),
                    })?;
                    let frac = v / 100.0;
                    if !(frac > -1.0 && frac < 1.0) {
                        return Err(DatasetError::Validation {
                            line,
                            msg: format!("{name} must lie strictly between -100 and 100, got {v}"),
                        });
                    }
                    Ok(Some(frac))
                }
            }
        };
        let lbd = percent(6, "lbd_percent")?.ok_or(DatasetError::Parse {
            line,
            msg: "missing required field `lbd_percent`".into(),
        })?;
        out.push(RateRecord {
            source: required(0, "source")?,
            technology: required(1, "technology")?,
            cost_metric: required(2, "cost_metric")?,
            experience_metric: required(3, "experience_metric")?,
            region: optional(4),
            end_year,
            lbd,
            lbr: percent(7, "lbr_percent")?,
        });
    }
    Ok(out)
}

/// Loads rate records from a CSV file (schema: `source,technology,cost_metric,
/// experience_metric,region,end_year,lbd_percent,lbr_percent`).
pub fn load_records(path: &Path) -> Result<Vec<RateRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_csv(&text)
}

/// Parses rate records from CSV text already in memory.
pub fn load_records_str(text: &str) -> Result<Vec<RateRecord>, DatasetError> {
    parse_csv(text)
}

/// Records from one packaged table.
pub fn packaged_records(id: TableId) -> Vec<RateRecord> {
    parse_csv(id.csv_text()).expect("packaged tables are validated by the test suite")
}

/// Records from every packaged table, in table order.
pub fn all_packaged_records() -> Vec<RateRecord> {
    TableId::ALL
        .iter()
        .flat_map(|&id| packaged_records(id))
        .collect()
}

/// Conjunctive filter over technology, region and end-year bounds.
///
/// String matches are exact and case-sensitive. Records without an end year
/// fail any year bound; records without a region fail a region filter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateFilter {
    pub technology: Option<String>,
    pub region: Option<String>,
    pub end_year_min: Option<i32>,
    pub end_year_max: Option<i32>,
}

impl RateFilter {
    pub fn matches(&self, r: &RateRecord) -> bool {
        if let Some(t) = &self.technology {
            if &r.technology != t {
                return false;
            }
        }
        if let Some(want) = &self.region {
            match &r.region {
                Some(have) if have == want => {}
                _ => return false,
            }
        }
        if let Some(min) = self.end_year_min {
            match r.end_year {
                Some(y) if y >= min => {}
                _ => return false,
            }
        }
        if let Some(max) = self.end_year_max {
            match r.end_year {
                Some(y) if y <= max => {}
                _ => return false,
            }
        }
        true
    }
}

/// Order-preserving subset of `records` matching `filter`.
pub fn query<'a>(records: &'a [RateRecord], filter: &RateFilter) -> Vec<&'a RateRecord> {
    records.iter().filter(|r| filter.matches(r)).collect()
}

/// Five-number summary with outliers, using Tukey hinges for the quartiles
/// and the 1.5-IQR rule for the whiskers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest value at or above q1 - 1.5 IQR.
    pub whisker_low: f64,
    /// Largest value at or below q3 + 1.5 IQR.
    pub whisker_high: f64,
    /// Values outside the whiskers, in ascending order.
    pub outliers: Vec<f64>,
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Computes box-plot statistics. Quartiles are Tukey hinges: medians of the
/// lower and upper halves, where an odd-length sample includes its median in
/// both halves.
pub fn box_stats(values: &[f64]) -> Result<BoxStats, DatasetError> {
    if values.is_empty() {
        return Err(DatasetError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(DatasetError::NonFinite(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = median_of(&sorted);
    let half = n.div_ceil(2);
    let q1 = median_of(&sorted[..half]);
    let q3 = median_of(&sorted[n - half..]);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_low = sorted
        .iter()
        .copied()
        .find(|&v| v >= lo_fence)
        .expect("q1 itself is inside the fence");
    let whisker_high = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= hi_fence)
        .expect("q3 itself is inside the fence");
    let outliers: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&v| v < lo_fence || v > hi_fence)
        .collect();
    Ok(BoxStats {
        n,
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// Box statistics grouped by technology tag; every technology present in the
/// records gets a summary.
pub fn box_stats_by_technology(records: &[RateRecord]) -> BTreeMap<String, BoxStats> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.technology.clone()).or_default().push(r.lbd);
    }
    groups
        .into_iter()
        .map(|(tech, vals)| {
            let stats = box_stats(&vals).expect("groups are non-empty by construction");
            (tech, stats)
        })
        .collect()
}
