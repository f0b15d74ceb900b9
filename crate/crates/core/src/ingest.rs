//! File formats.
//!
//! Pool files are comma-separated text:
//!
//! ```text
//! #scale 2 12 7
//! id,score,f0,f1,...
//! essay-1,8,0.12,-1.5,...
//! ```
//!
//! The `#scale raw_min raw_max levels` line is optional; without it the
//! observed score range is used with seven levels. Reports are pretty JSON
//! and curves are `fraction,qwk` text. Every writer is byte-stable and
//! replaces its target atomically.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{growth_curve, target_fraction, CurvePoint, EfficiencyCurve, RatingPairs};
use crate::pool::{EssayPool, EssayRecord, ScoreScale, DEFAULT_LEVELS};

pub const REPORT_SCHEMA_VERSION: &str = "activescore.report/1";

/// Target ratios of the full-data agreement reported for every run.
pub const TARGET_RATIOS: [f64; 3] = [0.85, 0.90, 0.95];

/// A pool together with the external id of each dense id.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPool {
    pub pool: EssayPool,
    /// `external_ids[dense_id]`.
    pub external_ids: Vec<String>,
}

fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Ok(s)
}

/// Writes `contents` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::ErrorKind::InvalidInput.into()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn parse_scale(line: u64, text: &str) -> Result<ScoreScale> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let bad = |message: String| Error::Format { line, message };
    if parts.len() != 4 || parts[0] != "#scale" {
        return Err(bad(format!(
            "expected '#scale raw_min raw_max levels', got '{text}'"
        )));
    }
    let raw_min: i64 = parts[1]
        .parse()
        .map_err(|_| bad(format!("raw_min '{}' is not an integer", parts[1])))?;
    let raw_max: i64 = parts[2]
        .parse()
        .map_err(|_| bad(format!("raw_max '{}' is not an integer", parts[2])))?;
    let levels: usize = parts[3]
        .parse()
        .map_err(|_| bad(format!("levels '{}' is not a positive integer", parts[3])))?;
    ScoreScale::new(raw_min, raw_max, levels).map_err(|e| bad(e.to_string()))
}

/// Parses pool text. See the module docs for the format.
pub fn parse_pool(text: &str) -> Result<LoadedPool> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut scale: Option<ScoreScale> = None;
    let mut dim: Option<usize> = None;
    let mut rows: Vec<(u64, String, i64, Vec<f64>)> = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();

    for result in reader.records() {
        let record = result.map_err(|e| Error::Format {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let first = record.get(0).unwrap_or("");
        if first.starts_with("#scale") {
            if dim.is_some() || scale.is_some() {
                return Err(Error::Format {
                    line,
                    message: "the #scale annotation must come once, before the header".into(),
                });
            }
            scale = Some(parse_scale(line, first)?);
            continue;
        }
        if record.len() == 1 && (first.is_empty() || first.starts_with('#')) {
            continue;
        }
        let Some(d) = dim else {
            let header_ok = record.len() >= 3
                && &record[0] == "id"
                && &record[1] == "score"
                && record
                    .iter()
                    .skip(2)
                    .enumerate()
                    .all(|(i, name)| name == format!("f{i}"));
            if !header_ok {
                return Err(Error::Format {
                    line,
                    message: "missing header 'id,score,f0,...'".into(),
                });
            }
            dim = Some(record.len() - 2);
            continue;
        };
        let row = rows.len() as u64 + 1;
        if record.len() != d + 2 {
            return Err(Error::Format {
                line,
                message: format!("row {row} has {} fields, expected {}", record.len(), d + 2),
            });
        }
        let ext = record[0].to_string();
        if let Some(prev) = seen.insert(ext.clone(), row) {
            return Err(Error::Data {
                row,
                column: Some("id".into()),
                message: format!("duplicate id '{ext}' (first seen in row {prev})"),
            });
        }
        let score: i64 = record[1].parse().map_err(|_| Error::Data {
            row,
            column: Some("score".into()),
            message: format!("score '{}' is not an integer", &record[1]),
        })?;
        let mut features = Vec::with_capacity(d);
        for (col, field) in record.iter().skip(2).enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Data {
                row,
                column: Some(format!("f{col}")),
                message: format!("'{field}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Data {
                    row,
                    column: Some(format!("f{col}")),
                    message: format!("non-finite feature value '{field}'"),
                });
            }
            features.push(value);
        }
        rows.push((row, ext, score, features));
    }

    let Some(dim) = dim else {
        return Err(Error::Format {
            line: 1,
            message: "missing header 'id,score,f0,...'".into(),
        });
    };
    let scale = match scale {
        Some(s) => s,
        None => {
            let lo = rows.iter().map(|r| r.2).min();
            let hi = rows.iter().map(|r| r.2).max();
            match (lo, hi) {
                (Some(lo), Some(hi)) if lo < hi => ScoreScale::new(lo, hi, DEFAULT_LEVELS)?,
                _ => {
                    return Err(Error::Data {
                        row: rows.len() as u64,
                        column: Some("score".into()),
                        message: "cannot infer a score scale: fewer than two distinct scores and no #scale line".into(),
                    })
                }
            }
        }
    };

    let mut records = Vec::with_capacity(rows.len());
    let mut external_ids = Vec::with_capacity(rows.len());
    for (row, ext, score, features) in rows {
        let true_label = scale.classify(score).map_err(|e| Error::Data {
            row,
            column: Some("score".into()),
            message: e.to_string(),
        })?;
        records.push(EssayRecord {
            id: records.len(),
            features,
            true_label,
        });
        external_ids.push(ext);
    }
    let pool = EssayPool::new(dim, scale, records)?;
    Ok(LoadedPool { pool, external_ids })
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<LoadedPool> {
    parse_pool(&read_to_string(path.as_ref())?)
}

/// Renders a pool with class labels as scores under the identity scale.
/// `external_ids`, when given, is indexed by record position.
pub fn render_pool(pool: &EssayPool, external_ids: Option<&[String]>) -> Result<String> {
    if let Some(ext) = external_ids {
        if ext.len() != pool.len() {
            return Err(Error::argument(format!(
                "{} external ids for {} records",
                ext.len(),
                pool.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str(&format!(
        "#scale 0 {} {}\n",
        pool.levels() - 1,
        pool.levels()
    ));
    out.push_str("id,score");
    for i in 0..pool.dim() {
        out.push_str(&format!(",f{i}"));
    }
    out.push('\n');
    for (pos, r) in pool.records().iter().enumerate() {
        match external_ids {
            Some(ext) => out.push_str(&ext[pos]),
            None => out.push_str(&r.id.to_string()),
        }
        out.push_str(&format!(",{}", r.true_label));
        for v in &r.features {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_pool(
    pool: &EssayPool,
    external_ids: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_atomic(path.as_ref(), render_pool(pool, external_ids)?.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub ratio: f64,
    /// Absent when the run never reached `ratio * full_data_qwk`.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedStats {
    pub targets: Vec<TargetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub run: RunRecord,
    pub derived: DerivedStats,
}

impl ReportDocument {
    pub fn from_run(run: &RunRecord) -> Result<Self> {
        let curve = growth_curve(run);
        let targets = TARGET_RATIOS
            .iter()
            .map(|&ratio| {
                let fraction = if run.full_data_qwk > 0.0 {
                    target_fraction(&curve, run.full_data_qwk, ratio)?
                } else {
                    None
                };
                Ok(TargetEntry { ratio, fraction })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION.into(),
            run: run.clone(),
            derived: DerivedStats { targets },
        })
    }
}

pub fn render_report(run: &RunRecord) -> Result<String> {
    let doc = ReportDocument::from_run(run)?;
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(run: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), render_report(run)?.as_bytes())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ReportDocument> {
    let doc: ReportDocument = serde_json::from_str(&read_to_string(path.as_ref())?)?;
    if doc.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::Format {
            line: 1,
            message: format!("unsupported report schema '{}'", doc.schema_version),
        });
    }
    Ok(doc)
}

pub fn render_curve(curve: &EfficiencyCurve) -> String {
    let mut s = String::from("fraction,qwk\n");
    for p in curve.points() {
        s.push_str(&format!("{:?},{:?}\n", p.fraction, p.qwk));
    }
    s
}

pub fn write_curve(curve: &EfficiencyCurve, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), render_curve(curve).as_bytes())
}

pub fn parse_curve(text: &str) -> Result<EfficiencyCurve> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "fraction,qwk")) => {}
        _ => {
            return Err(Error::Format {
                line: 1,
                message: "missing header 'fraction,qwk'".into(),
            })
        }
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let line_no = i as u64 + 1;
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Format {
                line: line_no,
                message: format!("'{s}' is not a number"),
            })
        };
        if fields.len() != 2 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        points.push(CurvePoint {
            fraction: parse(fields[0])?,
            qwk: parse(fields[1])?,
        });
    }
    EfficiencyCurve::new(points)
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<EfficiencyCurve> {
    parse_curve(&read_to_string(path.as_ref())?)
}

/// Parses two integer columns `human,machine`, one pair per line. A first
/// line that is not numeric is taken as a header. Blank lines are skipped.
/// Without `levels`, the scale is `0..=max(rating)` (at least two levels).
pub fn parse_ratings(text: &str, levels: Option<usize>) -> Result<RatingPairs> {
    let mut human = Vec::new();
    let mut machine = Vec::new();
    let mut header_allowed = true;
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let is_header = std::mem::replace(&mut header_allowed, false)
            && fields.iter().all(|f| f.parse::<f64>().is_err());
        if is_header {
            continue;
        }
        match (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
            (Ok(h), Ok(m)) => {
                human.push(h);
                machine.push(m);
            }
            _ => {
                return Err(Error::Data {
                    row: human.len() as u64 + 1,
                    column: None,
                    message: format!(
                        "line {line_no}: ratings must be non-negative integers, got '{trimmed}'"
                    ),
                })
            }
        }
    }
    if human.is_empty() {
        return Err(Error::Format {
            line: 1,
            message: "no rating pairs found".into(),
        });
    }
    let observed = human.iter().chain(&machine).max().copied().unwrap_or(0) + 1;
    let levels = levels.unwrap_or(observed.max(2));
    RatingPairs::new(human, machine, levels).map_err(|e| Error::Data {
        row: 0,
        column: None,
        message: e.to_string(),
    })
}

pub fn load_ratings(path: impl AsRef<Path>, levels: Option<usize>) -> Result<RatingPairs> {
    parse_ratings(&read_to_string(path.as_ref())?, levels)
}
