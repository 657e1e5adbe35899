use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{feature_names, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::ingest::{write_atomic, Split};
use crate::model::Group;
use crate::scalar::Real;

const META_COLUMNS: [&str; 5] = ["subject_id", "group", "days_post_op", "split", "trial"];

/// Where a feature row came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub subject_id: String,
    pub group: Group,
    pub days_post_op: Option<u32>,
    pub split: Option<Split>,
    /// Trial identifier, usually the trial file stem.
    pub trial: String,
    /// Window index in windowed mode.
    pub window: Option<usize>,
}

/// 243 features of one trial (or one window of a trial).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T> {
    pub meta: RowMeta,
    pub values: Vec<T>,
}

/// Feature rows with the on-disk CSV layout: metadata columns, an optional
/// `window` column, then the 243 named features.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FeatureTable {
    pub windowed: bool,
    pub rows: Vec<FeatureVector<f64>>,
}

impl FeatureTable {
    pub fn new(windowed: bool) -> Self {
        Self {
            windowed,
            rows: Vec::new(),
        }
    }

    pub fn push<T: Real>(&mut self, meta: RowMeta, values: &[T]) -> Result<()> {
        if values.len() != FEATURE_COUNT {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_COUNT,
                got: values.len(),
            });
        }
        self.rows.push(FeatureVector {
            meta,
            values: values.iter().map(|v| v.as_f64()).collect(),
        });
        Ok(())
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
        if self.windowed {
            h.push("window".into());
        }
        h.extend(feature_names());
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.header())?;
        for r in &self.rows {
            let m = &r.meta;
            let mut rec = vec![
                m.subject_id.clone(),
                m.group.name().to_string(),
                m.days_post_op.map(|d| d.to_string()).unwrap_or_default(),
                m.split.map(|s| s.name().to_string()).unwrap_or_default(),
                m.trial.clone(),
            ];
            if self.windowed {
                rec.push(m.window.map(|w| w.to_string()).unwrap_or_default());
            }
            rec.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Schema(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let windowed = header.get(5).map(String::as_str) == Some("window");
        let table = Self::new(windowed);
        if header != table.header() {
            return Err(Error::Schema(format!(
                "{origin}: feature table header does not match the expected {} columns",
                table.header().len()
            )));
        }
        let skip = if windowed { 6 } else { 5 };
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |msg: String| Error::Parse {
                location: format!("{origin}:{line}"),
                message: msg,
            };
            let opt = |s: &str| if s.is_empty() { None } else { Some(s.to_string()) };
            let meta = RowMeta {
                subject_id: rec[0].to_string(),
                group: rec[1].parse().map_err(|e: Error| bad(e.to_string()))?,
                days_post_op: opt(&rec[2])
                    .map(|s| s.parse::<u32>())
                    .transpose()
                    .map_err(|e| bad(format!("days_post_op: {e}")))?,
                split: opt(&rec[3])
                    .map(|s| s.parse::<Split>())
                    .transpose()
                    .map_err(|e| bad(e.to_string()))?,
                trial: rec[4].to_string(),
                window: if windowed {
                    opt(&rec[5])
                        .map(|s| s.parse::<usize>())
                        .transpose()
                        .map_err(|e| bad(format!("window: {e}")))?
                } else {
                    None
                },
            };
            let values = rec
                .iter()
                .skip(skip)
                .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(bad(format!("non-finite feature value {v}")));
            }
            rows.push(FeatureVector { meta, values });
        }
        Ok(Self { windowed, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}
