//! Labelled feature matrices for selection, classification and grading.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, FEATURE_COUNT};
use crate::ingest::Split;
use crate::model::Group;
use crate::scalar::Real;

/// One row per subject (or trial), one column per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix<T> {
    pub rows: Vec<Vec<T>>,
    pub labels: Vec<Group>,
    pub subjects: Vec<String>,
    pub days: Vec<Option<u32>>,
    /// Index of each column in the full 243-feature vector.
    pub columns: Vec<usize>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(
        rows: Vec<Vec<T>>,
        labels: Vec<Group>,
        subjects: Vec<String>,
        days: Vec<Option<u32>>,
        columns: Vec<usize>,
    ) -> Result<Self> {
        let n = rows.len();
        if labels.len() != n || subjects.len() != n || days.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len().min(subjects.len()).min(days.len()),
            });
        }
        for r in &rows {
            if r.len() != columns.len() {
                return Err(Error::DimensionMismatch {
                    expected: columns.len(),
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateData("feature matrix holds a non-finite value".into()));
            }
        }
        Ok(Self {
            rows,
            labels,
            subjects,
            days,
            columns,
        })
    }

    /// Unlabelled-metadata matrix over the first `rows[0].len()` columns.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<Group>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let subjects = (0..n).map(|i| format!("row{i}")).collect();
        Self::new(rows, labels, subjects, vec![None; n], (0..d).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn count(&self, group: Group) -> usize {
        self.labels.iter().filter(|&&g| g == group).count()
    }

    /// Rows of one group.
    pub fn group_rows(&self, group: Group) -> Vec<&[T]> {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter(|(_, &g)| g == group)
            .map(|(r, _)| r.as_slice())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Keeps the columns whose full-vector indices are listed, in that order.
    pub fn select(&self, feature_indices: &[usize]) -> Result<Self> {
        let pos = feature_indices
            .iter()
            .map(|f| {
                self.columns.iter().position(|c| c == f).ok_or_else(|| {
                    Error::Schema(format!("feature column {f} is not in the matrix"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows: self
                .rows
                .iter()
                .map(|r| pos.iter().map(|&p| r[p]).collect())
                .collect(),
            labels: self.labels.clone(),
            subjects: self.subjects.clone(),
            days: self.days.clone(),
            columns: feature_indices.to_vec(),
        })
    }

    /// Keeps the rows for which `keep` holds.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        Self {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            subjects: idx.iter().map(|&i| self.subjects[i].clone()).collect(),
            days: idx.iter().map(|&i| self.days[i]).collect(),
            columns: self.columns.clone(),
        }
    }

    pub fn cast<U: Real>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|v| U::lit(v.as_f64())).collect())
                .collect(),
            labels: self.labels.clone(),
            subjects: self.subjects.clone(),
            days: self.days.clone(),
            columns: self.columns.clone(),
        }
    }
}

/// Whether table rows are averaged before analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Average a subject's trials (per recording day).
    Subject,
    /// Every trial (or window) is its own row.
    Trial,
}

impl FeatureMatrix<f64> {
    /// Builds a matrix from the rows of `table` in `split` (all rows when
    /// `None`). Subject units average rows sharing a subject and recording
    /// day, keeping first-appearance order.
    pub fn from_table(table: &FeatureTable, split: Option<Split>, unit: Unit) -> Result<Self> {
        let rows: Vec<_> = table
            .rows
            .iter()
            .filter(|r| split.is_none() || r.meta.split == split)
            .collect();
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no feature rows{}",
                split.map(|s| format!(" in the {} split", s.name())).unwrap_or_default()
            )));
        }
        let columns = (0..FEATURE_COUNT).collect();
        match unit {
            Unit::Trial => Self::new(
                rows.iter().map(|r| r.values.clone()).collect(),
                rows.iter().map(|r| r.meta.group).collect(),
                rows.iter().map(|r| r.meta.subject_id.clone()).collect(),
                rows.iter().map(|r| r.meta.days_post_op).collect(),
                columns,
            ),
            Unit::Subject => {
                let mut order: Vec<(String, Option<u32>)> = Vec::new();
                let mut acc: BTreeMap<(String, Option<u32>), (Group, Vec<f64>, usize)> = BTreeMap::new();
                for r in &rows {
                    let key = (r.meta.subject_id.clone(), r.meta.days_post_op);
                    let entry = acc.entry(key.clone()).or_insert_with(|| {
                        order.push(key);
                        (r.meta.group, vec![0.0; FEATURE_COUNT], 0)
                    });
                    if entry.0 != r.meta.group {
                        return Err(Error::Schema(format!(
                            "subject {} appears in both groups",
                            r.meta.subject_id
                        )));
                    }
                    for (s, v) in entry.1.iter_mut().zip(&r.values) {
                        *s += v;
                    }
                    entry.2 += 1;
                }
                let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                for key in order {
                    let (group, sum, n) = &acc[&key];
                    out.0.push(sum.iter().map(|s| s / *n as f64).collect());
                    out.1.push(*group);
                    out.2.push(key.0.clone());
                    out.3.push(key.1);
                }
                Self::new(out.0, out.1, out.2, out.3, columns)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::RowMeta;

    fn table() -> FeatureTable {
        let mut t = FeatureTable::new(false);
        for (id, group, split, v) in [
            ("p1", Group::Patient, Split::Train, 1.0),
            ("p1", Group::Patient, Split::Train, 3.0),
            ("c1", Group::Control, Split::Train, 5.0),
            ("c2", Group::Control, Split::Test, 7.0),
        ] {
            let meta = RowMeta {
                subject_id: id.into(),
                group,
                days_post_op: (group == Group::Patient).then_some(20),
                split: Some(split),
                trial: format!("{id}_{v}"),
                window: None,
            };
            t.push(meta, &vec![v; FEATURE_COUNT]).unwrap();
        }
        t
    }

    #[test]
    fn subject_rows_average_trials() {
        let m = FeatureMatrix::from_table(&table(), Some(Split::Train), Unit::Subject).unwrap();
        assert_eq!(m.subjects, vec!["p1", "c1"]);
        assert_eq!(m.rows[0][10], 2.0);
        assert_eq!(m.labels, vec![Group::Patient, Group::Control]);
        let all = FeatureMatrix::from_table(&table(), None, Unit::Trial).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn select_reorders_columns() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = FeatureMatrix::from_rows(rows, vec![Group::Patient, Group::Control]).unwrap();
        let s = m.select(&[2, 0]).unwrap();
        assert_eq!(s.rows, vec![vec![3.0, 1.0], vec![6.0, 4.0]]);
        assert!(m.select(&[5]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let err = FeatureMatrix::from_rows(vec![vec![f64::NAN]], vec![Group::Patient]).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }
}
