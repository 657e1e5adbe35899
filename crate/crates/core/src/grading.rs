//! Scalar gait grade `G = Σ Fᵢ Wᵢ` over standardized selected features.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{train_lda_with, train_pca, ModelParams, Shrinkage, Standardizer, PCA_VARIANCE};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::ingest::write_atomic;
use crate::linalg::{dot, norm};
use crate::model::Group;
use crate::scalar::{mean, Real};
use crate::selection::SelectionResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Snr,
    Lda,
    Pca,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Snr, Scheme::Lda, Scheme::Pca];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Snr => "snr",
            Scheme::Lda => "lda",
            Scheme::Pca => "pca",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown grading scheme {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    BelowBand,
    WithinControlBand,
    AboveBand,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::BelowBand => "below",
            Band::WithinControlBand => "within",
            Band::AboveBand => "above",
        }
    }

    /// Grades below the control band read as patient gait.
    pub fn label(self) -> Group {
        match self {
            Band::BelowBand => Group::Patient,
            Band::WithinControlBand | Band::AboveBand => Group::Control,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradingModel<T> {
    pub scheme: Scheme,
    pub columns: Vec<usize>,
    pub standardizer: Standardizer<T>,
    /// Unit norm; control grades exceed patient grades on training data.
    pub weights: Vec<T>,
    pub g_min: T,
    pub g_avg: T,
    pub g_max: T,
}

/// Builds the weight vector of `scheme` from the training subjects, whose
/// columns must be the selected features in selection order.
pub fn build_grading<T: Real>(
    selection: &SelectionResult,
    train: &FeatureMatrix<T>,
    scheme: Scheme,
) -> Result<GradingModel<T>> {
    build_grading_with(selection, train, scheme, Shrinkage::default())
}

/// [`build_grading`] with explicit LDA shrinkage.
pub fn build_grading_with<T: Real>(
    selection: &SelectionResult,
    train: &FeatureMatrix<T>,
    scheme: Scheme,
    shrinkage: Shrinkage,
) -> Result<GradingModel<T>> {
    if train.columns != selection.indices() {
        return Err(Error::Schema("training columns differ from the selected features".into()));
    }
    if train.count(Group::Control) == 0 || train.count(Group::Patient) == 0 {
        return Err(Error::DegenerateData("grading needs control and patient training rows".into()));
    }
    let standardizer = Standardizer::fit(&train.rows)?;
    let raw: Vec<T> = match scheme {
        Scheme::Snr => selection.snr_vector().into_iter().map(T::lit).collect(),
        Scheme::Lda => match train_lda_with(train, shrinkage)?.params {
            ModelParams::Lda(p) => p.w,
            _ => unreachable!("LDA trainer returns LDA parameters"),
        },
        Scheme::Pca => match train_pca(train, Some(1), PCA_VARIANCE)?.params {
            ModelParams::Pca(p) => p.axes[0].clone(),
            _ => unreachable!("PCA trainer returns PCA parameters"),
        },
    };
    let len = norm(&raw);
    if !(len > T::zero()) || !len.is_finite() {
        return Err(Error::DegenerateData(format!("{} weights have zero norm", scheme.name())));
    }
    let mut weights: Vec<T> = raw.iter().map(|w| *w / len).collect();

    let z = standardizer.apply_all(&train.rows)?;
    let grades = |w: &[T], g: Group| -> Vec<T> {
        z.iter()
            .zip(&train.labels)
            .filter(|(_, &l)| l == g)
            .map(|(r, _)| dot(r, w))
            .collect()
    };
    if mean(&grades(&weights, Group::Control)) < mean(&grades(&weights, Group::Patient)) {
        weights.iter_mut().for_each(|w| *w = -*w);
    }
    let controls = grades(&weights, Group::Control);
    let g_min = controls.iter().copied().fold(T::infinity(), T::min);
    let g_max = controls.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(GradingModel {
        scheme,
        columns: train.columns.clone(),
        standardizer,
        weights,
        g_min,
        g_avg: mean(&controls),
        g_max,
    })
}

impl<T: Real> GradingModel<T> {
    /// Grade of a standardized row.
    pub fn grade_standardized(&self, z: &[T]) -> Result<T> {
        if z.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: z.len(),
            });
        }
        Ok(dot(z, &self.weights))
    }

    /// Grade of a raw feature row.
    pub fn grade(&self, x: &[T]) -> Result<T> {
        self.grade_standardized(&self.standardizer.apply(x)?)
    }

    /// Contribution `Fᵢ Wᵢ` of each standardized feature.
    pub fn profile_standardized(&self, z: &[T]) -> Result<Vec<T>> {
        if z.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: z.len(),
            });
        }
        Ok(z.iter().zip(&self.weights).map(|(a, b)| *a * *b).collect())
    }

    pub fn profile(&self, x: &[T]) -> Result<Vec<T>> {
        self.profile_standardized(&self.standardizer.apply(x)?)
    }

    /// Band membership with inclusive bounds.
    pub fn band(&self, g: T) -> Band {
        if g < self.g_min {
            Band::BelowBand
        } else if g > self.g_max {
            Band::AboveBand
        } else {
            Band::WithinControlBand
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

impl<T: Real + serde::de::DeserializeOwned> GradingModel<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        let d = m.columns.len();
        if m.weights.len() != d || m.standardizer.mean.len() != d || m.standardizer.scale.len() != d {
            return Err(Error::Schema("grading model vectors differ in length".into()));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Grades of one subject over recording days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSeries {
    pub subject_id: String,
    /// `(days_post_op, G)` with strictly increasing days.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeSeries {
    pub subjects: Vec<SubjectSeries>,
}

impl GradeSeries {
    /// Groups `(subject, day, grade)` points by subject. Repeated days of a
    /// subject are averaged.
    pub fn from_points(points: &[(String, u32, f64)]) -> Self {
        let mut by: BTreeMap<&str, BTreeMap<u32, (f64, usize)>> = BTreeMap::new();
        for (s, d, g) in points {
            let e = by.entry(s).or_default().entry(*d).or_insert((0.0, 0));
            e.0 += g;
            e.1 += 1;
        }
        Self {
            subjects: by
                .into_iter()
                .map(|(s, days)| SubjectSeries {
                    subject_id: s.to_string(),
                    points: days.into_iter().map(|(d, (g, n))| (f64::from(d), g / n as f64)).collect(),
                })
                .collect(),
        }
    }

    pub fn pooled(&self) -> Vec<(f64, f64)> {
        self.subjects.iter().flat_map(|s| s.points.iter().copied()).collect()
    }

    /// Pearson and Spearman correlation of grade with day over all points.
    pub fn correlation(&self) -> Result<Correlation> {
        grade_time_correlation(&self.pooled())
    }

    /// Correlation within each subject that has at least three points.
    pub fn per_subject(&self) -> Vec<(String, Result<Correlation>)> {
        self.subjects
            .iter()
            .map(|s| (s.subject_id.clone(), grade_time_correlation(&s.points)))
            .collect()
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least three points, got {}",
            x.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Average ranks, ties sharing the mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Correlation between days after the operation and grade.
pub fn grade_time_correlation(points: &[(f64, f64)]) -> Result<Correlation> {
    let (d, g): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(Correlation {
        n: points.len(),
        pearson: pearson(&d, &g)?,
        spearman: spearman(&d, &g)?,
    })
}
