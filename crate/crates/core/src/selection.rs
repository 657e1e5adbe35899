//! Significance testing and SNR ranking of features.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::{feature_at, feature_index, feature_name, FeatureId, SignalId};
use crate::ingest::write_atomic;
use crate::model::Group;
use crate::scalar::{mean, sample_variance, Real};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_K: usize = 26;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Unpaired two-sample test with unequal variances.
    #[default]
    Welch,
    /// Paired test on row-wise differences; groups must have equal size.
    Paired,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub alpha: f64,
    pub k: usize,
    pub test: TestKind,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
            test: TestKind::Welch,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Group statistics of one feature; group 1 is the control group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub p: f64,
    pub snr: f64,
}

fn degenerate(msg: &str) -> Error {
    Error::DegenerateGroups(msg.to_string())
}

fn two_sided(t: f64, df: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| degenerate(&e.to_string()))?;
    Ok((2.0 * dist.cdf(-t.abs())).min(1.0))
}

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn t_test<T: Real>(group1: &[T], group2: &[T]) -> Result<f64> {
    let (n1, n2) = (group1.len(), group2.len());
    if n1 < 2 || n2 < 2 {
        return Err(degenerate("each group needs at least two samples"));
    }
    let (m1, m2) = (mean(group1).as_f64(), mean(group2).as_f64());
    let a = sample_variance(group1).as_f64() / n1 as f64;
    let b = sample_variance(group2).as_f64() / n2 as f64;
    let se2 = a + b;
    if !(se2 > 0.0) {
        return Err(degenerate("both groups have zero variance"));
    }
    let t = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / (a * a / (n1 - 1) as f64 + b * b / (n2 - 1) as f64);
    two_sided(t, df)
}

/// Two-sided p-value of the paired t-test on `group1[i] - group2[i]`.
pub fn paired_t_test<T: Real>(group1: &[T], group2: &[T]) -> Result<f64> {
    if group1.len() != group2.len() {
        return Err(degenerate("paired groups differ in size"));
    }
    if group1.len() < 2 {
        return Err(degenerate("paired test needs at least two pairs"));
    }
    let d: Vec<f64> = group1
        .iter()
        .zip(group2)
        .map(|(a, b)| (*a - *b).as_f64())
        .collect();
    let n = d.len() as f64;
    let var = sample_variance(&d);
    let md = mean(&d);
    if !(var > 0.0) {
        return if md == 0.0 {
            Ok(1.0)
        } else {
            Err(degenerate("paired differences are constant"))
        };
    }
    two_sided(md / (var / n).sqrt(), n - 1.0)
}

/// `(mu1 - mu2) / (sigma1 + sigma2)`.
pub fn snr(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<f64> {
    let spread = sigma1 + sigma2;
    if !(spread > 0.0) {
        return Err(Error::ZeroSpread);
    }
    Ok((mu1 - mu2) / spread)
}

/// Statistics of one feature given its control and patient samples.
pub fn feature_stats<T: Real>(controls: &[T], patients: &[T], test: TestKind) -> Result<FeatureStats> {
    let p = match test {
        TestKind::Welch => t_test(controls, patients)?,
        TestKind::Paired => paired_t_test(controls, patients)?,
    };
    let mu1 = mean(controls).as_f64();
    let mu2 = mean(patients).as_f64();
    let sigma1 = sample_variance(controls).as_f64().sqrt();
    let sigma2 = sample_variance(patients).as_f64().sqrt();
    Ok(FeatureStats {
        mu1,
        mu2,
        sigma1,
        sigma2,
        p,
        snr: snr(mu1, mu2, sigma1, sigma2)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub signal: SignalId,
    pub feature: FeatureId,
    #[serde(flatten)]
    pub stats: FeatureStats,
}

impl SelectedFeature {
    pub fn index(&self) -> usize {
        feature_index(self.signal, self.feature)
    }

    pub fn name(&self) -> String {
        feature_name(self.signal, self.feature)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub alpha: f64,
    pub k: usize,
    #[serde(default)]
    pub test: TestKind,
    /// Sorted by |snr| descending.
    pub features: Vec<SelectedFeature>,
}

impl SelectionResult {
    /// Indices of the selected features in the 243-element vector.
    pub fn indices(&self) -> Vec<usize> {
        self.features.iter().map(SelectedFeature::index).collect()
    }

    pub fn snr_vector(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.stats.snr).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: Self = serde_json::from_str(&text)?;
        if r.features.is_empty() {
            return Err(Error::Schema(format!("{}: selection lists no features", path.display())));
        }
        Ok(r)
    }
}

/// Statistics of every column of `matrix`, `None` where a column cannot be
/// tested (zero spread in both groups).
pub fn all_stats<T: Real>(matrix: &FeatureMatrix<T>, test: TestKind) -> Result<Vec<Option<FeatureStats>>> {
    let nc = matrix.count(Group::Control);
    let np = matrix.count(Group::Patient);
    if nc < 2 || np < 2 {
        return Err(degenerate(&format!(
            "need at least two subjects per group, got {nc} controls and {np} patients"
        )));
    }
    if test == TestKind::Paired && nc != np {
        return Err(degenerate("paired test needs equally many controls and patients"));
    }
    let controls = matrix.group_rows(Group::Control);
    let patients = matrix.group_rows(Group::Patient);
    (0..matrix.dim())
        .map(|j| {
            let c: Vec<T> = controls.iter().map(|r| r[j]).collect();
            let p: Vec<T> = patients.iter().map(|r| r[j]).collect();
            match feature_stats(&c, &p, test) {
                Ok(s) => Ok(Some(s)),
                Err(Error::DegenerateGroups(_)) | Err(Error::ZeroSpread) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Keeps features with `p < alpha`, ranks them by |snr| (ties by feature
/// name) and returns the top `k`.
pub fn select_features<T: Real>(matrix: &FeatureMatrix<T>, cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let stats = all_stats(matrix, cfg.test)?;
    let mut survivors: Vec<SelectedFeature> = stats
        .into_iter()
        .zip(&matrix.columns)
        .filter_map(|(s, &col)| s.map(|s| (s, col)))
        .filter(|(s, _)| s.p < cfg.alpha)
        .map(|(stats, col)| {
            let (signal, feature) = feature_at(col);
            SelectedFeature {
                signal,
                feature,
                stats,
            }
        })
        .collect();
    if survivors.is_empty() {
        return Err(Error::NoSignificantFeatures { alpha: cfg.alpha });
    }
    survivors.sort_by(|a, b| {
        b.stats
            .snr
            .abs()
            .total_cmp(&a.stats.snr.abs())
            .then_with(|| a.name().cmp(&b.name()))
    });
    survivors.truncate(cfg.k);
    Ok(SelectionResult {
        alpha: cfg.alpha,
        k: cfg.k,
        test: cfg.test,
        features: survivors,
    })
}
