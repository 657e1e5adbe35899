//! LDA, PCA-subspace and Gaussian naive Bayes classifiers on standardized
//! selected features.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::ingest::write_atomic;
use crate::linalg::{cholesky, cholesky_solve, dot, norm, symmetric_eigen, Matrix};
use crate::model::Group;
use crate::scalar::{mean, Real};

pub const MODEL_VERSION: u32 = 1;
/// Fraction of variance the PCA subspace retains by default.
pub const PCA_VARIANCE: f64 = 0.95;
/// Within-class scatter ridge as a fraction of its mean diagonal.
/// Naive Bayes variance floor as a fraction of the column variance.
pub const NB_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lda,
    Pca,
    Nb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lda, ModelKind::Pca, ModelKind::Nb];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::Pca => "pca",
            ModelKind::Nb => "nb",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown classifier {s:?}")))
    }
}

/// Per-column z-scoring with training statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    /// Sample standard deviation; 1 for constant columns.
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::DegenerateData("standardization needs at least two rows".into()));
        }
        let d = rows[0].len();
        let mut mu = vec![T::zero(); d];
        let mut scale = vec![T::one(); d];
        for j in 0..d {
            let col: Vec<T> = rows.iter().map(|r| r[j]).collect();
            mu[j] = mean(&col);
            let sd = crate::scalar::sample_variance(&col).sqrt();
            if sd > T::zero() {
                scale[j] = sd;
            }
        }
        Ok(Self { mean: mu, scale })
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.mean.len(), x.len())?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (*v - *m) / *s)
            .collect())
    }

    pub fn apply_all(&self, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaParams<T> {
    /// Unit Fisher direction; patients project above the threshold.
    pub w: Vec<T>,
    pub threshold: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaParams<T> {
    pub mean: Vec<T>,
    /// Retained principal axes, by decreasing variance.
    pub axes: Vec<Vec<T>>,
    /// Every eigenvalue of the training covariance, descending.
    pub eigenvalues: Vec<T>,
    pub patient_centroid: Vec<T>,
    pub control_centroid: Vec<T>,
}

impl<T: Real> PcaParams<T> {
    pub fn project(&self, z: &[T]) -> Vec<T> {
        let c: Vec<T> = z.iter().zip(&self.mean).map(|(a, b)| *a - *b).collect();
        self.axes.iter().map(|a| dot(a, &c)).collect()
    }

    /// Fraction of total variance carried by the retained axes.
    pub fn retained_variance(&self) -> T {
        let total: T = self.eigenvalues.iter().map(|v| v.max(T::zero())).sum();
        let kept: T = self.eigenvalues[..self.axes.len()].iter().map(|v| v.max(T::zero())).sum();
        kept / total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub prior: T,
}

impl<T: Real> ClassGaussian<T> {
    fn log_likelihood(&self, z: &[T]) -> T {
        let half = T::lit(0.5);
        let tau = T::TAU();
        self.mean
            .iter()
            .zip(&self.var)
            .zip(z)
            .map(|((m, v), x)| {
                let d = *x - *m;
                -half * ((tau * *v).ln() + d * d / *v)
            })
            .sum::<T>()
            + self.prior.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbParams<T> {
    pub patient: ClassGaussian<T>,
    pub control: ClassGaussian<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams<T> {
    Lda(LdaParams<T>),
    Pca(PcaParams<T>),
    Nb(NbParams<T>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel<T> {
    pub version: u32,
    /// Feature indices the model expects, in order.
    pub columns: Vec<usize>,
    pub standardizer: Standardizer<T>,
    pub params: ModelParams<T>,
}

impl<T: Real> ClassifierModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Lda(_) => ModelKind::Lda,
            ModelParams::Pca(_) => ModelKind::Pca,
            ModelParams::Nb(_) => ModelKind::Nb,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        if found != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                found,
                expected: MODEL_VERSION,
            });
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Label of a raw (unstandardized) feature row.
    pub fn classify(&self, x: &[T]) -> Result<Group> {
        let z = self.standardizer.apply(x)?;
        Ok(self.classify_standardized(&z))
    }

    /// Label of a row already standardized with this model's parameters.
    /// Ties go to the patient class.
    pub fn classify_standardized(&self, z: &[T]) -> Group {
        let patient = match &self.params {
            ModelParams::Lda(p) => dot(&p.w, z) >= p.threshold,
            ModelParams::Pca(p) => {
                let y = p.project(z);
                sq_dist(&y, &p.patient_centroid) <= sq_dist(&y, &p.control_centroid)
            }
            ModelParams::Nb(p) => p.patient.log_likelihood(z) >= p.control.log_likelihood(z),
        };
        if patient {
            Group::Patient
        } else {
            Group::Control
        }
    }
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

fn column_means<T: Real>(rows: &[&Vec<T>], d: usize) -> Vec<T> {
    (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<T>() / T::from_count(rows.len()))
        .collect()
}

struct Prepared<T> {
    standardizer: Standardizer<T>,
    z: Vec<Vec<T>>,
    labels: Vec<Group>,
    d: usize,
}

fn prepare<T: Real>(train: &FeatureMatrix<T>) -> Result<Prepared<T>> {
    if train.count(Group::Patient) == 0 || train.count(Group::Control) == 0 {
        return Err(Error::DegenerateData("training data needs both classes".into()));
    }
    if train.dim() == 0 {
        return Err(Error::DegenerateData("training data has no feature columns".into()));
    }
    let standardizer = Standardizer::fit(&train.rows)?;
    let z = standardizer.apply_all(&train.rows)?;
    Ok(Prepared {
        standardizer,
        z,
        labels: train.labels.clone(),
        d: train.dim(),
    })
}

impl<T: Real> Prepared<T> {
    fn class(&self, g: Group) -> Vec<&Vec<T>> {
        self.z
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == g)
            .map(|(r, _)| r)
            .collect()
    }

    fn model(self, columns: &[usize], params: ModelParams<T>) -> ClassifierModel<T> {
        ClassifierModel {
            version: MODEL_VERSION,
            columns: columns.to_vec(),
            standardizer: self.standardizer,
            params,
        }
    }
}

/// Within-class scatter regularisation for LDA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method", content = "value")]
pub enum Shrinkage {
    /// Ledoit–Wolf intensity estimated from the training rows.
    LedoitWolf,
    /// Ridge `λ = r · trace(S_w) / d` with the given `r`.
    Ridge(f64),
}

impl Default for Shrinkage {
    fn default() -> Self {
        Shrinkage::LedoitWolf
    }
}

/// Ledoit–Wolf shrinkage intensity in `[0, 1]` towards a scaled identity,
/// for rows that are already centred.
pub fn ledoit_wolf<T: Real>(centred: &[Vec<T>]) -> T {
    let n = centred.len();
    let d = centred.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return T::one();
    }
    let nn = T::from_count(n);
    let mut s: Matrix<T> = vec![vec![T::zero(); d]; d];
    for r in centred {
        for i in 0..d {
            for j in 0..d {
                s[i][j] = s[i][j] + r[i] * r[j];
            }
        }
    }
    s.iter_mut().flatten().for_each(|v| *v = *v / nn);
    let mu = (0..d).map(|i| s[i][i]).sum::<T>() / T::from_count(d);
    let mut delta = T::zero();
    for i in 0..d {
        for j in 0..d {
            let t = if i == j { s[i][j] - mu } else { s[i][j] };
            delta = delta + t * t;
        }
    }
    let mut beta = T::zero();
    for r in centred {
        for i in 0..d {
            for j in 0..d {
                let t = r[i] * r[j] - s[i][j];
                beta = beta + t * t;
            }
        }
    }
    beta = beta / (nn * nn);
    if !(delta > T::zero()) {
        return T::one();
    }
    beta.min(delta) / delta
}

/// Fisher discriminant on Ledoit–Wolf shrunk within-class scatter.
pub fn train_lda<T: Real>(train: &FeatureMatrix<T>) -> Result<ClassifierModel<T>> {
    train_lda_with(train, Shrinkage::LedoitWolf)
}

/// Fisher discriminant with a fixed ridge, given as a fraction of the mean
/// diagonal of the within-class scatter.
pub fn train_lda_ridge<T: Real>(train: &FeatureMatrix<T>, ridge: f64) -> Result<ClassifierModel<T>> {
    train_lda_with(train, Shrinkage::Ridge(ridge))
}

pub fn train_lda_with<T: Real>(train: &FeatureMatrix<T>, shrinkage: Shrinkage) -> Result<ClassifierModel<T>> {
    let prep = prepare(train)?;
    let d = prep.d;
    let patients = prep.class(Group::Patient);
    let controls = prep.class(Group::Control);
    let mp = column_means(&patients, d);
    let mc = column_means(&controls, d);

    let centred: Vec<Vec<T>> = [(&patients, &mp), (&controls, &mc)]
        .into_iter()
        .flat_map(|(rows, m)| rows.iter().map(move |r| r.iter().zip(m.iter()).map(|(a, b)| *a - *b).collect()))
        .collect();
    let mut sw: Matrix<T> = vec![vec![T::zero(); d]; d];
    for r in &centred {
        for i in 0..d {
            for j in 0..d {
                sw[i][j] = sw[i][j] + r[i] * r[j];
            }
        }
    }
    let trace: T = (0..d).map(|i| sw[i][i]).sum();
    if !(trace > T::zero()) {
        return Err(Error::SingularScatter);
    }
    let target = trace / T::from_count(d);
    match shrinkage {
        Shrinkage::Ridge(r) => {
            for (i, row) in sw.iter_mut().enumerate() {
                row[i] = row[i] + T::lit(r) * target;
            }
        }
        Shrinkage::LedoitWolf => {
            let g = ledoit_wolf(&centred);
            for (i, row) in sw.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (T::one() - g) * *v + if i == j { g * target } else { T::zero() };
                }
            }
        }
    }
    let l = cholesky(&sw)?;
    let diff: Vec<T> = mp.iter().zip(&mc).map(|(a, b)| *a - *b).collect();
    let mut w = cholesky_solve(&l, &diff);
    let len = norm(&w);
    if !(len > T::zero()) || !len.is_finite() {
        return Err(Error::SingularScatter);
    }
    w.iter_mut().for_each(|v| *v = *v / len);
    let threshold = (dot(&w, &mp) + dot(&w, &mc)) * T::lit(0.5);
    Ok(prep.model(&train.columns, ModelParams::Lda(LdaParams { w, threshold })))
}

/// PCA of the pooled standardized training rows with the smallest number
/// of axes reaching `variance` (or exactly `components` when given), then
/// nearest projected class centroid.
pub fn train_pca<T: Real>(
    train: &FeatureMatrix<T>,
    components: Option<usize>,
    variance: f64,
) -> Result<ClassifierModel<T>> {
    if train.len() < 2 {
        return Err(Error::DegenerateData("PCA needs at least two rows".into()));
    }
    let prep = prepare(train)?;
    let d = prep.d;
    let all: Vec<&Vec<T>> = prep.z.iter().collect();
    let mu = column_means(&all, d);
    let mut cov: Matrix<T> = vec![vec![T::zero(); d]; d];
    for r in &prep.z {
        for i in 0..d {
            let di = r[i] - mu[i];
            for j in i..d {
                cov[i][j] = cov[i][j] + di * (r[j] - mu[j]);
            }
        }
    }
    let denom = T::from_count(prep.z.len() - 1);
    for i in 0..d {
        for j in i..d {
            cov[i][j] = cov[i][j] / denom;
            cov[j][i] = cov[i][j];
        }
    }
    let eig = symmetric_eigen(&cov)?;
    let total: T = eig.values.iter().map(|v| v.max(T::zero())).sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateData("training rows have no variance".into()));
    }
    let m = match components {
        Some(m) if m == 0 || m > d => {
            return Err(Error::Config(format!("PCA components {m} outside 1..={d}")))
        }
        Some(m) => m,
        None => {
            let target = T::lit(variance);
            let mut acc = T::zero();
            let mut m = d;
            for (k, v) in eig.values.iter().enumerate() {
                acc = acc + v.max(T::zero());
                if acc / total >= target {
                    m = k + 1;
                    break;
                }
            }
            m
        }
    };
    let mut params = PcaParams {
        mean: mu,
        axes: eig.vectors[..m].to_vec(),
        eigenvalues: eig.values,
        patient_centroid: Vec::new(),
        control_centroid: Vec::new(),
    };
    let centroid = |rows: Vec<&Vec<T>>, p: &PcaParams<T>| {
        let proj: Vec<Vec<T>> = rows.iter().map(|r| p.project(r)).collect();
        column_means(&proj.iter().collect::<Vec<_>>(), m)
    };
    params.patient_centroid = centroid(prep.class(Group::Patient), &params);
    params.control_centroid = centroid(prep.class(Group::Control), &params);
    Ok(prep.model(&train.columns, ModelParams::Pca(params)))
}

/// Gaussian naive Bayes with class priors from training frequencies.
pub fn train_nb<T: Real>(train: &FeatureMatrix<T>) -> Result<ClassifierModel<T>> {
    let prep = prepare(train)?;
    let d = prep.d;
    let n = T::from_count(prep.z.len());
    let all: Vec<&Vec<T>> = prep.z.iter().collect();
    let floor: Vec<T> = {
        let mu = column_means(&all, d);
        (0..d)
            .map(|j| {
                let v = all.iter().map(|r| (r[j] - mu[j]) * (r[j] - mu[j])).sum::<T>() / n;
                (T::lit(NB_VARIANCE_FLOOR) * v).max(T::min_positive_value())
            })
            .collect()
    };
    let fit = |rows: Vec<&Vec<T>>| {
        let k = T::from_count(rows.len());
        let mu = column_means(&rows, d);
        let var = (0..d)
            .map(|j| {
                let v = rows.iter().map(|r| (r[j] - mu[j]) * (r[j] - mu[j])).sum::<T>() / k;
                v.max(floor[j])
            })
            .collect();
        ClassGaussian {
            mean: mu,
            var,
            prior: k / n,
        }
    };
    let params = NbParams {
        patient: fit(prep.class(Group::Patient)),
        control: fit(prep.class(Group::Control)),
    };
    Ok(prep.model(&train.columns, ModelParams::Nb(params)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Fixed PCA dimension; chosen by retained variance when absent.
    pub pca_components: Option<usize>,
    pub pca_variance: f64,
    pub lda_shrinkage: Shrinkage,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            pca_components: None,
            pca_variance: PCA_VARIANCE,
            lda_shrinkage: Shrinkage::LedoitWolf,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return Err(Error::Config(format!("pca_variance {} outside (0, 1]", self.pca_variance)));
        }
        if self.pca_components == Some(0) {
            return Err(Error::Config("pca_components must be at least 1".into()));
        }
        if let Shrinkage::Ridge(r) = self.lda_shrinkage {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("LDA ridge {r} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

pub fn train_model<T: Real>(
    kind: ModelKind,
    train: &FeatureMatrix<T>,
    cfg: &ClassifierConfig,
) -> Result<ClassifierModel<T>> {
    match kind {
        ModelKind::Lda => train_lda_with(train, cfg.lda_shrinkage),
        ModelKind::Pca => train_pca(train, cfg.pca_components, cfg.pca_variance),
        ModelKind::Nb => train_nb(train),
    }
}

/// Confusion counts with patients as the positive class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    /// Undefined without test patients.
    pub sensitivity: Option<f64>,
    /// Undefined without test controls.
    pub specificity: Option<f64>,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let total = tp + fp + tn + fn_;
        if total == 0 {
            return Err(Error::EmptyTestSet);
        }
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        Ok(Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy: (tp + tn) as f64 / total as f64,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
        })
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Predicted label of every test row.
pub fn predict<T: Real>(model: &ClassifierModel<T>, test: &FeatureMatrix<T>) -> Result<Vec<Group>> {
    check_dim(model.columns.len(), test.dim())?;
    if model.columns != test.columns {
        return Err(Error::Schema("test columns differ from the model's".into()));
    }
    test.rows.iter().map(|r| model.classify(r)).collect()
}

pub fn evaluate<T: Real>(model: &ClassifierModel<T>, test: &FeatureMatrix<T>) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let pred = predict(model, test)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (truth, guess) in test.labels.iter().zip(&pred) {
        match (truth, guess) {
            (Group::Patient, Group::Patient) => tp += 1,
            (Group::Patient, Group::Control) => fn_ += 1,
            (Group::Control, Group::Control) => tn += 1,
            (Group::Control, Group::Patient) => fp += 1,
        }
    }
    EvalReport::from_counts(tp, fp, tn, fn_)
}
