//! Binary classifiers over feature rows: L1 logistic regression and
//! RBF-kernel SVM, with chronological cross-validation and recursive
//! feature elimination.

mod cv;
mod logreg;
mod svm;

pub use cv::{cross_validate, rfecv, CvPoint, CvReport, RfeReport, RfeStep};
pub use logreg::{train_logreg_l1, LogRegDiagnostics, LogRegModel, LogRegOpt};
pub use svm::{train_svm_rbf, SvmDiagnostics, SvmModel};

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureRow;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training slice contains a single class")]
    SingleClassTraining,
    #[error("solver did not converge within {updates} updates")]
    NoConvergence { updates: usize },
    #[error("feature mismatch: model expects {expected} features, row has {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("too few rows: need at least {needed} of each class, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("too few features")]
    TooFewFeatures,
    #[error("test slice is empty")]
    EmptyTest,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad model file {path}: {message}")]
    BadModelFile { path: String, message: String },
}

/// A model family plus its hyperparameters; grid points for CV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LogReg { c: f64 },
    SvmRbf { c: f64, gamma: f64 },
}

impl ModelSpec {
    pub fn c(&self) -> f64 {
        match self {
            ModelSpec::LogReg { c } => *c,
            ModelSpec::SvmRbf { c, .. } => *c,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            ModelSpec::LogReg { .. } => None,
            ModelSpec::SvmRbf { gamma, .. } => Some(*gamma),
        }
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelSpec::LogReg { c } => write!(f, "logreg(C={c})"),
            ModelSpec::SvmRbf { c, gamma } => write!(f, "svm(C={c},gamma={gamma})"),
        }
    }
}

/// Default grid: C sweep for logistic regression.
pub fn default_logreg_grid() -> Vec<ModelSpec> {
    [0.01, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&c| ModelSpec::LogReg { c })
        .collect()
}

/// Default grid: (C, gamma) sweep for the RBF SVM.
pub fn default_svm_grid() -> Vec<ModelSpec> {
    let mut grid = Vec::new();
    for &c in &[0.01, 0.1, 1.0, 10.0, 100.0] {
        for &gamma in &[0.01, 0.1, 1.0, 10.0] {
            grid.push(ModelSpec::SvmRbf { c, gamma });
        }
    }
    grid
}

/// A trained model of either family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    LogReg(LogRegModel),
    Svm(SvmModel),
}

/// Sign prediction with its decision score. A score of exactly zero
/// resolves to +1, matching the label tie-break.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: i8,
    pub score: f64,
}

impl Model {
    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::LogReg(m) => &m.feature_names,
            Model::Svm(m) => &m.feature_names,
        }
    }

    /// Decision-function sign for one feature vector (ordered as
    /// `feature_names`).
    pub fn predict(&self, row: &[f64]) -> Result<Prediction, ClassifyError> {
        let expected = self.feature_names().len();
        if row.len() != expected {
            return Err(ClassifyError::FeatureMismatch {
                expected,
                got: row.len(),
            });
        }
        let score = match self {
            Model::LogReg(m) => m.decision(row),
            Model::Svm(m) => m.decision(row),
        };
        Ok(Prediction {
            label: if score >= 0.0 { 1 } else { -1 },
            score,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        File::create(path)
            .and_then(|mut f| f.write_all(json.as_bytes()))
            .map_err(|e| ClassifyError::Io {
                path: path.display().to_string(),
                source: e,
            })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let file = File::open(path).map_err(|e| ClassifyError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| ClassifyError::BadModelFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Train one model per the spec on the given rows.
pub fn train_model(
    spec: ModelSpec,
    names: &[String],
    rows: &[FeatureRow],
) -> Result<Model, ClassifyError> {
    match spec {
        ModelSpec::LogReg { c } => {
            train_logreg_l1(names, rows, c, &LogRegOpt::default()).map(Model::LogReg)
        }
        ModelSpec::SvmRbf { c, gamma } => train_svm_rbf(names, rows, c, gamma).map(Model::Svm),
    }
}

/// Accuracy plus confusion counts over a test slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

/// Fraction of correct sign predictions over `rows`.
pub fn evaluate(model: &Model, rows: &[FeatureRow]) -> Result<EvalReport, ClassifyError> {
    if rows.is_empty() {
        return Err(ClassifyError::EmptyTest);
    }
    let mut report = EvalReport {
        accuracy: 0.0,
        true_pos: 0,
        true_neg: 0,
        false_pos: 0,
        false_neg: 0,
    };
    for row in rows {
        let pred = model.predict(&row.values)?;
        match (pred.label, row.label) {
            (1, 1) => report.true_pos += 1,
            (-1, -1) => report.true_neg += 1,
            (1, -1) => report.false_pos += 1,
            _ => report.false_neg += 1,
        }
    }
    report.accuracy = (report.true_pos + report.true_neg) as f64 / rows.len() as f64;
    Ok(report)
}

pub(crate) fn check_both_classes(rows: &[FeatureRow]) -> Result<(), ClassifyError> {
    let has_pos = rows.iter().any(|r| r.label > 0);
    let has_neg = rows.iter().any(|r| r.label < 0);
    if has_pos && has_neg {
        Ok(())
    } else {
        Err(ClassifyError::SingleClassTraining)
    }
}

/// RBF kernel with unit diagonal.
pub(crate) fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum();
    (-gamma * sq).exp()
}

#[cfg(test)]
pub(crate) fn rows_from(data: &[(&[f64], i8)]) -> Vec<FeatureRow> {
    use chrono::NaiveDate;
    let start = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
    data.iter()
        .enumerate()
        .map(|(i, (values, label))| FeatureRow {
            date: crate::calendar::trading_days(start, data.len())[i],
            values: values.to_vec(),
            label: *label,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_tie_breaks_to_positive() {
        let model = Model::LogReg(LogRegModel {
            feature_names: vec!["a".into(), "b".into()],
            weights: vec![0.0, 0.0],
            bias: 0.0,
            c_param: 1.0,
            diagnostics: LogRegDiagnostics::default(),
        });
        let p = model.predict(&[0.3, 0.7]).unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.score, 0.0);
    }

    #[test]
    fn predict_score_is_dot_product() {
        let model = Model::LogReg(LogRegModel {
            feature_names: vec!["a".into(), "b".into()],
            weights: vec![1.0, 0.0],
            bias: 0.0,
            c_param: 1.0,
            diagnostics: LogRegDiagnostics::default(),
        });
        let p = model.predict(&[0.8, 0.3]).unwrap();
        assert_eq!(p.label, 1);
        assert!((p.score - 0.8).abs() < 1e-15);
    }

    #[test]
    fn predict_rejects_wrong_arity() {
        let model = Model::LogReg(LogRegModel {
            feature_names: vec!["a".into()],
            weights: vec![1.0],
            bias: 0.0,
            c_param: 1.0,
            diagnostics: LogRegDiagnostics::default(),
        });
        assert!(matches!(
            model.predict(&[1.0, 2.0]),
            Err(ClassifyError::FeatureMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn evaluate_counts_sum_to_total() {
        let rows = rows_from(&[
            (&[1.0], 1),
            (&[0.0], -1),
            (&[1.0], -1),
            (&[0.0], 1),
        ]);
        let model = Model::LogReg(LogRegModel {
            feature_names: vec!["a".into()],
            weights: vec![1.0],
            bias: -0.5,
            c_param: 1.0,
            diagnostics: LogRegDiagnostics::default(),
        });
        let report = evaluate(&model, &rows).unwrap();
        assert_eq!(report.total(), 4);
        assert!((report.accuracy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_empty() {
        let model = Model::LogReg(LogRegModel {
            feature_names: vec![],
            weights: vec![],
            bias: 0.0,
            c_param: 1.0,
            diagnostics: LogRegDiagnostics::default(),
        });
        assert!(matches!(evaluate(&model, &[]), Err(ClassifyError::EmptyTest)));
    }

    #[test]
    fn all_positive_predictor_on_balanced_test_scores_half() {
        let rows = rows_from(&[(&[0.0], 1), (&[0.0], -1), (&[0.0], 1), (&[0.0], -1)]);
        let model = Model::LogReg(LogRegModel {
            feature_names: vec!["a".into()],
            weights: vec![0.0],
            bias: 1.0,
            c_param: 1.0,
            diagnostics: LogRegDiagnostics::default(),
        });
        assert!((evaluate(&model, &rows).unwrap().accuracy - 0.5).abs() < 1e-15);
    }
}
