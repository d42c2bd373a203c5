//! Chronological k-fold cross-validation and recursive feature elimination.
//!
//! Folds are contiguous in time (no shuffling); shuffled folds would leak
//! time-series information across the fold boundary. Hyperparameter ties
//! break toward stronger regularization: smaller C first, then smaller
//! gamma.

use serde::{Deserialize, Serialize};

use super::{evaluate, train_model, ClassifyError, Model, ModelSpec};
use crate::features::FeatureRow;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvPoint {
    pub spec: ModelSpec,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub points: Vec<CvPoint>,
    pub best_index: usize,
}

impl CvReport {
    pub fn best(&self) -> &CvPoint {
        &self.points[self.best_index]
    }
}

/// True when `a` should replace `b` as the best point: higher accuracy, or
/// equal accuracy with stronger regularization (smaller C, then smaller
/// gamma).
fn beats(a: &CvPoint, b: &CvPoint) -> bool {
    if a.mean_accuracy != b.mean_accuracy {
        return a.mean_accuracy > b.mean_accuracy;
    }
    if a.spec.c() != b.spec.c() {
        return a.spec.c() < b.spec.c();
    }
    match (a.spec.gamma(), b.spec.gamma()) {
        (Some(ga), Some(gb)) => ga < gb,
        _ => false,
    }
}

/// Score every grid point by mean held-out accuracy over `k` contiguous
/// chronological folds.
pub fn cross_validate(
    names: &[String],
    rows: &[FeatureRow],
    grid: &[ModelSpec],
    k: usize,
) -> Result<CvReport, ClassifyError> {
    if grid.is_empty() {
        return Err(ClassifyError::InvalidParam("empty hyperparameter grid".into()));
    }
    if k < 2 {
        return Err(ClassifyError::InvalidParam(format!("fold count {k} < 2")));
    }
    let pos = rows.iter().filter(|r| r.label > 0).count();
    let neg = rows.len() - pos;
    if pos < k || neg < k {
        return Err(ClassifyError::TooFewRows {
            needed: k,
            got: pos.min(neg),
        });
    }

    let n = rows.len();
    let bounds: Vec<(usize, usize)> = (0..k).map(|f| (f * n / k, (f + 1) * n / k)).collect();

    let mut points = Vec::with_capacity(grid.len());
    for spec in grid {
        let mut fold_accuracies = Vec::with_capacity(k);
        for &(start, end) in &bounds {
            let mut train: Vec<FeatureRow> = Vec::with_capacity(n - (end - start));
            train.extend_from_slice(&rows[..start]);
            train.extend_from_slice(&rows[end..]);
            let model = train_model(*spec, names, &train)?;
            let report = evaluate(&model, &rows[start..end])?;
            fold_accuracies.push(report.accuracy);
        }
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
        points.push(CvPoint {
            spec: *spec,
            fold_accuracies,
            mean_accuracy,
        });
    }

    let mut best_index = 0;
    for i in 1..points.len() {
        if beats(&points[i], &points[best_index]) {
            best_index = i;
        }
    }
    Ok(CvReport { points, best_index })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfeStep {
    pub feature_names: Vec<String>,
    pub best_spec: ModelSpec,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfeReport {
    /// One entry per feature-set size, largest first.
    pub steps: Vec<RfeStep>,
    /// The feature subset with the best CV accuracy along the path; ties go
    /// to the smaller subset.
    pub selected: Vec<String>,
}

use crate::features::project_columns;

/// Importance of each projected feature under the trained model. Logistic
/// regression uses |weight|; the SVM uses permutation importance with a
/// deterministic half-rotation of the feature column.
fn importances(
    model: &Model,
    names: &[String],
    rows: &[FeatureRow],
) -> Result<Vec<f64>, ClassifyError> {
    match model {
        Model::LogReg(m) => Ok(m.weights.iter().map(|w| w.abs()).collect()),
        Model::Svm(_) => {
            let base = evaluate(model, rows)?.accuracy;
            let shift = rows.len() / 2;
            let mut out = Vec::with_capacity(names.len());
            for j in 0..names.len() {
                let mut shuffled = rows.to_vec();
                for (i, row) in shuffled.iter_mut().enumerate() {
                    row.values[j] = rows[(i + shift) % rows.len()].values[j];
                }
                let acc = evaluate(model, &shuffled)?.accuracy;
                out.push(base - acc);
            }
            Ok(out)
        }
    }
}

/// Greedy recursive feature elimination with cross-validated scoring at
/// every step.
pub fn rfecv(
    names: &[String],
    rows: &[FeatureRow],
    grid: &[ModelSpec],
    k: usize,
) -> Result<RfeReport, ClassifyError> {
    if names.is_empty() {
        return Err(ClassifyError::TooFewFeatures);
    }
    let mut keep: Vec<usize> = (0..names.len()).collect();
    let mut steps: Vec<RfeStep> = Vec::new();

    loop {
        let (sub_names, sub_rows) = project_columns(names, rows, &keep);
        let report = cross_validate(&sub_names, &sub_rows, grid, k)?;
        let best = report.best();
        steps.push(RfeStep {
            feature_names: sub_names.clone(),
            best_spec: best.spec,
            mean_accuracy: best.mean_accuracy,
        });
        if keep.len() == 1 {
            break;
        }

        let model = train_model(best.spec, &sub_names, &sub_rows)?;
        let scores = importances(&model, &sub_names, &sub_rows)?;
        // Drop the weakest feature; ties drop the later-listed one.
        let mut drop_pos = 0;
        for (p, s) in scores.iter().enumerate() {
            if *s <= scores[drop_pos] {
                drop_pos = p;
            }
        }
        keep.remove(drop_pos);
    }

    let mut best_step = 0;
    for i in 1..steps.len() {
        // >= prefers later steps, i.e. fewer features, on exact ties.
        if steps[i].mean_accuracy >= steps[best_step].mean_accuracy {
            best_step = i;
        }
    }
    let selected = steps[best_step].feature_names.clone();
    Ok(RfeReport { steps, selected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::rows_from;
    use crate::rng::Pcg32;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    /// Balanced rows where feature 0 predicts the label with a margin and
    /// the remaining features are noise.
    fn planted(seed: u64, n: usize, noise_features: usize) -> Vec<FeatureRow> {
        let mut rng = Pcg32::new(seed, 0);
        let data: Vec<(Vec<f64>, i8)> = (0..n)
            .map(|i| {
                let label: i8 = if i % 2 == 0 { 1 } else { -1 };
                let signal = if label > 0 {
                    rng.uniform(0.6, 1.0)
                } else {
                    rng.uniform(0.0, 0.4)
                };
                let mut values = vec![signal];
                values.extend((0..noise_features).map(|_| rng.next_f64()));
                (values, label)
            })
            .collect();
        rows_from(
            &data
                .iter()
                .map(|(v, l)| (v.as_slice(), *l))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn singleton_grid_is_best() {
        let rows = planted(1, 30, 1);
        let grid = [ModelSpec::LogReg { c: 1.0 }];
        let report = cross_validate(&names(2), &rows, &grid, 3).unwrap();
        assert_eq!(report.best_index, 0);
        assert_eq!(report.points.len(), 1);
    }

    #[test]
    fn accuracy_tie_goes_to_smaller_c() {
        let rows = planted(2, 36, 0);
        // Both Cs classify the clean margin perfectly; larger C listed first.
        let grid = [ModelSpec::LogReg { c: 100.0 }, ModelSpec::LogReg { c: 10.0 }];
        let report = cross_validate(&names(1), &rows, &grid, 3).unwrap();
        assert_eq!(
            report.points[0].mean_accuracy,
            report.points[1].mean_accuracy
        );
        assert_eq!(report.best().spec.c(), 10.0);
    }

    #[test]
    fn gamma_breaks_remaining_ties() {
        let a = CvPoint {
            spec: ModelSpec::SvmRbf { c: 1.0, gamma: 0.1 },
            fold_accuracies: vec![],
            mean_accuracy: 0.8,
        };
        let b = CvPoint {
            spec: ModelSpec::SvmRbf { c: 1.0, gamma: 1.0 },
            fold_accuracies: vec![],
            mean_accuracy: 0.8,
        };
        assert!(beats(&a, &b));
        assert!(!beats(&b, &a));
    }

    #[test]
    fn too_few_rows_of_a_class_is_rejected() {
        let rows = rows_from(&[(&[1.0], 1), (&[0.9], 1), (&[0.8], 1), (&[0.1], -1)]);
        assert!(matches!(
            cross_validate(&names(1), &rows, &[ModelSpec::LogReg { c: 1.0 }], 3),
            Err(ClassifyError::TooFewRows { needed: 3, got: 1 })
        ));
    }

    #[test]
    fn folds_are_contiguous_and_chronological() {
        // 9 rows, 3 folds: a model trained without the middle fold must
        // never have seen dates 2016-01-07..2016-01-11.
        let rows = planted(3, 9, 0);
        let bounds: Vec<(usize, usize)> = (0..3).map(|f| (f * 9 / 3, (f + 1) * 9 / 3)).collect();
        assert_eq!(bounds, vec![(0, 3), (3, 6), (6, 9)]);
    }

    #[test]
    fn cv_recovers_a_useful_c_on_planted_data() {
        // The informative feature carries a clean margin; CV should never
        // pick a C so small that the model collapses to the bias.
        let mut wins = 0;
        for seed in 0..10 {
            let rows = planted(100 + seed, 60, 4);
            let grid = crate::classify::default_logreg_grid();
            let report = cross_validate(&names(5), &rows, &grid, 3).unwrap();
            if report.best().mean_accuracy > 0.9 {
                wins += 1;
            }
        }
        assert!(wins >= 8, "CV found a strong point on only {wins}/10 seeds");
    }

    #[test]
    fn rfecv_keeps_the_predictive_feature() {
        let rows = planted(7, 60, 5);
        let grid = [ModelSpec::LogReg { c: 1.0 }, ModelSpec::LogReg { c: 10.0 }];
        let report = rfecv(&names(6), &rows, &grid, 3).unwrap();
        assert!(
            report.selected.contains(&"f0".to_string()),
            "selected {:?}",
            report.selected
        );
        assert_eq!(report.steps.len(), 6);
    }

    #[test]
    fn rfecv_retains_both_xor_features() {
        // Jittered XOR in two coordinates: neither feature works alone.
        let mut rng = Pcg32::new(9, 0);
        let data: Vec<(Vec<f64>, i8)> = (0..40)
            .map(|i| {
                let a = i % 2;
                let b = (i / 2) % 2;
                let label: i8 = if a == b { 1 } else { -1 };
                (
                    vec![
                        a as f64 + rng.uniform(-0.05, 0.05),
                        b as f64 + rng.uniform(-0.05, 0.05),
                    ],
                    label,
                )
            })
            .collect();
        let rows = rows_from(
            &data
                .iter()
                .map(|(v, l)| (v.as_slice(), *l))
                .collect::<Vec<_>>(),
        );
        let grid = [ModelSpec::SvmRbf { c: 10.0, gamma: 1.0 }];
        let report = rfecv(&names(2), &rows, &grid, 3).unwrap();
        assert_eq!(report.selected.len(), 2, "selected {:?}", report.selected);
    }

    #[test]
    fn single_feature_gives_trace_of_length_one() {
        let rows = planted(11, 30, 0);
        let grid = [ModelSpec::LogReg { c: 1.0 }];
        let report = rfecv(&names(1), &rows, &grid, 3).unwrap();
        assert_eq!(report.steps.len(), 1);
        assert_eq!(report.selected, vec!["f0".to_string()]);
    }

    #[test]
    fn no_features_is_an_error() {
        let rows = planted(13, 30, 0);
        assert!(matches!(
            rfecv(&[], &rows, &[ModelSpec::LogReg { c: 1.0 }], 3),
            Err(ClassifyError::TooFewFeatures)
        ));
    }
}
