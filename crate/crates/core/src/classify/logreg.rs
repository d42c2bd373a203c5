//! L1-regularized logistic regression via proximal gradient descent
//! (ISTA with backtracking line search).
//!
//! Objective: `(1/n) sum log(1 + exp(-y_i (w.x_i + b))) + (1/C) ||w||_1`,
//! bias unpenalized. Soft-thresholding produces exact zeros, so sparsity is
//! literal, not approximate.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, ClassifyError};
use crate::features::FeatureRow;

#[derive(Debug, Clone, Copy)]
pub struct LogRegOpt {
    pub max_iters: usize,
    /// Stop once the objective decrease per step falls below this...
    pub tol_objective: f64,
    /// ...and the subgradient optimality residual is below this.
    pub tol_residual: f64,
}

impl Default for LogRegOpt {
    fn default() -> Self {
        LogRegOpt {
            max_iters: 10_000,
            tol_objective: 1e-8,
            tol_residual: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LogRegDiagnostics {
    pub iterations: usize,
    pub final_objective: f64,
    /// Max violation of the soft-threshold optimality conditions at exit.
    pub optimality_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c_param: f64,
    pub diagnostics: LogRegDiagnostics,
}

impl LogRegModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

/// `log(1 + exp(-t))` without overflow.
fn log1p_exp_neg(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `sigma(-t) = 1 / (1 + exp(t))` without overflow.
fn sigmoid_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

struct Problem<'a> {
    rows: &'a [FeatureRow],
    dim: usize,
}

impl Problem<'_> {
    /// Smooth part of the objective.
    fn loss(&self, w: &[f64], b: f64) -> f64 {
        let n = self.rows.len() as f64;
        self.rows
            .iter()
            .map(|row| {
                let z = w.iter().zip(&row.values).map(|(wj, x)| wj * x).sum::<f64>() + b;
                log1p_exp_neg(f64::from(row.label) * z)
            })
            .sum::<f64>()
            / n
    }

    /// Gradient of the smooth part w.r.t. (w, b).
    fn grad(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.rows.len() as f64;
        let mut gw = vec![0.0; self.dim];
        let mut gb = 0.0;
        for row in self.rows {
            let y = f64::from(row.label);
            let z = w.iter().zip(&row.values).map(|(wj, x)| wj * x).sum::<f64>() + b;
            let coeff = -y * sigmoid_neg(y * z) / n;
            for (g, x) in gw.iter_mut().zip(&row.values) {
                *g += coeff * x;
            }
            gb += coeff;
        }
        (gw, gb)
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Subgradient optimality residual of the L1 objective at (w, b).
fn optimality_residual(gw: &[f64], gb: f64, w: &[f64], lambda: f64) -> f64 {
    let mut res = gb.abs();
    for (g, wj) in gw.iter().zip(w) {
        let r = if *wj > 0.0 {
            (g + lambda).abs()
        } else if *wj < 0.0 {
            (g - lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        res = res.max(r);
    }
    res
}

/// Train by proximal gradient with backtracking. Requires both classes in
/// the training slice.
pub fn train_logreg_l1(
    names: &[String],
    rows: &[FeatureRow],
    c: f64,
    opt: &LogRegOpt,
) -> Result<LogRegModel, ClassifyError> {
    if c <= 0.0 {
        return Err(ClassifyError::InvalidParam(format!("C must be positive, got {c}")));
    }
    if rows.len() < 2 {
        return Err(ClassifyError::TooFewRows {
            needed: 1,
            got: rows.len(),
        });
    }
    check_both_classes(rows)?;

    let dim = names.len();
    let problem = Problem { rows, dim };
    let lambda = 1.0 / c;

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut objective = problem.loss(&w, b); // ||w||_1 = 0 at the start
    let mut step = 1.0;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    for iter in 0..opt.max_iters {
        iterations = iter + 1;
        let (gw, gb) = problem.grad(&w, b);

        residual = optimality_residual(&gw, gb, &w, lambda);

        // Backtracking prox step: shrink until the quadratic upper bound
        // at the candidate point holds.
        let loss_here = objective - lambda * w.iter().map(|x| x.abs()).sum::<f64>();
        let (new_w, new_b, new_loss) = loop {
            let cand_w: Vec<f64> = w
                .iter()
                .zip(&gw)
                .map(|(wj, g)| soft_threshold(wj - step * g, step * lambda))
                .collect();
            let cand_b = b - step * gb;
            let cand_loss = problem.loss(&cand_w, cand_b);
            let mut lin = gb * (cand_b - b);
            let mut sq = (cand_b - b) * (cand_b - b);
            for j in 0..dim {
                let d = cand_w[j] - w[j];
                lin += gw[j] * d;
                sq += d * d;
            }
            if cand_loss <= loss_here + lin + sq / (2.0 * step) + 1e-15 {
                break (cand_w, cand_b, cand_loss);
            }
            step *= 0.5;
            if step < 1e-18 {
                break (w.clone(), b, loss_here);
            }
        };

        let new_objective = new_loss + lambda * new_w.iter().map(|x| x.abs()).sum::<f64>();
        let decrease = objective - new_objective;
        w = new_w;
        b = new_b;
        objective = new_objective;
        step = (step * 1.25).min(1e3);

        if decrease.abs() < opt.tol_objective && residual < opt.tol_residual {
            converged = true;
            break;
        }
    }

    // Residual at the final iterate.
    let (gw, gb) = problem.grad(&w, b);
    residual = residual.min(optimality_residual(&gw, gb, &w, lambda));

    Ok(LogRegModel {
        feature_names: names.to_vec(),
        weights: w,
        bias: b,
        c_param: c,
        diagnostics: LogRegDiagnostics {
            iterations,
            final_objective: objective,
            optimality_residual: residual,
            converged,
        },
    })
}

/// Full L1 objective for a candidate (w, b); shared with test oracles.
#[cfg(test)]
pub(crate) fn l1_objective(rows: &[FeatureRow], w: &[f64], b: f64, c: f64) -> f64 {
    let n = rows.len() as f64;
    let loss = rows
        .iter()
        .map(|row| {
            let z = w.iter().zip(&row.values).map(|(wj, x)| wj * x).sum::<f64>() + b;
            log1p_exp_neg(f64::from(row.label) * z)
        })
        .sum::<f64>()
        / n;
    loss + w.iter().map(|x| x.abs()).sum::<f64>() / c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::rows_from;
    use crate::rng::Pcg32;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn separable_two_points_reach_full_accuracy() {
        let rows = rows_from(&[(&[1.0], 1), (&[0.0], -1)]);
        let model = train_logreg_l1(&names(1), &rows, 1000.0, &LogRegOpt::default()).unwrap();
        assert!(model.decision(&[1.0]) > 0.0);
        assert!(model.decision(&[0.0]) < 0.0);
    }

    #[test]
    fn tiny_c_shrinks_all_weights_to_zero() {
        let rows = rows_from(&[
            (&[1.0, 0.2], 1),
            (&[0.9, 0.1], 1),
            (&[0.1, 0.9], -1),
            (&[0.0, 0.8], -1),
        ]);
        let model = train_logreg_l1(&names(2), &rows, 1e-6, &LogRegOpt::default()).unwrap();
        assert!(model.weights.iter().all(|w| *w == 0.0), "{:?}", model.weights);
    }

    #[test]
    fn noise_feature_is_exactly_zeroed() {
        // Feature 0 equals the label indicator; feature 1 is noise.
        let mut rng = Pcg32::new(77, 0);
        let data: Vec<(Vec<f64>, i8)> = (0..60)
            .map(|i| {
                let label: i8 = if i % 2 == 0 { 1 } else { -1 };
                let informative = if label > 0 { 1.0 } else { 0.0 };
                (vec![informative, rng.next_f64()], label)
            })
            .collect();
        let rows = rows_from(
            &data
                .iter()
                .map(|(v, l)| (v.as_slice(), *l))
                .collect::<Vec<_>>(),
        );
        let model = train_logreg_l1(&names(2), &rows, 5.0, &LogRegOpt::default()).unwrap();
        assert_eq!(model.weights[1], 0.0, "noise weight {}", model.weights[1]);
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn single_class_training_is_rejected() {
        let rows = rows_from(&[(&[1.0], 1), (&[0.5], 1)]);
        assert!(matches!(
            train_logreg_l1(&names(1), &rows, 1.0, &LogRegOpt::default()),
            Err(ClassifyError::SingleClassTraining)
        ));
    }

    #[test]
    fn objective_beats_zero_model_and_residual_is_small() {
        let mut rng = Pcg32::new(5, 0);
        let data: Vec<(Vec<f64>, i8)> = (0..80)
            .map(|_| {
                let x0 = rng.next_f64();
                let x1 = rng.next_f64();
                let label: i8 = if x0 + 0.3 * x1 > 0.6 { 1 } else { -1 };
                (vec![x0, x1], label)
            })
            .collect();
        let rows = rows_from(
            &data
                .iter()
                .map(|(v, l)| (v.as_slice(), *l))
                .collect::<Vec<_>>(),
        );
        let model = train_logreg_l1(&names(2), &rows, 10.0, &LogRegOpt::default()).unwrap();
        let zero_obj = l1_objective(&rows, &[0.0, 0.0], 0.0, 10.0);
        assert!(model.diagnostics.final_objective <= zero_obj);
        assert!(
            model.diagnostics.optimality_residual < 1e-5,
            "residual {}",
            model.diagnostics.optimality_residual
        );
    }

    #[test]
    fn sparsity_non_increasing_as_c_shrinks() {
        let mut rng = Pcg32::new(13, 0);
        let data: Vec<(Vec<f64>, i8)> = (0..100)
            .map(|_| {
                let signal = rng.next_f64();
                let label: i8 = if signal > 0.5 { 1 } else { -1 };
                let values = vec![
                    signal,
                    rng.next_f64(),
                    rng.next_f64(),
                    rng.next_f64(),
                    rng.next_f64(),
                ];
                (values, label)
            })
            .collect();
        let rows = rows_from(
            &data
                .iter()
                .map(|(v, l)| (v.as_slice(), *l))
                .collect::<Vec<_>>(),
        );
        let grid = [100.0, 31.6, 10.0, 3.16, 1.0, 0.316, 0.1, 0.0316, 0.01, 0.003];
        let mut prev = usize::MAX;
        for &c in &grid {
            let model = train_logreg_l1(&names(5), &rows, c, &LogRegOpt::default()).unwrap();
            let nnz = model.nonzero_weights();
            assert!(nnz <= prev, "nnz {nnz} rose above {prev} at C={c}");
            prev = nnz;
        }
    }
}
