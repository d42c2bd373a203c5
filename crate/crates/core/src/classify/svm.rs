//! Soft-margin RBF-kernel SVM trained by sequential minimal optimization.
//!
//! The solver is SMO with maximal-violating-pair working-set selection:
//! each step picks the most KKT-violating pair (i from the "can move up"
//! set, j from "can move down"), solves the two-variable subproblem exactly
//! and clips to the box. Terminates when the maximum KKT violation drops
//! below 1e-3. The equality constraint `sum alpha_i y_i = 0` is preserved
//! by construction.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, rbf_kernel, ClassifyError};
use crate::features::FeatureRow;

/// KKT violation threshold for convergence.
pub const SMO_TOLERANCE: f64 = 1e-3;
/// Pair-update cap before the solver gives up.
pub const SMO_MAX_UPDATES: usize = 100_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SvmDiagnostics {
    pub pair_updates: usize,
    pub final_kkt_violation: f64,
    pub dual_objective: f64,
    /// Dual objective after every pair update; kept in memory for
    /// verification, not serialized.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub feature_names: Vec<String>,
    /// Training rows with strictly positive dual coefficient.
    pub support_vectors: Vec<Vec<f64>>,
    pub sv_labels: Vec<f64>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c_param: f64,
    pub diagnostics: SvmDiagnostics,
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.sv_labels)
            .map(|((sv, a), y)| a * y * rbf_kernel(sv, row, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Train by SMO. `rows` must contain both classes.
pub fn train_svm_rbf(
    names: &[String],
    rows: &[FeatureRow],
    c: f64,
    gamma: f64,
) -> Result<SvmModel, ClassifyError> {
    if c <= 0.0 {
        return Err(ClassifyError::InvalidParam(format!("C must be positive, got {c}")));
    }
    if gamma <= 0.0 {
        return Err(ClassifyError::InvalidParam(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    check_both_classes(rows)?;

    let n = rows.len();
    let y: Vec<f64> = rows.iter().map(|r| f64::from(r.label)).collect();
    let kernel: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| rbf_kernel(&rows[i].values, &rows[j].values, gamma))
                .collect()
        })
        .collect();

    let mut alpha = vec![0.0f64; n];
    // u_i = sum_j alpha_j y_j K_ij, the decision function without bias.
    let mut u = vec![0.0f64; n];
    let mut trace = Vec::new();
    let mut updates = 0usize;
    let (bias, violation) = loop {
        // Working-set selection: the maximal violating pair.
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for k in 0..n {
            let g = y[k] - u[k];
            let in_up = (y[k] > 0.0 && alpha[k] < c) || (y[k] < 0.0 && alpha[k] > 0.0);
            let in_low = (y[k] < 0.0 && alpha[k] < c) || (y[k] > 0.0 && alpha[k] > 0.0);
            if in_up && best_up.map_or(true, |(_, m)| g > m) {
                best_up = Some((k, g));
            }
            if in_low && best_low.map_or(true, |(_, m)| g < m) {
                best_low = Some((k, g));
            }
        }
        let (i, m_up) = best_up.expect("both classes present, so I_up is non-empty");
        let (j, m_low) = best_low.expect("both classes present, so I_low is non-empty");
        let violation = m_up - m_low;
        if violation < SMO_TOLERANCE {
            break ((m_up + m_low) / 2.0, violation.max(0.0));
        }
        if updates >= SMO_MAX_UPDATES {
            return Err(ClassifyError::NoConvergence { updates });
        }

        // Exact two-variable solve, clipped to the box.
        let eta = (kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j]).max(1e-12);
        let e_i = u[i] - y[i];
        let e_j = u[j] - y[j];
        let (lo, hi) = if y[i] != y[j] {
            ((alpha[j] - alpha[i]).max(0.0), (c + alpha[j] - alpha[i]).min(c))
        } else {
            ((alpha[i] + alpha[j] - c).max(0.0), (alpha[i] + alpha[j]).min(c))
        };
        let old_j = alpha[j];
        let old_i = alpha[i];
        // Snap to the exact bound when rounding leaves dust behind;
        // otherwise a stray 1e-16 alpha keeps its index in the working set
        // while the box blocks any actual movement.
        let snap = |a: f64| {
            if a < c * 1e-12 {
                0.0
            } else if a > c * (1.0 - 1e-12) {
                c
            } else {
                a
            }
        };
        let new_j = snap((old_j + y[j] * (e_i - e_j) / eta).clamp(lo, hi));
        let s = y[i] * y[j];
        let new_i = snap((old_i + s * (old_j - new_j)).clamp(0.0, c));
        alpha[j] = new_j;
        alpha[i] = new_i;

        let delta_i = (new_i - old_i) * y[i];
        let delta_j = (new_j - old_j) * y[j];
        for k in 0..n {
            u[k] += delta_i * kernel[i][k] + delta_j * kernel[j][k];
        }
        updates += 1;

        // Dual objective: sum(alpha) - 1/2 sum_i alpha_i y_i u_i.
        let quad: f64 = (0..n).map(|k| alpha[k] * y[k] * u[k]).sum();
        trace.push(alpha.iter().sum::<f64>() - 0.5 * quad);
    };

    let dual_objective = trace.last().copied().unwrap_or(0.0);
    let mut support_vectors = Vec::new();
    let mut sv_labels = Vec::new();
    let mut alphas = Vec::new();
    for k in 0..n {
        if alpha[k] > 0.0 {
            support_vectors.push(rows[k].values.clone());
            sv_labels.push(y[k]);
            alphas.push(alpha[k]);
        }
    }

    Ok(SvmModel {
        feature_names: names.to_vec(),
        support_vectors,
        sv_labels,
        alphas,
        bias,
        gamma,
        c_param: c,
        diagnostics: SvmDiagnostics {
            pair_updates: updates,
            final_kkt_violation: violation,
            dual_objective,
            objective_trace: trace,
        },
    })
}
