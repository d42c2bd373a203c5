//! Daily strategy simulation over the test range with identical accounting
//! for every strategy.
//!
//! A position decided at day t's close earns `position x next-day target
//! return`, minus a cost haircut per unit of position changed. Equity
//! compounds multiplicatively and the identity
//! `equity_t = equity_{t-1} * (1 + ret_t)` holds exactly for every record.
//!
//! The Q-learning strategy keeps learning from realized rewards during the
//! test period (the market keeps teaching it) unless `online_updates` is
//! switched off for ablation. The Oracle alone reads the next day's return.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyError, Model};
use crate::features::{aligned_target_returns, Dataset, FeatureError};
use crate::ingest::PriceBar;
use crate::qlearn::{
    greedy_action, phi, state_value, td_step, AgentState, EpisodeConfig, QWeights, QlearnError,
};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("test range is empty")]
    EmptyTestRange,
    #[error("curves cover different date ranges")]
    DateRangeMismatch,
    #[error("model feature {0:?} missing from dataset")]
    MissingFeature(String),
    #[error("invalid cost_per_trade: {0}")]
    InvalidCost(f64),
    #[error("equity wiped out on {date}")]
    EquityWipedOut { date: NaiveDate },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Qlearn(#[from] QlearnError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad curve file {path} line {line}: {message}")]
    BadCurveFile {
        path: String,
        line: usize,
        message: String,
    },
}

/// One of the four compared strategies.
#[derive(Debug, Clone)]
pub enum Strategy {
    /// Greedy policy over trained weights with masking; keeps updating on
    /// realized rewards unless `online_updates` is false.
    QLearning {
        weights: QWeights,
        cfg: EpisodeConfig,
        online_updates: bool,
    },
    /// Long when the classifier says +, short when it says -.
    MlSignal { model: Model },
    /// Same rule driven by the technical-features-only model.
    Baseline { model: Model },
    /// Perfect foresight: position = sign of the next day's target return.
    Oracle,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::QLearning { .. } => "qlearning",
            Strategy::MlSignal { .. } => "ml",
            Strategy::Baseline { .. } => "baseline",
            Strategy::Oracle => "oracle",
        }
    }
}

/// One simulated day: the position held out of day `date`, the strategy
/// return earned over the following day (costs included) and equity after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub date: NaiveDate,
    pub position: i32,
    pub ret: f64,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub name: String,
    pub points: Vec<EquityPoint>,
}

impl EquityCurve {
    pub fn final_equity(&self) -> f64 {
        self.points.last().map_or(1.0, |p| p.equity)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), BacktestError> {
        let mut out = String::from("date,position,ret,equity\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.date.format("%Y-%m-%d"),
                p.position,
                p.ret,
                p.equity
            ));
        }
        File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| BacktestError::Io {
                path: path.display().to_string(),
                source: e,
            })
    }

    pub fn load_csv(path: &Path, name: &str) -> Result<Self, BacktestError> {
        let file = File::open(path).map_err(|e| BacktestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let bad = |line: usize, message: String| BacktestError::BadCurveFile {
            path: path.display().to_string(),
            line,
            message,
        };
        let mut points = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| BacktestError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 {
                if line != "date,position,ret,equity" {
                    return Err(bad(1, "unexpected header".into()));
                }
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(bad(i + 1, format!("expected 4 fields, got {}", parts.len())));
            }
            points.push(EquityPoint {
                date: NaiveDate::parse_from_str(parts[0], "%Y-%m-%d")
                    .map_err(|e| bad(i + 1, format!("bad date: {e}")))?,
                position: parts[1]
                    .parse()
                    .map_err(|e| bad(i + 1, format!("bad position: {e}")))?,
                ret: parts[2]
                    .parse()
                    .map_err(|e| bad(i + 1, format!("bad ret: {e}")))?,
                equity: parts[3]
                    .parse()
                    .map_err(|e| bad(i + 1, format!("bad equity: {e}")))?,
            });
        }
        Ok(EquityCurve {
            name: name.to_string(),
            points,
        })
    }
}

/// Map each model feature to its column in the dataset.
fn feature_projection(model: &Model, dataset: &Dataset) -> Result<Vec<usize>, BacktestError> {
    model
        .feature_names()
        .iter()
        .map(|name| {
            dataset
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| BacktestError::MissingFeature(name.clone()))
        })
        .collect()
}

/// Simulate one strategy over the dataset's test rows.
pub fn run(
    strategy: &Strategy,
    dataset: &Dataset,
    bars: &[PriceBar],
    cost_per_trade: f64,
) -> Result<EquityCurve, BacktestError> {
    if !(0.0..1.0).contains(&cost_per_trade) {
        return Err(BacktestError::InvalidCost(cost_per_trade));
    }
    let rows = dataset.test_rows();
    if rows.is_empty() {
        return Err(BacktestError::EmptyTestRange);
    }
    let returns = aligned_target_returns(rows, bars, dataset.target_kind)?;

    let projection = match strategy {
        Strategy::MlSignal { model } | Strategy::Baseline { model } => {
            Some(feature_projection(model, dataset)?)
        }
        _ => None,
    };
    let mut q_weights = match strategy {
        Strategy::QLearning { weights, .. } => Some(weights.clone()),
        _ => None,
    };

    let mut points = Vec::with_capacity(rows.len());
    let mut position = 0i32;
    let mut equity = 1.0f64;

    for (t, row) in rows.iter().enumerate() {
        let new_position = match strategy {
            Strategy::Oracle => {
                if returns[t] >= 0.0 {
                    1
                } else {
                    -1
                }
            }
            Strategy::MlSignal { model } | Strategy::Baseline { model } => {
                let proj = projection.as_ref().unwrap();
                let values: Vec<f64> = proj.iter().map(|&j| row.values[j]).collect();
                i32::from(model.predict(&values)?.label)
            }
            Strategy::QLearning {
                cfg,
                online_updates,
                ..
            } => {
                let weights = q_weights.as_mut().unwrap();
                let state = AgentState {
                    market: row.values.clone(),
                    position,
                    equity_ratio: equity,
                };
                let action = greedy_action(weights, &state, cfg)?;
                let new_position = action.apply(position, cfg.leverage_limit);
                if *online_updates {
                    // Reward excludes the cost haircut; costs are an
                    // accounting overlay, not part of the market signal.
                    let reward = f64::from(new_position) * returns[t];
                    let v_next = if t + 1 < rows.len() {
                        let next_state = AgentState {
                            market: rows[t + 1].values.clone(),
                            position: new_position,
                            equity_ratio: equity * (1.0 + reward),
                        };
                        state_value(weights, &next_state, cfg)?
                    } else {
                        0.0
                    };
                    let target = reward + weights.discount * v_next;
                    let eta = weights.learning_rate / ((weights.steps + 1) as f64).sqrt();
                    td_step(weights, &phi(&state, action), target, eta);
                }
                new_position
            }
        };

        let cost = cost_per_trade * f64::from((new_position - position).abs());
        let ret = f64::from(new_position) * returns[t] - cost;
        equity *= 1.0 + ret;
        if equity <= 0.0 {
            return Err(BacktestError::EquityWipedOut { date: row.date });
        }
        points.push(EquityPoint {
            date: row.date,
            position: new_position,
            ret,
            equity,
        });
        position = new_position;
    }

    Ok(EquityCurve {
        name: strategy.name().to_string(),
        points,
    })
}

/// Per-strategy summary metrics, sorted by final equity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub final_equity: f64,
    pub annualized_return: f64,
    pub max_drawdown: f64,
    pub hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,final_equity,annualized_return,max_drawdown,hit_rate\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                r.name, r.final_equity, r.annualized_return, r.max_drawdown, r.hit_rate
            ));
        }
        out
    }
}

/// Summarize curves sharing one date range. 252 trading days count as a
/// year for annualization.
pub fn compare(curves: &[EquityCurve]) -> Result<ComparisonTable, BacktestError> {
    if curves.is_empty() {
        return Err(BacktestError::EmptyTestRange);
    }
    let dates: Vec<NaiveDate> = curves[0].points.iter().map(|p| p.date).collect();
    for curve in &curves[1..] {
        let theirs: Vec<NaiveDate> = curve.points.iter().map(|p| p.date).collect();
        if theirs != dates {
            return Err(BacktestError::DateRangeMismatch);
        }
    }

    let mut rows: Vec<ComparisonRow> = curves
        .iter()
        .map(|curve| {
            let n = curve.points.len() as f64;
            let final_equity = curve.final_equity();
            let mut peak = 1.0f64;
            let mut max_dd = 0.0f64;
            let mut hits = 0usize;
            for p in &curve.points {
                peak = peak.max(p.equity);
                max_dd = max_dd.max(1.0 - p.equity / peak);
                if p.ret > 0.0 {
                    hits += 1;
                }
            }
            ComparisonRow {
                name: curve.name.clone(),
                final_equity,
                annualized_return: final_equity.powf(252.0 / n) - 1.0,
                max_drawdown: max_dd,
                hit_rate: hits as f64 / n,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.final_equity.partial_cmp(&a.final_equity).unwrap());
    Ok(ComparisonTable { rows })
}
