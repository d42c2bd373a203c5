//! Q-learning trading agent with linear function approximation.
//!
//! The state is the day's normalized market features plus portfolio
//! information (position and equity ratio). Q(s,a) = w . phi(s,a) where
//! phi block-one-hot encodes the state vector under the chosen action, so
//! per-action value functions stay independent and the update reduces to
//! the tabular rule whenever phi happens to be one-hot.
//!
//! Leverage and stop-loss constraints live in the action mask: at the
//! leverage bound the violating action disappears, and once equity falls
//! through the stop-loss only the position-exiting action remains.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{aligned_target_returns, Dataset, TargetKind};
use crate::ingest::PriceBar;
use crate::rng::Pcg32;

/// RNG stream id for action exploration.
const STREAM_EXPLORE: u64 = 10;

/// Entries appended to the market features inside the state vector:
/// position one-hot (3), equity deviation, constant bias.
const STATE_EXTRA: usize = 5;

#[derive(Debug, Error)]
pub enum QlearnError {
    #[error("dimension mismatch: weights expect {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("alignment mismatch: {0}")]
    AlignmentMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad weights file {path}: {message}")]
    BadFile { path: String, message: String },
}

/// Buy moves the position one unit toward +1, Sell toward -1, Hold keeps
/// it. The declaration order is the argmax tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TradeAction {
    Buy,
    Hold,
    Sell,
}

impl TradeAction {
    pub const ALL: [TradeAction; 3] = [TradeAction::Buy, TradeAction::Hold, TradeAction::Sell];

    pub fn index(self) -> usize {
        match self {
            TradeAction::Buy => 0,
            TradeAction::Hold => 1,
            TradeAction::Sell => 2,
        }
    }

    /// Position after taking this action, clamped to the leverage bound.
    pub fn apply(self, position: i32, leverage_limit: i32) -> i32 {
        match self {
            TradeAction::Buy => (position + 1).min(leverage_limit),
            TradeAction::Sell => (position - 1).max(-leverage_limit),
            TradeAction::Hold => position,
        }
    }
}

impl std::fmt::Display for TradeAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TradeAction::Buy => write!(f, "buy"),
            TradeAction::Hold => write!(f, "hold"),
            TradeAction::Sell => write!(f, "sell"),
        }
    }
}

/// MDP state: the day's market feature vector plus portfolio information.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// Normalized market features, all in [0, 1].
    pub market: Vec<f64>,
    /// Position in {-1, 0, +1} units of max exposure.
    pub position: i32,
    /// Portfolio value over initial capital; 1.0 at the start.
    pub equity_ratio: f64,
}

impl AgentState {
    /// Dense state vector: market features, position one-hot, equity
    /// deviation from par, constant bias.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.market.len() + STATE_EXTRA);
        v.extend_from_slice(&self.market);
        let mut onehot = [0.0; 3];
        onehot[(self.position + 1) as usize] = 1.0;
        v.extend_from_slice(&onehot);
        v.push(self.equity_ratio - 1.0);
        v.push(1.0);
        v
    }
}

/// phi(s, a): the state vector copied into the block indexed by the action,
/// zeros elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatures {
    pub offset: usize,
    pub block: Vec<f64>,
    pub dim: usize,
}

impl SparseFeatures {
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.block
            .iter()
            .zip(&w[self.offset..self.offset + self.block.len()])
            .map(|(p, wi)| p * wi)
            .sum()
    }
}

pub fn phi(state: &AgentState, action: TradeAction) -> SparseFeatures {
    let block = state.to_vector();
    let d = block.len();
    SparseFeatures {
        offset: action.index() * d,
        block,
        dim: d * TradeAction::ALL.len(),
    }
}

/// Linear Q-function weights plus its learning schedule parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QWeights {
    pub w: Vec<f64>,
    /// Base learning rate; training decays it as eta / sqrt(step).
    pub learning_rate: f64,
    /// Discount factor for the bootstrapped next-state value.
    pub discount: f64,
    /// TD updates applied so far; drives both decay schedules.
    pub steps: u64,
}

impl QWeights {
    pub fn zeros(n_market_features: usize, learning_rate: f64, discount: f64) -> Self {
        QWeights {
            w: vec![0.0; (n_market_features + STATE_EXTRA) * TradeAction::ALL.len()],
            learning_rate,
            discount,
            steps: 0,
        }
    }

    pub fn for_dataset(dataset: &Dataset, learning_rate: f64, discount: f64) -> Self {
        Self::zeros(dataset.feature_names.len(), learning_rate, discount)
    }

    fn expected_dim(state: &AgentState) -> usize {
        (state.market.len() + STATE_EXTRA) * TradeAction::ALL.len()
    }

    fn check_dim(&self, state: &AgentState) -> Result<(), QlearnError> {
        let expected = Self::expected_dim(state);
        if self.w.len() != expected {
            return Err(QlearnError::DimensionMismatch {
                expected,
                got: self.w.len(),
            });
        }
        Ok(())
    }
}

/// Exact dot product w . phi(s, a).
pub fn q_value(weights: &QWeights, state: &AgentState, action: TradeAction) -> Result<f64, QlearnError> {
    weights.check_dim(state)?;
    Ok(phi(state, action).dot(&weights.w))
}

/// Exploration and risk-control configuration for one training/trading run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub epsilon0: f64,
    /// Multiplicative epsilon decay per step.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    /// Max absolute position; the one-hot state encoding fixes this to 0 or 1.
    pub leverage_limit: i32,
    /// Equity-ratio floor; at or below it only the exit action is valid.
    pub stop_loss: f64,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            epsilon0: 0.2,
            epsilon_decay: 0.999,
            epsilon_floor: 0.01,
            leverage_limit: 1,
            stop_loss: 0.5,
            seed: 42,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), QlearnError> {
        let bad = |m: String| Err(QlearnError::InvalidConfig(m));
        for (name, v) in [
            ("epsilon0", self.epsilon0),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_floor", self.epsilon_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0,1], got {v}"));
            }
        }
        if !(0..=1).contains(&self.leverage_limit) {
            return bad(format!(
                "leverage_limit must be 0 or 1, got {}",
                self.leverage_limit
            ));
        }
        if !(0.0..1.0).contains(&self.stop_loss) {
            return bad(format!("stop_loss must lie in (0,1), got {}", self.stop_loss));
        }
        Ok(())
    }

    pub fn epsilon_at(&self, step: u64) -> f64 {
        (self.epsilon0 * self.epsilon_decay.powi(step.min(i32::MAX as u64) as i32))
            .max(self.epsilon_floor)
    }
}

/// Actions legal in `state`: leverage-violating moves are masked, and once
/// the stop-loss triggers only the action moving the position toward flat
/// survives (Hold when already flat).
pub fn valid_actions(state: &AgentState, cfg: &EpisodeConfig) -> Vec<TradeAction> {
    if state.equity_ratio <= cfg.stop_loss {
        let exit = match state.position.cmp(&0) {
            std::cmp::Ordering::Greater => TradeAction::Sell,
            std::cmp::Ordering::Less => TradeAction::Buy,
            std::cmp::Ordering::Equal => TradeAction::Hold,
        };
        return vec![exit];
    }
    TradeAction::ALL
        .iter()
        .copied()
        .filter(|a| match a {
            TradeAction::Buy => state.position < cfg.leverage_limit,
            TradeAction::Sell => state.position > -cfg.leverage_limit,
            TradeAction::Hold => true,
        })
        .collect()
}

/// Argmax of Q over the valid actions; ties break by the fixed action order
/// Buy < Hold < Sell.
pub fn greedy_action(
    weights: &QWeights,
    state: &AgentState,
    cfg: &EpisodeConfig,
) -> Result<TradeAction, QlearnError> {
    let actions = valid_actions(state, cfg);
    let mut best = actions[0];
    let mut best_q = q_value(weights, state, best)?;
    for &a in &actions[1..] {
        let q = q_value(weights, state, a)?;
        if q > best_q {
            best = a;
            best_q = q;
        }
    }
    Ok(best)
}

/// Epsilon-greedy action selection over the valid set.
pub fn select_action(
    weights: &QWeights,
    state: &AgentState,
    cfg: &EpisodeConfig,
    epsilon: f64,
    rng: &mut Pcg32,
) -> Result<TradeAction, QlearnError> {
    if rng.next_f64() < epsilon {
        let actions = valid_actions(state, cfg);
        Ok(actions[rng.next_below(actions.len() as u32) as usize])
    } else {
        greedy_action(weights, state, cfg)
    }
}

/// Max Q over the valid actions of `state`; the bootstrapped state value.
pub fn state_value(
    weights: &QWeights,
    state: &AgentState,
    cfg: &EpisodeConfig,
) -> Result<f64, QlearnError> {
    let a = greedy_action(weights, state, cfg)?;
    q_value(weights, state, a)
}

/// One stochastic gradient step toward `target` on a linear Q-function:
/// `w <- w - eta * (w.phi - target) * phi`. Returns the TD error before the
/// step.
pub fn td_step(weights: &mut QWeights, features: &SparseFeatures, target: f64, eta: f64) -> f64 {
    let prediction = features.dot(&weights.w);
    let error = prediction - target;
    if error != 0.0 {
        let scale = eta * error;
        for (k, p) in features.block.iter().enumerate() {
            weights.w[features.offset + k] -= scale * p;
        }
    }
    weights.steps += 1;
    error
}

/// The Q-learning update for one transition. A `None` next state marks the
/// terminal day and bootstraps zero. Uses the flat learning rate stored in
/// the weights; training applies the 1/sqrt(t) schedule itself.
pub fn update(
    weights: &mut QWeights,
    state: &AgentState,
    action: TradeAction,
    reward: f64,
    next_state: Option<&AgentState>,
    cfg: &EpisodeConfig,
) -> Result<f64, QlearnError> {
    weights.check_dim(state)?;
    let v_next = match next_state {
        Some(s) => {
            weights.check_dim(s)?;
            state_value(weights, s, cfg)?
        }
        None => 0.0,
    };
    let target = reward + weights.discount * v_next;
    let eta = weights.learning_rate;
    Ok(td_step(weights, &phi(state, action), target, eta))
}

/// Greedy policy closure over trained weights; pure in (w, s).
pub fn greedy_policy<'a>(
    weights: &'a QWeights,
    cfg: &'a EpisodeConfig,
) -> impl Fn(&AgentState) -> Result<TradeAction, QlearnError> + 'a {
    move |state| greedy_action(weights, state, cfg)
}

/// Per-run training diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub weights: QWeights,
    /// Total reward collected per epoch.
    pub epoch_rewards: Vec<f64>,
}

/// Train over the dataset's training slice for `epochs` passes. Each day:
/// observe the state, pick an epsilon-greedy action, earn
/// `position-after-action x next-day target return`, update toward the
/// masked bootstrap target. Equity evolves by the same reward rule and
/// resets at each epoch start.
pub fn run_training(
    dataset: &Dataset,
    bars: &[PriceBar],
    cfg: &EpisodeConfig,
    mut weights: QWeights,
    epochs: usize,
) -> Result<TrainOutcome, QlearnError> {
    cfg.validate()?;
    let train = dataset.train_rows();
    if train.is_empty() {
        return Err(QlearnError::AlignmentMismatch("empty training slice".into()));
    }
    let returns = aligned_target_returns(train, bars, dataset.target_kind)
        .map_err(|e| QlearnError::AlignmentMismatch(e.to_string()))?;

    let mut rng = Pcg32::new(cfg.seed, STREAM_EXPLORE);
    let mut epoch_rewards = Vec::with_capacity(epochs);

    for _ in 0..epochs {
        let mut position = 0i32;
        let mut equity = 1.0f64;
        let mut total_reward = 0.0;
        for t in 0..train.len() {
            let state = AgentState {
                market: train[t].values.clone(),
                position,
                equity_ratio: equity,
            };
            let epsilon = cfg.epsilon_at(weights.steps);
            let action = select_action(&weights, &state, cfg, epsilon, &mut rng)?;
            let new_position = action.apply(position, cfg.leverage_limit);
            let reward = f64::from(new_position) * returns[t];
            let new_equity = equity * (1.0 + reward);

            let v_next = if t + 1 < train.len() {
                let next_state = AgentState {
                    market: train[t + 1].values.clone(),
                    position: new_position,
                    equity_ratio: new_equity,
                };
                state_value(&weights, &next_state, cfg)?
            } else {
                0.0
            };
            let target = reward + weights.discount * v_next;
            let eta = weights.learning_rate / ((weights.steps + 1) as f64).sqrt();
            td_step(&mut weights, &phi(&state, action), target, eta);

            position = new_position;
            equity = new_equity;
            total_reward += reward;
        }
        epoch_rewards.push(total_reward);
    }

    Ok(TrainOutcome {
        weights,
        epoch_rewards,
    })
}

/// Serialized training artifact: weights plus everything needed for exact
/// replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QTrainArtifact {
    pub weights: QWeights,
    pub feature_names: Vec<String>,
    pub target_kind: TargetKind,
    pub cfg: EpisodeConfig,
    pub epochs: usize,
}

impl QTrainArtifact {
    pub fn save(&self, path: &Path) -> Result<(), QlearnError> {
        let json = serde_json::to_string_pretty(self).expect("artifact serializes");
        File::create(path)
            .and_then(|mut f| f.write_all(json.as_bytes()))
            .map_err(|e| QlearnError::Io {
                path: path.display().to_string(),
                source: e,
            })
    }

    pub fn load(path: &Path) -> Result<Self, QlearnError> {
        let file = File::open(path).map_err(|e| QlearnError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| QlearnError::BadFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_state(market: Vec<f64>) -> AgentState {
        AgentState {
            market,
            position: 0,
            equity_ratio: 1.0,
        }
    }

    #[test]
    fn phi_blocks_are_disjoint_and_orthogonal() {
        let s = flat_state(vec![0.3, 0.7]);
        let buy = phi(&s, TradeAction::Buy);
        let sell = phi(&s, TradeAction::Sell);
        assert_eq!(buy.dim, sell.dim);
        assert_eq!(buy.dim, 21); // (2 market + 5 extra) * 3 actions
        // Non-overlapping supports => dot product over the full space is 0.
        let mut dense_buy = vec![0.0; buy.dim];
        dense_buy[buy.offset..buy.offset + buy.block.len()].copy_from_slice(&buy.block);
        let dot: f64 = sell
            .block
            .iter()
            .zip(&dense_buy[sell.offset..sell.offset + sell.block.len()])
            .map(|(a, b)| a * b)
            .sum();
        assert_eq!(dot, 0.0);
    }

    #[test]
    fn fresh_flat_state_has_only_onehot_and_bias_active() {
        let s = flat_state(vec![0.0, 0.0, 0.0]);
        let p = phi(&s, TradeAction::Hold);
        let nonzero: Vec<usize> = p
            .block
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        // Market features zero, equity deviation zero: position one-hot
        // (index 3+1) and bias (last) remain.
        assert_eq!(nonzero, vec![4, 7]);
    }

    #[test]
    fn q_value_matches_naive_dot_product() {
        let s = AgentState {
            market: vec![0.2, 0.9, 0.4],
            position: 1,
            equity_ratio: 1.1,
        };
        let mut rng = Pcg32::new(8, 0);
        let mut w = QWeights::zeros(3, 0.1, 0.9);
        for wi in w.w.iter_mut() {
            *wi = rng.uniform(-1.0, 1.0);
        }
        for a in TradeAction::ALL {
            let p = phi(&s, a);
            let mut dense = vec![0.0; p.dim];
            dense[p.offset..p.offset + p.block.len()].copy_from_slice(&p.block);
            let naive: f64 = dense.iter().zip(&w.w).map(|(x, wi)| x * wi).sum();
            assert!((q_value(&w, &s, a).unwrap() - naive).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_weight_on_buy_bias_gives_unit_buy_value() {
        let s = flat_state(vec![0.0, 0.0]);
        let mut w = QWeights::zeros(2, 0.1, 0.9);
        // Bias is the last entry of the Buy block.
        w.w[6] = 1.0;
        assert_eq!(q_value(&w, &s, TradeAction::Buy).unwrap(), 1.0);
        assert_eq!(q_value(&w, &s, TradeAction::Sell).unwrap(), 0.0);
    }

    #[test]
    fn zero_weights_give_zero_q() {
        let w = QWeights::zeros(2, 0.1, 0.9);
        let s = flat_state(vec![0.5, 0.5]);
        for a in TradeAction::ALL {
            assert_eq!(q_value(&w, &s, a).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_detected() {
        let w = QWeights::zeros(2, 0.1, 0.9);
        let s = flat_state(vec![0.5, 0.5, 0.5]);
        assert!(matches!(
            q_value(&w, &s, TradeAction::Buy),
            Err(QlearnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn masking_at_leverage_bound() {
        let cfg = EpisodeConfig::default();
        let long = AgentState {
            market: vec![0.5],
            position: 1,
            equity_ratio: 1.2,
        };
        assert_eq!(
            valid_actions(&long, &cfg),
            vec![TradeAction::Hold, TradeAction::Sell]
        );
        let flat = flat_state(vec![0.5]);
        assert_eq!(valid_actions(&flat, &cfg), TradeAction::ALL.to_vec());
        let short = AgentState {
            market: vec![0.5],
            position: -1,
            equity_ratio: 1.2,
        };
        assert_eq!(
            valid_actions(&short, &cfg),
            vec![TradeAction::Buy, TradeAction::Hold]
        );
    }

    #[test]
    fn stop_loss_leaves_only_the_exit() {
        let cfg = EpisodeConfig::default();
        let hurt_long = AgentState {
            market: vec![0.5],
            position: 1,
            equity_ratio: 0.4,
        };
        assert_eq!(valid_actions(&hurt_long, &cfg), vec![TradeAction::Sell]);
        let hurt_short = AgentState {
            market: vec![0.5],
            position: -1,
            equity_ratio: 0.4,
        };
        assert_eq!(valid_actions(&hurt_short, &cfg), vec![TradeAction::Buy]);
        let hurt_flat = AgentState {
            market: vec![0.5],
            position: 0,
            equity_ratio: 0.4,
        };
        assert_eq!(valid_actions(&hurt_flat, &cfg), vec![TradeAction::Hold]);
    }

    #[test]
    fn greedy_ties_break_buy_first() {
        let cfg = EpisodeConfig::default();
        let w = QWeights::zeros(1, 0.1, 0.9);
        let s = flat_state(vec![0.5]);
        assert_eq!(greedy_action(&w, &s, &cfg).unwrap(), TradeAction::Buy);
    }

    #[test]
    fn epsilon_one_explores_roughly_uniformly() {
        let cfg = EpisodeConfig::default();
        let w = QWeights::zeros(1, 0.1, 0.9);
        let s = flat_state(vec![0.5]);
        let mut rng = Pcg32::new(123, STREAM_EXPLORE);
        let mut counts = [0usize; 3];
        let n = 30_000;
        for _ in 0..n {
            let a = select_action(&w, &s, &cfg, 1.0, &mut rng).unwrap();
            counts[a.index()] += 1;
        }
        // 3-sigma binomial bound around n/3.
        let sigma = (n as f64 / 3.0 * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!(
                ((c as f64) - n as f64 / 3.0).abs() < 3.0 * sigma,
                "counts {counts:?}"
            );
        }
    }

    #[test]
    fn zero_epsilon_is_deterministic() {
        let cfg = EpisodeConfig::default();
        let mut w = QWeights::zeros(1, 0.1, 0.9);
        w.w[11] = 0.7; // favor Hold via its bias entry (block 6..12, bias last)
        let s = flat_state(vec![0.5]);
        let mut r1 = Pcg32::new(9, STREAM_EXPLORE);
        let mut r2 = Pcg32::new(9, STREAM_EXPLORE);
        for _ in 0..100 {
            let a = select_action(&w, &s, &cfg, 0.0, &mut r1).unwrap();
            let b = select_action(&w, &s, &cfg, 0.0, &mut r2).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, TradeAction::Hold);
        }
    }

    #[test]
    fn update_with_exact_prediction_changes_nothing() {
        let cfg = EpisodeConfig::default();
        let mut w = QWeights::zeros(1, 0.5, 0.0);
        let s = flat_state(vec![0.5]);
        // Reward 0, discount 0, zero weights: prediction equals target.
        let before = w.w.clone();
        update(&mut w, &s, TradeAction::Buy, 0.0, None, &cfg).unwrap();
        assert_eq!(w.w, before);
    }

    #[test]
    fn single_unit_entry_learns_half_the_reward() {
        // w = 0, r = 1, discount 0, eta 0.5, phi a single unit entry.
        let mut w = QWeights::zeros(1, 0.5, 0.0);
        let features = SparseFeatures {
            offset: 3,
            block: vec![1.0],
            dim: w.w.len(),
        };
        td_step(&mut w, &features, 1.0, 0.5);
        assert_eq!(w.w[3], 0.5);
        assert!(w.w.iter().enumerate().all(|(i, v)| i == 3 || *v == 0.0));
    }

    #[test]
    fn repeated_updates_contract_the_residual() {
        // Tabular-style one-hot features: each step multiplies the residual
        // by (1 - eta), so any eta in (0, 1] contracts monotonically.
        for eta in [0.25, 0.5, 1.0] {
            let mut w = QWeights::zeros(1, eta, 0.0);
            let features = SparseFeatures {
                offset: 2,
                block: vec![1.0],
                dim: w.w.len(),
            };
            let reward = 2.0;
            let mut prev = f64::INFINITY;
            for _ in 0..200 {
                let gap = (features.dot(&w.w) - reward).abs();
                assert!(gap <= prev + 1e-12, "residual rose at eta={eta}");
                prev = gap;
                td_step(&mut w, &features, reward, eta);
            }
            assert!(prev < 1e-6, "eta={eta} residual {prev}");
        }
    }

    #[test]
    fn scaling_weights_preserves_greedy_policy() {
        let cfg = EpisodeConfig::default();
        let mut rng = Pcg32::new(17, 0);
        for _ in 0..50 {
            let mut w = QWeights::zeros(2, 0.1, 0.9);
            for wi in w.w.iter_mut() {
                *wi = rng.uniform(-1.0, 1.0);
            }
            let s = AgentState {
                market: vec![rng.next_f64(), rng.next_f64()],
                position: rng.next_below(3) as i32 - 1,
                equity_ratio: rng.uniform(0.6, 1.4),
            };
            let a = greedy_action(&w, &s, &cfg).unwrap();
            let mut scaled = w.clone();
            for wi in scaled.w.iter_mut() {
                *wi *= 3.5;
            }
            assert_eq!(greedy_action(&scaled, &s, &cfg).unwrap(), a);
        }
    }

    #[test]
    fn random_rollout_respects_leverage() {
        let cfg = EpisodeConfig::default();
        let w = QWeights::zeros(1, 0.1, 0.9);
        let mut rng = Pcg32::new(31, STREAM_EXPLORE);
        let mut position = 0i32;
        let mut equity = 1.0;
        for step in 0..10_000 {
            let s = AgentState {
                market: vec![rng.next_f64()],
                position,
                equity_ratio: equity,
            };
            let actions = valid_actions(&s, &cfg);
            assert!(!actions.is_empty());
            let a = select_action(&w, &s, &cfg, 1.0, &mut rng).unwrap();
            position = a.apply(position, cfg.leverage_limit);
            assert!(position.abs() <= cfg.leverage_limit, "step {step}");
            // Wander equity around par, occasionally through the stop.
            equity = (equity * (1.0 + rng.uniform(-0.02, 0.02))).max(0.3);
            if equity <= cfg.stop_loss {
                equity = 1.0;
                position = 0;
            }
        }
    }

    #[test]
    fn epsilon_schedule_decays_to_floor() {
        let cfg = EpisodeConfig {
            epsilon0: 0.2,
            epsilon_decay: 0.9,
            epsilon_floor: 0.01,
            ..EpisodeConfig::default()
        };
        assert_eq!(cfg.epsilon_at(0), 0.2);
        assert!(cfg.epsilon_at(10) < 0.2);
        assert_eq!(cfg.epsilon_at(100_000), 0.01);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = EpisodeConfig::default();
        cfg.stop_loss = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = EpisodeConfig::default();
        cfg.epsilon0 = -0.1;
        assert!(cfg.validate().is_err());
        let mut cfg = EpisodeConfig::default();
        cfg.leverage_limit = 3;
        assert!(cfg.validate().is_err());
    }
}
