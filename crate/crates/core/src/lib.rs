//! Daily-bar sentiment trading toolkit.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! - [`ingest`]: load price bars (CSV) and raw tweets (JSONL) into the core
//!   data model, with strict calendar validation.
//! - [`tweetprep`]: tweet filtering/cleaning rules, lexicon sentiment scoring
//!   on the 0-4 scale, and per-trading-day aggregation.
//! - [`synth`]: seeded synthetic market generator with a tunable
//!   sentiment-to-next-day-alpha signal, for reproducible experiments.
//! - [`features`]: technical + sentiment feature engineering, train-range
//!   min-max normalization, labeled dataset assembly.
//! - [`classify`]: L1 logistic regression (proximal gradient) and RBF-kernel
//!   SVM (SMO), chronological cross-validation and recursive feature
//!   elimination.
//! - [`qlearn`]: Q-learning trading agent with linear function approximation,
//!   epsilon-greedy exploration and leverage/stop-loss action masking.
//! - [`backtest`]: daily strategy simulation with exact equity accounting and
//!   comparison metrics.
//!
//! Everything is deterministic given a seed; see [`rng`] for the portable
//! generator used throughout.

pub mod backtest;
pub mod calendar;
pub mod chart;
pub mod classify;
pub mod features;
pub mod ingest;
pub mod qlearn;
pub mod rng;
pub mod synth;
pub mod tweetprep;

pub use ingest::{PriceBar, SourceTag, TweetRecord};
pub use tweetprep::SentimentDay;
