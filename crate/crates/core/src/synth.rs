//! Seeded synthetic market with a planted sentiment signal.
//!
//! Each day draws a latent sentiment `s_t` from an arcsine distribution on
//! [0, 1] (sentiment is polarized more often than lukewarm). The next day's
//! stock log-return is the ETF log-return plus
//! `signal_strength * (s_t - 0.5)` plus idiosyncratic noise, so the signal
//! lives in alpha (the stock's excess return over its ETF), not in total
//! return. Each tweet scores 0 or 1 with probability `s_t`, making the
//! day's observed mean an unbiased estimate of the latent value whose
//! sampling error shrinks as the tweet count grows; event days (higher
//! tweet volume) occur with `regime_switch_prob`.
//!
//! Each random series draws from its own PCG stream, so adding draws to one
//! series never perturbs another and fixtures stay stable across versions.

use chrono::NaiveDate;
use thiserror::Error;

use crate::calendar;
use crate::ingest::PriceBar;
use crate::rng::Pcg32;
use crate::tweetprep::SentimentDay;

/// First bar lands on the first trading day at or after this date.
pub const DEFAULT_START: &str = "2016-01-04";

const BASE_CLOSE: f64 = 100.0;
const BASE_ETF_CLOSE: f64 = 50.0;
const BASE_VOLUME: f64 = 1_000_000.0;
/// Tweet-rate multiplier on event days.
const EVENT_VOLUME_FACTOR: f64 = 10.0;
/// Hard cap on any generated daily log move, just inside the ingest bound.
const LOG_MOVE_CAP: f64 = 0.499;

// Stream ids; never reorder or reuse.
const STREAM_LATENT: u64 = 0;
const STREAM_MARKET: u64 = 1;
const STREAM_IDIO: u64 = 2;
const STREAM_COUNTS: u64 = 3;
const STREAM_SCORES: u64 = 4;
const STREAM_VOLUME: u64 = 5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth parameter: {0}")]
    InvalidParams(String),
    #[error("day {day} out of range (series has {n_days} days)")]
    OutOfRange { day: usize, n_days: usize },
}

/// Generator parameters. `signal_strength` is the coefficient linking
/// today's centered sentiment to tomorrow's alpha.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthParams {
    pub n_days: usize,
    pub seed: u64,
    pub signal_strength: f64,
    pub noise_vol: f64,
    pub market_vol: f64,
    pub tweet_rate: f64,
    pub regime_switch_prob: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_days: 500,
            seed: 42,
            signal_strength: 0.02,
            noise_vol: 0.01,
            market_vol: 0.02,
            tweet_rate: 20.0,
            regime_switch_prob: 0.05,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidParams(msg.to_string()));
        if self.n_days == 0 {
            return bad("n_days must be positive");
        }
        if self.signal_strength < 0.0 {
            return bad("signal_strength must be non-negative");
        }
        if self.noise_vol <= 0.0 {
            return bad("noise_vol must be positive");
        }
        if self.market_vol <= 0.0 {
            return bad("market_vol must be positive");
        }
        if self.tweet_rate <= 0.0 {
            return bad("tweet_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.regime_switch_prob) {
            return bad("regime_switch_prob must lie in [0, 1]");
        }
        Ok(())
    }

    fn start_date(&self) -> NaiveDate {
        NaiveDate::parse_from_str(DEFAULT_START, "%Y-%m-%d").unwrap()
    }
}

/// The uncorrupted latent sentiment series; test-oracle access.
pub fn latent_series(params: &SynthParams) -> Result<Vec<f64>, SynthError> {
    params.validate()?;
    let mut rng = Pcg32::new(params.seed, STREAM_LATENT);
    // sin^2(pi u / 2) maps a uniform draw to the arcsine law on [0, 1].
    Ok((0..params.n_days)
        .map(|_| {
            let u = rng.next_f64();
            (std::f64::consts::FRAC_PI_2 * u).sin().powi(2)
        })
        .collect())
}

/// Latent sentiment for one day.
pub fn true_signal(params: &SynthParams, day: usize) -> Result<f64, SynthError> {
    if day >= params.n_days {
        return Err(SynthError::OutOfRange {
            day,
            n_days: params.n_days,
        });
    }
    Ok(latent_series(params)?[day])
}

/// Generate the paired price and sentiment series. Deterministic in the
/// seed; output always passes ingest validation.
pub fn generate(params: &SynthParams) -> Result<(Vec<PriceBar>, Vec<SentimentDay>), SynthError> {
    params.validate()?;
    let n = params.n_days;
    let dates = calendar::trading_days(params.start_date(), n);
    let latent = latent_series(params)?;

    let mut market_rng = Pcg32::new(params.seed, STREAM_MARKET);
    let mut idio_rng = Pcg32::new(params.seed, STREAM_IDIO);
    let mut counts_rng = Pcg32::new(params.seed, STREAM_COUNTS);
    let mut scores_rng = Pcg32::new(params.seed, STREAM_SCORES);
    let mut volume_rng = Pcg32::new(params.seed, STREAM_VOLUME);

    let mut bars = Vec::with_capacity(n);
    let mut close = BASE_CLOSE;
    let mut etf_close = BASE_ETF_CLOSE;
    for t in 0..n {
        if t > 0 {
            let market_ret = clamp_move(market_rng.gaussian(0.0, params.market_vol));
            let idio = idio_rng.gaussian(0.0, params.noise_vol);
            let alpha = clamp_move(params.signal_strength * (latent[t - 1] - 0.5) + idio);
            etf_close *= market_ret.exp();
            close *= (market_ret + alpha).exp();
        }
        let volume = (BASE_VOLUME * volume_rng.gaussian(0.0, 0.3).exp()).round() as u64;
        bars.push(PriceBar {
            date: dates[t],
            close,
            volume,
            etf_close,
        });
    }

    let mut sentiment = Vec::with_capacity(n);
    for t in 0..n {
        let event = counts_rng.next_f64() < params.regime_switch_prob;
        let rate = if event {
            params.tweet_rate * EVENT_VOLUME_FACTOR
        } else {
            params.tweet_rate
        };
        let count = counts_rng.poisson(rate);
        let scores: Vec<f64> = (0..count)
            .map(|_| f64::from(scores_rng.next_f64() < latent[t]))
            .collect();
        sentiment.push(observed_day(dates[t], &scores));
    }

    Ok((bars, sentiment))
}

fn clamp_move(log_ret: f64) -> f64 {
    log_ret.clamp(-LOG_MOVE_CAP, LOG_MOVE_CAP)
}

fn observed_day(date: NaiveDate, scores: &[f64]) -> SentimentDay {
    if scores.is_empty() {
        return SentimentDay::neutral(date);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    SentimentDay {
        date,
        mean_score: mean,
        tweet_count: scores.len() as u32,
        score_std: var.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest;

    fn params(n_days: usize, seed: u64, beta: f64) -> SynthParams {
        SynthParams {
            n_days,
            seed,
            signal_strength: beta,
            ..SynthParams::default()
        }
    }

    fn alphas(bars: &[PriceBar]) -> Vec<f64> {
        bars.windows(2)
            .map(|w| (w[1].close / w[0].close).ln() - (w[1].etf_close / w[0].etf_close).ln())
            .collect()
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let p = params(300, 7, 0.05);
        let (bars_a, sent_a) = generate(&p).unwrap();
        let (bars_b, sent_b) = generate(&p).unwrap();
        assert_eq!(bars_a, bars_b);
        assert_eq!(sent_a, sent_b);
    }

    #[test]
    fn different_seeds_differ() {
        let (a, _) = generate(&params(50, 1, 0.0)).unwrap();
        let (b, _) = generate(&params(50, 2, 0.0)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn prices_positive_and_pass_ingest() {
        let p = params(400, 3, 0.05);
        let (bars, _) = generate(&p).unwrap();
        assert!(bars.iter().all(|b| b.close > 0.0 && b.etf_close > 0.0));
        let f = tempfile::NamedTempFile::new().unwrap();
        ingest::write_prices(f.path(), &bars).unwrap();
        let reloaded = ingest::load_prices(f.path()).unwrap();
        assert_eq!(bars, reloaded);
    }

    #[test]
    fn zero_beta_has_no_sentiment_alpha_correlation() {
        // With no planted signal the observed sentiment and next-day alpha
        // are independent; the sample correlation over 10k days stays small.
        let p = params(10_000, 11, 0.0);
        let (bars, sent) = generate(&p).unwrap();
        let a = alphas(&bars);
        let xs: Vec<f64> = sent[..a.len()].iter().map(|d| d.mean_score).collect();
        let rho = correlation(&xs, &a);
        assert!(rho.abs() < 0.03, "rho = {rho}");
    }

    #[test]
    fn strong_beta_predicts_alpha_sign() {
        // signal_strength = 10 * noise_vol, plenty of tweets per day.
        let p = SynthParams {
            n_days: 1000,
            seed: 19,
            signal_strength: 0.1,
            noise_vol: 0.01,
            market_vol: 0.02,
            tweet_rate: 50.0,
            regime_switch_prob: 0.05,
        };
        let (bars, sent) = generate(&p).unwrap();
        let a = alphas(&bars);
        let hits = a
            .iter()
            .enumerate()
            .filter(|(t, alpha)| {
                let predicted = sent[*t].mean_score - 0.5;
                (predicted >= 0.0) == (**alpha >= 0.0)
            })
            .count();
        let acc = hits as f64 / a.len() as f64;
        assert!(acc > 0.9, "sign accuracy {acc}");
    }

    #[test]
    fn true_signal_is_reproducible_and_bounded() {
        let p = params(100, 23, 0.0);
        let first = true_signal(&p, 0).unwrap();
        assert_eq!(first, true_signal(&p, 0).unwrap());
        assert!((0.0..1.0).contains(&first));
        assert!(matches!(
            true_signal(&p, 100),
            Err(SynthError::OutOfRange { day: 100, .. })
        ));
    }

    #[test]
    fn observation_error_shrinks_with_tweet_rate() {
        let mut prev_err = f64::INFINITY;
        for rate in [5.0, 20.0, 80.0] {
            let mut total = 0.0;
            let mut count = 0usize;
            for seed in 0..100 {
                let p = SynthParams {
                    n_days: 60,
                    seed,
                    tweet_rate: rate,
                    ..SynthParams::default()
                };
                let (_, sent) = generate(&p).unwrap();
                let latent = latent_series(&p).unwrap();
                for (day, s) in sent.iter().zip(&latent) {
                    if day.tweet_count > 0 {
                        total += (day.mean_score - s).abs();
                        count += 1;
                    }
                }
            }
            let mean_err = total / count as f64;
            assert!(
                mean_err < prev_err,
                "error did not shrink: rate {rate} err {mean_err} prev {prev_err}"
            );
            prev_err = mean_err;
        }
    }

    #[test]
    fn event_days_have_higher_counts() {
        let p = SynthParams {
            n_days: 2000,
            seed: 5,
            regime_switch_prob: 0.1,
            ..SynthParams::default()
        };
        let (_, sent) = generate(&p).unwrap();
        let big_days = sent
            .iter()
            .filter(|d| f64::from(d.tweet_count) > 4.0 * p.tweet_rate)
            .count();
        let frac = big_days as f64 / sent.len() as f64;
        assert!((0.05..0.2).contains(&frac), "event fraction {frac}");
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = SynthParams::default();
        p.n_days = 0;
        assert!(generate(&p).is_err());
        let mut p = SynthParams::default();
        p.noise_vol = 0.0;
        assert!(generate(&p).is_err());
        let mut p = SynthParams::default();
        p.regime_switch_prob = 1.5;
        assert!(generate(&p).is_err());
    }

    fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cov / (vx.sqrt() * vy.sqrt())
    }
}
