//! Data-producing commands: synthetic generation, tweet preprocessing and
//! feature building.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use sentq_core::features::{build_dataset, TargetKind, WindowConfig};
use sentq_core::ingest::{self, SourceTag};
use sentq_core::synth::{self, SynthParams};
use sentq_core::tweetprep::{self, aggregate_daily, score_corpus, Lexicon};

use crate::util::{ensure_out_dir, require_input, usage, CliError, ConfigFile, Manifest};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for prices.csv, sentiment.jsonl and latent.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coefficient linking today's centered sentiment to tomorrow's alpha.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub noise_vol: Option<f64>,
    #[arg(long)]
    pub market_vol: Option<f64>,
    #[arg(long)]
    pub tweet_rate: Option<f64>,
    /// Probability of a high-volume event day.
    #[arg(long)]
    pub event_prob: Option<f64>,
    /// Flat key=value config file; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Serialize)]
struct LatentSidecar<'a> {
    params: &'a SynthParams,
    latent: &'a [f64],
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_ref())?;
    let defaults = SynthParams::default();
    let params = SynthParams {
        n_days: cfg.resolve(args.days, "days", defaults.n_days)?,
        seed: cfg.resolve(args.seed, "seed", defaults.seed)?,
        signal_strength: cfg.resolve(args.beta, "beta", defaults.signal_strength)?,
        noise_vol: cfg.resolve(args.noise_vol, "noise_vol", defaults.noise_vol)?,
        market_vol: cfg.resolve(args.market_vol, "market_vol", defaults.market_vol)?,
        tweet_rate: cfg.resolve(args.tweet_rate, "tweet_rate", defaults.tweet_rate)?,
        regime_switch_prob: cfg.resolve(args.event_prob, "event_prob", defaults.regime_switch_prob)?,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    ensure_out_dir(&args.out_dir)?;

    let (bars, sentiment) = synth::generate(&params)?;
    let latent = synth::latent_series(&params)?;

    let prices_path = args.out_dir.join("prices.csv");
    let sentiment_path = args.out_dir.join("sentiment.jsonl");
    let latent_path = args.out_dir.join("latent.json");
    ingest::write_prices(&prices_path, &bars)?;
    tweetprep::write_sentiment_jsonl(&sentiment_path, &sentiment)?;
    let sidecar = LatentSidecar {
        params: &params,
        latent: &latent,
    };
    fs::write(
        &latent_path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )
    .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing latent sidecar: {e}")))?;

    let mut manifest = Manifest::new("synth", &params);
    manifest.record_output(&prices_path);
    manifest.record_output(&sentiment_path);
    manifest.record_output(&latent_path);
    manifest.write(&args.out_dir)?;
    println!(
        "synth: {} days -> {}",
        params.n_days,
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Raw tweets, one JSON object per line with `ts` and `text`.
    #[arg(long)]
    pub tweets: PathBuf,
    /// Token polarity lexicon CSV (`token,score`).
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Price CSV supplying the trading-day calendar.
    #[arg(long)]
    pub prices: PathBuf,
    /// Corpus tag: ticker or product.
    #[arg(long, default_value = "ticker")]
    pub tag: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct PrepConfig<'a> {
    tweets: String,
    lexicon: String,
    prices: String,
    tag: &'a str,
}

pub fn cmd_prep(args: &PrepArgs) -> Result<(), CliError> {
    require_input(&args.tweets)?;
    require_input(&args.lexicon)?;
    require_input(&args.prices)?;
    let tag = match args.tag.as_str() {
        "ticker" => SourceTag::Ticker,
        "product" => SourceTag::Product,
        other => return Err(usage(format!("unknown tag {other:?} (want ticker|product)"))),
    };
    ensure_out_dir(&args.out_dir)?;

    let tweets = ingest::load_tweets(&args.tweets, tag)?;
    let lexicon = Lexicon::from_csv_path(&args.lexicon)?;
    let bars = ingest::load_prices(&args.prices)?;
    let trading_days: Vec<_> = bars.iter().map(|b| b.date).collect();

    let (scored, stats) = score_corpus(&tweets, &lexicon);
    let days = aggregate_daily(&scored, &trading_days)?;

    let sentiment_path = args.out_dir.join("sentiment.csv");
    tweetprep::write_sentiment_csv(&sentiment_path, &days)?;
    let rejections_path = args.out_dir.join("rejections.csv");
    let log = format!(
        "reason,count\nkept,{}\nurl_ad,{}\ndouble_question_mark,{}\nnon_english,{}\nempty_after_clean,{}\nno_tokens,{}\n",
        stats.kept,
        stats.url_ad,
        stats.double_question_mark,
        stats.non_english,
        stats.empty_after_clean,
        stats.no_tokens
    );
    fs::write(&rejections_path, log)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing rejection log: {e}")))?;

    let mut manifest = Manifest::new(
        "prep",
        PrepConfig {
            tweets: args.tweets.display().to_string(),
            lexicon: args.lexicon.display().to_string(),
            prices: args.prices.display().to_string(),
            tag: &args.tag,
        },
    );
    manifest.record_input(&args.tweets)?;
    manifest.record_input(&args.lexicon)?;
    manifest.record_input(&args.prices)?;
    manifest.record_output(&sentiment_path);
    manifest.record_output(&rejections_path);
    manifest.write(&args.out_dir)?;
    println!(
        "prep: {} tweets in, {} kept, {} rejected -> {}",
        tweets.len(),
        stats.kept,
        stats.rejected(),
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub prices: PathBuf,
    /// Per-day sentiment aggregates (.csv or .jsonl).
    #[arg(long)]
    pub sentiment: PathBuf,
    /// Prediction target: alpha or total.
    #[arg(long, default_value = "alpha")]
    pub target: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Output file stem (default: dataset).
    #[arg(long, default_value = "dataset")]
    pub name: String,
    #[arg(long)]
    pub momentum: Option<usize>,
    #[arg(long)]
    pub volatility: Option<usize>,
    #[arg(long)]
    pub sent_momentum: Option<usize>,
    #[arg(long)]
    pub sent_reversal: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Serialize)]
struct FeaturizeConfig {
    prices: String,
    sentiment: String,
    target: TargetKind,
    windows: WindowConfig,
    name: String,
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> Result<(), CliError> {
    require_input(&args.prices)?;
    require_input(&args.sentiment)?;
    let target: TargetKind = args.target.parse().map_err(usage)?;
    let cfg = ConfigFile::load(args.config.as_ref())?;
    let d = WindowConfig::default();
    let windows = WindowConfig {
        momentum: cfg.resolve(args.momentum, "momentum", d.momentum)?,
        volatility: cfg.resolve(args.volatility, "volatility", d.volatility)?,
        sent_momentum: cfg.resolve(args.sent_momentum, "sent_momentum", d.sent_momentum)?,
        sent_reversal: cfg.resolve(args.sent_reversal, "sent_reversal", d.sent_reversal)?,
    };
    ensure_out_dir(&args.out_dir)?;

    let bars = ingest::load_prices(&args.prices)?;
    let sentiment = tweetprep::load_sentiment(&args.sentiment)?;
    let dataset = build_dataset(&bars, &sentiment, target, &windows)?;

    let csv_path = args.out_dir.join(format!("{}.csv", args.name));
    let meta_path = args.out_dir.join(format!("{}.meta.json", args.name));
    dataset.save(&csv_path, &meta_path)?;

    let mut manifest = Manifest::new(
        "featurize",
        FeaturizeConfig {
            prices: args.prices.display().to_string(),
            sentiment: args.sentiment.display().to_string(),
            target,
            windows,
            name: args.name.clone(),
        },
    );
    manifest.record_input(&args.prices)?;
    manifest.record_input(&args.sentiment)?;
    manifest.record_output(&csv_path);
    manifest.record_output(&meta_path);
    manifest.write(&args.out_dir)?;
    println!(
        "featurize: {} rows x {} features (split at {}) -> {}",
        dataset.rows.len(),
        dataset.feature_names.len(),
        dataset.split_index,
        csv_path.display()
    );
    Ok(())
}
