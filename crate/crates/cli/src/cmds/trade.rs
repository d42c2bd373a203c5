//! Trading commands: Q-learning training, strategy backtests, the
//! experiment matrix and report regeneration.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use sentq_core::backtest::{compare, run, EquityCurve, Strategy};
use sentq_core::chart::equity_chart_svg;
use sentq_core::classify::{cross_validate, evaluate, train_model, Model};
use sentq_core::features::{build_dataset, TargetKind, WindowConfig};
use sentq_core::ingest;
use sentq_core::qlearn::{run_training, EpisodeConfig, QTrainArtifact, QWeights};
use sentq_core::tweetprep;

use crate::cmds::model::{ModelChoice, ModelChoiceArg};
use crate::util::{ensure_out_dir, load_dataset, require_input, usage, CliError, ConfigFile, Manifest};

#[derive(Debug, Args)]
pub struct QtrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Base learning rate (decays as eta / sqrt(step)).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub discount: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub eps_decay: Option<f64>,
    #[arg(long)]
    pub eps_floor: Option<f64>,
    #[arg(long)]
    pub leverage: Option<i32>,
    #[arg(long)]
    pub stop_loss: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Serialize)]
struct QtrainConfig {
    dataset: String,
    prices: String,
    epochs: usize,
    learning_rate: f64,
    discount: f64,
    episode: EpisodeConfig,
}

pub fn cmd_qtrain(args: &QtrainArgs) -> Result<(), CliError> {
    require_input(&args.prices)?;
    let dataset = load_dataset(&args.dataset, args.meta.as_ref())?;
    let cfg_file = ConfigFile::load(args.config.as_ref())?;
    let d = EpisodeConfig::default();
    let episode = EpisodeConfig {
        epsilon0: cfg_file.resolve(args.eps0, "eps0", d.epsilon0)?,
        epsilon_decay: cfg_file.resolve(args.eps_decay, "eps_decay", d.epsilon_decay)?,
        epsilon_floor: cfg_file.resolve(args.eps_floor, "eps_floor", d.epsilon_floor)?,
        leverage_limit: cfg_file.resolve(args.leverage, "leverage", d.leverage_limit)?,
        stop_loss: cfg_file.resolve(args.stop_loss, "stop_loss", d.stop_loss)?,
        seed: cfg_file.resolve(args.seed, "seed", d.seed)?,
    };
    episode.validate().map_err(|e| usage(e.to_string()))?;
    let epochs = cfg_file.resolve(args.epochs, "epochs", 50)?;
    let eta = cfg_file.resolve(args.eta, "eta", 0.05)?;
    let discount = cfg_file.resolve(args.discount, "discount", 0.95)?;
    if !(0.0..=1.0).contains(&discount) {
        return Err(usage(format!("discount must lie in [0,1], got {discount}")));
    }
    if !(0.0..=1.0).contains(&eta) || eta == 0.0 {
        return Err(usage(format!("eta must lie in (0,1], got {eta}")));
    }
    ensure_out_dir(&args.out_dir)?;

    let bars = ingest::load_prices(&args.prices)?;
    let weights = QWeights::for_dataset(&dataset, eta, discount);
    let outcome = run_training(&dataset, &bars, &episode, weights, epochs)?;

    let artifact = QTrainArtifact {
        weights: outcome.weights,
        feature_names: dataset.feature_names.clone(),
        target_kind: dataset.target_kind,
        cfg: episode.clone(),
        epochs,
    };
    let weights_path = args.out_dir.join("qweights.json");
    artifact.save(&weights_path)?;

    let rewards_path = args.out_dir.join("epoch_rewards.csv");
    let mut csv = String::from("epoch,total_reward\n");
    for (i, r) in outcome.epoch_rewards.iter().enumerate() {
        csv.push_str(&format!("{i},{r}\n"));
    }
    fs::write(&rewards_path, csv)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing rewards: {e}")))?;

    let mut manifest = Manifest::new(
        "qtrain",
        QtrainConfig {
            dataset: args.dataset.display().to_string(),
            prices: args.prices.display().to_string(),
            epochs,
            learning_rate: eta,
            discount,
            episode,
        },
    );
    manifest.record_input(&args.dataset)?;
    manifest.record_input(&args.prices)?;
    manifest.record_output(&weights_path);
    manifest.record_output(&rewards_path);
    manifest.write(&args.out_dir)?;
    println!(
        "qtrain: {} epochs, last-epoch reward {:.4} -> {}",
        epochs,
        outcome.epoch_rewards.last().copied().unwrap_or(0.0),
        weights_path.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Trained sentiment classifier JSON for the ML strategy.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Technical-only classifier JSON for the baseline strategy.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Q-learning artifact JSON.
    #[arg(long)]
    pub qweights: Option<PathBuf>,
    /// Cost per unit of position change, as an equity fraction.
    #[arg(long, default_value_t = 0.0)]
    pub cost: f64,
    /// Freeze Q-learning weights during the test period (ablation).
    #[arg(long)]
    pub frozen: bool,
}

#[derive(Serialize)]
struct BacktestConfig {
    dataset: String,
    prices: String,
    cost: f64,
    frozen: bool,
    strategies: Vec<String>,
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<(), CliError> {
    require_input(&args.prices)?;
    let dataset = load_dataset(&args.dataset, args.meta.as_ref())?;
    ensure_out_dir(&args.out_dir)?;
    let bars = ingest::load_prices(&args.prices)?;

    let mut strategies = vec![Strategy::Oracle];
    if let Some(path) = &args.model {
        require_input(path)?;
        strategies.push(Strategy::MlSignal {
            model: Model::load(path)?,
        });
    }
    if let Some(path) = &args.baseline {
        require_input(path)?;
        strategies.push(Strategy::Baseline {
            model: Model::load(path)?,
        });
    }
    if let Some(path) = &args.qweights {
        require_input(path)?;
        let artifact = QTrainArtifact::load(path)?;
        strategies.push(Strategy::QLearning {
            weights: artifact.weights,
            cfg: artifact.cfg,
            online_updates: !args.frozen,
        });
    }

    let mut curves = Vec::new();
    let mut manifest_outputs = Vec::new();
    for strategy in &strategies {
        let curve = run(strategy, &dataset, &bars, args.cost)?;
        let path = args.out_dir.join(format!("equity_{}.csv", curve.name));
        curve.write_csv(&path)?;
        manifest_outputs.push(path);
        curves.push(curve);
    }

    let table = compare(&curves)?;
    let table_path = args.out_dir.join("comparison.csv");
    fs::write(&table_path, table.to_csv())
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing comparison: {e}")))?;
    let svg_path = args.out_dir.join("equity_curves.svg");
    fs::write(&svg_path, equity_chart_svg(&curves))
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing chart: {e}")))?;

    let mut manifest = Manifest::new(
        "backtest",
        BacktestConfig {
            dataset: args.dataset.display().to_string(),
            prices: args.prices.display().to_string(),
            cost: args.cost,
            frozen: args.frozen,
            strategies: strategies.iter().map(|s| s.name().to_string()).collect(),
        },
    );
    manifest.record_input(&args.dataset)?;
    manifest.record_input(&args.prices)?;
    for path in [&args.model, &args.baseline, &args.qweights].into_iter().flatten() {
        manifest.record_input(path)?;
    }
    for path in &manifest_outputs {
        manifest.record_output(path);
    }
    manifest.record_output(&table_path);
    manifest.record_output(&svg_path);
    manifest.write(&args.out_dir)?;

    for row in &table.rows {
        println!(
            "backtest: {:<10} final equity {:.4} (max drawdown {:.3})",
            row.name, row.final_equity, row.max_drawdown
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub prices: PathBuf,
    /// Sentiment aggregates built from ticker-keyword tweets.
    #[arg(long)]
    pub sent_ticker: PathBuf,
    /// Sentiment aggregates built from product-keyword tweets.
    #[arg(long)]
    pub sent_product: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    /// Comma-separated subset of logreg,svm,baseline.
    #[arg(long, default_value = "logreg,svm,baseline")]
    pub models: String,
}

#[derive(Serialize)]
struct ExperimentConfig {
    prices: String,
    sent_ticker: String,
    sent_product: String,
    folds: usize,
    models: Vec<ModelChoice>,
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    require_input(&args.prices)?;
    require_input(&args.sent_ticker)?;
    require_input(&args.sent_product)?;
    let models: Vec<ModelChoiceArg> = args
        .models
        .split(',')
        .map(|s| s.trim().parse().map_err(usage))
        .collect::<Result<_, _>>()?;
    ensure_out_dir(&args.out_dir)?;

    let bars = ingest::load_prices(&args.prices)?;
    let windows = WindowConfig::default();
    let tweet_sets = [
        ("ticker", tweetprep::load_sentiment(&args.sent_ticker)?),
        ("product", tweetprep::load_sentiment(&args.sent_product)?),
    ];

    let mut csv = String::from("target,tweet_set,model,c,gamma,cv_accuracy,train_accuracy,test_accuracy\n");
    for target in [TargetKind::Alpha, TargetKind::TotalReturn] {
        for (set_name, sent) in &tweet_sets {
            let dataset = build_dataset(&bars, sent, target, &windows)?;
            for &choice in &models {
                // The baseline sees no sentiment, so it is identical across
                // tweet sets; emit it once under the ticker pass.
                if choice == ModelChoice::Baseline && *set_name != "ticker" {
                    continue;
                }
                let (names, train_rows) = super::model::view_for(choice, &dataset, dataset.train_rows());
                let (_, test_rows) = super::model::view_for(choice, &dataset, dataset.test_rows());
                let report = cross_validate(&names, &train_rows, &choice.grid(), args.folds)?;
                let spec = report.best().spec;
                let model = train_model(spec, &names, &train_rows)?;
                let train_acc = evaluate(&model, &train_rows)?.accuracy;
                let test_acc = evaluate(&model, &test_rows)?.accuracy;
                let set_label = if choice == ModelChoice::Baseline {
                    "none"
                } else {
                    set_name
                };
                csv.push_str(&format!(
                    "{target},{set_label},{},{},{},{:.6},{:.6},{:.6}\n",
                    match choice {
                        ModelChoice::LogReg => "logreg",
                        ModelChoice::Svm => "svm",
                        ModelChoice::Baseline => "baseline",
                    },
                    spec.c(),
                    spec.gamma().map(|g| g.to_string()).unwrap_or_default(),
                    report.best().mean_accuracy,
                    train_acc,
                    test_acc
                ));
            }
        }
    }

    let path = args.out_dir.join("accuracy_matrix.csv");
    fs::write(&path, csv).map_err(|e| CliError::Runtime(anyhow::anyhow!("writing matrix: {e}")))?;

    let mut manifest = Manifest::new(
        "experiment",
        ExperimentConfig {
            prices: args.prices.display().to_string(),
            sent_ticker: args.sent_ticker.display().to_string(),
            sent_product: args.sent_product.display().to_string(),
            folds: args.folds,
            models,
        },
    );
    manifest.record_input(&args.prices)?;
    manifest.record_input(&args.sent_ticker)?;
    manifest.record_input(&args.sent_product)?;
    manifest.record_output(&path);
    manifest.write(&args.out_dir)?;
    println!("experiment: accuracy matrix -> {}", path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Equity curve CSVs produced by `backtest`.
    #[arg(long, required = true, num_args = 1..)]
    pub curves: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct ReportConfig {
    curves: Vec<String>,
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    for path in &args.curves {
        require_input(path)?;
    }
    ensure_out_dir(&args.out_dir)?;

    let mut curves = Vec::new();
    for path in &args.curves {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "curve".to_string());
        let name = stem.strip_prefix("equity_").unwrap_or(&stem).to_string();
        curves.push(EquityCurve::load_csv(path, &name)?);
    }

    let table = compare(&curves)?;
    let table_path = args.out_dir.join("comparison.csv");
    fs::write(&table_path, table.to_csv())
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing comparison: {e}")))?;
    let svg_path = args.out_dir.join("equity_curves.svg");
    fs::write(&svg_path, equity_chart_svg(&curves))
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing chart: {e}")))?;

    let mut manifest = Manifest::new(
        "report",
        ReportConfig {
            curves: args.curves.iter().map(|p| p.display().to_string()).collect(),
        },
    );
    for path in &args.curves {
        manifest.record_input(path)?;
    }
    manifest.record_output(&table_path);
    manifest.record_output(&svg_path);
    manifest.write(&args.out_dir)?;
    println!("report: {} curves -> {}", curves.len(), table_path.display());
    Ok(())
}
