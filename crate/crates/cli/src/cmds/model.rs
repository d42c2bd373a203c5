//! Classifier commands: training, cross-validation and feature elimination.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use sentq_core::classify::{
    cross_validate, default_logreg_grid, default_svm_grid, evaluate, rfecv, train_model, CvReport,
    ModelSpec,
};
use sentq_core::features::{is_technical_feature, project_columns, Dataset, FeatureRow};

use crate::util::{ensure_out_dir, load_dataset, usage, CliError, Manifest};

/// Which classifier a command trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    LogReg,
    Svm,
    /// Technical-features-only logistic regression, the no-sentiment control.
    Baseline,
}

impl std::str::FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg" => Ok(ModelChoice::LogReg),
            "svm" => Ok(ModelChoice::Svm),
            "baseline" => Ok(ModelChoice::Baseline),
            other => Err(format!("unknown model {other:?} (want logreg|svm|baseline)")),
        }
    }
}

impl ModelChoice {
    pub fn grid(self) -> Vec<ModelSpec> {
        match self {
            ModelChoice::Svm => default_svm_grid(),
            _ => default_logreg_grid(),
        }
    }

    fn fixed_spec(self, c: f64, gamma: f64) -> ModelSpec {
        match self {
            ModelChoice::Svm => ModelSpec::SvmRbf { c, gamma },
            _ => ModelSpec::LogReg { c },
        }
    }
}

/// The (names, rows) view a model choice trains on.
pub fn view_for(
    choice: ModelChoice,
    dataset: &Dataset,
    rows: &[FeatureRow],
) -> (Vec<String>, Vec<FeatureRow>) {
    match choice {
        ModelChoice::Baseline => {
            let keep: Vec<usize> = dataset
                .feature_names
                .iter()
                .enumerate()
                .filter(|(_, n)| is_technical_feature(n))
                .map(|(j, _)| j)
                .collect();
            project_columns(&dataset.feature_names, rows, &keep)
        }
        _ => (dataset.feature_names.clone(), rows.to_vec()),
    }
}

fn cv_report_csv(report: &CvReport) -> String {
    let mut out = String::from("kind,c,gamma,mean_accuracy,fold_accuracies\n");
    for (i, point) in report.points.iter().enumerate() {
        let kind = match point.spec {
            ModelSpec::LogReg { .. } => "logreg",
            ModelSpec::SvmRbf { .. } => "svm",
        };
        let gamma = point
            .spec
            .gamma()
            .map(|g| g.to_string())
            .unwrap_or_default();
        let folds: Vec<String> = point.fold_accuracies.iter().map(|a| format!("{a:.6}")).collect();
        out.push_str(&format!(
            "{kind},{},{gamma},{:.6},{}{}\n",
            point.spec.c(),
            point.mean_accuracy,
            folds.join(";"),
            if i == report.best_index { ",best" } else { "" }
        ));
    }
    out
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV from `featurize`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Meta sidecar (defaults to <dataset>.meta.json).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value = "logreg")]
    pub model: ModelChoiceArg,
    /// Inverse regularization strength; omit to use --cv or the default.
    #[arg(long)]
    pub c: Option<f64>,
    /// RBF width (SVM only).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Pick hyperparameters by 3-fold cross-validation on the train slice.
    #[arg(long)]
    pub cv: bool,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "model")]
    pub name: String,
}

// clap parses the enum through its FromStr impl.
pub type ModelChoiceArg = ModelChoice;

#[derive(Serialize)]
struct TrainConfig {
    dataset: String,
    model: ModelChoice,
    spec: ModelSpec,
    cv: bool,
    folds: usize,
    name: String,
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset, args.meta.as_ref())?;
    ensure_out_dir(&args.out_dir)?;
    let (names, train_rows) = view_for(args.model, &dataset, dataset.train_rows());
    let (_, test_rows) = view_for(args.model, &dataset, dataset.test_rows());

    let mut cv_csv = None;
    let spec = if let Some(c) = args.c {
        if c <= 0.0 {
            return Err(usage(format!("--c must be positive, got {c}")));
        }
        args.model.fixed_spec(c, args.gamma.unwrap_or(0.1))
    } else if args.cv {
        let report = cross_validate(&names, &train_rows, &args.model.grid(), args.folds)?;
        cv_csv = Some(cv_report_csv(&report));
        report.best().spec
    } else {
        args.model.fixed_spec(1.0, args.gamma.unwrap_or(0.1))
    };

    let model = train_model(spec, &names, &train_rows)?;
    let train_eval = evaluate(&model, &train_rows)?;
    let test_eval = evaluate(&model, &test_rows)?;

    let model_path = args.out_dir.join(format!("{}.json", args.name));
    model.save(&model_path)?;
    let eval_path = args.out_dir.join(format!("{}_eval.csv", args.name));
    let eval_csv = format!(
        "slice,accuracy,true_pos,true_neg,false_pos,false_neg\n\
         train,{:.6},{},{},{},{}\n\
         test,{:.6},{},{},{},{}\n",
        train_eval.accuracy,
        train_eval.true_pos,
        train_eval.true_neg,
        train_eval.false_pos,
        train_eval.false_neg,
        test_eval.accuracy,
        test_eval.true_pos,
        test_eval.true_neg,
        test_eval.false_pos,
        test_eval.false_neg,
    );
    fs::write(&eval_path, eval_csv)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing eval: {e}")))?;

    let mut manifest = Manifest::new(
        "train",
        TrainConfig {
            dataset: args.dataset.display().to_string(),
            model: args.model,
            spec,
            cv: args.cv,
            folds: args.folds,
            name: args.name.clone(),
        },
    );
    manifest.record_input(&args.dataset)?;
    manifest.record_output(&model_path);
    manifest.record_output(&eval_path);
    if let Some(csv) = cv_csv {
        let cv_path = args.out_dir.join(format!("{}_cv.csv", args.name));
        fs::write(&cv_path, csv)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing cv report: {e}")))?;
        manifest.record_output(&cv_path);
    }
    manifest.write(&args.out_dir)?;
    println!(
        "train[{spec}]: train acc {:.3}, test acc {:.3} -> {}",
        train_eval.accuracy,
        test_eval.accuracy,
        model_path.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value = "logreg")]
    pub model: ModelChoiceArg,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct CvConfig {
    dataset: String,
    model: ModelChoice,
    folds: usize,
}

pub fn cmd_cv(args: &CvArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset, args.meta.as_ref())?;
    ensure_out_dir(&args.out_dir)?;
    let (names, train_rows) = view_for(args.model, &dataset, dataset.train_rows());
    let report = cross_validate(&names, &train_rows, &args.model.grid(), args.folds)?;

    let path = args.out_dir.join("cv_report.csv");
    fs::write(&path, cv_report_csv(&report))
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing cv report: {e}")))?;

    let mut manifest = Manifest::new(
        "cv",
        CvConfig {
            dataset: args.dataset.display().to_string(),
            model: args.model,
            folds: args.folds,
        },
    );
    manifest.record_input(&args.dataset)?;
    manifest.record_output(&path);
    manifest.write(&args.out_dir)?;
    println!(
        "cv: best {} (mean accuracy {:.3}) -> {}",
        report.best().spec,
        report.best().mean_accuracy,
        path.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct RfecvArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value = "logreg")]
    pub model: ModelChoiceArg,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn cmd_rfecv(args: &RfecvArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset, args.meta.as_ref())?;
    ensure_out_dir(&args.out_dir)?;
    let (names, train_rows) = view_for(args.model, &dataset, dataset.train_rows());
    let report = rfecv(&names, &train_rows, &args.model.grid(), args.folds)?;

    let mut csv = String::from("step,n_features,mean_accuracy,c,gamma,features\n");
    for (i, step) in report.steps.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{:.6},{},{},{}\n",
            step.feature_names.len(),
            step.mean_accuracy,
            step.best_spec.c(),
            step.best_spec.gamma().map(|g| g.to_string()).unwrap_or_default(),
            step.feature_names.join(";")
        ));
    }
    let trace_path = args.out_dir.join("rfecv_trace.csv");
    fs::write(&trace_path, csv)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing rfecv trace: {e}")))?;
    let selected_path = args.out_dir.join("selected_features.txt");
    fs::write(&selected_path, report.selected.join("\n") + "\n")
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing selection: {e}")))?;

    let mut manifest = Manifest::new(
        "rfecv",
        CvConfig {
            dataset: args.dataset.display().to_string(),
            model: args.model,
            folds: args.folds,
        },
    );
    manifest.record_input(&args.dataset)?;
    manifest.record_output(&trace_path);
    manifest.record_output(&selected_path);
    manifest.write(&args.out_dir)?;
    println!(
        "rfecv: selected {} of {} features -> {}",
        report.selected.len(),
        names.len(),
        selected_path.display()
    );
    Ok(())
}
