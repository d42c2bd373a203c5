//! Feature engineering and dataset assembly.
//!
//! Technical features per day: the most recent close-to-close log return,
//! session volume, k-day cumulative log return (momentum) and k-day rolling
//! return volatility. Sentiment features: tweet count, daily mean score,
//! within-day score dispersion, k-day sentiment momentum and a rolling-mean
//! reversal gap.
//!
//! All features are min-max normalized to [0, 1] with the map fitted on the
//! training range only and test values clipped. Labels are the sign of the
//! NEXT day's target return (alpha or total), so a row never sees its own
//! future.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PriceBar;
use crate::tweetprep::SentimentDay;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("insufficient history: need at least {needed} points, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("alignment mismatch: {0}")]
    AlignmentMismatch(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> FeatureError {
    FeatureError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Rolling-window lengths. Kept small relative to a ~250-day half sample so
/// the feature count stays lean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub momentum: usize,
    pub volatility: usize,
    pub sent_momentum: usize,
    pub sent_reversal: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            momentum: 5,
            volatility: 10,
            sent_momentum: 3,
            sent_reversal: 5,
        }
    }
}

/// Which next-day quantity the label (and reward) tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Stock log return minus sector-ETF log return.
    Alpha,
    /// Stock log return.
    TotalReturn,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Alpha => write!(f, "alpha"),
            TargetKind::TotalReturn => write!(f, "total"),
        }
    }
}

impl FromStr for TargetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(TargetKind::Alpha),
            "total" => Ok(TargetKind::TotalReturn),
            other => Err(format!("unknown target kind {other:?} (want alpha|total)")),
        }
    }
}

/// A named, date-indexed feature matrix. `rows[i].1` is aligned with `names`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub names: Vec<String>,
    pub rows: Vec<(NaiveDate, Vec<f64>)>,
}

/// Per-day technical features. The first `max(momentum, volatility)` days
/// are dropped, not padded.
pub fn technical_features(
    bars: &[PriceBar],
    windows: &WindowConfig,
) -> Result<FeatureSeries, FeatureError> {
    let max_w = windows.momentum.max(windows.volatility).max(1);
    if bars.len() < max_w + 1 {
        return Err(FeatureError::InsufficientHistory {
            needed: max_w + 1,
            got: bars.len(),
        });
    }
    let log_ret: Vec<f64> = bars
        .windows(2)
        .map(|w| (w[1].close / w[0].close).ln())
        .collect();

    let names = vec![
        "ret_1".to_string(),
        "volume".to_string(),
        format!("momentum_{}", windows.momentum),
        format!("vol_{}", windows.volatility),
    ];
    let mut rows = Vec::with_capacity(bars.len() - max_w);
    for t in max_w..bars.len() {
        // log_ret[i] is the return ending on day i+1.
        let ret_1 = log_ret[t - 1];
        let momentum = (bars[t].close / bars[t - windows.momentum].close).ln();
        let window = &log_ret[t - windows.volatility..t];
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        let var = window.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / window.len() as f64;
        rows.push((
            bars[t].date,
            vec![ret_1, bars[t].volume as f64, momentum, var.sqrt()],
        ));
    }
    Ok(FeatureSeries { names, rows })
}

/// Per-day sentiment features. The first `max(sent_momentum,
/// sent_reversal - 1)` days are dropped.
pub fn sentiment_features(
    days: &[SentimentDay],
    windows: &WindowConfig,
) -> Result<FeatureSeries, FeatureError> {
    let start = windows.sent_momentum.max(windows.sent_reversal.saturating_sub(1));
    if days.len() < start + 1 {
        return Err(FeatureError::InsufficientHistory {
            needed: start + 1,
            got: days.len(),
        });
    }
    let names = vec![
        "tweet_count".to_string(),
        "sent_mean".to_string(),
        "sent_xvol".to_string(),
        format!("sent_mom_{}", windows.sent_momentum),
        format!("sent_rev_{}", windows.sent_reversal),
    ];
    let mut rows = Vec::with_capacity(days.len() - start);
    for t in start..days.len() {
        let momentum = days[t].mean_score - days[t - windows.sent_momentum].mean_score;
        let window = &days[t + 1 - windows.sent_reversal..=t];
        let roll_mean =
            window.iter().map(|d| d.mean_score).sum::<f64>() / window.len() as f64;
        // Sign-flipped gap: positive when today's sentiment sits below its
        // rolling mean, i.e. pressure to revert upward.
        let reversal = roll_mean - days[t].mean_score;
        rows.push((
            days[t].date,
            vec![
                f64::from(days[t].tweet_count),
                days[t].mean_score,
                days[t].score_std,
                momentum,
                reversal,
            ],
        ));
    }
    Ok(FeatureSeries { names, rows })
}

/// Fitted per-feature affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl FeatureNorm {
    /// Map into [0, 1], clipping out-of-range values. Constant features
    /// (min == max on the fit range) map to 0.5.
    pub fn apply(&self, value: f64) -> f64 {
        if self.max == self.min {
            0.5
        } else {
            ((value - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

/// Fit min-max bounds on the first `train_len` rows only.
pub fn fit_normalizer(series: &FeatureSeries, train_len: usize) -> Vec<FeatureNorm> {
    let train = &series.rows[..train_len.min(series.rows.len())];
    series
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (_, values) in train {
                lo = lo.min(values[j]);
                hi = hi.max(values[j]);
            }
            FeatureNorm {
                name: name.clone(),
                min: lo,
                max: hi,
            }
        })
        .collect()
}

/// Normalize every row through `norm` (fitted on the training range).
pub fn normalize(series: &FeatureSeries, norm: &[FeatureNorm]) -> FeatureSeries {
    let rows = series
        .rows
        .iter()
        .map(|(date, values)| {
            let mapped = values
                .iter()
                .zip(norm)
                .map(|(v, n)| n.apply(*v))
                .collect();
            (*date, mapped)
        })
        .collect();
    FeatureSeries {
        names: series.names.clone(),
        rows,
    }
}

/// One labeled day. `values` aligns with the owning dataset's
/// `feature_names`; `label` is +1/-1 for the sign of the next day's target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub date: NaiveDate,
    pub values: Vec<f64>,
    pub label: i8,
}

/// Chronologically ordered labeled dataset with a fixed half/half split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
    /// First test-row index; ceil(n/2).
    pub split_index: usize,
    pub target_kind: TargetKind,
    pub windows: WindowConfig,
    pub norm: Vec<FeatureNorm>,
}

impl Dataset {
    pub fn train_rows(&self) -> &[FeatureRow] {
        &self.rows[..self.split_index]
    }

    pub fn test_rows(&self) -> &[FeatureRow] {
        &self.rows[self.split_index..]
    }
}

/// True for names emitted by `technical_features`; the baseline model
/// trains on exactly these columns.
pub fn is_technical_feature(name: &str) -> bool {
    name == "ret_1" || name == "volume" || name.starts_with("momentum_") || name.starts_with("vol_")
}

/// Column projection used wherever a model sees a feature subset.
pub fn project_columns(
    names: &[String],
    rows: &[FeatureRow],
    keep: &[usize],
) -> (Vec<String>, Vec<FeatureRow>) {
    let sub_names = keep.iter().map(|&j| names[j].clone()).collect();
    let sub_rows = rows
        .iter()
        .map(|r| FeatureRow {
            date: r.date,
            values: keep.iter().map(|&j| r.values[j]).collect(),
            label: r.label,
        })
        .collect();
    (sub_names, sub_rows)
}

/// Next-day target returns aligned with `rows`: entry `i` is the target
/// return earned from `rows[i].date` to the following trading day.
pub fn aligned_target_returns(
    rows: &[FeatureRow],
    bars: &[PriceBar],
    kind: TargetKind,
) -> Result<Vec<f64>, FeatureError> {
    let mut bar_idx = 0usize;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        while bar_idx < bars.len() && bars[bar_idx].date < row.date {
            bar_idx += 1;
        }
        if bar_idx >= bars.len() || bars[bar_idx].date != row.date {
            return Err(FeatureError::AlignmentMismatch(format!(
                "no price bar for feature row date {}",
                row.date
            )));
        }
        if bar_idx + 1 >= bars.len() {
            return Err(FeatureError::AlignmentMismatch(format!(
                "no next-day bar after {}",
                row.date
            )));
        }
        out.push(target_return(&bars[bar_idx], &bars[bar_idx + 1], kind));
    }
    Ok(out)
}

fn target_return(today: &PriceBar, next: &PriceBar, kind: TargetKind) -> f64 {
    let stock = (next.close / today.close).ln();
    match kind {
        TargetKind::TotalReturn => stock,
        TargetKind::Alpha => stock - (next.etf_close / today.etf_close).ln(),
    }
}

/// Assemble the full labeled dataset: joined technical + sentiment features,
/// next-day sign labels (zero resolves to +1), half/half chronological split
/// and train-fitted normalization.
pub fn build_dataset(
    bars: &[PriceBar],
    sent_days: &[SentimentDay],
    target: TargetKind,
    windows: &WindowConfig,
) -> Result<Dataset, FeatureError> {
    if bars.len() != sent_days.len() {
        return Err(FeatureError::AlignmentMismatch(format!(
            "{} price bars vs {} sentiment days",
            bars.len(),
            sent_days.len()
        )));
    }
    for (bar, day) in bars.iter().zip(sent_days) {
        if bar.date != day.date {
            return Err(FeatureError::AlignmentMismatch(format!(
                "price bar {} vs sentiment day {}",
                bar.date, day.date
            )));
        }
    }

    let tech = technical_features(bars, windows)?;
    let sent = sentiment_features(sent_days, windows)?;

    // Both series are suffixes of the same calendar; join from the later start.
    let start_date = tech.rows[0].0.max(sent.rows[0].0);
    let tech_off = tech.rows.iter().position(|(d, _)| *d == start_date).unwrap();
    let sent_off = sent.rows.iter().position(|(d, _)| *d == start_date).unwrap();

    let mut names = tech.names.clone();
    names.extend(sent.names.iter().cloned());

    let joined: Vec<(NaiveDate, Vec<f64>)> = tech.rows[tech_off..]
        .iter()
        .zip(&sent.rows[sent_off..])
        .map(|((d, tv), (_, sv))| {
            let mut v = tv.clone();
            v.extend_from_slice(sv);
            (*d, v)
        })
        .collect();

    // Label from the next day's target; the final day has none and drops.
    let bar_start = bars.iter().position(|b| b.date == start_date).unwrap();
    let mut raw = FeatureSeries {
        names: names.clone(),
        rows: Vec::new(),
    };
    let mut labels = Vec::new();
    for (i, (date, values)) in joined.iter().enumerate() {
        let t = bar_start + i;
        if t + 1 >= bars.len() {
            break;
        }
        let target_ret = target_return(&bars[t], &bars[t + 1], target);
        labels.push(if target_ret >= 0.0 { 1i8 } else { -1i8 });
        raw.rows.push((*date, values.clone()));
    }
    if raw.rows.is_empty() {
        return Err(FeatureError::InsufficientHistory {
            needed: windows.momentum.max(windows.volatility) + 2,
            got: bars.len(),
        });
    }

    let n = raw.rows.len();
    let split_index = n.div_ceil(2);
    let norm = fit_normalizer(&raw, split_index);
    let normalized = normalize(&raw, &norm);

    let rows = normalized
        .rows
        .into_iter()
        .zip(labels)
        .map(|((date, values), label)| FeatureRow {
            date,
            values,
            label,
        })
        .collect();

    Ok(Dataset {
        feature_names: names,
        rows,
        split_index,
        target_kind: target,
        windows: *windows,
        norm,
    })
}

// --- Dataset serialization -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DatasetMeta {
    target_kind: TargetKind,
    split_index: usize,
    feature_names: Vec<String>,
    windows: WindowConfig,
    norm: Vec<FeatureNorm>,
}

impl Dataset {
    /// Write `date,label,<features...>` CSV plus a JSON sidecar carrying the
    /// split, target kind, windows and normalization parameters.
    pub fn save(&self, csv_path: &Path, meta_path: &Path) -> Result<(), FeatureError> {
        let mut out = String::from("date,label");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{}", row.date.format("%Y-%m-%d"), row.label));
            for v in &row.values {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        File::create(csv_path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| io_err(csv_path, e))?;

        let meta = DatasetMeta {
            target_kind: self.target_kind,
            split_index: self.split_index,
            feature_names: self.feature_names.clone(),
            windows: self.windows,
            norm: self.norm.clone(),
        };
        let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        File::create(meta_path)
            .and_then(|mut f| f.write_all(json.as_bytes()))
            .map_err(|e| io_err(meta_path, e))
    }

    pub fn load(csv_path: &Path, meta_path: &Path) -> Result<Self, FeatureError> {
        let meta_file = File::open(meta_path).map_err(|e| io_err(meta_path, e))?;
        let meta: DatasetMeta =
            serde_json::from_reader(BufReader::new(meta_file)).map_err(|e| {
                FeatureError::Malformed {
                    path: meta_path.display().to_string(),
                    line: 0,
                    message: e.to_string(),
                }
            })?;

        let malformed = |line: usize, message: String| FeatureError::Malformed {
            path: csv_path.display().to_string(),
            line,
            message,
        };
        let file = File::open(csv_path).map_err(|e| io_err(csv_path, e))?;
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(csv_path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 {
                let expected = format!("date,label,{}", meta.feature_names.join(","));
                if line != expected {
                    return Err(malformed(1, format!("header mismatch, expected {expected}")));
                }
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 2 + meta.feature_names.len() {
                return Err(malformed(i + 1, format!("expected {} fields", 2 + meta.feature_names.len())));
            }
            let date = NaiveDate::parse_from_str(parts[0], "%Y-%m-%d")
                .map_err(|e| malformed(i + 1, format!("bad date: {e}")))?;
            let label: i8 = parts[1]
                .parse()
                .map_err(|e| malformed(i + 1, format!("bad label: {e}")))?;
            if label != 1 && label != -1 {
                return Err(malformed(i + 1, format!("label must be +/-1, got {label}")));
            }
            let values = parts[2..]
                .iter()
                .map(|p| p.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| malformed(i + 1, format!("bad value: {e}")))?;
            rows.push(FeatureRow {
                date,
                values,
                label,
            });
        }
        Ok(Dataset {
            feature_names: meta.feature_names,
            rows,
            split_index: meta.split_index,
            target_kind: meta.target_kind,
            windows: meta.windows,
            norm: meta.norm,
        })
    }
}
