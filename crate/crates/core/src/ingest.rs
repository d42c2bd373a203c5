//! Price and tweet loading with strict validation.
//!
//! Prices arrive as CSV with header `date,close,volume,etf_close`; tweets as
//! JSONL with fields `ts` and `text`. Validation is deliberately hard-nosed:
//! calendar gaps, duplicate dates and non-positive prices are errors, not
//! warnings, because the downstream feature windows assume contiguous daily
//! bars.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar;

/// One trading day of a symbol, with the sector ETF close carried alongside
/// so alpha (stock return minus ETF return) can be computed later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub close: f64,
    pub volume: u64,
    pub etf_close: f64,
}

/// Which corpus a tweet came from: searched by stock ticker or by
/// product/news keywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceTag {
    Ticker,
    Product,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTag::Ticker => write!(f, "ticker"),
            SourceTag::Product => write!(f, "product"),
        }
    }
}

/// A raw tweet prior to any preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub timestamp: NaiveDateTime,
    pub text: String,
    pub source_tag: SourceTag,
}

/// Largest per-leg daily log move accepted at ingest. Keeping each leg below
/// 0.5 bounds every target return (total or alpha) strictly inside (-1, 1),
/// which the backtester's multiplicative accounting relies on to keep equity
/// positive.
pub const MAX_DAILY_LOG_MOVE: f64 = 0.5;

const PRICE_HEADER: [&str; 4] = ["date", "close", "volume", "etf_close"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing or misnamed column {column:?} in header (expected date,close,volume,etf_close)")]
    MissingColumn { column: String },
    #[error("row {row}: non-positive price {value}")]
    NonPositivePrice { row: usize, value: f64 },
    #[error("row {row}: duplicate date {date}")]
    DuplicateDate { row: usize, date: NaiveDate },
    #[error("row {row}: date {date} is not after the previous bar {prev}")]
    NonMonotonicDate {
        row: usize,
        date: NaiveDate,
        prev: NaiveDate,
    },
    #[error("row {row}: calendar gap, expected trading day {expected} but found {date}")]
    GapInCalendar {
        row: usize,
        expected: NaiveDate,
        date: NaiveDate,
    },
    #[error("row {row}: daily log move {value:.4} exceeds the {limit} ingest bound")]
    ExtremeMove { row: usize, value: f64, limit: f64 },
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("line {line}: malformed tweet record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: tweet has empty text")]
    EmptyText { line: usize },
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load a price series from CSV, validating ordering, positivity and
/// calendar contiguity. `row` in errors is 1-based over data rows (the
/// header is row 0).
pub fn load_prices(path: &Path) -> Result<Vec<PriceBar>, IngestError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|e| IngestError::MalformedRow {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    for (idx, want) in PRICE_HEADER.iter().enumerate() {
        match headers.get(idx) {
            Some(got) if got == *want => {}
            _ => {
                return Err(IngestError::MissingColumn {
                    column: (*want).to_string(),
                })
            }
        }
    }

    let mut bars: Vec<PriceBar> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        let bar = parse_price_row(&record, row)?;
        if bar.close <= 0.0 {
            return Err(IngestError::NonPositivePrice {
                row,
                value: bar.close,
            });
        }
        if bar.etf_close <= 0.0 {
            return Err(IngestError::NonPositivePrice {
                row,
                value: bar.etf_close,
            });
        }
        if let Some(prev) = bars.last() {
            if bar.date == prev.date {
                return Err(IngestError::DuplicateDate {
                    row,
                    date: bar.date,
                });
            }
            if bar.date < prev.date {
                return Err(IngestError::NonMonotonicDate {
                    row,
                    date: bar.date,
                    prev: prev.date,
                });
            }
            let expected = calendar::next_trading_day(prev.date);
            if bar.date != expected {
                return Err(IngestError::GapInCalendar {
                    row,
                    expected,
                    date: bar.date,
                });
            }
            for (cur, last) in [(bar.close, prev.close), (bar.etf_close, prev.etf_close)] {
                let log_move = (cur / last).ln();
                if log_move.abs() >= MAX_DAILY_LOG_MOVE {
                    return Err(IngestError::ExtremeMove {
                        row,
                        value: log_move,
                        limit: MAX_DAILY_LOG_MOVE,
                    });
                }
            }
        }
        bars.push(bar);
    }
    Ok(bars)
}

fn parse_price_row(record: &csv::StringRecord, row: usize) -> Result<PriceBar, IngestError> {
    let field = |idx: usize, name: &str| -> Result<&str, IngestError> {
        record.get(idx).ok_or_else(|| IngestError::MalformedRow {
            row,
            message: format!("missing field {name}"),
        })
    };
    let date = NaiveDate::parse_from_str(field(0, "date")?, "%Y-%m-%d").map_err(|e| {
        IngestError::MalformedRow {
            row,
            message: format!("bad date: {e}"),
        }
    })?;
    let close: f64 = field(1, "close")?
        .parse()
        .map_err(|e| IngestError::MalformedRow {
            row,
            message: format!("bad close: {e}"),
        })?;
    let volume: u64 = field(2, "volume")?
        .parse()
        .map_err(|e| IngestError::MalformedRow {
            row,
            message: format!("bad volume: {e}"),
        })?;
    let etf_close: f64 = field(3, "etf_close")?
        .parse()
        .map_err(|e| IngestError::MalformedRow {
            row,
            message: format!("bad etf_close: {e}"),
        })?;
    Ok(PriceBar {
        date,
        close,
        volume,
        etf_close,
    })
}

/// Write a price series in the exact format `load_prices` consumes.
/// Floats use the shortest round-trip representation, so a write/load cycle
/// reproduces the series bit-for-bit.
pub fn write_prices(path: &Path, bars: &[PriceBar]) -> Result<(), IngestError> {
    let mut out = String::from("date,close,volume,etf_close\n");
    for bar in bars {
        out.push_str(&format!(
            "{},{},{},{}\n",
            bar.date.format("%Y-%m-%d"),
            bar.close,
            bar.volume,
            bar.etf_close
        ));
    }
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

#[derive(Deserialize)]
struct TweetLine {
    ts: String,
    text: String,
}

/// Load tweets from JSONL. Every record gets the supplied source tag; input
/// order is preserved. Timestamps accept `YYYY-MM-DDTHH:MM:SS` with an
/// optional trailing `Z`.
pub fn load_tweets(path: &Path, tag: SourceTag) -> Result<Vec<TweetRecord>, IngestError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut tweets = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TweetLine =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        if parsed.text.is_empty() {
            return Err(IngestError::EmptyText { line: line_no });
        }
        let ts_str = parsed.ts.trim_end_matches('Z');
        let timestamp = NaiveDateTime::parse_from_str(ts_str, "%Y-%m-%dT%H:%M:%S")
            .or_else(|_| {
                NaiveDate::parse_from_str(ts_str, "%Y-%m-%d")
                    .map(|d| d.and_hms_opt(0, 0, 0).unwrap())
            })
            .map_err(|e| IngestError::MalformedLine {
                line: line_no,
                message: format!("bad ts: {e}"),
            })?;
        tweets.push(TweetRecord {
            timestamp,
            text: parsed.text,
            source_tag: tag,
        });
    }
    Ok(tweets)
}

/// Write tweets in the JSONL format `load_tweets` consumes.
pub fn write_tweets(path: &Path, tweets: &[TweetRecord]) -> Result<(), IngestError> {
    let mut out = String::new();
    for t in tweets {
        let obj = serde_json::json!({
            "ts": t.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            "text": t.text,
        });
        out.push_str(&obj.to_string());
        out.push('\n');
    }
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}
