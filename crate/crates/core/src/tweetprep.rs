//! Tweet preprocessing and sentiment scoring.
//!
//! Filtering implements the corpus rules: drop likely ads (any `http` or
//! `.com`), drop tweets with two consecutive question marks (typically
//! unrecognizable encodings), strip `#hashtag`/`@user` tokens, and drop
//! non-English text via a stopword-ratio heuristic.
//!
//! Scoring assigns each sentence a polarity in [0, 4] (0 very negative,
//! 4 very positive) as the mean lexicon polarity of its tokens, and a tweet
//! the unweighted mean over its sentences. Daily aggregation normalizes
//! scores to [0, 1] and fills tweetless days with a neutral 0.5.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TweetRecord;

/// Fraction of tokens that must be English stopwords for text to count as
/// English.
pub const ENGLISH_THRESHOLD: f64 = 0.15;

/// Neutral per-day mean used when a trading day has no tweets.
pub const NEUTRAL_SCORE: f64 = 0.5;

static STOPWORDS_RAW: &str = include_str!("../fixtures/stopwords_en.txt");

fn stopwords() -> &'static std::collections::HashSet<&'static str> {
    static SET: OnceLock<std::collections::HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_RAW
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect()
    })
}

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("no sentence contains any token")]
    NoTokens,
    #[error("lexicon has no entries")]
    EmptyLexicon,
    #[error("score {value} for {subject} outside [0, 4]")]
    ScoreOutOfRange { subject: String, value: f64 },
    #[error("tweet dated {date} falls after the last trading day {last}")]
    TweetAfterLastTradingDay { date: NaiveDate, last: NaiveDate },
    #[error("trading day list is empty")]
    EmptyTradingDays,
    #[error("trading days not strictly ascending at index {index}")]
    NonAscendingTradingDays { index: usize },
    #[error("io error reading {path}: {source}")]
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

fn io_err(path: &Path, source: std::io::Error) -> PrepError {
    PrepError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Why a tweet was dropped during preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    /// Contains `http` or `.com`; these are usually ads.
    UrlAd,
    /// Contains two consecutive question marks; usually a broken encoding.
    DoubleQuestionMark,
    /// Stopword ratio below the English threshold.
    NonEnglish,
    /// Nothing left once hashtags/users are stripped.
    EmptyAfterClean,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::UrlAd => "url_ad",
            RejectReason::DoubleQuestionMark => "double_question_mark",
            RejectReason::NonEnglish => "non_english",
            RejectReason::EmptyAfterClean => "empty_after_clean",
        };
        write!(f, "{s}")
    }
}

/// Outcome of [`filter_tweet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOutcome {
    Keep,
    Reject(RejectReason),
}

/// Apply every preprocessing rule and return the cleaned text on success.
pub fn preprocess(text: &str) -> Result<String, RejectReason> {
    let lower = text.to_lowercase();
    if lower.contains("http") || lower.contains(".com") {
        return Err(RejectReason::UrlAd);
    }
    if text.contains("??") {
        return Err(RejectReason::DoubleQuestionMark);
    }
    let cleaned = clean_tweet(text);
    if cleaned.is_empty() {
        return Err(RejectReason::EmptyAfterClean);
    }
    if !is_english(&cleaned) {
        return Err(RejectReason::NonEnglish);
    }
    Ok(cleaned)
}

/// Total filter over raw tweet text. `Keep` means the tweet survives the
/// URL/ad rule, the `??` rule, cleaning, and the English check.
pub fn filter_tweet(text: &str) -> FilterOutcome {
    match preprocess(text) {
        Ok(_) => FilterOutcome::Keep,
        Err(reason) => FilterOutcome::Reject(reason),
    }
}

/// Remove `#hashtag` and `@user` tokens, turn tabs into spaces, collapse
/// whitespace runs and trim. Idempotent.
pub fn clean_tweet(text: &str) -> String {
    text.split_whitespace()
        .filter(|tok| !tok.starts_with('#') && !tok.starts_with('@'))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits into lowercase tokens, stripping leading/trailing non-alphanumeric
/// characters. Interior punctuation (apostrophes, hyphens) is kept.
fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect()
}

/// Fraction of tokens that appear in the shipped English stopword list.
/// Returns 0 for token-less text.
pub fn english_stopword_ratio(text: &str) -> f64 {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens
        .iter()
        .filter(|t| stopwords().contains(t.as_str()))
        .count();
    hits as f64 / tokens.len() as f64
}

/// Stopword-ratio English detector at the default threshold. Expects
/// non-empty text; token-less text is treated as non-English.
pub fn is_english(text: &str) -> bool {
    is_english_with_threshold(text, ENGLISH_THRESHOLD)
}

pub fn is_english_with_threshold(text: &str, threshold: f64) -> bool {
    english_stopword_ratio(text) >= threshold
}

/// Token polarity lexicon on the 0-4 scale.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
    default_score: f64,
}

impl Lexicon {
    /// Build from `(token, score)` pairs. Tokens are lowercased; scores and
    /// the default must lie in [0, 4] and the map must be non-empty.
    pub fn new<I>(entries: I, default_score: f64) -> Result<Self, PrepError>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        if !(0.0..=4.0).contains(&default_score) {
            return Err(PrepError::ScoreOutOfRange {
                subject: "default".into(),
                value: default_score,
            });
        }
        let mut map = HashMap::new();
        for (token, score) in entries {
            if !(0.0..=4.0).contains(&score) {
                return Err(PrepError::ScoreOutOfRange {
                    subject: token,
                    value: score,
                });
            }
            map.insert(token.to_lowercase(), score);
        }
        if map.is_empty() {
            return Err(PrepError::EmptyLexicon);
        }
        Ok(Lexicon {
            entries: map,
            default_score,
        })
    }

    /// Load from CSV with header `token,score`. Unknown-token default is the
    /// neutral 2.0 midpoint of the scale.
    pub fn from_csv_path(path: &Path) -> Result<Self, PrepError> {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let reader = BufReader::new(file);
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "token,score") {
                continue;
            }
            let (token, score) = line.split_once(',').ok_or_else(|| PrepError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: "expected token,score".into(),
            })?;
            let score: f64 = score.trim().parse().map_err(|e| PrepError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: format!("bad score: {e}"),
            })?;
            entries.push((token.trim().to_string(), score));
        }
        Lexicon::new(entries, 2.0)
    }

    /// Polarity of a token (case-insensitive); unknown tokens get the default.
    pub fn score(&self, token: &str) -> f64 {
        *self
            .entries
            .get(&token.to_lowercase())
            .unwrap_or(&self.default_score)
    }

    pub fn default_score(&self) -> f64 {
        self.default_score
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Score one tweet on the 0-4 scale: sentences split on `.`, `!`, `?`; each
/// sentence is the mean polarity of its tokens; the tweet is the unweighted
/// mean over sentences. Sentences without tokens are skipped.
pub fn score_tweet(text: &str, lex: &Lexicon) -> Result<f64, PrepError> {
    let mut sentence_scores = Vec::new();
    for sentence in text.split(['.', '!', '?']) {
        let tokens = tokenize(sentence);
        if tokens.is_empty() {
            continue;
        }
        let total: f64 = tokens.iter().map(|t| lex.score(t)).sum();
        sentence_scores.push(total / tokens.len() as f64);
    }
    if sentence_scores.is_empty() {
        return Err(PrepError::NoTokens);
    }
    Ok(sentence_scores.iter().sum::<f64>() / sentence_scores.len() as f64)
}

/// Per-trading-day sentiment aggregate with scores normalized to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentDay {
    pub date: NaiveDate,
    /// Mean normalized score in [0, 1]; 0.5 when the day has no tweets.
    pub mean_score: f64,
    pub tweet_count: u32,
    /// Population standard deviation of the day's normalized scores.
    pub score_std: f64,
}

impl SentimentDay {
    pub fn neutral(date: NaiveDate) -> Self {
        SentimentDay {
            date,
            mean_score: NEUTRAL_SCORE,
            tweet_count: 0,
            score_std: 0.0,
        }
    }
}

/// Bucket scored tweets into trading days. Raw 0-4 scores are divided by 4;
/// tweets stamped on non-trading days roll forward to the next trading day;
/// each trading day yields exactly one aggregate, neutral-filled when empty.
pub fn aggregate_daily(
    scored: &[(TweetRecord, f64)],
    trading_days: &[NaiveDate],
) -> Result<Vec<SentimentDay>, PrepError> {
    if trading_days.is_empty() {
        return Err(PrepError::EmptyTradingDays);
    }
    for i in 1..trading_days.len() {
        if trading_days[i] <= trading_days[i - 1] {
            return Err(PrepError::NonAscendingTradingDays { index: i });
        }
    }

    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); trading_days.len()];
    let last = *trading_days.last().unwrap();
    for (tweet, raw_score) in scored {
        if !(0.0..=4.0).contains(raw_score) {
            return Err(PrepError::ScoreOutOfRange {
                subject: format!("tweet at {}", tweet.timestamp),
                value: *raw_score,
            });
        }
        let day = tweet.timestamp.date();
        let idx = trading_days.partition_point(|&td| td < day);
        if idx == trading_days.len() {
            return Err(PrepError::TweetAfterLastTradingDay { date: day, last });
        }
        buckets[idx].push(raw_score / 4.0);
    }

    Ok(trading_days
        .iter()
        .zip(buckets)
        .map(|(&date, scores)| summarize_day(date, &scores))
        .collect())
}

fn summarize_day(date: NaiveDate, normalized: &[f64]) -> SentimentDay {
    if normalized.is_empty() {
        return SentimentDay::neutral(date);
    }
    let n = normalized.len() as f64;
    let mean = normalized.iter().sum::<f64>() / n;
    let var = normalized.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    SentimentDay {
        date,
        mean_score: mean,
        tweet_count: normalized.len() as u32,
        score_std: var.sqrt(),
    }
}

/// Counters for a corpus preprocessing run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepStats {
    pub kept: usize,
    pub url_ad: usize,
    pub double_question_mark: usize,
    pub non_english: usize,
    pub empty_after_clean: usize,
    /// Kept by the filter but with nothing scoreable inside.
    pub no_tokens: usize,
}

impl PrepStats {
    pub fn rejected(&self) -> usize {
        self.url_ad + self.double_question_mark + self.non_english + self.empty_after_clean
    }
}

/// Filter, clean and score a whole corpus. Returns the surviving tweets with
/// their raw 0-4 scores plus rejection counts.
pub fn score_corpus(
    tweets: &[TweetRecord],
    lex: &Lexicon,
) -> (Vec<(TweetRecord, f64)>, PrepStats) {
    let mut stats = PrepStats::default();
    let mut scored = Vec::new();
    for tweet in tweets {
        match preprocess(&tweet.text) {
            Err(RejectReason::UrlAd) => stats.url_ad += 1,
            Err(RejectReason::DoubleQuestionMark) => stats.double_question_mark += 1,
            Err(RejectReason::NonEnglish) => stats.non_english += 1,
            Err(RejectReason::EmptyAfterClean) => stats.empty_after_clean += 1,
            Ok(cleaned) => match score_tweet(&cleaned, lex) {
                Ok(score) => {
                    stats.kept += 1;
                    scored.push((tweet.clone(), score));
                }
                Err(_) => stats.no_tokens += 1,
            },
        }
    }
    (scored, stats)
}

// --- SentimentDay file formats -------------------------------------------

const SENTIMENT_HEADER: &str = "date,mean_score,tweet_count,score_std";

/// Write aggregates as CSV `date,mean_score,tweet_count,score_std`.
pub fn write_sentiment_csv(path: &Path, days: &[SentimentDay]) -> Result<(), PrepError> {
    let mut out = String::from(SENTIMENT_HEADER);
    out.push('\n');
    for d in days {
        out.push_str(&format!(
            "{},{},{},{}\n",
            d.date.format("%Y-%m-%d"),
            d.mean_score,
            d.tweet_count,
            d.score_std
        ));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(path, e))
}

/// Write aggregates as JSONL, one object per day.
pub fn write_sentiment_jsonl(path: &Path, days: &[SentimentDay]) -> Result<(), PrepError> {
    let mut out = String::new();
    for d in days {
        out.push_str(&serde_json::to_string(d).expect("sentiment day serializes"));
        out.push('\n');
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(path, e))
}

/// Load aggregates from either format, sniffed by extension (`.jsonl` is
/// JSONL, anything else CSV).
pub fn load_sentiment(path: &Path) -> Result<Vec<SentimentDay>, PrepError> {
    let is_jsonl = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("jsonl"))
        .unwrap_or(false);
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut days = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if is_jsonl {
            let day: SentimentDay =
                serde_json::from_str(line).map_err(|e| PrepError::Malformed {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            days.push(day);
        } else {
            if i == 0 {
                if line != SENTIMENT_HEADER {
                    return Err(PrepError::Malformed {
                        path: path.display().to_string(),
                        line: 1,
                        message: format!("expected header {SENTIMENT_HEADER}"),
                    });
                }
                continue;
            }
            days.push(parse_sentiment_row(path, i + 1, line)?);
        }
    }
    Ok(days)
}

fn parse_sentiment_row(path: &Path, line_no: usize, line: &str) -> Result<SentimentDay, PrepError> {
    let malformed = |message: String| PrepError::Malformed {
        path: path.display().to_string(),
        line: line_no,
        message,
    };
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 4 {
        return Err(malformed(format!("expected 4 fields, got {}", parts.len())));
    }
    Ok(SentimentDay {
        date: NaiveDate::parse_from_str(parts[0], "%Y-%m-%d")
            .map_err(|e| malformed(format!("bad date: {e}")))?,
        mean_score: parts[1]
            .parse()
            .map_err(|e| malformed(format!("bad mean_score: {e}")))?,
        tweet_count: parts[2]
            .parse()
            .map_err(|e| malformed(format!("bad tweet_count: {e}")))?,
        score_std: parts[3]
            .parse()
            .map_err(|e| malformed(format!("bad score_std: {e}")))?,
    })
}
