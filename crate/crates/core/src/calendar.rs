//! Trading-day calendar helpers.
//!
//! The trading calendar is weekdays (Mon-Fri) with no holiday table; feature
//! windows and ingest validation both assume bars land on consecutive
//! weekdays.

use chrono::{Datelike, NaiveDate, Weekday};

/// True when `date` falls Monday through Friday.
pub fn is_trading_day(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// The next weekday strictly after `date`.
pub fn next_trading_day(date: NaiveDate) -> NaiveDate {
    let mut d = date + chrono::Days::new(1);
    while !is_trading_day(d) {
        d = d + chrono::Days::new(1);
    }
    d
}

/// The first trading day at or after `date`.
pub fn trading_day_on_or_after(date: NaiveDate) -> NaiveDate {
    if is_trading_day(date) {
        date
    } else {
        next_trading_day(date)
    }
}

/// `n` consecutive trading days starting at the first trading day >= `start`.
pub fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut days = Vec::with_capacity(n);
    let mut d = trading_day_on_or_after(start);
    for _ in 0..n {
        days.push(d);
        d = next_trading_day(d);
    }
    days
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn friday_rolls_to_monday() {
        // 2016-01-08 was a Friday.
        assert_eq!(next_trading_day(date(2016, 1, 8)), date(2016, 1, 11));
    }

    #[test]
    fn saturday_maps_to_monday() {
        assert_eq!(trading_day_on_or_after(date(2016, 1, 9)), date(2016, 1, 11));
    }

    #[test]
    fn sequence_skips_weekends() {
        let days = trading_days(date(2016, 1, 4), 10);
        assert_eq!(days.len(), 10);
        assert!(days.iter().all(|&d| is_trading_day(d)));
        assert_eq!(days[4], date(2016, 1, 8));
        assert_eq!(days[5], date(2016, 1, 11));
    }
}
